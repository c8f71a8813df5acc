//! Conjugate-stabilizer hidden subgroup machinery for the 2x2 projective
//! matrix groups over small finite fields.
//!
//! The crate builds `GL/SL/PGL/PSL(2;q)` together with their action on the
//! projective line, restricts hiding oracles to the Borel subgroup, and
//! simulates the Fourier-sampling measurement that identifies which point
//! stabilizer was hidden. Every closed-form probability is cross-checked
//! against an independent brute-force linear-algebra path, so the crate
//! doubles as a verification suite for the underlying group theory.
//!
//! Module map:
//!
//! - [`ff`] — exact arithmetic in `F_{p^n}`, trace pairing, characters,
//!   Gauss sums.
//! - [`pgroup`] — the matrix groups, canonical element forms, the projective
//!   line and its fractional linear action, stabilizers and the Borel
//!   subgroup.
//! - [`transitivity`] — k-transitivity fractions, the stabilizer index
//!   formula, and distinctness of two-point stabilizers.
//! - [`affine_rep`] — representation theory of `AGL(1;q)`: the q-1 linear
//!   characters and the (q-1)-dimensional irrep, plus the squares-subgroup
//!   mixed state used in the PSL pipeline.
//! - [`hsp`] — hiding oracles, coset states, weak measurement, the row
//!   Fourier transform over `Z_p^n`, and end-to-end recovery of the hidden
//!   point.
//! - [`agl2`] — structural checks for `AGL(d;2)` acting on `F_2^d`.
//!
//! All probability assertions run at the tolerances in [`tolerances`].

pub mod affine_rep;
pub mod agl2;
pub mod cmatrix;
pub mod ff;
pub mod hsp;
pub mod pgroup;
pub mod tolerances;
pub mod transitivity;
