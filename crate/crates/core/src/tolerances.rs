//! Numerical tolerances used by the verification suites.
//!
//! All complex arithmetic is double precision; the group orders involved are
//! a few thousand at most, so rounding never accumulates past a handful of
//! ulps. The values below are deliberately loose compared to that.

/// Entrywise equality of complex quantities and probabilities.
pub const COMPLEX_EQ: f64 = 1e-9;

/// Probabilities may dip this far below zero from rounding, no further.
pub const PROB_FLOOR: f64 = -1e-12;

/// Character-norm test for irreducibility (sums |G| terms of modulus ~q^2).
pub const CHARACTER_NORM: f64 = 1e-7;

/// Target failure probability for the default recovery sample count.
pub const RECOVERY_FAILURE_BOUND: f64 = 1e-6;
