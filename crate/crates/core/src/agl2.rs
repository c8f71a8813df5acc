//! Structural checks for the affine group `AGL(d;2)` acting on `F_2^d`.
//!
//! Points are bitmasks (bit `i` = coordinate `i`), matrices are arrays of
//! row masks. `AGL(d;2)` is 3-transitive because no three distinct points of
//! a binary affine geometry are collinear; the stabilizer of a nonzero point
//! inside `GL(d;2)` is a transposed copy of `AGL(d-1;2)`, which
//! [`point1_stabilizer_structure`] constructs explicitly and verifies.

use thiserror::Error;

use crate::transitivity::{Action, TransitivityError, TransitivityReport};

/// Enumeration stops at d = 4 (|AGL(4;2)| = 322560).
pub const MAX_DIMENSION: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Agl2Error {
    #[error("dimension {0} exceeds the supported maximum of 4")]
    DimensionTooLarge(usize),
    #[error("dimension must be at least 1")]
    DimensionZero,
    #[error(transparent)]
    Transitivity(#[from] TransitivityError),
}

/// A d x d matrix over `F_2`; `rows[i]` holds row `i` as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitMatrix {
    pub d: usize,
    pub rows: [u8; MAX_DIMENSION],
}

impl BitMatrix {
    pub fn identity(d: usize) -> Self {
        let mut rows = [0u8; MAX_DIMENSION];
        for (i, r) in rows.iter_mut().enumerate().take(d) {
            *r = 1 << i;
        }
        BitMatrix { d, rows }
    }

    pub fn mat_vec(&self, v: u8) -> u8 {
        let mut out = 0u8;
        for (i, row) in self.rows[..self.d].iter().enumerate() {
            let parity = (row & v).count_ones() & 1;
            out |= (parity as u8) << i;
        }
        out
    }

    pub fn mat_mul(&self, other: &BitMatrix) -> BitMatrix {
        debug_assert_eq!(self.d, other.d);
        let mut rows = [0u8; MAX_DIMENSION];
        for (i, row) in self.rows[..self.d].iter().enumerate() {
            // Row i of the product: combination of other's rows selected by
            // the bits of our row i.
            let mut acc = 0u8;
            for j in 0..self.d {
                if row >> j & 1 == 1 {
                    acc ^= other.rows[j];
                }
            }
            rows[i] = acc;
        }
        BitMatrix { d: self.d, rows }
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut rows = [0u8; MAX_DIMENSION];
        for (i, out) in rows.iter_mut().enumerate().take(self.d) {
            for (j, row) in self.rows[..self.d].iter().enumerate() {
                if row >> i & 1 == 1 {
                    *out |= 1 << j;
                }
            }
        }
        BitMatrix { d: self.d, rows }
    }

    pub fn is_invertible(&self) -> bool {
        self.rank() == self.d
    }

    pub fn rank(&self) -> usize {
        let mut rows: Vec<u8> = self.rows[..self.d].to_vec();
        let mut rank = 0;
        for col in 0..self.d {
            let Some(pivot) = (rank..self.d).find(|&r| rows[r] >> col & 1 == 1) else {
                continue;
            };
            rows.swap(rank, pivot);
            for r in 0..self.d {
                if r != rank && rows[r] >> col & 1 == 1 {
                    rows[r] ^= rows[rank];
                }
            }
            rank += 1;
        }
        rank
    }

    /// Gauss-Jordan inverse; the matrix must be invertible.
    pub fn inverse(&self) -> BitMatrix {
        let d = self.d;
        let mut left: Vec<u8> = self.rows[..d].to_vec();
        let mut right: Vec<u8> = (0..d).map(|i| 1u8 << i).collect();
        for col in 0..d {
            let pivot = (col..d)
                .find(|&r| left[r] >> col & 1 == 1)
                .expect("matrix is invertible");
            left.swap(col, pivot);
            right.swap(col, pivot);
            for r in 0..d {
                if r != col && left[r] >> col & 1 == 1 {
                    left[r] ^= left[col];
                    right[r] ^= right[col];
                }
            }
        }
        let mut rows = [0u8; MAX_DIMENSION];
        rows[..d].copy_from_slice(&right);
        BitMatrix { d, rows }
    }
}

/// The affine map `v -> Av + b` on `F_2^d`, block matrix `(A b / 0 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AffineMap2 {
    pub a: BitMatrix,
    pub b: u8,
}

impl AffineMap2 {
    pub fn apply(&self, v: u8) -> u8 {
        self.a.mat_vec(v) ^ self.b
    }

    pub fn compose(&self, other: &AffineMap2) -> AffineMap2 {
        AffineMap2 { a: self.a.mat_mul(&other.a), b: self.a.mat_vec(other.b) ^ self.b }
    }

    pub fn inverse(&self) -> AffineMap2 {
        let ai = self.a.inverse();
        AffineMap2 { a: ai, b: ai.mat_vec(self.b) }
    }
}

fn check_dimension(d: usize) -> Result<(), Agl2Error> {
    if d == 0 {
        return Err(Agl2Error::DimensionZero);
    }
    if d > MAX_DIMENSION {
        return Err(Agl2Error::DimensionTooLarge(d));
    }
    Ok(())
}

pub fn gl_order(d: usize) -> u64 {
    let n = 1u64 << d;
    (0..d).map(|i| n - (1 << i)).product()
}

pub fn agl_order(d: usize) -> u64 {
    (1u64 << d) * gl_order(d)
}

/// All invertible d x d matrices, ordered by packed row values.
pub fn enumerate_gl(d: usize) -> Result<Vec<BitMatrix>, Agl2Error> {
    check_dimension(d)?;
    let mut out = Vec::with_capacity(gl_order(d) as usize);
    let total = 1u64 << (d * d);
    for packed in 0..total {
        let mut rows = [0u8; MAX_DIMENSION];
        for (i, r) in rows.iter_mut().enumerate().take(d) {
            *r = ((packed >> (i * d)) & ((1 << d) - 1)) as u8;
        }
        let m = BitMatrix { d, rows };
        if m.is_invertible() {
            out.push(m);
        }
    }
    debug_assert_eq!(out.len() as u64, gl_order(d));
    Ok(out)
}

/// All of `AGL(d;2)` as pairs `(A, b)`.
pub fn enumerate_agl(d: usize) -> Result<Vec<AffineMap2>, Agl2Error> {
    let gl = enumerate_gl(d)?;
    let mut out = Vec::with_capacity(agl_order(d) as usize);
    for a in gl {
        for b in 0..(1u16 << d) {
            out.push(AffineMap2 { a, b: b as u8 });
        }
    }
    Ok(out)
}

/// All `2^d` points of `F_2^d`.
pub fn points(d: usize) -> Vec<u8> {
    (0..(1u16 << d)).map(|v| v as u8).collect()
}

pub fn action(d: usize) -> Result<Action<AffineMap2, u8>, Agl2Error> {
    let elements = enumerate_agl(d)?;
    Ok(Action::new(elements, points(d), |g, &v| g.apply(v))?)
}

/// k-tuple reachability of the affine action on `F_2^d`.
pub fn transitivity_report(d: usize, k: usize) -> Result<TransitivityReport, Agl2Error> {
    Ok(action(d)?.transitivity_fraction(k)?)
}

/// 3-transitivity of `AGL(d;2)` on `F_2^d`.
pub fn check_3transitive(d: usize) -> Result<bool, Agl2Error> {
    Ok(transitivity_report(d, 3)?.is_k_transitive)
}

/// Verdict of the stabilizer-structure check for the point `(0,..,0,1)^T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizerStructureReport {
    pub dim: usize,
    pub stabilizer_order: u64,
    pub expected_order: u64,
    pub order_matches: bool,
    /// Every stabilizer element has last column `(0,..,0,1)^T`, an invertible
    /// leading block, and a free last row.
    pub block_form_ok: bool,
    pub bijective: bool,
    pub homomorphism_ok: bool,
}

impl StabilizerStructureReport {
    pub fn all_ok(&self) -> bool {
        self.order_matches && self.block_form_ok && self.bijective && self.homomorphism_ok
    }
}

/// Computes the stabilizer of `e_d = (0,..,0,1)^T` inside `GL(d;2)` and the
/// explicit isomorphism `A -> (A^T)^{-1}` onto the block form
/// `(M b / 0 1)` of `AGL(d-1;2)`.
///
/// Transpose-inverse is a homomorphism (both transpose and inverse reverse
/// products), and it carries "last column fixed" to "last row (0,..,0,1)",
/// i.e. straight into the affine block convention. The homomorphism check is
/// exhaustive through d = 3 and seeded-random for d = 4.
pub fn point1_stabilizer_structure(d: usize) -> Result<StabilizerStructureReport, Agl2Error> {
    check_dimension(d)?;
    if d < 2 {
        return Err(Agl2Error::DimensionZero);
    }
    let e = 1u8 << (d - 1);
    let stabilizer: Vec<BitMatrix> = enumerate_gl(d)?
        .into_iter()
        .filter(|m| m.mat_vec(e) == e)
        .collect();
    let expected_order = agl_order(d - 1);
    let order_matches = stabilizer.len() as u64 == expected_order;

    let mut block_form_ok = true;
    for m in &stabilizer {
        // Last column = e_d: rows 0..d-1 have bit d-1 clear, last row has it set.
        for i in 0..d - 1 {
            if m.rows[i] >> (d - 1) & 1 == 1 {
                block_form_ok = false;
            }
        }
        if m.rows[d - 1] >> (d - 1) & 1 != 1 {
            block_form_ok = false;
        }
        // Leading (d-1)x(d-1) block invertible.
        let leading = leading_block(m, d - 1);
        if !leading.is_invertible() {
            block_form_ok = false;
        }
    }

    let image: Vec<AffineMap2> = stabilizer.iter().map(|m| to_affine(m, d)).collect();
    let mut sorted = image.clone();
    sorted.sort_unstable();
    sorted.dedup();
    let bijective = sorted.len() == stabilizer.len() && order_matches;

    let mut homomorphism_ok = true;
    if d <= 3 {
        for (i, x) in stabilizer.iter().enumerate() {
            for (j, y) in stabilizer.iter().enumerate() {
                let lhs = to_affine(&x.mat_mul(y), d);
                let rhs = image[i].compose(&image[j]);
                if lhs != rhs {
                    homomorphism_ok = false;
                }
            }
        }
    } else {
        // Deterministic sample of pairs for d = 4.
        let n = stabilizer.len();
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..10_000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let i = (state >> 33) as usize % n;
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = (state >> 33) as usize % n;
            let lhs = to_affine(&stabilizer[i].mat_mul(&stabilizer[j]), d);
            let rhs = image[i].compose(&image[j]);
            if lhs != rhs {
                homomorphism_ok = false;
            }
        }
    }

    Ok(StabilizerStructureReport {
        dim: d,
        stabilizer_order: stabilizer.len() as u64,
        expected_order,
        order_matches,
        block_form_ok,
        bijective,
        homomorphism_ok,
    })
}

fn leading_block(m: &BitMatrix, size: usize) -> BitMatrix {
    let mut rows = [0u8; MAX_DIMENSION];
    for (dst, src) in rows.iter_mut().zip(&m.rows[..size]) {
        *dst = src & ((1 << size) - 1);
    }
    BitMatrix { d: size, rows }
}

/// Reads the affine pair out of `(A^T)^{-1}`, which is block upper
/// triangular `(M b / 0 1)` for stabilizer elements.
fn to_affine(m: &BitMatrix, d: usize) -> AffineMap2 {
    let ti = m.transpose().inverse();
    let a = leading_block(&ti, d - 1);
    // b = first d-1 bits of the last column.
    let mut b = 0u8;
    for i in 0..d - 1 {
        if ti.rows[i] >> (d - 1) & 1 == 1 {
            b |= 1 << i;
        }
    }
    AffineMap2 { a, b }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_by_product_formula() {
        assert_eq!(gl_order(1), 1);
        assert_eq!(gl_order(2), 6);
        assert_eq!(gl_order(3), 168);
        assert_eq!(gl_order(4), 20160);
        assert_eq!(agl_order(2), 24);
        assert_eq!(agl_order(3), 1344);
        assert_eq!(agl_order(4), 322_560);
    }

    #[test]
    fn enumeration_matches_orders_and_closure() {
        for d in 1..=3 {
            let agl = enumerate_agl(d).unwrap();
            assert_eq!(agl.len() as u64, agl_order(d));
            let id = AffineMap2 { a: BitMatrix::identity(d), b: 0 };
            assert!(agl.contains(&id));
            let set: std::collections::HashSet<AffineMap2> = agl.iter().copied().collect();
            for f in agl.iter().take(40) {
                assert!(set.contains(&f.inverse()));
                for g in agl.iter().take(40) {
                    assert!(set.contains(&f.compose(g)));
                }
            }
        }
        assert_eq!(
            enumerate_agl(5).unwrap_err(),
            Agl2Error::DimensionTooLarge(5)
        );
    }

    #[test]
    fn compose_matches_pointwise_application() {
        let agl = enumerate_agl(2).unwrap();
        for f in &agl {
            for g in &agl {
                let fg = f.compose(g);
                for v in points(2) {
                    assert_eq!(fg.apply(v), f.apply(g.apply(v)));
                }
            }
        }
    }

    #[test]
    fn three_transitive_for_small_d() {
        assert!(check_3transitive(2).unwrap());
        assert!(check_3transitive(3).unwrap());
    }

    #[test]
    fn d2_is_sharply_3_transitive() {
        // |AGL(2;2)| = 24 = 4!, the full symmetric group on 4 points.
        let report = transitivity_report(2, 3).unwrap();
        assert!(report.is_k_transitive);
        assert_eq!(report.tuple_count, 24);
        assert_eq!(agl_order(2), 24);
    }

    #[test]
    fn not_4_transitive_in_d3() {
        let report = transitivity_report(3, 4).unwrap();
        assert!(!report.is_k_transitive);
        assert!(report.b < num_rational::Ratio::new(1, 1));
        // Orbits: affinely independent frames and coplanar 4-tuples.
        assert_eq!(report.orbit_count, 2);
    }

    #[test]
    fn stabilizer_structure_small_dims() {
        let r2 = point1_stabilizer_structure(2).unwrap();
        assert!(r2.all_ok());
        assert_eq!(r2.stabilizer_order, 2); // |AGL(1;2)|
        let r3 = point1_stabilizer_structure(3).unwrap();
        assert!(r3.all_ok());
        assert_eq!(r3.stabilizer_order, 24); // |AGL(2;2)| = 168/7
    }

    #[test]
    fn gl_orbit_stabilizer_on_nonzero_vectors() {
        for d in 2..=3 {
            let gl = enumerate_gl(d).unwrap();
            for p in points(d).into_iter().filter(|&p| p != 0) {
                let stab = gl.iter().filter(|m| m.mat_vec(p) == p).count() as u64;
                assert_eq!(gl_order(d), ((1u64 << d) - 1) * stab);
            }
        }
    }

    #[test]
    fn translation_conjugation_moves_stabilizers() {
        let d = 3;
        let gl = enumerate_gl(d).unwrap();
        for p in [1u8, 5] {
            let t = AffineMap2 { a: BitMatrix::identity(d), b: p };
            // (1,P)(A,0)(1,P)^{-1} stabilizes P.
            for a in gl.iter() {
                let lin = AffineMap2 { a: *a, b: 0 };
                let conj = t.compose(&lin).compose(&t.inverse());
                assert_eq!(conj.apply(p), p);
            }
        }
    }
}
