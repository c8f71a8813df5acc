//! Representation theory of the affine group `AGL(1;q)` over odd `q`.
//!
//! `AGL(1;q)` is the maps `x -> ax + b` with `a` in `F_q^*`. It has `q - 1`
//! one-dimensional characters that see only the multiplier, and a single
//! `(q-1)`-dimensional irrep `rho` whose rows and columns are indexed by
//! `F_q^*` in generator-power order:
//!
//! ```text
//! rho((a,b))_{j,k} = omega_p^{b . j}  when k = a j,  else 0,
//! ```
//!
//! with `b . j` the trace pairing. The Borel subgroups of `PGL/SL/PSL(2;q)`
//! land inside this group, so everything the measurement pipeline needs
//! lives here: subgroup projectors by direct averaging, the closed-form
//! full-multiplier projector, and the rank-2 mixed state of the squares
//! subgroup that drives the PSL case.

use num_complex::Complex64;
use thiserror::Error;

use crate::cmatrix::CMatrix;
use crate::ff::{FieldCtx, FieldElement};

/// Dense complex matrix of a representation; rows and columns of the large
/// irrep are indexed by `F_q^*` in generator-power order.
pub type RepMatrix = CMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AffineRepError {
    #[error("the representation machinery requires odd q")]
    EvenCharacteristic,
    #[error("affine multiplier must be nonzero")]
    ZeroMultiplier,
    #[error("elements from different field contexts")]
    MixedContexts,
    #[error("multiplier does not generate the subgroup of squares")]
    NotSquareGenerator,
}

/// The affine map `x -> ax + b`, `a != 0`.
///
/// Composition follows function application: `(a,b) o (c,d) = (ac, b + ad)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AffineElement {
    pub a: FieldElement,
    pub b: FieldElement,
}

/// A one-dimensional character of `AGL(1;q)`; depends only on the
/// multiplier, as `exp(2 pi i t log_g(a) / (q-1))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AffineCharacter {
    pub t: u32,
}

/// The squares-subgroup mixed state together with its independent oracle.
///
/// `matrix` is the closed-form expression
/// `(sqrt 2/(q-1)) omega_p^{b.(j-k)} (1 + eta(jk))/2`; `averaged` is the
/// direct average of `rho` over the stabilizer `{(a^t, (1-a^t)b)}`. The two
/// agree up to the global scalar `scale`, with worst entry error
/// `proportionality_residual`.
#[derive(Debug, Clone)]
pub struct PslMixedState {
    pub matrix: RepMatrix,
    pub averaged: RepMatrix,
    pub scale: Complex64,
    pub proportionality_residual: f64,
}

pub struct AffineGroup<'f> {
    field: &'f FieldCtx,
}

impl<'f> AffineGroup<'f> {
    pub fn new(field: &'f FieldCtx) -> Result<Self, AffineRepError> {
        if !field.odd() {
            return Err(AffineRepError::EvenCharacteristic);
        }
        Ok(AffineGroup { field })
    }

    pub fn field(&self) -> &'f FieldCtx {
        self.field
    }

    pub fn order(&self) -> u64 {
        let q = self.field.q() as u64;
        q * (q - 1)
    }

    /// Dimension of the large irrep (and the number of nonzero row labels).
    pub fn rho_dim(&self) -> usize {
        (self.field.q() - 1) as usize
    }

    pub fn identity(&self) -> AffineElement {
        AffineElement { a: self.field.one(), b: self.field.zero() }
    }

    pub fn element(&self, a: FieldElement, b: FieldElement) -> Result<AffineElement, AffineRepError> {
        if a.ctx_id() != self.field.id() || b.ctx_id() != self.field.id() {
            return Err(AffineRepError::MixedContexts);
        }
        if a.val() == 0 {
            return Err(AffineRepError::ZeroMultiplier);
        }
        Ok(AffineElement { a, b })
    }

    pub fn compose(&self, f: AffineElement, g: AffineElement) -> AffineElement {
        let a = self.field.mul(f.a, g.a).expect("same context");
        let ad = self.field.mul(f.a, g.b).expect("same context");
        let b = self.field.add(f.b, ad).expect("same context");
        AffineElement { a, b }
    }

    pub fn inverse(&self, f: AffineElement) -> AffineElement {
        let ai = self.field.inv(f.a).expect("nonzero multiplier");
        let b = self.field.neg(self.field.mul(ai, f.b).expect("same context"));
        AffineElement { a: ai, b }
    }

    pub fn eval(&self, f: AffineElement, x: FieldElement) -> FieldElement {
        let ax = self.field.mul(f.a, x).expect("same context");
        self.field.add(ax, f.b).expect("same context")
    }

    /// All `q(q-1)` elements, ordered by `(a, b)` packed values.
    pub fn enumerate(&self) -> Vec<AffineElement> {
        let mut out = Vec::with_capacity(self.order() as usize);
        for a in self.field.nonzero_elements() {
            for b in self.field.elements() {
                out.push(AffineElement { a, b });
            }
        }
        out
    }

    /// Stabilizer of the point `b` with the full multiplier group:
    /// `H^b = {(a, (1-a) b)}`, the conjugate `(1,b) H (1,-b)` of `H = (a,0)`.
    pub fn full_stabilizer(&self, b: FieldElement) -> Vec<AffineElement> {
        self.field
            .nonzero_elements()
            .map(|a| {
                let one_minus_a = self.field.sub(self.field.one(), a).expect("same context");
                let t = self.field.mul(one_minus_a, b).expect("same context");
                AffineElement { a, b: t }
            })
            .collect()
    }

    /// Stabilizer of `b` restricted to square multipliers, `(q-1)/2` elements.
    pub fn squares_stabilizer(&self, b: FieldElement) -> Vec<AffineElement> {
        self.full_stabilizer(b)
            .into_iter()
            .filter(|h| self.field.is_square(h.a))
            .collect()
    }

    // ---- irreps ----

    /// Field element labelling row `r` of `rho` (generator-power order).
    pub fn row_element(&self, r: usize) -> FieldElement {
        self.field.pow(self.field.generator(), r as u64)
    }

    /// Row index of a nonzero field element.
    pub fn row_of(&self, x: FieldElement) -> usize {
        self.field.log(x).expect("row labels are nonzero") as usize
    }

    /// The `(q-1)`-dimensional irrep.
    pub fn rho(&self, g: AffineElement) -> RepMatrix {
        let dim = self.rho_dim();
        let mut m = CMatrix::zeros(dim);
        for r in 0..dim {
            let j = self.row_element(r);
            let k = self.field.mul(g.a, j).expect("same context");
            let col = self.row_of(k);
            let phase = self.field.root_of_unity(self.field.dot(g.b, j).expect("same context"));
            m.set(r, col, phase);
        }
        m
    }

    /// The `q - 1` linear characters, `t = 0 .. q-2`.
    pub fn characters(&self) -> Vec<AffineCharacter> {
        (0..self.field.q() - 1).map(|t| AffineCharacter { t }).collect()
    }

    pub fn character_value(&self, chi: AffineCharacter, g: AffineElement) -> Complex64 {
        let m = (self.field.q() - 1) as f64;
        let l = self.field.log(g.a).expect("nonzero multiplier") as f64;
        Complex64::from_polar(1.0, std::f64::consts::TAU * chi.t as f64 * l / m)
    }

    /// The character that is -1 exactly on non-square multipliers.
    pub fn sign_character(&self) -> AffineCharacter {
        AffineCharacter { t: (self.field.q() - 1) / 2 }
    }

    /// Conjugacy classes by brute-force conjugation; classes are sorted by
    /// their minimal element, elements within a class likewise.
    pub fn conjugacy_classes(&self) -> Vec<Vec<AffineElement>> {
        let all = self.enumerate();
        let mut assigned: std::collections::HashSet<AffineElement> = std::collections::HashSet::new();
        let mut classes = Vec::new();
        for &g in &all {
            if assigned.contains(&g) {
                continue;
            }
            let mut class: std::collections::BTreeSet<AffineElement> = std::collections::BTreeSet::new();
            for &h in &all {
                let conj = self.compose(self.compose(h, g), self.inverse(h));
                class.insert(conj);
            }
            for &c in &class {
                assigned.insert(c);
            }
            classes.push(class.into_iter().collect::<Vec<_>>());
        }
        classes.sort_by_key(|c| c[0]);
        classes
    }

    /// `(1/|S|) sum_{h in S} rho(h)`; the isotypic projector when `S` is a
    /// subgroup.
    pub fn average_rho(&self, elements: &[AffineElement]) -> RepMatrix {
        let dim = self.rho_dim();
        let mut acc = CMatrix::zeros(dim);
        for &h in elements {
            acc = acc.add(&self.rho(h));
        }
        acc.scale(Complex64::new(1.0 / elements.len() as f64, 0.0))
    }

    /// Closed form of the full-multiplier stabilizer projector:
    /// `pi_{H^b}(rho)_{j,k} = (1/(q-1)) omega_p^{b.(j-k)}`.
    pub fn full_stabilizer_projector(&self, b: FieldElement) -> RepMatrix {
        let dim = self.rho_dim();
        let norm = 1.0 / dim as f64;
        CMatrix::from_fn(dim, |r, c| {
            let j = self.row_element(r);
            let k = self.row_element(c);
            let diff = self.field.sub(j, k).expect("same context");
            norm * self.field.root_of_unity(self.field.dot(b, diff).expect("same context"))
        })
    }

    /// The squares-subgroup mixed state for multiplier generator `a` and
    /// stabilized point `b`, checked against the directly averaged projector.
    pub fn psl_mixed_state(
        &self,
        a: FieldElement,
        b: FieldElement,
    ) -> Result<PslMixedState, AffineRepError> {
        let q = self.field.q();
        if self.field.multiplicative_order(a) != Some((q - 1) / 2) {
            return Err(AffineRepError::NotSquareGenerator);
        }
        let dim = self.rho_dim();
        let norm = (2.0f64).sqrt() / dim as f64;
        let matrix = CMatrix::from_fn(dim, |r, c| {
            let j = self.row_element(r);
            let k = self.row_element(c);
            let jk = self.field.mul(j, k).expect("same context");
            let eta = self.field.quadratic_char(jk) as f64;
            let diff = self.field.sub(j, k).expect("same context");
            let phase = self.field.root_of_unity(self.field.dot(b, diff).expect("same context"));
            norm * phase * (1.0 + eta) / 2.0
        });
        // Independent route: average rho over {(a^t, (1 - a^t) b)}.
        let subgroup: Vec<AffineElement> = (1..=(q - 1) / 2)
            .map(|t| {
                let at = self.field.pow(a, t as u64);
                let coeff = self.field.sub(self.field.one(), at).expect("same context");
                AffineElement { a: at, b: self.field.mul(coeff, b).expect("same context") }
            })
            .collect();
        let averaged = self.average_rho(&subgroup);
        // Proportionality: matrix = scale * averaged.
        let mut scale = Complex64::new(0.0, 0.0);
        'find: for r in 0..dim {
            for c in 0..dim {
                if averaged.get(r, c).norm() > 1e-6 {
                    scale = matrix.get(r, c) / averaged.get(r, c);
                    break 'find;
                }
            }
        }
        let residual = matrix.max_abs_diff(&averaged.scale(scale));
        Ok(PslMixedState { matrix, averaged, scale, proportionality_residual: residual })
    }

    // ---- verification helpers ----

    /// Worst `|rho(g)rho(h) - rho(gh)|` over the given pairs.
    pub fn homomorphism_residual(&self, pairs: &[(AffineElement, AffineElement)]) -> f64 {
        pairs
            .iter()
            .map(|&(g, h)| {
                let lhs = self.rho(g).mul(&self.rho(h));
                let rhs = self.rho(self.compose(g, h));
                lhs.max_abs_diff(&rhs)
            })
            .fold(0.0, f64::max)
    }

    /// Worst unitarity residual of `rho` over the whole group.
    pub fn unitarity_residual(&self) -> f64 {
        self.enumerate()
            .iter()
            .map(|&g| self.rho(g).unitarity_residual())
            .fold(0.0, f64::max)
    }

    /// `sum_g |tr rho(g)|^2`; equals `|AGL(1;q)|` iff `rho` is irreducible.
    pub fn character_norm(&self) -> f64 {
        self.enumerate()
            .iter()
            .map(|&g| self.rho(g).trace().norm_sqr())
            .sum()
    }

    /// Worst row-orthogonality residual of the full character table
    /// (the `q - 1` linear characters plus `rho`) over the `q` classes.
    pub fn character_table_residual(&self) -> f64 {
        let classes = self.conjugacy_classes();
        let chars = self.characters();
        let reps: Vec<AffineElement> = classes.iter().map(|c| c[0]).collect();
        let sizes: Vec<f64> = classes.iter().map(|c| c.len() as f64).collect();
        // Row i of the table: character values on class representatives.
        let mut rows: Vec<Vec<Complex64>> = chars
            .iter()
            .map(|&chi| reps.iter().map(|&g| self.character_value(chi, g)).collect())
            .collect();
        rows.push(reps.iter().map(|&g| self.rho(g).trace()).collect());
        let order = self.order() as f64;
        let mut worst = 0.0f64;
        for (i, ri) in rows.iter().enumerate() {
            for (j, rj) in rows.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, &size) in sizes.iter().enumerate() {
                    acc += size * ri[c] * rj[c].conj();
                }
                let target = if i == j { order } else { 0.0 };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }
}
