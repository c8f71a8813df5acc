//! The hidden-subgroup measurement pipeline.
//!
//! A [`HidingOracle`] colors group elements constantly on left cosets of a
//! hidden point stabilizer and distinctly across cosets. Restricting it to
//! the Borel subgroup `B` hides the two-point stabilizer of the hidden point
//! `s` and `infinity`; under [`crate::pgroup::Group::decompose_borel`] this
//! is the affine stabilizer `H^b` of the field element `b = s`.
//!
//! Measurement is simulated three independent ways and cross-checked:
//!
//! 1. [`closed_form_distribution`] — the final closed forms (peak
//!    `1 - 1/q` for the full affine Borel, `(q-1)/2q` for the
//!    square-multiplier Borel, Gauss-sum off-peak values).
//! 2. [`conditional_row_fourier_distribution`] — the measured column state
//!    as an explicit row vector, zero-extended over `F_q` and pushed through
//!    the additive character transform.
//! 3. [`BorelPipeline::measure`] — the full brute force: the literal coset
//!    state over the Borel group algebra, block-diagonalized by the
//!    explicitly constructed irreps of `AGL(1;q)`, followed by column
//!    measurement and the same row transform, all by direct linear algebra.
//!
//! SL Borel states push through the 2:1 center quotient onto the
//! square-multiplier subgroup first; the oracle factors exactly, so the
//! measured data is untouched.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::affine_rep::{AffineElement, AffineGroup, AffineRepError};
use crate::cmatrix::CMatrix;
use crate::ff::{FieldElement, FieldError, MultiplicativeChar};
use crate::pgroup::{Group, GroupElement, GroupError, GroupFlavor, ProjPoint, SubgroupDesc};
use crate::tolerances;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HspError {
    #[error("the measurement pipeline covers the PGL/SL/PSL flavors only")]
    UnsupportedFlavor,
    #[error("oracle violates the coset promise")]
    PromiseViolation,
    #[error("element is outside the oracle domain")]
    UnknownElement,
    #[error("measurement column must be a nonzero field element")]
    InvalidColumn,
    #[error("branch does not exist for this flavor")]
    BranchMismatch,
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    AffineRep(#[from] AffineRepError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Opaque coset color: the canonical minimal element of the coset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Color(pub GroupElement);

/// A total coloring of a group (or subgroup) domain, constant and distinct
/// on the left cosets of a hidden subgroup.
#[derive(Debug, Clone)]
pub struct HidingOracle {
    domain: Vec<GroupElement>,
    colors: HashMap<GroupElement, Color>,
    hidden: Vec<GroupElement>,
}

impl HidingOracle {
    /// Oracle hiding the point stabilizer `G_s`; colors are the canonical
    /// minimal coset representatives. The coset promise is verified
    /// exhaustively before returning.
    pub fn make_stabilizer_oracle(group: &Group<'_>, s: ProjPoint) -> Result<Self, HspError> {
        let elements = group.enumerate()?;
        let hidden = group.stabilizer(&[s])?.elements().to_vec();
        let hidden_set: BTreeSet<GroupElement> = hidden.iter().copied().collect();
        let mut colors: HashMap<GroupElement, Color> = HashMap::with_capacity(elements.len());
        for g in &elements {
            if colors.contains_key(g) {
                continue;
            }
            let coset: BTreeSet<GroupElement> =
                hidden_set.iter().map(|h| group.mul_raw(g, h)).collect();
            let color = Color(*coset.iter().next().expect("nonempty coset"));
            for member in coset {
                colors.insert(member, color);
            }
        }
        let oracle = HidingOracle { domain: elements, colors, hidden };
        oracle.verify_promise(group)?;
        Ok(oracle)
    }

    /// Assembles an oracle without verification; pair with
    /// [`HidingOracle::verify_promise`].
    pub fn from_raw_parts(
        domain: Vec<GroupElement>,
        colors: HashMap<GroupElement, Color>,
        hidden: Vec<GroupElement>,
    ) -> Self {
        HidingOracle { domain, colors, hidden }
    }

    pub fn domain(&self) -> &[GroupElement] {
        &self.domain
    }

    pub fn hidden_subgroup(&self) -> &[GroupElement] {
        &self.hidden
    }

    pub fn query(&self, g: &GroupElement) -> Result<Color, HspError> {
        self.colors.get(g).copied().ok_or(HspError::UnknownElement)
    }

    pub fn color_count(&self) -> usize {
        self.colors.values().collect::<BTreeSet<_>>().len()
    }

    /// Color classes in deterministic order.
    pub fn classes(&self) -> BTreeMap<Color, Vec<GroupElement>> {
        let mut out: BTreeMap<Color, Vec<GroupElement>> = BTreeMap::new();
        for g in &self.domain {
            out.entry(self.colors[g]).or_default().push(*g);
        }
        out
    }

    /// Exhaustive check of `f(x) = f(y) <=> x^{-1} y in H`: the hidden set is
    /// a subgroup, every color class is a single left coset of it, and the
    /// classes tile the domain.
    pub fn verify_promise(&self, group: &Group<'_>) -> Result<(), HspError> {
        let hidden_set: BTreeSet<GroupElement> = self.hidden.iter().copied().collect();
        if hidden_set.is_empty() || !hidden_set.contains(&group.identity()) {
            return Err(HspError::PromiseViolation);
        }
        for h in &hidden_set {
            if !hidden_set.contains(&group.inv_raw(h)) {
                return Err(HspError::PromiseViolation);
            }
            for k in &hidden_set {
                if !hidden_set.contains(&group.mul_raw(h, k)) {
                    return Err(HspError::PromiseViolation);
                }
            }
        }
        let classes = self.classes();
        if classes.len() * hidden_set.len() != self.domain.len() {
            return Err(HspError::PromiseViolation);
        }
        for class in classes.values() {
            if class.len() != hidden_set.len() {
                return Err(HspError::PromiseViolation);
            }
            let rep_inv = group.inv_raw(&class[0]);
            for x in class {
                if !hidden_set.contains(&group.mul_raw(&rep_inv, x)) {
                    return Err(HspError::PromiseViolation);
                }
            }
        }
        Ok(())
    }

    /// Restricts the oracle to a materialized subgroup; the restriction
    /// hides the intersection of the hidden subgroup with it. The promise is
    /// re-verified on the restricted domain.
    pub fn restrict(&self, group: &Group<'_>, sub: &SubgroupDesc) -> Result<Self, HspError> {
        let mut colors = HashMap::with_capacity(sub.len());
        for g in sub.elements() {
            let c = self.query(g)?;
            colors.insert(*g, c);
        }
        let hidden: Vec<GroupElement> =
            self.hidden.iter().copied().filter(|h| sub.contains(h)).collect();
        let restricted = HidingOracle { domain: sub.elements().to_vec(), colors, hidden };
        restricted.verify_promise(group)?;
        Ok(restricted)
    }

    /// Rewrites colors through a bijection; the hidden subgroup and the
    /// measured statistics must not depend on the labels.
    pub fn with_permuted_colors(&self, perm: &HashMap<Color, Color>) -> Result<Self, HspError> {
        let image: BTreeSet<&Color> = perm.values().collect();
        if image.len() != perm.len() {
            return Err(HspError::PromiseViolation);
        }
        let mut colors = HashMap::with_capacity(self.colors.len());
        for (g, c) in &self.colors {
            let mapped = perm.get(c).copied().ok_or(HspError::UnknownElement)?;
            colors.insert(*g, mapped);
        }
        Ok(HidingOracle { domain: self.domain.clone(), colors, hidden: self.hidden.clone() })
    }
}

/// Checks whether the restricted oracle is constant on the Borel subgroup,
/// which happens exactly when the hidden point is `infinity`. Queries the
/// identity plus one multiplier and one translation generator.
pub fn classical_equal_point_test(
    group: &Group<'_>,
    oracle_on_borel: &HidingOracle,
) -> Result<(bool, u32), HspError> {
    let gens = group.borel_generators()?;
    let base = oracle_on_borel.query(&group.identity())?;
    let mut queries = 1u32;
    for g in &gens {
        queries += 1;
        if oracle_on_borel.query(g)? != base {
            return Ok((false, queries));
        }
    }
    Ok((true, queries))
}

/// Coset state kept in its pure-state decomposition: an equal-weight mixture
/// of uniform superpositions, one per coset, embedded in the `AGL(1;q)`
/// group algebra basis.
#[derive(Debug, Clone)]
pub struct CosetState {
    dim: usize,
    vectors: Vec<Vec<Complex64>>,
}

/// Numerical health of a density matrix.
#[derive(Debug, Clone, Copy)]
pub struct StateCheck {
    pub hermiticity_residual: f64,
    pub trace_error: f64,
    pub max_vector_norm_error: f64,
}

impl CosetState {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coset_count(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    /// Materializes `rho_H = (1/#cosets) sum |cH><cH|`.
    pub fn density(&self) -> CMatrix {
        let mut rho = CMatrix::zeros(self.dim);
        let w = 1.0 / self.vectors.len() as f64;
        for v in &self.vectors {
            rho.accumulate_outer(v, w);
        }
        rho
    }

    /// Hermitian / trace-1 / unit-vector checks. Positivity holds by
    /// construction (the state is an explicit mixture of pure states).
    pub fn validate(&self) -> StateCheck {
        let rho = self.density();
        let trace_error = (rho.trace() - Complex64::new(1.0, 0.0)).norm();
        let max_vector_norm_error = self
            .vectors
            .iter()
            .map(|v| (v.iter().map(|x| x.norm_sqr()).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        StateCheck {
            hermiticity_residual: rho.hermiticity_residual(),
            trace_error,
            max_vector_norm_error,
        }
    }
}

/// Irrep labels of `AGL(1;q)`: the linear characters `chi_t` and the large
/// `(q-1)`-dimensional representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum IrrepLabel {
    Character(u32),
    Rho,
}

impl IrrepLabel {
    pub fn is_trivial(&self) -> bool {
        matches!(self, IrrepLabel::Character(0))
    }

    pub fn is_sign(&self, q: u32) -> bool {
        matches!(self, IrrepLabel::Character(t) if *t == (q - 1) / 2)
    }
}

/// Which measured column branch a conditional distribution belongs to. The
/// full affine Borel has a single branch; the square-multiplier Borel splits
/// by the square class of the measured index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Branch {
    Full,
    Plus,
    Minus,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::Full => f.write_str("full"),
            Branch::Plus => f.write_str("plus"),
            Branch::Minus => f.write_str("minus"),
        }
    }
}

/// A probability map over frequencies `l` in `Z_p^n`, indexed by packed
/// value.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    p: u32,
    n: u32,
    probs: Vec<f64>,
}

impl Distribution {
    fn new(p: u32, n: u32, probs: Vec<f64>) -> Self {
        Distribution { p, n, probs }
    }

    pub fn q(&self) -> u32 {
        self.probs.len() as u32
    }

    pub fn prob(&self, freq_val: u32) -> f64 {
        self.probs[freq_val as usize]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Digit coordinates of a frequency value.
    pub fn coords(&self, freq_val: u32) -> Vec<u32> {
        let mut v = freq_val;
        let mut out = vec![0u32; self.n as usize];
        for d in out.iter_mut() {
            *d = v % self.p;
            v /= self.p;
        }
        out
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Sum-to-one and no-negative-mass checks.
    pub fn is_normalized(&self) -> bool {
        (self.sum() - 1.0).abs() < tolerances::COMPLEX_EQ
            && self.min_entry() >= tolerances::PROB_FLOOR
    }

    pub fn max_abs_diff(&self, other: &Distribution) -> f64 {
        assert_eq!(self.probs.len(), other.probs.len(), "dimension mismatch");
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn peak(&self) -> (u32, f64) {
        let mut best = 0usize;
        for i in 1..self.probs.len() {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        (best as u32, self.probs[best])
    }
}

/// Weak-measurement probabilities plus the conditional frequency
/// distributions, one per measured branch.
#[derive(Debug, Clone)]
pub struct MeasurementReport {
    pub weak: BTreeMap<IrrepLabel, f64>,
    pub rho_mass: f64,
    pub branches: Vec<(Branch, Distribution)>,
    pub branch_masses: Vec<f64>,
}

impl MeasurementReport {
    /// Mixture of the branch distributions weighted by their masses; this is
    /// the per-sample frequency law of the sampler.
    pub fn merged(&self) -> Distribution {
        let q = self.branches[0].1.probs.len();
        let mut probs = vec![0.0f64; q];
        let total: f64 = self.branch_masses.iter().sum();
        assert!(total > 0.0, "no mass on the large irrep; nothing to sample");
        for ((_, dist), &mass) in self.branches.iter().zip(&self.branch_masses) {
            for (acc, p) in probs.iter_mut().zip(&dist.probs) {
                *acc += p * mass / total;
            }
        }
        Distribution { p: self.branches[0].1.p, n: self.branches[0].1.n, probs }
    }
}

/// The Fourier layer over `AGL(1;q)`: the unitary change of basis built
/// from the explicitly constructed irreps, with labelled rows.
pub struct BorelPipeline<'f> {
    group: Group<'f>,
    affine: AffineGroup<'f>,
    basis: Vec<AffineElement>,
    basis_index: HashMap<AffineElement, usize>,
    fourier: CMatrix,
    labels: Vec<IrrepLabel>,
}

impl<'f> BorelPipeline<'f> {
    pub fn new(group: Group<'f>) -> Result<Self, HspError> {
        if group.flavor == GroupFlavor::Gl {
            return Err(HspError::UnsupportedFlavor);
        }
        let affine = AffineGroup::new(group.field)?;
        let basis = affine.enumerate();
        let basis_index: HashMap<AffineElement, usize> =
            basis.iter().enumerate().map(|(i, &g)| (g, i)).collect();
        let size = basis.len();
        let q = group.field.q() as usize;
        let dim = q - 1;
        let order = size as f64;
        let mut fourier = CMatrix::zeros(size);
        let mut labels = Vec::with_capacity(size);
        // One row per linear character.
        let chars = affine.characters();
        for (r, &chi) in chars.iter().enumerate() {
            labels.push(IrrepLabel::Character(chi.t));
            let norm = (1.0 / order).sqrt();
            for (c, &g) in basis.iter().enumerate() {
                fourier.set(r, c, norm * affine.character_value(chi, g));
            }
        }
        // (q-1)^2 rows for the large irrep, row-major over (i, j).
        let norm = (dim as f64 / order).sqrt();
        for (c, &g) in basis.iter().enumerate() {
            let rho = affine.rho(g);
            for i in 0..dim {
                for j in 0..dim {
                    let r = dim + i * dim + j;
                    fourier.set(r, c, norm * rho.get(i, j));
                }
            }
        }
        for _ in 0..dim * dim {
            labels.push(IrrepLabel::Rho);
        }
        Ok(BorelPipeline { group, affine, basis, basis_index, fourier, labels })
    }

    pub fn affine(&self) -> &AffineGroup<'f> {
        &self.affine
    }

    pub fn basis(&self) -> &[AffineElement] {
        &self.basis
    }

    /// Schur orthogonality check: the stacked irreps form a unitary.
    pub fn fourier_unitarity_residual(&self) -> f64 {
        self.fourier.unitarity_residual()
    }

    /// Builds the coset state of an oracle restricted to the Borel subgroup,
    /// embedded in the affine group algebra via `decompose_borel`. SL color
    /// classes collapse 2:1 through the center; the fibers must be uniform.
    pub fn coset_state_from_oracle(&self, oracle: &HidingOracle) -> Result<CosetState, HspError> {
        let size = self.basis.len();
        let classes = oracle.classes();
        let mut vectors = Vec::with_capacity(classes.len());
        for class in classes.values() {
            let mut indices: BTreeSet<usize> = BTreeSet::new();
            for g in class {
                let aff = self.group.decompose_borel(g)?;
                indices.insert(self.basis_index[&aff]);
            }
            if class.len() % indices.len() != 0 {
                return Err(HspError::PromiseViolation);
            }
            let fiber = class.len() / indices.len();
            let expected_fiber = if self.group.flavor == GroupFlavor::Sl { 2 } else { 1 };
            if fiber != expected_fiber {
                return Err(HspError::PromiseViolation);
            }
            let amp = Complex64::new(1.0 / (indices.len() as f64).sqrt(), 0.0);
            let mut v = vec![Complex64::new(0.0, 0.0); size];
            for idx in indices {
                v[idx] = amp;
            }
            vectors.push(v);
        }
        Ok(CosetState { dim: size, vectors })
    }

    fn rho_row(&self, i: usize, j: usize) -> usize {
        let dim = self.affine.rho_dim();
        dim + i * dim + j
    }

    /// Weak-measurement probabilities alone.
    pub fn weak_distribution(&self, state: &CosetState) -> BTreeMap<IrrepLabel, f64> {
        self.measure(state).weak
    }

    fn branch_of_row(&self, i: usize) -> Branch {
        match self.group.flavor {
            GroupFlavor::Pgl => Branch::Full,
            _ => {
                let e = self.affine.row_element(i);
                if self.group.field.is_square(e) {
                    Branch::Plus
                } else {
                    Branch::Minus
                }
            }
        }
    }

    /// Full measurement simulation: weak measurement over the irrep blocks,
    /// then per-branch column conditioning and the additive-group Fourier
    /// transform of the remaining row vector.
    pub fn measure(&self, state: &CosetState) -> MeasurementReport {
        let field = self.group.field;
        let q = field.q() as usize;
        let dim = q - 1;
        let weight = 1.0 / state.coset_count() as f64;

        let mut weak: BTreeMap<IrrepLabel, f64> = BTreeMap::new();
        for &chi in self.affine.characters().iter() {
            weak.insert(IrrepLabel::Character(chi.t), 0.0);
        }
        weak.insert(IrrepLabel::Rho, 0.0);

        let branch_list: Vec<Branch> = match self.group.flavor {
            GroupFlavor::Pgl => vec![Branch::Full],
            _ => vec![Branch::Plus, Branch::Minus],
        };
        let mut blocks: BTreeMap<Branch, CMatrix> =
            branch_list.iter().map(|&b| (b, CMatrix::zeros(dim))).collect();

        for v in state.vectors() {
            let w = self.fourier.apply(v);
            for (r, &label) in self.labels.iter().enumerate() {
                *weak.get_mut(&label).expect("label table") += weight * w[r].norm_sqr();
            }
            for i in 0..dim {
                let block = blocks.get_mut(&self.branch_of_row(i)).expect("branch table");
                for j in 0..dim {
                    let aij = w[self.rho_row(i, j)];
                    if aij.norm_sqr() == 0.0 {
                        continue;
                    }
                    for jp in 0..dim {
                        let v = weight * aij * w[self.rho_row(i, jp)].conj();
                        block.add_assign_at(j, jp, v);
                    }
                }
            }
        }

        let rho_mass = weak[&IrrepLabel::Rho];
        let mut branches = Vec::new();
        let mut branch_masses = Vec::new();
        for branch in branch_list {
            let block = &blocks[&branch];
            let mass = block.trace().re;
            // Zero-extend the column labels over F_q and apply the additive
            // character transform; position 0 carries no amplitude. A branch
            // with no measured mass (e.g. the whole-subgroup coset state)
            // keeps an all-zero table rather than dividing by zero.
            let scale = if mass > 0.0 { 1.0 / (q as f64 * mass) } else { 0.0 };
            let mut probs = vec![0.0f64; q];
            for (lv, prob) in probs.iter_mut().enumerate() {
                let l = field.frequency_from_val(lv as u32).expect("frequency");
                let mut acc = 0.0f64;
                for j in 0..dim {
                    let ej = self.affine.row_element(j);
                    let wj = field.additive_char(l, ej);
                    for jp in 0..dim {
                        let ejp = self.affine.row_element(jp);
                        let wjp = field.additive_char(l, ejp).conj();
                        acc += (wj * block.get(j, jp) * wjp).re;
                    }
                }
                *prob = acc * scale;
            }
            branches.push((branch, Distribution::new(field.p(), field.n(), probs)));
            branch_masses.push(mass);
        }

        MeasurementReport { weak, rho_mass, branches, branch_masses }
    }
}

/// Mid-level route: the normalized measured column as an explicit row
/// vector over `F_q^*` with a zero slot at 0, transformed by the conjugated
/// additive characters. `column` picks the measured column of the
/// conditional projector; its square class selects the branch for the
/// square-multiplier flavors.
pub fn conditional_row_fourier_distribution(
    group: &Group<'_>,
    b: FieldElement,
    column: FieldElement,
) -> Result<Distribution, HspError> {
    if group.flavor == GroupFlavor::Gl {
        return Err(HspError::UnsupportedFlavor);
    }
    let field = group.field;
    if column.val() == 0 {
        return Err(HspError::InvalidColumn);
    }
    let q = field.q() as usize;
    let mut w = vec![Complex64::new(0.0, 0.0); q];
    match group.flavor {
        GroupFlavor::Pgl => {
            let amp = 1.0 / ((q - 1) as f64).sqrt();
            for e in field.nonzero_elements() {
                let diff = field.sub(e, column)?;
                let phase = field.root_of_unity(field.dot(b, diff)?);
                w[e.val() as usize] = amp * phase;
            }
        }
        GroupFlavor::Sl | GroupFlavor::Psl => {
            let amp = (2.0 / (q - 1) as f64).sqrt();
            for e in field.nonzero_elements() {
                let jk = field.mul(e, column)?;
                if field.quadratic_char(jk) != 1 {
                    continue;
                }
                let diff = field.sub(e, column)?;
                let phase = field.root_of_unity(field.dot(b, diff)?);
                w[e.val() as usize] = amp * phase;
            }
        }
        GroupFlavor::Gl => unreachable!(),
    }
    let mut probs = vec![0.0f64; q];
    for (lv, prob) in probs.iter_mut().enumerate() {
        let l = field.frequency_from_val(lv as u32)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for e in field.nonzero_elements() {
            acc += field.additive_char(l, e).conj() * w[e.val() as usize];
        }
        *prob = acc.norm_sqr() / q as f64;
    }
    Ok(Distribution::new(field.p(), field.n(), probs))
}

/// The closed forms the measurement must reproduce. For the full affine
/// Borel: `P(b) = 1 - 1/q`, off-peak `1/(q(q-1))`. For the
/// square-multiplier Borel: `P(l) = |q [l=b] - 1 + s eta(b-l) G(eta,chi_1)|^2
/// / (2q(q-1))` with the branch sign `s`.
pub fn closed_form_distribution(
    group: &Group<'_>,
    b: FieldElement,
    branch: Branch,
) -> Result<Distribution, HspError> {
    let field = group.field;
    let q = field.q();
    match (group.flavor, branch) {
        (GroupFlavor::Pgl, Branch::Full) => {
            let peak = 1.0 - 1.0 / q as f64;
            let off = 1.0 / (q as f64 * (q - 1) as f64);
            let probs = (0..q).map(|l| if l == b.val() { peak } else { off }).collect();
            Ok(Distribution::new(field.p(), field.n(), probs))
        }
        (GroupFlavor::Sl | GroupFlavor::Psl, Branch::Plus | Branch::Minus) => {
            let s = if branch == Branch::Plus { 1.0 } else { -1.0 };
            let g1 = field
                .gauss_sum(MultiplicativeChar::Quadratic, field.frequency_from_val(1)?)
                .value;
            let denom = 2.0 * q as f64 * (q - 1) as f64;
            let mut probs = vec![0.0f64; q as usize];
            for (lv, prob) in probs.iter_mut().enumerate() {
                let l = field.element_from_val(lv as u32)?;
                let diff = field.sub(b, l)?;
                let eta = field.quadratic_char(diff) as f64;
                let delta = if lv as u32 == b.val() { q as f64 } else { 0.0 };
                let term = Complex64::new(delta - 1.0, 0.0) + s * eta * g1;
                *prob = term.norm_sqr() / denom;
            }
            Ok(Distribution::new(field.p(), field.n(), probs))
        }
        (GroupFlavor::Gl, _) => Err(HspError::UnsupportedFlavor),
        _ => Err(HspError::BranchMismatch),
    }
}

/// End-to-end brute force for the hidden finite point `b`: build the
/// oracle, restrict it to the Borel subgroup, form the coset state, and
/// measure.
pub fn brute_force_distribution(
    group: &Group<'_>,
    b: FieldElement,
) -> Result<MeasurementReport, HspError> {
    let oracle = HidingOracle::make_stabilizer_oracle(group, ProjPoint::Finite(b))?;
    let borel = group.borel()?;
    let restricted = oracle.restrict(group, &borel)?;
    let pipeline = BorelPipeline::new(*group)?;
    let state = pipeline.coset_state_from_oracle(&restricted)?;
    Ok(pipeline.measure(&state))
}

/// Smallest sample count `m` with `(q-1) (1 - (sqrt p1 - sqrt p0)^2)^m`
/// below the recovery failure bound; `p1` is the peak and `p0` the largest
/// off-peak probability.
pub fn default_sample_count(dist: &Distribution) -> u32 {
    let (peak_val, p1) = dist.peak();
    let p0 = dist
        .probs()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i as u32 != peak_val)
        .map(|(_, &p)| p)
        .fold(0.0f64, f64::max);
    let r = 1.0 - ((p1.sqrt() - p0.sqrt()).powi(2));
    let others = (dist.q() - 1) as f64;
    let bound = tolerances::RECOVERY_FAILURE_BOUND;
    let m = ((bound / others).ln() / r.ln()).ceil();
    m.max(1.0) as u32
}

/// Draws `samples` frequencies from `dist` by inverse CDF with a seeded
/// ChaCha stream; returns the histogram and its mode (ties to the smaller
/// value).
pub fn sample_mode(dist: &Distribution, samples: u32, seed: u64) -> (u32, BTreeMap<u32, u32>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut histogram: BTreeMap<u32, u32> = BTreeMap::new();
    for _ in 0..samples {
        let r: f64 = rng.gen();
        let mut acc = 0.0;
        let mut drawn = dist.q() - 1;
        for (i, &p) in dist.probs().iter().enumerate() {
            acc += p;
            if r < acc {
                drawn = i as u32;
                break;
            }
        }
        *histogram.entry(drawn).or_insert(0) += 1;
    }
    let mode = histogram
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(&v, _)| v)
        .expect("at least one sample");
    (mode, histogram)
}

/// Outcome of an end-to-end recovery run.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub recovered: ProjPoint,
    pub samples: u32,
    pub histogram: BTreeMap<u32, u32>,
    /// Posterior probability of the recovered point under the known
    /// per-sample shape (peak plus uniform off-peak), uniform prior.
    pub confidence: f64,
    pub oracle_queries: u32,
}

/// Recovers the hidden stabilized point from a hiding oracle on the full
/// group: a classical constancy test settles `infinity`, otherwise seeded
/// Fourier sampling of the restricted coset state recovers the frequency
/// peak `b`, which is the stabilized field element.
pub fn recover_hidden_point(
    group: &Group<'_>,
    oracle: &HidingOracle,
    samples: Option<u32>,
    seed: u64,
) -> Result<RecoveryResult, HspError> {
    let borel = group.borel()?;
    let restricted = oracle.restrict(group, &borel)?;
    let (constant, queries) = classical_equal_point_test(group, &restricted)?;
    if constant {
        return Ok(RecoveryResult {
            recovered: ProjPoint::Infinity,
            samples: 0,
            histogram: BTreeMap::new(),
            confidence: 1.0,
            oracle_queries: queries,
        });
    }
    let pipeline = BorelPipeline::new(*group)?;
    let state = pipeline.coset_state_from_oracle(&restricted)?;
    let report = pipeline.measure(&state);
    let dist = report.merged();
    let m = samples.unwrap_or_else(|| default_sample_count(&dist));
    let (mode, histogram) = sample_mode(&dist, m, seed);
    let confidence = posterior_mode_confidence(&dist, &histogram, mode);
    let recovered = ProjPoint::Finite(group.field.element_from_val(mode)?);
    Ok(RecoveryResult { recovered, samples: m, histogram, confidence, oracle_queries: queries })
}

/// Posterior of "the peak sits at `mode`" under the translate family of the
/// known two-level shape, uniform prior over the q candidate points.
fn posterior_mode_confidence(
    dist: &Distribution,
    histogram: &BTreeMap<u32, u32>,
    mode: u32,
) -> f64 {
    let (_, p1) = dist.peak();
    let q = dist.q();
    let p0 = (1.0 - p1) / (q - 1) as f64;
    let ratio = (p1 / p0).ln();
    let mut logw = vec![0.0f64; q as usize];
    for (t, w) in logw.iter_mut().enumerate() {
        let count = histogram.get(&(t as u32)).copied().unwrap_or(0) as f64;
        *w = count * ratio;
    }
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logw.iter().map(|w| (w - max).exp()).sum();
    (logw[mode as usize] - max).exp() / z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ff::make_field;
    use crate::tolerances::COMPLEX_EQ;

    #[test]
    fn stabilizer_oracle_promise_and_color_count() {
        let f = make_field(5, 1).unwrap();
        let psl = Group::new(GroupFlavor::Psl, &f).unwrap();
        let oracle =
            HidingOracle::make_stabilizer_oracle(&psl, ProjPoint::Infinity).unwrap();
        assert_eq!(oracle.color_count() as u64, psl.order() / 10); // index of B
        assert_eq!(oracle.hidden_subgroup().len(), 10);
        assert!(oracle.verify_promise(&psl).is_ok());
        // Hiding B itself: the restriction to B is constant.
        let borel = psl.borel().unwrap();
        let restricted = oracle.restrict(&psl, &borel).unwrap();
        assert_eq!(restricted.color_count(), 1);
    }

    #[test]
    fn restriction_hides_two_point_stabilizer() {
        let f = make_field(5, 1).unwrap();
        let pgl = Group::new(GroupFlavor::Pgl, &f).unwrap();
        let zero = pgl.finite_point(0).unwrap();
        let oracle = HidingOracle::make_stabilizer_oracle(&pgl, zero).unwrap();
        let restricted = oracle.restrict(&pgl, &pgl.borel().unwrap()).unwrap();
        assert_eq!(restricted.hidden_subgroup().len(), 4); // q - 1
        assert_eq!(restricted.color_count() as u32, f.q());

        let f7 = make_field(7, 1).unwrap();
        let psl7 = Group::new(GroupFlavor::Psl, &f7).unwrap();
        let zero = psl7.finite_point(0).unwrap();
        let oracle = HidingOracle::make_stabilizer_oracle(&psl7, zero).unwrap();
        let restricted = oracle.restrict(&psl7, &psl7.borel().unwrap()).unwrap();
        assert_eq!(restricted.hidden_subgroup().len(), 3); // (q - 1)/2
    }

    #[test]
    fn equal_point_test_distinguishes_infinity() {
        let f = make_field(5, 1).unwrap();
        let pgl = Group::new(GroupFlavor::Pgl, &f).unwrap();
        let borel = pgl.borel().unwrap();
        let inf_oracle =
            HidingOracle::make_stabilizer_oracle(&pgl, ProjPoint::Infinity).unwrap();
        let (constant, queries) =
            classical_equal_point_test(&pgl, &inf_oracle.restrict(&pgl, &borel).unwrap())
                .unwrap();
        assert!(constant);
        assert!(queries <= 4);
        let zero_oracle =
            HidingOracle::make_stabilizer_oracle(&pgl, pgl.finite_point(0).unwrap()).unwrap();
        let (constant, _) =
            classical_equal_point_test(&pgl, &zero_oracle.restrict(&pgl, &borel).unwrap())
                .unwrap();
        assert!(!constant);
    }

    #[test]
    fn coset_state_is_a_valid_density_matrix() {
        let f = make_field(5, 1).unwrap();
        let pgl = Group::new(GroupFlavor::Pgl, &f).unwrap();
        let b = f.element_from_val(2).unwrap();
        let oracle =
            HidingOracle::make_stabilizer_oracle(&pgl, ProjPoint::Finite(b)).unwrap();
        let restricted = oracle.restrict(&pgl, &pgl.borel().unwrap()).unwrap();
        let pipeline = BorelPipeline::new(pgl).unwrap();
        let state = pipeline.coset_state_from_oracle(&restricted).unwrap();
        assert_eq!(state.coset_count(), f.q() as usize);
        let check = state.validate();
        assert!(check.hermiticity_residual < COMPLEX_EQ);
        assert!(check.trace_error < COMPLEX_EQ);
        assert!(check.max_vector_norm_error < COMPLEX_EQ);
    }

    #[test]
    fn fourier_basis_is_unitary() {
        for (p, n) in [(5u32, 1u32), (3, 2)] {
            let f = make_field(p, n).unwrap();
            let pgl = Group::new(GroupFlavor::Pgl, &f).unwrap();
            let pipeline = BorelPipeline::new(pgl).unwrap();
            assert!(pipeline.fourier_unitarity_residual() < COMPLEX_EQ);
        }
    }

    #[test]
    fn weak_measurement_masses() {
        let f = make_field(5, 1).unwrap();
        let pgl = Group::new(GroupFlavor::Pgl, &f).unwrap();
        let report = brute_force_distribution(&pgl, f.element_from_val(2).unwrap()).unwrap();
        assert!((report.rho_mass - 0.8).abs() < COMPLEX_EQ); // 1 - 1/q
        assert!((report.weak[&IrrepLabel::Character(0)] - 0.2).abs() < COMPLEX_EQ);
        for t in 1..4 {
            assert!(report.weak[&IrrepLabel::Character(t)].abs() < COMPLEX_EQ);
        }

        let f7 = make_field(7, 1).unwrap();
        let psl = Group::new(GroupFlavor::Psl, &f7).unwrap();
        let report = brute_force_distribution(&psl, f7.element_from_val(3).unwrap()).unwrap();
        assert!((report.rho_mass - 6.0 / 7.0).abs() < COMPLEX_EQ);
        let q = f7.q();
        let trivial = report.weak[&IrrepLabel::Character(0)];
        let sign = report.weak[&IrrepLabel::Character((q - 1) / 2)];
        assert!((trivial - 1.0 / 14.0).abs() < COMPLEX_EQ);
        assert!((sign - 1.0 / 14.0).abs() < COMPLEX_EQ);
        assert!(trivial + sign <= 2.0 / q as f64 + COMPLEX_EQ);
        for t in 1..q - 1 {
            if t != (q - 1) / 2 {
                assert!(report.weak[&IrrepLabel::Character(t)].abs() < COMPLEX_EQ);
            }
        }
    }

    #[test]
    fn three_routes_agree_for_pgl_q5() {
        let f = make_field(5, 1).unwrap();
        let pgl = Group::new(GroupFlavor::Pgl, &f).unwrap();
        for bv in 0..5 {
            let b = f.element_from_val(bv).unwrap();
            let brute = brute_force_distribution(&pgl, b).unwrap();
            assert_eq!(brute.branches.len(), 1);
            let (_, ref brute_dist) = brute.branches[0];
            assert!(brute_dist.is_normalized());
            let closed = closed_form_distribution(&pgl, b, Branch::Full).unwrap();
            assert!(brute_dist.max_abs_diff(&closed) < COMPLEX_EQ);
            for kv in 1..5 {
                let k = f.element_from_val(kv).unwrap();
                let mid = conditional_row_fourier_distribution(&pgl, b, k).unwrap();
                assert!(mid.max_abs_diff(&closed) < COMPLEX_EQ);
            }
            // P(b) = 0.8, off-peak 1/20.
            assert!((closed.prob(bv) - 0.8).abs() < COMPLEX_EQ);
        }
    }

    #[test]
    fn three_routes_agree_for_psl_q7_both_branches() {
        let f = make_field(7, 1).unwrap();
        let psl = Group::new(GroupFlavor::Psl, &f).unwrap();
        for bv in 0..7 {
            let b = f.element_from_val(bv).unwrap();
            let brute = brute_force_distribution(&psl, b).unwrap();
            assert_eq!(brute.branches.len(), 2);
            for (branch, dist) in &brute.branches {
                assert!(dist.is_normalized());
                let closed = closed_form_distribution(&psl, b, *branch).unwrap();
                assert!(
                    dist.max_abs_diff(&closed) < COMPLEX_EQ,
                    "branch {branch} b={bv}: {:?} vs {:?}",
                    dist.probs(),
                    closed.probs()
                );
                // Mid-level route with a column from the matching square class.
                let column = f
                    .nonzero_elements()
                    .find(|&k| {
                        let plus = f.is_square(k);
                        (*branch == Branch::Plus) == plus
                    })
                    .unwrap();
                let mid = conditional_row_fourier_distribution(&psl, b, column).unwrap();
                assert!(mid.max_abs_diff(&closed) < COMPLEX_EQ);
                // Peak (q-1)/2q = 3/7; off-peak uniform (q+1)/(2q(q-1)) = 2/21
                // since d is odd for q = 7.
                assert!((dist.prob(bv) - 3.0 / 7.0).abs() < COMPLEX_EQ);
                for lv in 0..7 {
                    if lv != bv {
                        assert!((dist.prob(lv) - 2.0 / 21.0).abs() < COMPLEX_EQ);
                    }
                }
            }
        }
    }

    #[test]
    fn sl_pipeline_matches_psl() {
        let f = make_field(5, 1).unwrap();
        let sl = Group::new(GroupFlavor::Sl, &f).unwrap();
        let psl = Group::new(GroupFlavor::Psl, &f).unwrap();
        for bv in 0..5 {
            let b = f.element_from_val(bv).unwrap();
            let r_sl = brute_force_distribution(&sl, b).unwrap();
            let r_psl = brute_force_distribution(&psl, b).unwrap();
            assert!((r_sl.rho_mass - r_psl.rho_mass).abs() < COMPLEX_EQ);
            for ((br_s, d_s), (br_p, d_p)) in r_sl.branches.iter().zip(&r_psl.branches) {
                assert_eq!(br_s, br_p);
                assert!(d_s.max_abs_diff(d_p) < COMPLEX_EQ);
            }
        }
    }

    #[test]
    fn distribution_is_invariant_under_color_relabeling() {
        let f = make_field(5, 1).unwrap();
        let pgl = Group::new(GroupFlavor::Pgl, &f).unwrap();
        let b = f.element_from_val(3).unwrap();
        let oracle =
            HidingOracle::make_stabilizer_oracle(&pgl, ProjPoint::Finite(b)).unwrap();
        let borel = pgl.borel().unwrap();
        let restricted = oracle.restrict(&pgl, &borel).unwrap();
        let pipeline = BorelPipeline::new(pgl).unwrap();
        let base = pipeline
            .measure(&pipeline.coset_state_from_oracle(&restricted).unwrap());

        // Cyclically permute the color labels.
        let colors: Vec<Color> = restricted.classes().keys().copied().collect();
        let perm: HashMap<Color, Color> = colors
            .iter()
            .zip(colors.iter().cycle().skip(1))
            .map(|(&a, &b)| (a, b))
            .collect();
        let permuted = restricted.with_permuted_colors(&perm).unwrap();
        let relabeled = pipeline
            .measure(&pipeline.coset_state_from_oracle(&permuted).unwrap());
        assert!((base.rho_mass - relabeled.rho_mass).abs() < COMPLEX_EQ);
        for ((_, d1), (_, d2)) in base.branches.iter().zip(&relabeled.branches) {
            assert!(d1.max_abs_diff(d2) < COMPLEX_EQ);
        }
    }

    #[test]
    fn recovery_finds_hidden_points() {
        let f = make_field(5, 1).unwrap();
        let pgl = Group::new(GroupFlavor::Pgl, &f).unwrap();
        for bv in 0..5 {
            let s = pgl.finite_point(bv).unwrap();
            let oracle = HidingOracle::make_stabilizer_oracle(&pgl, s).unwrap();
            let result = recover_hidden_point(&pgl, &oracle, Some(25), 7).unwrap();
            assert_eq!(result.recovered, s);
            assert!(result.confidence > 0.99);
        }
        // infinity is settled classically.
        let oracle =
            HidingOracle::make_stabilizer_oracle(&pgl, ProjPoint::Infinity).unwrap();
        let result = recover_hidden_point(&pgl, &oracle, Some(25), 7).unwrap();
        assert_eq!(result.recovered, ProjPoint::Infinity);
        assert!(result.oracle_queries <= 4);
        assert_eq!(result.samples, 0);
    }

    #[test]
    fn recovery_is_seed_deterministic() {
        let f = make_field(7, 1).unwrap();
        let psl = Group::new(GroupFlavor::Psl, &f).unwrap();
        let s = psl.finite_point(3).unwrap();
        let oracle = HidingOracle::make_stabilizer_oracle(&psl, s).unwrap();
        let a = recover_hidden_point(&psl, &oracle, Some(60), 1).unwrap();
        let b = recover_hidden_point(&psl, &oracle, Some(60), 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.recovered, s);
        let c = recover_hidden_point(&psl, &oracle, Some(60), 2).unwrap();
        assert_eq!(c.recovered, s); // same answer, possibly different histogram
    }

    #[test]
    fn default_sample_count_is_sane() {
        let f = make_field(3, 2).unwrap();
        let pgl = Group::new(GroupFlavor::Pgl, &f).unwrap();
        let report = brute_force_distribution(&pgl, f.element_from_val(1).unwrap()).unwrap();
        let m = default_sample_count(&report.merged());
        assert!((5..=200).contains(&m), "m = {m}");
    }

    #[test]
    fn broken_oracle_is_rejected() {
        let f = make_field(5, 1).unwrap();
        let pgl = Group::new(GroupFlavor::Pgl, &f).unwrap();
        let oracle =
            HidingOracle::make_stabilizer_oracle(&pgl, pgl.finite_point(0).unwrap()).unwrap();
        // Tamper: merge two colors that are both visible on the Borel
        // subgroup, so the violation hits the queried domain.
        let borel = pgl.borel().unwrap();
        let mut seen = BTreeSet::new();
        for g in borel.elements() {
            seen.insert(oracle.query(g).unwrap());
            if seen.len() == 2 {
                break;
            }
        }
        let keys: Vec<Color> = seen.into_iter().collect();
        let mut colors = HashMap::new();
        for g in oracle.domain() {
            let mut c = oracle.query(g).unwrap();
            if c == keys[1] {
                c = keys[0];
            }
            colors.insert(*g, c);
        }
        let broken = HidingOracle::from_raw_parts(
            oracle.domain().to_vec(),
            colors,
            oracle.hidden_subgroup().to_vec(),
        );
        assert_eq!(
            broken.verify_promise(&pgl).unwrap_err(),
            HspError::PromiseViolation
        );
        assert_eq!(
            recover_hidden_point(&pgl, &broken, Some(10), 1).unwrap_err(),
            HspError::PromiseViolation
        );
    }

    #[test]
    fn gl_flavor_is_refused() {
        let f = make_field(5, 1).unwrap();
        let gl = Group::new(GroupFlavor::Gl, &f).unwrap();
        assert!(matches!(
            BorelPipeline::new(gl),
            Err(HspError::UnsupportedFlavor)
        ));
    }
}
