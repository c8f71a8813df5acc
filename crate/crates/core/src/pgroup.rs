//! The 2x2 matrix groups `GL/SL/PGL/PSL(2;q)`, the projective line, and the
//! fractional linear action.
//!
//! Elements are stored in a canonical form so that `==` is group equality:
//! GL and SL keep their entries as-is, PGL scales the first nonzero entry to
//! 1, and PSL keeps the lexicographically smaller of the two determinant-1
//! representatives `+-M`. The Borel subgroup is the stabilizer of `infinity`
//! on the projective line; `decompose_borel` reads off the affine map
//! `x -> ax + b` that a Borel element induces on `PF_q - {infinity}`, which
//! is the bridge into the `AGL(1;q)` representation theory.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::affine_rep::AffineElement;
use crate::ff::{FieldCtx, FieldElement, FieldError};

/// Enumeration guard: groups larger than this are refused.
pub const MAX_GROUP_ORDER: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("this flavor requires odd q")]
    EvenCharacteristic,
    #[error("matrix is not invertible")]
    NonInvertible,
    #[error("determinant must be 1 for this flavor")]
    DetNotOne,
    #[error("elements from different field contexts")]
    MixedContexts,
    #[error("elements of different group flavors")]
    FlavorMismatch,
    #[error("group order {0} exceeds the enumeration budget")]
    GroupTooLarge(u64),
    #[error("stabilizer points must be distinct")]
    DuplicatePoints,
    #[error("element is not upper triangular")]
    NotUpperTriangular,
    #[error("element list is not closed under product and inverse")]
    NotClosed,
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupFlavor {
    Gl,
    Sl,
    Pgl,
    Psl,
}

impl GroupFlavor {
    pub fn projective(&self) -> bool {
        matches!(self, GroupFlavor::Pgl | GroupFlavor::Psl)
    }

    pub fn det_one(&self) -> bool {
        matches!(self, GroupFlavor::Sl | GroupFlavor::Psl)
    }
}

impl fmt::Display for GroupFlavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GroupFlavor::Gl => "gl",
            GroupFlavor::Sl => "sl",
            GroupFlavor::Pgl => "pgl",
            GroupFlavor::Psl => "psl",
        };
        f.write_str(s)
    }
}

impl FromStr for GroupFlavor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gl" => Ok(GroupFlavor::Gl),
            "sl" => Ok(GroupFlavor::Sl),
            "pgl" => Ok(GroupFlavor::Pgl),
            "psl" => Ok(GroupFlavor::Psl),
            other => Err(format!("unknown group flavor `{other}`")),
        }
    }
}

/// A canonical-form 2x2 matrix `(a b / c d)` tagged with its flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupElement {
    flavor: GroupFlavor,
    entries: [FieldElement; 4],
}

impl GroupElement {
    pub fn flavor(&self) -> GroupFlavor {
        self.flavor
    }

    /// Entries row-major: `[a, b, c, d]`.
    pub fn entries(&self) -> [FieldElement; 4] {
        self.entries
    }
}

/// A point of the projective line `PF_q = F_q + {infinity}`.
///
/// The derived order puts `infinity` first and then field elements by packed
/// value, which fixes the tuple enumeration order everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProjPoint {
    Infinity,
    Finite(FieldElement),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubgroupKind {
    PointStabilizer(Vec<ProjPoint>),
    Borel,
    ExplicitList,
}

/// A materialized subgroup: sorted canonical elements plus provenance.
#[derive(Debug, Clone)]
pub struct SubgroupDesc {
    pub kind: SubgroupKind,
    pub flavor: GroupFlavor,
    elements: Vec<GroupElement>,
}

impl SubgroupDesc {
    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.elements.binary_search(g).is_ok()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Group<'f> {
    pub flavor: GroupFlavor,
    pub field: &'f FieldCtx,
}

impl<'f> Group<'f> {
    pub fn new(flavor: GroupFlavor, field: &'f FieldCtx) -> Result<Self, GroupError> {
        if flavor != GroupFlavor::Gl && !field.odd() {
            return Err(GroupError::EvenCharacteristic);
        }
        Ok(Group { flavor, field })
    }

    pub fn order(&self) -> u64 {
        let q = self.field.q() as u64;
        match self.flavor {
            GroupFlavor::Gl => (q * q - 1) * (q * q - q),
            GroupFlavor::Sl | GroupFlavor::Pgl => (q + 1) * q * (q - 1),
            GroupFlavor::Psl => (q + 1) * q * (q - 1) / 2,
        }
    }

    // ---- element construction ----

    pub fn element(&self, entries: [FieldElement; 4]) -> Result<GroupElement, GroupError> {
        for e in &entries {
            if e.ctx_id() != self.field.id() {
                return Err(GroupError::MixedContexts);
            }
        }
        let det = self.det_vals(entries.map(|e| e.val()));
        if det == 0 {
            return Err(GroupError::NonInvertible);
        }
        if self.flavor.det_one() && det != 1 {
            return Err(GroupError::DetNotOne);
        }
        Ok(self.canonical(entries.map(|e| e.val())))
    }

    pub fn element_from_vals(&self, vals: [u32; 4]) -> Result<GroupElement, GroupError> {
        let mut entries = [self.field.zero(); 4];
        for (e, &v) in entries.iter_mut().zip(vals.iter()) {
            *e = self.field.element_from_val(v)?;
        }
        self.element(entries)
    }

    pub fn identity(&self) -> GroupElement {
        self.canonical([1, 0, 0, 1])
    }

    /// The Weyl element `(0 -1 / 1 0)`; conjugates the Borel subgroup onto
    /// the lower-triangular stabilizer of 0.
    pub fn weyl(&self) -> GroupElement {
        let neg_one = self.field.neg(self.field.one()).val();
        self.canonical([0, neg_one, 1, 0])
    }

    fn det_vals(&self, v: [u32; 4]) -> u32 {
        let f = self.field;
        f.sub_val(f.mul_val(v[0], v[3]), f.mul_val(v[1], v[2]))
    }

    /// Reduces raw entry values to the canonical representative.
    fn canonical(&self, mut v: [u32; 4]) -> GroupElement {
        let f = self.field;
        match self.flavor {
            GroupFlavor::Gl | GroupFlavor::Sl => {}
            GroupFlavor::Pgl => {
                let lead = v.iter().copied().find(|&x| x != 0).expect("invertible matrix");
                let s = f.inv_val(lead);
                for x in v.iter_mut() {
                    *x = f.mul_val(*x, s);
                }
            }
            GroupFlavor::Psl => {
                let neg: [u32; 4] = [
                    f.sub_val(0, v[0]),
                    f.sub_val(0, v[1]),
                    f.sub_val(0, v[2]),
                    f.sub_val(0, v[3]),
                ];
                if neg < v {
                    v = neg;
                }
            }
        }
        let entries = v.map(|x| self.field.element_from_val(x).expect("reduced value"));
        GroupElement { flavor: self.flavor, entries }
    }

    fn check(&self, g: &GroupElement) -> Result<(), GroupError> {
        if g.flavor != self.flavor {
            return Err(GroupError::FlavorMismatch);
        }
        if g.entries[0].ctx_id() != self.field.id() {
            return Err(GroupError::MixedContexts);
        }
        Ok(())
    }

    // ---- group operations ----

    pub fn mul(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(g)?;
        self.check(h)?;
        Ok(self.mul_raw(g, h))
    }

    pub(crate) fn mul_raw(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        let f = self.field;
        let a = g.entries.map(|e| e.val());
        let b = h.entries.map(|e| e.val());
        self.canonical([
            f.add_val(f.mul_val(a[0], b[0]), f.mul_val(a[1], b[2])),
            f.add_val(f.mul_val(a[0], b[1]), f.mul_val(a[1], b[3])),
            f.add_val(f.mul_val(a[2], b[0]), f.mul_val(a[3], b[2])),
            f.add_val(f.mul_val(a[2], b[1]), f.mul_val(a[3], b[3])),
        ])
    }

    pub fn inv(&self, g: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(g)?;
        Ok(self.inv_raw(g))
    }

    pub(crate) fn inv_raw(&self, g: &GroupElement) -> GroupElement {
        let f = self.field;
        let v = g.entries.map(|e| e.val());
        let det = self.det_vals(v);
        let di = f.inv_val(det);
        self.canonical([
            f.mul_val(v[3], di),
            f.mul_val(f.sub_val(0, v[1]), di),
            f.mul_val(f.sub_val(0, v[2]), di),
            f.mul_val(v[0], di),
        ])
    }

    /// `h g h^{-1}`.
    pub fn conjugate(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(g)?;
        self.check(h)?;
        Ok(self.mul_raw(&self.mul_raw(h, g), &self.inv_raw(h)))
    }

    // ---- projective line ----

    pub fn infinity(&self) -> ProjPoint {
        ProjPoint::Infinity
    }

    pub fn finite_point(&self, val: u32) -> Result<ProjPoint, GroupError> {
        Ok(ProjPoint::Finite(self.field.element_from_val(val)?))
    }

    /// All `q + 1` points: infinity first, then field elements in packed order.
    pub fn projective_line(&self) -> Vec<ProjPoint> {
        let mut pts = vec![ProjPoint::Infinity];
        pts.extend(self.field.elements().map(ProjPoint::Finite));
        pts
    }

    /// Fractional linear action `x -> (ax + b)/(cx + d)`.
    pub fn act(&self, g: &GroupElement, x: ProjPoint) -> Result<ProjPoint, GroupError> {
        self.check(g)?;
        if let ProjPoint::Finite(e) = x {
            if e.ctx_id() != self.field.id() {
                return Err(GroupError::MixedContexts);
            }
        }
        Ok(self.act_raw(g, x))
    }

    pub(crate) fn act_raw(&self, g: &GroupElement, x: ProjPoint) -> ProjPoint {
        let f = self.field;
        let v = g.entries.map(|e| e.val());
        match x {
            ProjPoint::Finite(e) => {
                let num = f.add_val(f.mul_val(v[0], e.val()), v[1]);
                let den = f.add_val(f.mul_val(v[2], e.val()), v[3]);
                if den == 0 {
                    ProjPoint::Infinity
                } else {
                    let img = f.mul_val(num, f.inv_val(den));
                    ProjPoint::Finite(f.element_from_val(img).expect("reduced value"))
                }
            }
            ProjPoint::Infinity => {
                if v[2] == 0 {
                    ProjPoint::Infinity
                } else {
                    let img = f.mul_val(v[0], f.inv_val(v[2]));
                    ProjPoint::Finite(f.element_from_val(img).expect("reduced value"))
                }
            }
        }
    }

    // ---- enumeration and subgroups ----

    /// Every canonical element exactly once, in lexicographic entry order.
    pub fn enumerate(&self) -> Result<Vec<GroupElement>, GroupError> {
        let order = self.order();
        if order > MAX_GROUP_ORDER {
            return Err(GroupError::GroupTooLarge(order));
        }
        let q = self.field.q();
        let mut out = BTreeSet::new();
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    for d in 0..q {
                        let v = [a, b, c, d];
                        let det = self.det_vals(v);
                        if det == 0 {
                            continue;
                        }
                        if self.flavor.det_one() && det != 1 {
                            continue;
                        }
                        out.insert(self.canonical(v));
                    }
                }
            }
        }
        debug_assert_eq!(out.len() as u64, order);
        Ok(out.into_iter().collect())
    }

    /// Pointwise stabilizer `G_S`, materialized by filtering the enumeration.
    pub fn stabilizer(&self, points: &[ProjPoint]) -> Result<SubgroupDesc, GroupError> {
        let distinct: BTreeSet<&ProjPoint> = points.iter().collect();
        if distinct.len() != points.len() {
            return Err(GroupError::DuplicatePoints);
        }
        let elements: Vec<GroupElement> = self
            .enumerate()?
            .into_iter()
            .filter(|g| points.iter().all(|&pt| self.act_raw(g, pt) == pt))
            .collect();
        Ok(SubgroupDesc {
            kind: SubgroupKind::PointStabilizer(points.to_vec()),
            flavor: self.flavor,
            elements,
        })
    }

    /// The Borel subgroup `B = G_infinity` (upper-triangular elements).
    pub fn borel(&self) -> Result<SubgroupDesc, GroupError> {
        let mut desc = self.stabilizer(&[ProjPoint::Infinity])?;
        debug_assert!(desc.elements.iter().all(|g| g.entries[2].val() == 0));
        desc.kind = SubgroupKind::Borel;
        Ok(desc)
    }

    /// Wraps an explicit element list, verifying closure under product and
    /// inverse.
    pub fn subgroup_from_elements(&self, elements: &[GroupElement]) -> Result<SubgroupDesc, GroupError> {
        let set: BTreeSet<GroupElement> = elements.iter().copied().collect();
        for g in &set {
            self.check(g)?;
            if !set.contains(&self.inv_raw(g)) {
                return Err(GroupError::NotClosed);
            }
            for h in &set {
                if !set.contains(&self.mul_raw(g, h)) {
                    return Err(GroupError::NotClosed);
                }
            }
        }
        Ok(SubgroupDesc {
            kind: SubgroupKind::ExplicitList,
            flavor: self.flavor,
            elements: set.into_iter().collect(),
        })
    }

    /// Borel generators: one multiplier and one unit translation. Together
    /// they generate all of `B` for the odd-q flavors (checked in tests).
    pub fn borel_generators(&self) -> Result<Vec<GroupElement>, GroupError> {
        let g = self.field.generator().val();
        let gi = self.field.inv_val(g);
        let mut gens = Vec::new();
        match self.flavor {
            GroupFlavor::Pgl => {
                gens.push(self.element_from_vals([g, 0, 0, 1])?);
            }
            GroupFlavor::Sl | GroupFlavor::Psl => {
                gens.push(self.element_from_vals([g, 0, 0, gi])?);
            }
            GroupFlavor::Gl => {
                gens.push(self.element_from_vals([g, 0, 0, 1])?);
                gens.push(self.element_from_vals([1, 0, 0, g])?);
            }
        }
        gens.push(self.element_from_vals([1, 1, 0, 1])?);
        Ok(gens)
    }

    /// Reads off the affine map `x -> ax + b` that an upper-triangular
    /// element induces on `PF_q - {infinity}`: `a = alpha/delta`,
    /// `b = beta/delta`. Invariant under the center, so PSL's choice of
    /// representative never matters; for SL the map is the 2:1 cover onto
    /// the square-multiplier subgroup (`a = alpha^2`).
    pub fn decompose_borel(&self, g: &GroupElement) -> Result<AffineElement, GroupError> {
        self.check(g)?;
        let v = g.entries.map(|e| e.val());
        if v[2] != 0 {
            return Err(GroupError::NotUpperTriangular);
        }
        let f = self.field;
        let di = f.inv_val(v[3]);
        let a = f.element_from_val(f.mul_val(v[0], di))?;
        let b = f.element_from_val(f.mul_val(v[1], di))?;
        Ok(AffineElement { a, b })
    }
}
