//! k-transitivity measurements for finite group actions.
//!
//! An [`Action`] is a materialized group element list together with a finite
//! domain and an evaluation closure. Reachability of ordered tuples of
//! distinct points is computed by orbit decomposition: the set reachable
//! from a tuple `t` is exactly the orbit of `t`, so one pass of the whole
//! element list per orbit settles every source tuple at once. Fractions are
//! exact rationals throughout; `b = 1/2` must come out as `1/2`, not
//! `0.4999...`.

use std::collections::HashMap;
use std::hash::Hash;

use num_rational::Ratio;
use thiserror::Error;

/// Enumeration guards for tuple spaces and element lists.
pub const MAX_TUPLES: u64 = 1_000_000;
pub const MAX_ELEMENTS: u64 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransitivityError {
    #[error("domain is empty")]
    EmptyDomain,
    #[error("element does not permute the domain")]
    NotPermutation,
    #[error("k = {k} needs {tuples} tuples over {elements} elements, past the enumeration budget")]
    BudgetExceeded { k: usize, tuples: u64, elements: u64 },
    #[error("point is not in the action domain")]
    PointOutsideDomain,
    #[error("points must be distinct")]
    DuplicatePoints,
    #[error("action is not {k}-transitive (index of the stabilizer is {index})")]
    NotKTransitive { k: usize, index: u64 },
}

/// Reachability report for ordered k-tuples of distinct points.
///
/// `b` is the minimum, over source tuples, of the fraction of all tuples
/// reached; `fraction_reached` is the fraction for the lexicographically
/// first source tuple. The action is k-transitive exactly when there is a
/// single orbit, i.e. every fraction is 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitivityReport {
    pub k: usize,
    pub fraction_reached: Ratio<u64>,
    pub b: Ratio<u64>,
    pub is_k_transitive: bool,
    pub orbit_count: usize,
    pub tuple_count: u64,
    pub orbit_sizes: Vec<u64>,
}

/// Outcome of the stabilizer index-formula check `|G|/|G_S| = s!/(s-j)!`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexFormulaReport {
    pub holds: bool,
    pub index: u64,
    pub expected: u64,
    pub stabilizer_order: u64,
    pub group_order: u64,
}

/// Outcome of the two-point stabilizer distinctness check at a base point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistinctnessReport<P> {
    /// Whether the action is 2-transitive with `b >= 1/(s-2)` for 3-tuples.
    pub precondition_met: bool,
    /// `Some(true)` when all two-point stabilizers at the base are distinct;
    /// not asserted when the precondition fails.
    pub holds: Option<bool>,
    pub witness: Option<(P, P)>,
}

#[derive(Debug)]
pub struct Action<G, P> {
    elements: Vec<G>,
    domain: Vec<P>,
    /// Permutation tables: element `e` maps point index `i` to
    /// `perms[e * s + i]`.
    perms: Vec<u32>,
}

impl<G, P> Action<G, P>
where
    P: Clone + Eq + Hash,
{
    /// Materializes the action, verifying each element permutes the domain.
    pub fn new(
        elements: Vec<G>,
        domain: Vec<P>,
        apply: impl Fn(&G, &P) -> P,
    ) -> Result<Self, TransitivityError> {
        if domain.is_empty() {
            return Err(TransitivityError::EmptyDomain);
        }
        if elements.len() as u64 > MAX_ELEMENTS {
            return Err(TransitivityError::BudgetExceeded {
                k: 0,
                tuples: 0,
                elements: elements.len() as u64,
            });
        }
        let index: HashMap<&P, u32> =
            domain.iter().enumerate().map(|(i, p)| (p, i as u32)).collect();
        if index.len() != domain.len() {
            return Err(TransitivityError::DuplicatePoints);
        }
        let s = domain.len();
        let mut perms = vec![0u32; elements.len() * s];
        let mut seen = vec![false; s];
        for (e, g) in elements.iter().enumerate() {
            seen.fill(false);
            for (i, p) in domain.iter().enumerate() {
                let img = apply(g, p);
                let Some(&idx) = index.get(&img) else {
                    return Err(TransitivityError::NotPermutation);
                };
                if seen[idx as usize] {
                    return Err(TransitivityError::NotPermutation);
                }
                seen[idx as usize] = true;
                perms[e * s + i] = idx;
            }
        }
        Ok(Action { elements, domain, perms })
    }

    pub fn domain(&self) -> &[P] {
        &self.domain
    }

    pub fn group_order(&self) -> u64 {
        self.elements.len() as u64
    }

    fn point_index(&self, p: &P) -> Result<usize, TransitivityError> {
        self.domain
            .iter()
            .position(|x| x == p)
            .ok_or(TransitivityError::PointOutsideDomain)
    }

    fn tuple_space(&self, k: usize) -> Result<Vec<Vec<u8>>, TransitivityError> {
        let s = self.domain.len() as u64;
        let mut count = 1u64;
        for i in 0..k as u64 {
            count = count.saturating_mul(s.saturating_sub(i));
        }
        if k == 0 || k as u64 > s || count > MAX_TUPLES || self.domain.len() > u8::MAX as usize {
            return Err(TransitivityError::BudgetExceeded {
                k,
                tuples: count,
                elements: self.group_order(),
            });
        }
        let mut tuples = Vec::with_capacity(count as usize);
        let mut current = Vec::with_capacity(k);
        fn rec(s: usize, k: usize, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
            if current.len() == k {
                out.push(current.clone());
                return;
            }
            for i in 0..s as u8 {
                if !current.contains(&i) {
                    current.push(i);
                    rec(s, k, current, out);
                    current.pop();
                }
            }
        }
        rec(self.domain.len(), k, &mut current, &mut tuples);
        Ok(tuples)
    }

    #[inline]
    fn apply_tuple(&self, e: usize, tuple: &[u8]) -> Vec<u8> {
        let s = self.domain.len();
        tuple.iter().map(|&i| self.perms[e * s + i as usize] as u8).collect()
    }

    /// Orbit decomposition of the ordered distinct k-tuples.
    pub fn transitivity_fraction(&self, k: usize) -> Result<TransitivityReport, TransitivityError> {
        let tuples = self.tuple_space(k)?;
        let total = tuples.len() as u64;
        let mut orbit_of: HashMap<Vec<u8>, u32> = HashMap::with_capacity(tuples.len());
        let mut orbit_sizes: Vec<u64> = Vec::new();
        for t in &tuples {
            if orbit_of.contains_key(t) {
                continue;
            }
            let id = orbit_sizes.len() as u32;
            let mut size = 0u64;
            for e in 0..self.elements.len() {
                let img = self.apply_tuple(e, t);
                if orbit_of.insert(img, id).is_none() {
                    size += 1;
                }
            }
            orbit_sizes.push(size);
        }
        let first_orbit = orbit_of[&tuples[0]] as usize;
        let min_size = *orbit_sizes.iter().min().expect("at least one orbit");
        Ok(TransitivityReport {
            k,
            fraction_reached: Ratio::new(orbit_sizes[first_orbit], total),
            b: Ratio::new(min_size, total),
            is_k_transitive: orbit_sizes.len() == 1,
            orbit_count: orbit_sizes.len(),
            tuple_count: total,
            orbit_sizes,
        })
    }

    /// Element indices fixing every point of `points`.
    fn stabilizer_indices(&self, points: &[usize]) -> Vec<usize> {
        let s = self.domain.len();
        (0..self.elements.len())
            .filter(|&e| points.iter().all(|&i| self.perms[e * s + i] as usize == i))
            .collect()
    }

    /// Materialized pointwise stabilizer of `points`.
    pub fn stabilizer(&self, points: &[P]) -> Result<Vec<&G>, TransitivityError> {
        let idx: Result<Vec<usize>, _> = points.iter().map(|p| self.point_index(p)).collect();
        Ok(self.stabilizer_indices(&idx?).into_iter().map(|e| &self.elements[e]).collect())
    }

    /// Checks `|G|/|G_S| = s!/(s-j)!` for a `k`-transitive action, `j = |S|`.
    pub fn verify_index_formula(
        &self,
        points: &[P],
        k: usize,
    ) -> Result<IndexFormulaReport, TransitivityError> {
        let mut idx = Vec::with_capacity(points.len());
        for p in points {
            idx.push(self.point_index(p)?);
        }
        let mut dedup = idx.clone();
        dedup.sort_unstable();
        dedup.dedup();
        if dedup.len() != idx.len() {
            return Err(TransitivityError::DuplicatePoints);
        }
        let j = idx.len();
        let stab = self.stabilizer_indices(&idx).len() as u64;
        let group = self.group_order();
        debug_assert_eq!(group % stab, 0, "stabilizer order divides group order");
        let index = group / stab;
        if j > k || !self.transitivity_fraction(k)?.is_k_transitive {
            return Err(TransitivityError::NotKTransitive { k, index });
        }
        let s = self.domain.len() as u64;
        let mut expected = 1u64;
        for i in 0..j as u64 {
            expected *= s - i;
        }
        Ok(IndexFormulaReport {
            holds: index == expected,
            index,
            expected,
            stabilizer_order: stab,
            group_order: group,
        })
    }

    /// Checks that two-point stabilizers `G_{alpha,beta}` through a fixed
    /// base point are pairwise distinct, the engine behind distinguishing
    /// point stabilizers after restriction. Guarded by the almost-3-transitive
    /// condition `b >= 1/(s-2)`; when that fails the check is reported as not
    /// asserted rather than evaluated.
    pub fn verify_distinctness(&self, alpha: &P) -> Result<DistinctnessReport<P>, TransitivityError> {
        let s = self.domain.len();
        let alpha_idx = self.point_index(alpha)?;
        let two = self.transitivity_fraction(2)?;
        let three = self.transitivity_fraction(3)?;
        let threshold = Ratio::new(1u64, (s as u64).saturating_sub(2).max(1));
        if !two.is_k_transitive || three.b < threshold {
            return Ok(DistinctnessReport { precondition_met: false, holds: None, witness: None });
        }
        let others: Vec<usize> = (0..s).filter(|&i| i != alpha_idx).collect();
        let stabs: Vec<Vec<usize>> = others
            .iter()
            .map(|&beta| self.stabilizer_indices(&[alpha_idx, beta]))
            .collect();
        for (x, beta) in others.iter().enumerate() {
            for (y, gamma) in others.iter().enumerate().skip(x + 1) {
                if stabs[x] == stabs[y] {
                    return Ok(DistinctnessReport {
                        precondition_met: true,
                        holds: Some(false),
                        witness: Some((self.domain[*beta].clone(), self.domain[*gamma].clone())),
                    });
                }
            }
        }
        Ok(DistinctnessReport { precondition_met: true, holds: Some(true), witness: None })
    }

    /// For each reachable image of `source`, the number of group elements
    /// mapping `source` onto it.
    pub fn image_multiplicities(
        &self,
        source: &[P],
    ) -> Result<HashMap<Vec<P>, u64>, TransitivityError> {
        let mut idx = Vec::with_capacity(source.len());
        for p in source {
            idx.push(self.point_index(p)? as u8);
        }
        let mut counts: HashMap<Vec<u8>, u64> = HashMap::new();
        for e in 0..self.elements.len() {
            *counts.entry(self.apply_tuple(e, &idx)).or_insert(0) += 1;
        }
        Ok(counts
            .into_iter()
            .map(|(t, c)| {
                (t.into_iter().map(|i| self.domain[i as usize].clone()).collect(), c)
            })
            .collect())
    }
}
