//! The finite-depth space attached to a parameter sequence.
//!
//! A point here is honest finite data: a level element tagged with its
//! depth, standing for the cylinder of all infinite extensions. Deepening a
//! point uses the trivial identity tail and therefore needs the identity in
//! the traversed block sets; nothing else is fabricated. Cylinders (a level
//! plus a subset of the tower shape) are the exact finite shadows that the
//! elementary maps act on.

use std::sync::Arc;

use num::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{CfError, Result};
use crate::group::GroupElement;
use crate::report::{ratio, ratio_vec_serde};
use crate::seq::CfSequence;
use crate::subset::FiniteSubset;

pub type SeqRef = Arc<CfSequence>;

pub fn same_seq(a: &SeqRef, b: &SeqRef) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// An element of the level-`depth` tower shape, standing for its cylinder.
#[derive(Debug, Clone)]
pub struct DepthPoint {
    seq: SeqRef,
    depth: usize,
    value: GroupElement,
}

/// The unique expression of a point at a shallower level: the base element
/// plus one block coordinate per traversed level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub base: usize,
    pub base_value: GroupElement,
    /// coords[i] ∈ C_{base+1+i}
    pub coords: Vec<GroupElement>,
}

impl DepthPoint {
    pub fn new(seq: SeqRef, depth: usize, value: GroupElement) -> Result<Self> {
        if depth > seq.levels() {
            return Err(CfError::PreconditionError(format!(
                "depth {depth} exceeds stored prefix ({} levels)",
                seq.levels()
            )));
        }
        if !seq.f(depth).contains(&value) {
            return Err(CfError::PreconditionError(format!(
                "value {value} is not in F_{depth}"
            )));
        }
        Ok(DepthPoint { seq, depth, value })
    }

    pub fn seq(&self) -> &SeqRef {
        &self.seq
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn value(&self) -> &GroupElement {
        &self.value
    }

    /// The unique (f, c) with f ∈ F_{m-1}, c ∈ C_m and f·c = v, if any.
    /// Two matches mean the sequence violates disjointness.
    fn factor_step(seq: &CfSequence, m: usize, v: &GroupElement) -> Result<Option<(GroupElement, GroupElement)>> {
        let mut found: Option<(GroupElement, GroupElement)> = None;
        for c in seq.c(m).iter() {
            let f = v.mul(&c.inv())?;
            if seq.f(m - 1).contains(&f) {
                if let Some((prev_f, prev_c)) = &found {
                    return Err(CfError::InvariantViolation(format!(
                        "two factorizations of {v} at level {m}: ({prev_f})·({prev_c}) and ({f})·({c})"
                    )));
                }
                found = Some((f, c.clone()));
            }
        }
        Ok(found)
    }

    /// Factor the point down to `target < depth`. Returns `None` when the
    /// point enters the space only at a level above `target`.
    pub fn factorize(&self, target: usize) -> Result<Option<Factorization>> {
        if target > self.depth {
            return Err(CfError::PreconditionError(
                "factorization target above the point's depth".into(),
            ));
        }
        let mut v = self.value.clone();
        let mut coords_rev = Vec::with_capacity(self.depth - target);
        for m in ((target + 1)..=self.depth).rev() {
            match Self::factor_step(&self.seq, m, &v)? {
                Some((f, c)) => {
                    coords_rev.push(c);
                    v = f;
                }
                None => return Ok(None),
            }
        }
        coords_rev.reverse();
        Ok(Some(Factorization {
            base: target,
            base_value: v,
            coords: coords_rev,
        }))
    }

    /// The lowest level this point factors down to.
    pub fn min_base(&self) -> Result<Factorization> {
        let mut best = Factorization {
            base: self.depth,
            base_value: self.value.clone(),
            coords: Vec::new(),
        };
        let mut v = self.value.clone();
        let mut coords_rev: Vec<GroupElement> = Vec::new();
        for m in (1..=self.depth).rev() {
            match Self::factor_step(&self.seq, m, &v)? {
                Some((f, c)) => {
                    coords_rev.push(c);
                    v = f;
                    let mut coords = coords_rev.clone();
                    coords.reverse();
                    best = Factorization {
                        base: m - 1,
                        base_value: v.clone(),
                        coords,
                    };
                }
                None => break,
            }
        }
        Ok(best)
    }

    /// Re-express the point at a deeper level along the identity tail.
    /// Requires the identity in every traversed block set.
    pub fn deepen(&self, target: usize) -> Result<DepthPoint> {
        if target < self.depth {
            return Err(CfError::PreconditionError(
                "deepen target above current depth".into(),
            ));
        }
        if target > self.seq.levels() {
            return Err(CfError::PreconditionError(format!(
                "deepen target {target} exceeds stored prefix"
            )));
        }
        if let Err(level) = self.seq.identity_tail_available(self.depth, target) {
            return Err(CfError::PreconditionError(format!(
                "identity tail unavailable: identity not in C_{level}"
            )));
        }
        // The identity tail leaves the value unchanged.
        DepthPoint::new(self.seq.clone(), target, self.value.clone())
    }

    /// The partial action: the smallest depth m' ≤ max_depth at which g·f
    /// lands inside the tower shape, reached along the identity tail.
    /// `None` means undefined within the stored prefix.
    pub fn act(&self, g: &GroupElement, max_depth: usize) -> Result<Option<DepthPoint>> {
        if g.group() != self.value.group() {
            return Err(CfError::DomainError("acting element from another group".into()));
        }
        let max_depth = max_depth.min(self.seq.levels());
        let identity = self.seq.group().identity();
        let moved = g.mul(&self.value)?;
        for m in self.depth..=max_depth {
            if m > self.depth && !self.seq.c(m).contains(&identity) {
                return Err(CfError::PreconditionError(format!(
                    "identity tail unavailable: identity not in C_{m}"
                )));
            }
            if self.seq.f(m).contains(&moved) {
                return Ok(Some(DepthPoint {
                    seq: self.seq.clone(),
                    depth: m,
                    value: moved,
                }));
            }
        }
        Ok(None)
    }
}

impl PartialEq for DepthPoint {
    fn eq(&self, other: &Self) -> bool {
        self.depth == other.depth && self.value == other.value && same_seq(&self.seq, &other.seq)
    }
}
impl Eq for DepthPoint {}

/// The group element carrying one point to a tail-equivalent one, evaluated
/// on the stored prefix. `stabilized` reports whether the last factorization
/// coordinates agree, the finite proxy for tail equivalence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CocycleValue {
    pub value: GroupElement,
    pub stabilized: bool,
    /// the deepest common factorization base used
    pub base: usize,
}

/// Return-time cocycle of two points over the same sequence. Points at
/// different depths are aligned along the identity tail; `None` when the
/// alignment is unavailable.
pub fn cocycle(p: &DepthPoint, q: &DepthPoint) -> Result<Option<CocycleValue>> {
    if !same_seq(&p.seq, &q.seq) {
        return Err(CfError::DomainError(
            "cocycle of points over different sequences".into(),
        ));
    }
    let depth = p.depth.max(q.depth);
    let (p, q) = {
        let align = |pt: &DepthPoint| -> Option<DepthPoint> { pt.deepen(depth).ok() };
        match (align(p), align(q)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Ok(None),
        }
    };
    let fp = p.min_base()?;
    let fq = q.min_base()?;
    let base = fp.base.max(fq.base);
    let value = p.value.mul(&q.value.inv())?;
    let stabilized = if base == depth {
        true
    } else {
        // compare the last coordinate of each factorization re-based at `base`
        let cp = &fp.coords[fp.coords.len() - (depth - base)..];
        let cq = &fq.coords[fq.coords.len() - (depth - base)..];
        cp.last() == cq.last()
    };
    Ok(Some(CocycleValue {
        value,
        stabilized,
        base,
    }))
}

/// A level together with a subset of its tower shape: the exact finite
/// shadow of an open compact set.
#[derive(Debug, Clone)]
pub struct Cylinder {
    seq: SeqRef,
    level: usize,
    set: FiniteSubset,
}

impl Cylinder {
    pub fn new(seq: SeqRef, level: usize, set: FiniteSubset) -> Result<Self> {
        if level > seq.levels() {
            return Err(CfError::PreconditionError(format!(
                "cylinder level {level} exceeds stored prefix"
            )));
        }
        if !set.is_subset_of(seq.f(level)) {
            return Err(CfError::PreconditionError(format!(
                "cylinder set {set} is not inside F_{level}"
            )));
        }
        Ok(Cylinder { seq, level, set })
    }

    pub fn of_point(p: &DepthPoint) -> Cylinder {
        Cylinder {
            seq: p.seq.clone(),
            level: p.depth,
            set: FiniteSubset::singleton(p.value.clone()),
        }
    }

    pub fn full_level(seq: &SeqRef, level: usize) -> Result<Cylinder> {
        Cylinder::new(seq.clone(), level, seq.f(level).clone())
    }

    pub fn identity_block(seq: &SeqRef, level: usize) -> Result<Cylinder> {
        let id = seq.group().identity();
        if !seq.f(level).contains(&id) {
            return Err(CfError::PreconditionError(format!(
                "identity is not in F_{level}; calibrate first"
            )));
        }
        Cylinder::new(seq.clone(), level, FiniteSubset::singleton(id))
    }

    pub fn seq(&self) -> &SeqRef {
        &self.seq
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn set(&self) -> &FiniteSubset {
        &self.set
    }

    /// Exact mass #A / ∏_{k≤n} #C_k; optionally normalized by the mass of
    /// the deepest stored level. The warning flags a profile that has not
    /// stabilized, in which case normalization is only a proxy.
    pub fn measure(&self, normalized: bool) -> Result<MeasuredValue> {
        let profile = self.seq.mass_profile()?;
        let mut denom = ratio(1, 1);
        for k in 1..=self.level {
            denom *= ratio(self.seq.c(k).len(), 1);
        }
        let mut value = ratio(self.set.len(), 1) / denom;
        let mut warning = None;
        if normalized {
            let last = &profile[profile.len() - 1];
            value /= last.clone();
            if profile.len() >= 2 && profile[profile.len() - 2] < *last {
                warning = Some(
                    "mass profile still increasing at the last stored level; normalized value is a proxy"
                        .to_string(),
                );
            }
        }
        Ok(MeasuredValue { value, warning })
    }

    /// The same set viewed `target - level` levels deeper: the exact block
    /// refinement A·C_{n+1}⋯C_m.
    pub fn refine_to(&self, target: usize) -> Result<Cylinder> {
        if target < self.level {
            return Err(CfError::PreconditionError(
                "refinement target above cylinder level".into(),
            ));
        }
        let block = self.seq.product_block(self.level, target)?;
        let set = self.set.product(&block)?;
        Cylinder::new(self.seq.clone(), target, set)
    }

    /// Points of the cylinder at its own level.
    pub fn points(&self) -> Result<Vec<DepthPoint>> {
        self.set
            .iter()
            .map(|e| DepthPoint::new(self.seq.clone(), self.level, e.clone()))
            .collect()
    }
}

impl PartialEq for Cylinder {
    fn eq(&self, other: &Self) -> bool {
        self.level == other.level && self.set == other.set && same_seq(&self.seq, &other.seq)
    }
}
impl Eq for Cylinder {}

#[derive(Debug, Clone)]
pub struct MeasuredValue {
    pub value: BigRational,
    pub warning: Option<String>,
}

/// Per-level definedness data for one group element: whether the translated
/// block product stays inside the tower shape, and exactly how much of it
/// does in measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DefinednessLevel {
    pub m: usize,
    pub holds: bool,
    #[serde(with = "crate::report::ratio_serde")]
    pub ratio: BigRational,
}

/// For each m in (n, N]: does g·F_n·C_{n+1}⋯C_m stay inside F_m, and the
/// exact mass fraction ν_m((g F_n C_{n+1}⋯C_m) ∩ F_m) / ν_n(F_n).
pub fn action_definedness(seq: &CfSequence, g: &GroupElement, n: usize) -> Result<Vec<DefinednessLevel>> {
    if n >= seq.levels() {
        return Err(CfError::PreconditionError(
            "definedness diagnostic needs n below the last level".into(),
        ));
    }
    let mut out = Vec::new();
    let mut spread = seq.f(n).translate_left(g)?;
    let mut block_size = 1usize;
    for m in (n + 1)..=seq.levels() {
        spread = spread.product(seq.c(m))?;
        block_size *= seq.c(m).len();
        let inside = spread.intersection(seq.f(m));
        let holds = inside.len() == spread.len();
        let ratio_val = ratio(inside.len(), block_size * seq.f(n).len());
        out.push(DefinednessLevel {
            m,
            holds,
            ratio: ratio_val,
        });
    }
    Ok(out)
}

/// The amenability diagnostic #(gF_n Δ F_n)/#F_n per level.
pub fn folner_defect(seq: &CfSequence, g: &GroupElement) -> Result<Vec<BigRational>> {
    let mut out = Vec::with_capacity(seq.f_levels().len());
    for f in seq.f_levels() {
        let moved = f.translate_left(g)?;
        out.push(ratio(moved.symmetric_difference(f).len(), f.len()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FolnerProfile {
    pub g: String,
    #[serde(with = "ratio_vec_serde")]
    pub defects: Vec<BigRational>,
}

/// Per-element diagnostics bundled with a validation report: definedness of
/// the element's action from the base level up, and its translation defect
/// profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementDiagnostics {
    pub element: String,
    pub definedness: Vec<DefinednessLevel>,
    #[serde(with = "ratio_vec_serde")]
    pub folner: Vec<BigRational>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceDiagnostics {
    pub validation: crate::seq::ValidationReport,
    pub elements: Vec<ElementDiagnostics>,
}

/// Full diagnostic report: the structural checks plus, for every element of
/// the window, its definedness and translation-defect profiles.
pub fn sequence_diagnostics(
    seq: &CfSequence,
    window: &[GroupElement],
) -> Result<SequenceDiagnostics> {
    let validation = seq.validate();
    let mut elements = Vec::with_capacity(window.len());
    for g in window {
        elements.push(ElementDiagnostics {
            element: g.to_string(),
            definedness: action_definedness(seq, g, 0)?,
            folner: folner_defect(seq, g)?,
        });
    }
    Ok(SequenceDiagnostics {
        validation,
        elements,
    })
}

/// Greedy near-tiling of F_m by translates of F_n: scan candidate shifts in
/// canonical order, keep those whose translate fits and is disjoint from
/// the part already covered. Returns the shift set and the exact coverage.
pub fn near_tiling(seq: &CfSequence, n: usize, m: usize) -> Result<(FiniteSubset, BigRational)> {
    if n >= m || m > seq.levels() {
        return Err(CfError::PreconditionError(
            "near tiling needs n < m within the prefix".into(),
        ));
    }
    greedy_tiling(seq.f(n), seq.f(m))
}

/// Shared greedy core: shifts d with shape·d inside `target`, translates
/// pairwise disjoint, taken in canonical order of candidate shifts.
pub fn greedy_tiling(shape: &FiniteSubset, target: &FiniteSubset) -> Result<(FiniteSubset, BigRational)> {
    let candidates = shape.inverses().product(target)?;
    let mut chosen = FiniteSubset::empty(shape.group().clone());
    let mut covered = FiniteSubset::empty(shape.group().clone());
    for d in candidates.iter() {
        let translate = shape.translate_right(d)?;
        if translate.is_subset_of(target) && translate.is_disjoint(&covered) {
            chosen.insert(d.clone())?;
            covered = covered.union(&translate)?;
        }
    }
    let coverage = ratio(covered.len(), target.len());
    Ok((chosen, coverage))
}
