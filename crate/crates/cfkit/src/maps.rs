//! The elementary isomorphisms between parameter sequences — calibration,
//! telescoping, reduction, chain equivalence — and the quotient map, each in
//! two forms: a transformation of the parameters and a partial map of the
//! finite-depth space.
//!
//! Maps evaluate on [`Cylinder`]s. This is exact: the image of a depth-m
//! cylinder under each elementary map is again a finite union of depth-m'
//! cylinders computable from the stored prefix, with no fabricated tail
//! data. A point evaluation is provided as the canonical section of the
//! cylinder image (least extension element at every choice), which is what
//! cocycle-preservation checks use; `apply_point` reports whether the
//! section was exact (the image was a single point).

use std::sync::Arc;

use num::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{CfError, Result};
use crate::group::GroupElement;
use crate::report::{ratio, ratio_string};
use crate::seq::{CfSequence, SequenceDoc};
use crate::space::{same_seq, Cylinder, DepthPoint, SeqRef};
use crate::subset::FiniteSubset;

/// Anything that maps cylinders of one sequence to cylinders of another.
pub trait CylinderMap {
    fn source(&self) -> &SeqRef;
    fn target(&self) -> &SeqRef;
    /// `None` is the undefined-at-depth outcome, not an error.
    fn apply_cylinder(&self, cyl: &Cylinder) -> Result<Option<Cylinder>>;
}

#[derive(Debug, Clone)]
pub enum MapKind {
    /// Levelwise conjugation by z₁…z_{N+1}: C'_n = z_n⁻¹ C_n z_{n+1},
    /// F'_{n-1} = F_{n-1} z_n.
    Calibration { z: Vec<GroupElement> },
    /// Regrouping of levels along indices l₀=0 ≤ l₁ ≤ ⋯ (repeats produce
    /// one-element identity blocks).
    Telescoping { indices: Vec<usize> },
    TelescopingInverse { indices: Vec<usize> },
    /// Shrinks each block set to A_n ⊆ C_n.
    Reduction { sets: Vec<FiniteSubset> },
    ReductionInverse { sets: Vec<FiniteSubset> },
    /// Interleaved block factorizations C_n = A_{n-1}B_n, C'_n = B_nA_n.
    /// `a` holds A₀…A_N, `b` holds B₁…B_N.
    ChainEquivalence {
        a: Vec<FiniteSubset>,
        b: Vec<FiniteSubset>,
    },
    /// The factor map determined by sets A₁…A_N with F̃_nA_n sandwiched in
    /// F_n and intertwined blocks.
    Quotient { sets: Vec<FiniteSubset> },
    Composite { stages: Vec<PointMap> },
}

impl MapKind {
    fn name(&self) -> &'static str {
        match self {
            MapKind::Calibration { .. } => "calibration",
            MapKind::Telescoping { .. } => "telescoping",
            MapKind::TelescopingInverse { .. } => "telescoping_inverse",
            MapKind::Reduction { .. } => "reduction",
            MapKind::ReductionInverse { .. } => "reduction_inverse",
            MapKind::ChainEquivalence { .. } => "chain_equivalence",
            MapKind::Quotient { .. } => "quotient",
            MapKind::Composite { .. } => "composite",
        }
    }
}

/// A (partial) map of finite-depth points, together with its source and
/// target sequences.
#[derive(Debug, Clone)]
pub struct PointMap {
    kind: MapKind,
    source: SeqRef,
    target: SeqRef,
}

impl PointMap {
    /// Assembles a map from raw parts. The caller vouches for consistency
    /// of the kind's parameters with the two sequences.
    pub(crate) fn raw(kind: MapKind, source: SeqRef, target: SeqRef) -> PointMap {
        PointMap {
            kind,
            source,
            target,
        }
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    /// The do-nothing map: telescoping along the full index list.
    pub fn identity(seq: SeqRef) -> PointMap {
        let indices: Vec<usize> = (0..=seq.levels()).collect();
        PointMap {
            kind: MapKind::Telescoping { indices },
            source: seq.clone(),
            target: seq,
        }
    }

    /// Inverts the invertible kinds. Quotients are not invertible.
    pub fn inverse(&self) -> Result<PointMap> {
        let kind = match &self.kind {
            MapKind::Calibration { z } => MapKind::Calibration {
                z: z.iter().map(|e| e.inv()).collect(),
            },
            MapKind::Telescoping { indices } => MapKind::TelescopingInverse {
                indices: indices.clone(),
            },
            MapKind::TelescopingInverse { indices } => MapKind::Telescoping {
                indices: indices.clone(),
            },
            MapKind::Reduction { sets } => MapKind::ReductionInverse { sets: sets.clone() },
            MapKind::ReductionInverse { sets } => MapKind::Reduction { sets: sets.clone() },
            MapKind::Composite { stages } => {
                let mut rev = Vec::with_capacity(stages.len());
                for s in stages.iter().rev() {
                    rev.push(s.inverse()?);
                }
                MapKind::Composite { stages: rev }
            }
            MapKind::ChainEquivalence { .. } | MapKind::Quotient { .. } => {
                return Err(CfError::PreconditionError(format!(
                    "{} maps are not inverted structurally",
                    self.kind.name()
                )))
            }
        };
        Ok(PointMap {
            kind,
            source: self.target.clone(),
            target: self.source.clone(),
        })
    }

    /// Canonical point section of the cylinder image: at every level where
    /// the image is a fiber rather than a point, take the least fiber
    /// element. The flag reports whether the image was already a point.
    pub fn apply_point(&self, p: &DepthPoint) -> Result<Option<(DepthPoint, bool)>> {
        if !same_seq(p.seq(), &self.source) {
            return Err(CfError::DomainError(
                "point evaluated under a map with a different source".into(),
            ));
        }
        match &self.kind {
            MapKind::Reduction { sets } => {
                // Domain: every factorization coordinate from the minimal
                // base must lie in its reduced block set.
                let fac = p.min_base()?;
                for (i, c) in fac.coords.iter().enumerate() {
                    let level = fac.base + 1 + i;
                    if !sets[level - 1].contains(c) {
                        return Ok(None);
                    }
                }
                let image = DepthPoint::new(self.target.clone(), p.depth(), p.value().clone())?;
                Ok(Some((image, true)))
            }
            MapKind::Composite { stages } => {
                let mut current = p.clone();
                let mut exact = true;
                for stage in stages {
                    match stage.apply_point(&current)? {
                        Some((next, e)) => {
                            exact &= e;
                            current = next;
                        }
                        None => return Ok(None),
                    }
                }
                Ok(Some((current, exact)))
            }
            _ => {
                let cyl = Cylinder::of_point(p);
                match self.apply_cylinder(&cyl)? {
                    Some(image) => {
                        let exact = image.set().len() == 1;
                        let value = image
                            .set()
                            .min()
                            .expect("image cylinder is nonempty")
                            .clone();
                        let pt = DepthPoint::new(self.target.clone(), image.level(), value)?;
                        Ok(Some((pt, exact)))
                    }
                    None => Ok(None),
                }
            }
        }
    }
}

impl CylinderMap for PointMap {
    fn source(&self) -> &SeqRef {
        &self.source
    }

    fn target(&self) -> &SeqRef {
        &self.target
    }

    fn apply_cylinder(&self, cyl: &Cylinder) -> Result<Option<Cylinder>> {
        if !same_seq(cyl.seq(), &self.source) {
            return Err(CfError::DomainError(
                "cylinder evaluated under a map with a different source".into(),
            ));
        }
        let m = cyl.level();
        match &self.kind {
            MapKind::Calibration { z } => {
                // depth-m values move by z_{m+1}
                let moved = cyl.set().translate_right(&z[m])?;
                Ok(Some(Cylinder::new(self.target.clone(), m, moved)?))
            }
            MapKind::Telescoping { indices } => {
                let Some(j) = indices.iter().position(|&l| l >= m) else {
                    return Ok(None);
                };
                let block = self.source.product_block(m, indices[j])?;
                let set = cyl.set().product(&block)?;
                Ok(Some(Cylinder::new(self.target.clone(), j, set)?))
            }
            MapKind::TelescopingInverse { indices } => {
                let level = indices[m];
                Ok(Some(Cylinder::new(
                    self.target.clone(),
                    level,
                    cyl.set().clone(),
                )?))
            }
            MapKind::Reduction { .. } | MapKind::ReductionInverse { .. } => {
                // Reduction moves no points; the depth-m shadow is unchanged.
                Ok(Some(Cylinder::new(
                    self.target.clone(),
                    m,
                    cyl.set().clone(),
                )?))
            }
            MapKind::ChainEquivalence { a, b } => {
                // Verify the split structure of every element, then emit the
                // exact image fiber S·A_m.
                for v in cyl.set().iter() {
                    let p = DepthPoint::new(self.source.clone(), m, v.clone())?;
                    let fac = p.min_base()?;
                    for (i, c) in fac.coords.iter().enumerate() {
                        let level = fac.base + 1 + i;
                        split_block_element(c, &a[level - 1], &b[level - 1], level)?;
                    }
                }
                let image = cyl.set().product(&a[m])?;
                if image.len() != cyl.set().len() * a[m].len() {
                    return Err(CfError::InvariantViolation(format!(
                        "chain image fibers collide at level {m}"
                    )));
                }
                if !image.is_subset_of(self.target.f(m)) {
                    return Err(CfError::InvariantViolation(format!(
                        "chain image leaves the target tower shape at level {m}"
                    )));
                }
                Ok(Some(Cylinder::new(self.target.clone(), m, image)?))
            }
            MapKind::Quotient { sets } => {
                if m == 0 {
                    // no A₀; the base level maps through untouched only for
                    // the identity-like case, so treat it as undefined
                    return Ok(None);
                }
                let mut out = Vec::with_capacity(cyl.set().len());
                for v in cyl.set().iter() {
                    match quotient_step(v, self.target.f(m), &sets[m - 1])? {
                        Some((ft, _a)) => out.push(ft),
                        None => return Ok(None),
                    }
                }
                let set = FiniteSubset::new(self.target.group().clone(), out)?;
                Ok(Some(Cylinder::new(self.target.clone(), m, set)?))
            }
            MapKind::Composite { stages } => {
                let mut current = cyl.clone();
                for stage in stages {
                    match stage.apply_cylinder(&current)? {
                        Some(next) => current = next,
                        None => return Ok(None),
                    }
                }
                Ok(Some(current))
            }
        }
    }
}

/// The unique (f̃, a) ∈ F̃ × A with f̃·a = v, or `None`. Two decompositions
/// violate the triviality condition and are an invariant failure.
fn quotient_step(
    v: &GroupElement,
    f_tilde: &FiniteSubset,
    a_set: &FiniteSubset,
) -> Result<Option<(GroupElement, GroupElement)>> {
    let mut found = None;
    for a in a_set.iter() {
        let ft = v.mul(&a.inv())?;
        if f_tilde.contains(&ft) {
            if found.is_some() {
                return Err(CfError::InvariantViolation(format!(
                    "two quotient decompositions of {v}"
                )));
            }
            found = Some((ft, a.clone()));
        }
    }
    Ok(found)
}

/// The unique (a, b) ∈ A × B with a·b = c. Existence and uniqueness are the
/// chain conditions; both failures are invariant violations here.
fn split_block_element(
    c: &GroupElement,
    a_set: &FiniteSubset,
    b_set: &FiniteSubset,
    level: usize,
) -> Result<(GroupElement, GroupElement)> {
    let mut found: Option<(GroupElement, GroupElement)> = None;
    for a in a_set.iter() {
        let b = a.inv().mul(c)?;
        if b_set.contains(&b) {
            if let Some((pa, pb)) = &found {
                return Err(CfError::InvariantViolation(format!(
                    "block element {c} at level {level} splits twice: ({pa})({pb}) and ({a})({b})"
                )));
            }
            found = Some((a.clone(), b));
        }
    }
    found.ok_or_else(|| {
        CfError::InvariantViolation(format!(
            "block element {c} at level {level} does not split over the chain sets"
        ))
    })
}

// ---------------------------------------------------------------------------
// Parameter-level constructors
// ---------------------------------------------------------------------------

/// z-calibration. `z` may have N or N+1 entries (z₁…z_N[, z_{N+1}]); a
/// missing final entry defaults to the identity.
pub fn calibrate(seq: &SeqRef, z: &[GroupElement]) -> Result<(SeqRef, PointMap)> {
    let n_levels = seq.levels();
    if z.len() != n_levels && z.len() != n_levels + 1 {
        return Err(CfError::PreconditionError(format!(
            "calibration needs {n_levels} or {} elements, got {}",
            n_levels + 1,
            z.len()
        )));
    }
    for e in z {
        if e.group() != seq.group() {
            return Err(CfError::DomainError("calibration element from another group".into()));
        }
    }
    let mut zs = z.to_vec();
    if zs.len() == n_levels {
        zs.push(seq.group().identity());
    }

    let mut f_levels = Vec::with_capacity(n_levels + 1);
    for (i, f) in seq.f_levels().iter().enumerate() {
        // F'_{n} = F_n z_{n+1}
        f_levels.push(f.translate_right(&zs[i])?);
    }
    let mut c_levels = Vec::with_capacity(n_levels);
    for n in 1..=n_levels {
        let shifted = seq.c(n).translate_left(&zs[n - 1].inv())?;
        c_levels.push(shifted.translate_right(&zs[n])?);
    }
    let target = Arc::new(CfSequence::new(seq.group().clone(), f_levels, c_levels)?);
    assert_output_structure(&target, "calibration")?;
    let map = PointMap {
        kind: MapKind::Calibration { z: zs },
        source: seq.clone(),
        target: target.clone(),
    };
    Ok((target, map))
}

/// Calibration that puts the identity into every tower shape and block set,
/// choosing the least block element at each step.
pub fn normalize_identity(seq: &SeqRef) -> Result<(SeqRef, PointMap)> {
    let mut z = Vec::with_capacity(seq.levels() + 1);
    let f0 = seq
        .f(0)
        .min()
        .ok_or_else(|| CfError::PreconditionError("empty base level".into()))?;
    z.push(f0.inv());
    for n in 1..=seq.levels() {
        let c = seq
            .c(n)
            .min()
            .ok_or_else(|| CfError::PreconditionError(format!("empty block set C_{n}")))?;
        let prev = &z[n - 1];
        z.push(c.inv().mul(prev)?);
    }
    calibrate(seq, &z)
}

/// l-telescoping with a strictly increasing index list starting at 0.
pub fn telescope(seq: &SeqRef, indices: &[usize]) -> Result<(SeqRef, PointMap)> {
    if indices.first() != Some(&0) || indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CfError::PreconditionError(
            "telescoping indices must start at 0 and strictly increase".into(),
        ));
    }
    telescope_relaxed(seq, indices)
}

/// Telescoping that tolerates repeated indices (the repeats yield
/// one-element identity blocks) and a first index above zero (the result
/// then views the space from that level up). The witness machinery needs
/// both forms.
pub fn telescope_relaxed(seq: &SeqRef, indices: &[usize]) -> Result<(SeqRef, PointMap)> {
    if indices.is_empty() || indices.windows(2).any(|w| w[0] > w[1]) {
        return Err(CfError::PreconditionError(
            "telescoping indices must be nondecreasing".into(),
        ));
    }
    if *indices.last().unwrap() > seq.levels() {
        return Err(CfError::PreconditionError(
            "telescoping index beyond the stored prefix".into(),
        ));
    }
    let f_levels: Vec<FiniteSubset> = indices.iter().map(|&l| seq.f(l).clone()).collect();
    let mut c_levels = Vec::with_capacity(indices.len() - 1);
    for w in indices.windows(2) {
        c_levels.push(seq.product_block(w[0], w[1])?);
    }
    let target = Arc::new(CfSequence::new(seq.group().clone(), f_levels, c_levels)?);
    assert_output_structure(&target, "telescoping")?;
    let map = PointMap {
        kind: MapKind::Telescoping {
            indices: indices.to_vec(),
        },
        source: seq.clone(),
        target: target.clone(),
    };
    Ok((target, map))
}

/// A-reduction. Every A_n must be a nonempty subset of C_n; collapsing a
/// genuine block set to one element is rejected (the output would be
/// degenerate where the input was not).
pub fn reduce(
    seq: &SeqRef,
    sets: &[FiniteSubset],
) -> Result<(SeqRef, PointMap, BigRational)> {
    for (i, a) in sets.iter().enumerate() {
        let n = i + 1;
        if a.len() == 1 && seq.c(n).len() > 1 {
            return Err(CfError::InvariantViolation(format!(
                "reduction collapses C_{n} to a single element"
            )));
        }
    }
    reduce_relaxed(seq, sets)
}

/// Reduction without the singleton guard; witness pipelines may shrink a
/// boundary block set to one element legitimately.
pub fn reduce_relaxed(
    seq: &SeqRef,
    sets: &[FiniteSubset],
) -> Result<(SeqRef, PointMap, BigRational)> {
    if sets.len() != seq.levels() {
        return Err(CfError::PreconditionError(format!(
            "reduction needs one set per level: {} sets for {} levels",
            sets.len(),
            seq.levels()
        )));
    }
    let mut scale = ratio(1, 1);
    for (i, a) in sets.iter().enumerate() {
        let n = i + 1;
        if a.is_empty() {
            return Err(CfError::PreconditionError(format!("empty reduction set A_{n}")));
        }
        if !a.is_subset_of(seq.c(n)) {
            return Err(CfError::PreconditionError(format!(
                "reduction set A_{n} is not inside C_{n}"
            )));
        }
        scale *= ratio(a.len(), seq.c(n).len());
    }
    let target = Arc::new(CfSequence::new(
        seq.group().clone(),
        seq.f_levels().to_vec(),
        sets.to_vec(),
    )?);
    assert_output_structure(&target, "reduction")?;
    let map = PointMap {
        kind: MapKind::Reduction {
            sets: sets.to_vec(),
        },
        source: seq.clone(),
        target: target.clone(),
    };
    Ok((target, map, scale))
}

fn assert_output_structure(seq: &SeqRef, op: &str) -> Result<()> {
    let report = seq.validate();
    if !report.levels_consistent {
        return Err(CfError::InvariantViolation(format!(
            "{op} output fails structural validation: {}",
            report.first_failure().unwrap_or_default()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Chain equivalence
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainLevelCheck {
    pub level: usize,
    /// A_{n-1}·B_n = C_n with an injective product map
    pub left_product_ok: bool,
    /// B_n·A_n = C'_n with an injective product map
    pub right_product_ok: bool,
    /// F'_{n-1}·B_n ⊆ F_n
    pub left_inclusion_ok: bool,
    /// F_{n-1}·A_{n-1} ⊆ F'_{n-1}
    pub right_inclusion_ok: bool,
    /// A_{n-1}⁻¹A_{n-1} ∩ B_nB_n⁻¹ = {1}
    pub left_triviality_ok: bool,
    /// B_n⁻¹B_n ∩ A_nA_n⁻¹ = {1}
    pub right_triviality_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainReport {
    pub levels: Vec<ChainLevelCheck>,
    pub pass: bool,
}

fn intersection_trivial(x: &FiniteSubset, y: &FiniteSubset) -> Result<bool> {
    let meet = x.intersection(y);
    let id = x.group().identity();
    let trivial = meet.iter().all(|e| *e == id);
    Ok(trivial)
}

/// Verifies the chain-equivalence conditions level by level. `a` holds
/// A₀…A_N, `b` holds B₁…B_N.
pub fn chain_check(
    t: &SeqRef,
    t_prime: &SeqRef,
    a: &[FiniteSubset],
    b: &[FiniteSubset],
) -> Result<ChainReport> {
    let n_levels = t.levels();
    if t_prime.levels() != n_levels {
        return Err(CfError::PreconditionError(
            "chain check needs sequences with aligned levels".into(),
        ));
    }
    if a.len() != n_levels + 1 || b.len() != n_levels {
        return Err(CfError::PreconditionError(format!(
            "chain check needs {} A-sets and {} B-sets, got {} and {}",
            n_levels + 1,
            n_levels,
            a.len(),
            b.len()
        )));
    }
    let mut levels = Vec::with_capacity(n_levels);
    for n in 1..=n_levels {
        let a_prev = &a[n - 1];
        let a_n = &a[n];
        let b_n = &b[n - 1];
        let mut detail = None;

        let left = a_prev.product(b_n)?;
        let left_product_ok =
            &left == t.c(n) && left.len() == a_prev.len() * b_n.len();
        if !left_product_ok {
            detail.get_or_insert_with(|| {
                format!("level {n}: A_{}·B_{n} = {left} does not match C_{n} = {}", n - 1, t.c(n))
            });
        }
        let right = b_n.product(a_n)?;
        let right_product_ok =
            &right == t_prime.c(n) && right.len() == b_n.len() * a_n.len();
        if !right_product_ok {
            detail.get_or_insert_with(|| {
                format!("level {n}: B_{n}·A_{n} = {right} does not match C'_{n} = {}", t_prime.c(n))
            });
        }
        let left_inclusion_ok = t_prime.f(n - 1).product(b_n)?.is_subset_of(t.f(n));
        let right_inclusion_ok = t.f(n - 1).product(a_prev)?.is_subset_of(t_prime.f(n - 1));
        let left_triviality_ok =
            intersection_trivial(&a_prev.inverses().product(a_prev)?, &b_n.product(&b_n.inverses())?)?;
        let right_triviality_ok =
            intersection_trivial(&b_n.inverses().product(b_n)?, &a_n.product(&a_n.inverses())?)?;

        levels.push(ChainLevelCheck {
            level: n,
            left_product_ok,
            right_product_ok,
            left_inclusion_ok,
            right_inclusion_ok,
            left_triviality_ok,
            right_triviality_ok,
            detail,
        });
    }
    let pass = levels.iter().all(|l| {
        l.left_product_ok
            && l.right_product_ok
            && l.left_inclusion_ok
            && l.right_inclusion_ok
            && l.left_triviality_ok
            && l.right_triviality_ok
    });
    Ok(ChainReport { levels, pass })
}

/// Builds the chain-equivalence map once `chain_check` passes.
pub fn chain_map(
    t: &SeqRef,
    t_prime: &SeqRef,
    a: &[FiniteSubset],
    b: &[FiniteSubset],
) -> Result<PointMap> {
    let report = chain_check(t, t_prime, a, b)?;
    if !report.pass {
        let clause = report
            .levels
            .iter()
            .find_map(|l| l.detail.clone())
            .unwrap_or_else(|| "a chain condition fails".into());
        return Err(CfError::PreconditionError(format!(
            "chain conditions do not hold: {clause}"
        )));
    }
    Ok(PointMap {
        kind: MapKind::ChainEquivalence {
            a: a.to_vec(),
            b: b.to_vec(),
        },
        source: t.clone(),
        target: t_prime.clone(),
    })
}

/// Normalization of chain data: calibrate `t` so that the identity lands in
/// every adjusted A and B set (choosing, per level, the unique b·a = 1
/// pair). Returns the calibrated sequence, its map, and the adjusted sets.
pub fn normalize_chain(
    t: &SeqRef,
    t_prime: &SeqRef,
    a: &[FiniteSubset],
    b: &[FiniteSubset],
) -> Result<(SeqRef, PointMap, Vec<FiniteSubset>, Vec<FiniteSubset>)> {
    let n_levels = t.levels();
    if t_prime.levels() != n_levels {
        return Err(CfError::PreconditionError(
            "chain normalization needs aligned levels".into(),
        ));
    }
    if a.len() != n_levels + 1 || b.len() != n_levels {
        return Err(CfError::PreconditionError("chain set lengths off".into()));
    }
    // per level the unique pair b_n·a_n = 1 from the right-hand product
    let mut b_pivot = Vec::with_capacity(n_levels + 1);
    b_pivot.push(t.group().identity());
    for n in 1..=n_levels {
        let mut found = None;
        for cand in b[n - 1].iter() {
            let inv = cand.inv();
            if a[n].contains(&inv) {
                if found.is_some() {
                    return Err(CfError::InvariantViolation(format!(
                        "two identity splittings at level {n}"
                    )));
                }
                found = Some(cand.clone());
            }
        }
        b_pivot.push(found.ok_or_else(|| {
            CfError::PreconditionError(format!(
                "no b·a = identity splitting at level {n}; normalize the primed sequence first"
            ))
        })?);
    }
    // z_n = b_{n-1}⁻¹ calibrates T; adjusted sets B̃_n = B_n b_n⁻¹, Ã_n = b_n A_n
    let z: Vec<GroupElement> = b_pivot.iter().map(|e| e.inv()).collect();
    let (calibrated, cal_map) = calibrate(t, &z[..])?;
    let mut a_adj = Vec::with_capacity(a.len());
    for (n, a_n) in a.iter().enumerate() {
        a_adj.push(a_n.translate_left(&b_pivot[n])?);
    }
    let mut b_adj = Vec::with_capacity(b.len());
    for (n, b_n) in b.iter().enumerate() {
        b_adj.push(b_n.translate_right(&b_pivot[n + 1].inv())?);
    }
    Ok((calibrated, cal_map, a_adj, b_adj))
}

// ---------------------------------------------------------------------------
// Quotients
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuotientLevelCheck {
    pub level: usize,
    /// F_{n-1}·C_n ⊆ F̃_n·A_n
    pub lower_inclusion_ok: bool,
    /// F̃_n·A_n ⊆ F_n
    pub upper_inclusion_ok: bool,
    /// F̃_n⁻¹F̃_n ∩ A_nA_n⁻¹ = {1}
    pub triviality_ok: bool,
    /// A_n·C_{n+1} = C̃_{n+1}·A_{n+1} (vacuous at the last level)
    pub intertwine_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuotientReport {
    pub levels: Vec<QuotientLevelCheck>,
    pub pass: bool,
}

/// Verifies the quotient conditions for sets A₁…A_N pairing level n of the
/// factor candidate with level n of the extension.
pub fn quotient_check(
    t: &SeqRef,
    t_tilde: &SeqRef,
    a: &[FiniteSubset],
) -> Result<QuotientReport> {
    let n_levels = t.levels();
    if t_tilde.levels() != n_levels {
        return Err(CfError::PreconditionError(
            "quotient check needs sequences with aligned levels".into(),
        ));
    }
    if a.len() != n_levels {
        return Err(CfError::PreconditionError(format!(
            "quotient check needs {} A-sets, got {}",
            n_levels,
            a.len()
        )));
    }
    let mut levels = Vec::with_capacity(n_levels);
    for n in 1..=n_levels {
        let a_n = &a[n - 1];
        let mut detail = None;
        let sandwich = t_tilde.f(n).product(a_n)?;
        let lower = t.f(n - 1).product(t.c(n))?;
        let lower_inclusion_ok = lower.is_subset_of(&sandwich);
        if !lower_inclusion_ok {
            detail.get_or_insert_with(|| {
                format!(
                    "level {n}: F_{}·C_{n} ⊄ F̃_{n}·A_{n} (missing {})",
                    n - 1,
                    lower.difference(&sandwich)
                )
            });
        }
        let upper_inclusion_ok = sandwich.is_subset_of(t.f(n));
        if !upper_inclusion_ok {
            detail.get_or_insert_with(|| format!("level {n}: F̃_{n}·A_{n} ⊄ F_{n}"));
        }
        let triviality_ok = intersection_trivial(
            &t_tilde.f(n).inverses().product(t_tilde.f(n))?,
            &a_n.product(&a_n.inverses())?,
        )?;
        if !triviality_ok {
            detail.get_or_insert_with(|| format!("level {n}: F̃_{n}⁻¹F̃_{n} ∩ A_{n}A_{n}⁻¹ ≠ {{1}}"));
        }
        let intertwine_ok = if n < n_levels {
            let left = a_n.product(t.c(n + 1))?;
            let right = t_tilde.c(n + 1).product(&a[n])?;
            if left != right {
                detail.get_or_insert_with(|| {
                    format!(
                        "level {n}: A_{n}·C_{} = {left} vs C̃_{}·A_{} = {right}",
                        n + 1,
                        n + 1,
                        n + 1
                    )
                });
            }
            left == right
        } else {
            true
        };
        levels.push(QuotientLevelCheck {
            level: n,
            lower_inclusion_ok,
            upper_inclusion_ok,
            triviality_ok,
            intertwine_ok,
            detail,
        });
    }
    let pass = levels.iter().all(|l| {
        l.lower_inclusion_ok && l.upper_inclusion_ok && l.triviality_ok && l.intertwine_ok
    });
    Ok(QuotientReport { levels, pass })
}

/// Builds the quotient map once `quotient_check` passes.
pub fn quotient_map(t: &SeqRef, t_tilde: &SeqRef, a: &[FiniteSubset]) -> Result<PointMap> {
    let report = quotient_check(t, t_tilde, a)?;
    if !report.pass {
        let clause = report
            .levels
            .iter()
            .find_map(|l| l.detail.clone())
            .unwrap_or_else(|| "a quotient condition fails".into());
        return Err(CfError::PreconditionError(format!(
            "quotient conditions do not hold: {clause}"
        )));
    }
    Ok(PointMap {
        kind: MapKind::Quotient { sets: a.to_vec() },
        source: t.clone(),
        target: t_tilde.clone(),
    })
}

// ---------------------------------------------------------------------------
// Composition and comparison
// ---------------------------------------------------------------------------

/// Composes stages left to right, checking that adjacent sequences agree
/// structurally.
pub fn compose(stages: Vec<PointMap>) -> Result<PointMap> {
    if stages.is_empty() {
        return Err(CfError::PreconditionError("empty composition".into()));
    }
    for w in stages.windows(2) {
        if !same_seq(w[0].target(), w[1].source()) {
            return Err(CfError::PreconditionError(format!(
                "composition stages do not chain: {} target differs from {} source",
                w[0].kind.name(),
                w[1].kind.name()
            )));
        }
    }
    let source = stages.first().unwrap().source().clone();
    let target = stages.last().unwrap().target().clone();
    Ok(PointMap {
        kind: MapKind::Composite { stages },
        source,
        target,
    })
}

/// Pointwise disagreement of two maps on the identity block at each listed
/// level: the mass fraction of depth-n points of the block whose cylinder
/// images differ (in value or in definedness), relative to the block mass.
pub fn map_divergence(
    map_a: &dyn CylinderMap,
    map_b: &dyn CylinderMap,
    depths: &[usize],
) -> Result<Vec<BigRational>> {
    if !same_seq(map_a.source(), map_b.source()) {
        return Err(CfError::PreconditionError(
            "divergence of maps with different sources".into(),
        ));
    }
    let seq = map_a.source().clone();
    let mut out = Vec::with_capacity(depths.len());
    for &n in depths {
        let block = Cylinder::identity_block(&seq, n)?;
        let mut differing = 0usize;
        let points = block.points()?;
        for p in &points {
            let cyl = Cylinder::of_point(p);
            let ia = map_a.apply_cylinder(&cyl)?;
            let ib = map_b.apply_cylinder(&cyl)?;
            let agree = match (&ia, &ib) {
                (None, None) => true,
                (Some(a), Some(b)) => cylinders_equal(a, b)?,
                _ => false,
            };
            if !agree {
                differing += 1;
            }
        }
        out.push(ratio(differing, points.len()));
    }
    Ok(out)
}

/// Equality of cylinders over the same sequence after refining to a common
/// level.
pub fn cylinders_equal(a: &Cylinder, b: &Cylinder) -> Result<bool> {
    if !same_seq(a.seq(), b.seq()) {
        return Ok(false);
    }
    let level = a.level().max(b.level());
    if level > a.seq().levels() {
        return Ok(false);
    }
    let ra = a.refine_to(level)?;
    let rb = b.refine_to(level)?;
    Ok(ra.set() == rb.set())
}

/// Coordinatewise shift of a sequence over ℤ by accumulated offsets: the
/// depth-m shadow moves by `offsets[m]`. The finite-state form of the
/// commutant maps produced by shifted families.
#[derive(Debug, Clone)]
pub struct ShiftMap {
    seq: SeqRef,
    offsets: Vec<i64>,
}

impl ShiftMap {
    /// `steps[n]` shifts level n+1's block coordinates; offsets accumulate.
    pub fn from_steps(seq: &SeqRef, steps: &[i64]) -> Result<ShiftMap> {
        if steps.len() != seq.levels() {
            return Err(CfError::PreconditionError(
                "need one shift step per level".into(),
            ));
        }
        let mut offsets = Vec::with_capacity(steps.len() + 1);
        let mut sum = 0i64;
        offsets.push(0);
        for &s in steps {
            sum += s;
            offsets.push(sum);
        }
        Ok(ShiftMap {
            seq: seq.clone(),
            offsets,
        })
    }
}

impl CylinderMap for ShiftMap {
    fn source(&self) -> &SeqRef {
        &self.seq
    }

    fn target(&self) -> &SeqRef {
        &self.seq
    }

    fn apply_cylinder(&self, cyl: &Cylinder) -> Result<Option<Cylinder>> {
        let m = cyl.level();
        let g = self.seq.group().int(self.offsets[m])?;
        let moved = cyl.set().translate_left(&g)?;
        if !moved.is_subset_of(self.seq.f(m)) {
            return Ok(None);
        }
        Ok(Some(Cylinder::new(self.seq.clone(), m, moved)?))
    }
}

// ---------------------------------------------------------------------------
// Standardization: telescope + reduce until a window of group elements acts
// everywhere on the stored prefix.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Standardization {
    pub telescope_indices: Vec<usize>,
    pub reduction_sets: Vec<FiniteSubset>,
}

/// Greedy search for a telescoping followed by a reduction whose output
/// satisfies the definedness inclusion for every window element at every
/// stored level. Coarser uniform telescopings are tried in turn; `budget`
/// caps how many.
pub fn standardize(
    seq: &SeqRef,
    window: &[GroupElement],
    budget: usize,
) -> Result<Option<Standardization>> {
    let report = seq.validate();
    if !report.structurally_valid {
        return Err(CfError::ValidationError(
            report.first_failure().unwrap_or_default(),
        ));
    }
    let n_levels = seq.levels();
    for stride in 1..=budget.max(1) {
        let mut indices: Vec<usize> = (0..=n_levels).step_by(stride).collect();
        if *indices.last().unwrap() != n_levels {
            indices.push(n_levels);
        }
        if indices.len() < 2 {
            break;
        }
        let (telescoped, _map) = telescope(seq, &indices)?;
        let mut sets = Vec::with_capacity(telescoped.levels());
        let mut ok = true;
        for m in 1..=telescoped.levels() {
            let mut kept = Vec::new();
            'cands: for c in telescoped.c(m).iter() {
                let translated = telescoped.f(m - 1).translate_right(c)?;
                if !translated.is_subset_of(telescoped.f(m)) {
                    continue;
                }
                for g in window {
                    if !translated.translate_left(g)?.is_subset_of(telescoped.f(m)) {
                        continue 'cands;
                    }
                }
                kept.push(c.clone());
            }
            // a usable level keeps at least two block elements so the
            // reduced sequence stays nondegenerate
            if kept.len() < 2 {
                ok = false;
                break;
            }
            sets.push(FiniteSubset::new(telescoped.group().clone(), kept)?);
        }
        if ok {
            return Ok(Some(Standardization {
                telescope_indices: indices,
                reduction_sets: sets,
            }));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointMapDoc {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub indices: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<PointMapDoc>>,
    pub source: SequenceDoc,
    pub target: SequenceDoc,
}

impl PointMap {
    pub fn to_doc(&self) -> PointMapDoc {
        let mut doc = PointMapDoc {
            kind: self.kind.name().to_string(),
            z: None,
            indices: None,
            a: None,
            b: None,
            stages: None,
            source: self.source.to_doc(),
            target: self.target.to_doc(),
        };
        match &self.kind {
            MapKind::Calibration { z } => {
                doc.z = Some(z.iter().map(|e| e.to_string()).collect());
            }
            MapKind::Telescoping { indices } | MapKind::TelescopingInverse { indices } => {
                doc.indices = Some(indices.clone());
            }
            MapKind::Reduction { sets }
            | MapKind::ReductionInverse { sets }
            | MapKind::Quotient { sets } => {
                doc.a = Some(sets.iter().map(|s| s.to_strings()).collect());
            }
            MapKind::ChainEquivalence { a, b } => {
                doc.a = Some(a.iter().map(|s| s.to_strings()).collect());
                doc.b = Some(b.iter().map(|s| s.to_strings()).collect());
            }
            MapKind::Composite { stages } => {
                doc.stages = Some(stages.iter().map(|s| s.to_doc()).collect());
            }
        }
        doc
    }

    pub fn from_doc(doc: &PointMapDoc) -> Result<PointMap> {
        let source = Arc::new(CfSequence::from_doc(&doc.source)?);
        let target = Arc::new(CfSequence::from_doc(&doc.target)?);
        let group = source.group().clone();
        let parse_sets = |lists: &Option<Vec<Vec<String>>>| -> Result<Vec<FiniteSubset>> {
            lists
                .as_ref()
                .ok_or_else(|| CfError::ParseError("missing set lists".into()))?
                .iter()
                .map(|texts| FiniteSubset::parse_canonical(&group, texts))
                .collect()
        };
        let kind = match doc.kind.as_str() {
            "calibration" => {
                let z = doc
                    .z
                    .as_ref()
                    .ok_or_else(|| CfError::ParseError("calibration without z".into()))?
                    .iter()
                    .map(|t| group.parse(t))
                    .collect::<Result<Vec<_>>>()?;
                MapKind::Calibration { z }
            }
            "telescoping" => MapKind::Telescoping {
                indices: doc
                    .indices
                    .clone()
                    .ok_or_else(|| CfError::ParseError("telescoping without indices".into()))?,
            },
            "telescoping_inverse" => MapKind::TelescopingInverse {
                indices: doc
                    .indices
                    .clone()
                    .ok_or_else(|| CfError::ParseError("telescoping without indices".into()))?,
            },
            "reduction" => MapKind::Reduction {
                sets: parse_sets(&doc.a)?,
            },
            "reduction_inverse" => MapKind::ReductionInverse {
                sets: parse_sets(&doc.a)?,
            },
            "quotient" => MapKind::Quotient {
                sets: parse_sets(&doc.a)?,
            },
            "chain_equivalence" => MapKind::ChainEquivalence {
                a: parse_sets(&doc.a)?,
                b: parse_sets(&doc.b)?,
            },
            "composite" => {
                let stages = doc
                    .stages
                    .as_ref()
                    .ok_or_else(|| CfError::ParseError("composite without stages".into()))?
                    .iter()
                    .map(PointMap::from_doc)
                    .collect::<Result<Vec<_>>>()?;
                MapKind::Composite { stages }
            }
            other => {
                return Err(CfError::ParseError(format!("unknown map kind {other:?}")));
            }
        };
        Ok(PointMap {
            kind,
            source,
            target,
        })
    }
}

/// Per-level fraction of depth-m points whose factorization coordinates all
/// lie in the reduced block sets: the exact finite shadow of the reduction's
/// domain.
pub fn reduction_domain_profile(
    seq: &SeqRef,
    sets: &[FiniteSubset],
) -> Result<Vec<BigRational>> {
    if sets.len() != seq.levels() {
        return Err(CfError::PreconditionError(
            "need one reduction set per level".into(),
        ));
    }
    let mut out = Vec::with_capacity(seq.levels() + 1);
    for m in 0..=seq.levels() {
        let mut inside = 0usize;
        for v in seq.f(m).iter() {
            let p = DepthPoint::new(seq.clone(), m, v.clone())?;
            let fac = p.min_base()?;
            let ok = fac
                .coords
                .iter()
                .enumerate()
                .all(|(i, c)| sets[fac.base + i].contains(c));
            if ok {
                inside += 1;
            }
        }
        out.push(ratio(inside, seq.f(m).len()));
    }
    Ok(out)
}

pub fn scale_string(scale: &BigRational) -> String {
    ratio_string(scale)
}
