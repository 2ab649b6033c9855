//! Isomorphism witnesses: the finite index/subset data that certifies two
//! parameter sequences as isomorphic, its defect evaluation, the auxiliary
//! chain-equivalent pair it generates, the seven-stage isomorphism assembled
//! from it, and a bounded deterministic search for such data.
//!
//! A witness interleaves levels of the two sequences,
//! k₀ ≤ l₀ ≤ k₁ ≤ l₁ ≤ ⋯ with k₀ = 0, and carries subsets J_n ⊆ F_{k_n},
//! J̃_n ⊆ F̃_{l_n} plus a decreasing tolerance list. Both the canonical form
//! (k₀ = k₁ = l₀ = 0 with singleton seeds) and shifted forms (l₀ ≥ 1, as in
//! shifted-family witnesses) are supported.

use std::sync::Arc;

use num::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CfError, Result};
use crate::maps::{
    chain_check, chain_map, compose, reduce_relaxed, telescope_relaxed, ChainReport, PointMap,
};
use crate::report::{ratio, ratio_serde, ratio_vec_serde};
use crate::seq::CfSequence;
use crate::space::{greedy_tiling, SeqRef};
use crate::subset::FiniteSubset;

#[derive(Debug, Clone)]
pub struct IsoWitness {
    /// k₀ … k_P with k₀ = 0
    pub k: Vec<usize>,
    /// l₀ … l_Q
    pub l: Vec<usize>,
    /// J₁ … J_P (J_n ⊆ F_{k_n})
    pub j: Vec<FiniteSubset>,
    /// J̃₀ … J̃_Q (J̃_n ⊆ F̃_{l_n})
    pub j_tilde: Vec<FiniteSubset>,
    /// tolerance per step; the bound at step n is 2·eps_for_step(n)
    pub eps: Vec<BigRational>,
}

/// The default tolerance schedule: a first entry above one, then a
/// geometrically decreasing tail summing below one third.
pub fn default_eps(steps: usize) -> Vec<BigRational> {
    let mut out = vec![ratio(2, 1)];
    let mut denom = 8usize;
    for _ in 1..steps.max(2) {
        out.push(ratio(1, denom));
        denom = denom.saturating_mul(2);
    }
    out
}

impl IsoWitness {
    pub fn eps_for_step(&self, n: usize) -> BigRational {
        if self.eps.is_empty() {
            ratio(1, 1)
        } else {
            self.eps[n.min(self.eps.len() - 1)].clone()
        }
    }

    fn j_set(&self, n: usize) -> Option<&FiniteSubset> {
        if n == 0 {
            None
        } else {
            self.j.get(n - 1)
        }
    }

    fn jt_set(&self, n: usize) -> Option<&FiniteSubset> {
        self.j_tilde.get(n)
    }

    /// Shape checks: monotone interleaving, subsets inside their levels,
    /// positive nonincreasing tolerances.
    pub fn validate(&self, t: &CfSequence, tt: &CfSequence) -> Result<()> {
        if self.k.first() != Some(&0) {
            return Err(CfError::PreconditionError("witness must start at k₀ = 0".into()));
        }
        if self.j.len() + 1 != self.k.len() {
            return Err(CfError::PreconditionError(format!(
                "witness needs one J per k-index after the first: {} J for {} k",
                self.j.len(),
                self.k.len()
            )));
        }
        if self.j_tilde.len() != self.l.len() {
            return Err(CfError::PreconditionError(format!(
                "witness needs one J̃ per l-index: {} J̃ for {} l",
                self.j_tilde.len(),
                self.l.len()
            )));
        }
        for n in 0..self.k.len().max(self.l.len()) {
            if let (Some(&kn), Some(&ln)) = (self.k.get(n), self.l.get(n)) {
                if kn > ln {
                    return Err(CfError::PreconditionError(format!(
                        "interleaving broken: k_{n} = {kn} > l_{n} = {ln}"
                    )));
                }
            }
            if let (Some(&ln), Some(&kn1)) = (self.l.get(n), self.k.get(n + 1)) {
                if ln > kn1 {
                    return Err(CfError::PreconditionError(format!(
                        "interleaving broken: l_{n} = {ln} > k_{} = {kn1}",
                        n + 1
                    )));
                }
            }
        }
        if self.k[1..].windows(2).any(|w| w[0] >= w[1]) {
            return Err(CfError::PreconditionError(
                "k-indices must strictly increase after k₁".into(),
            ));
        }
        if self.l.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CfError::PreconditionError("l-indices must strictly increase".into()));
        }
        if self.k.iter().any(|&i| i > t.levels()) || self.l.iter().any(|&i| i > tt.levels()) {
            return Err(CfError::PreconditionError(
                "witness index beyond a stored prefix".into(),
            ));
        }
        for (i, j) in self.j.iter().enumerate() {
            let kn = self.k[i + 1];
            if j.is_empty() || !j.is_subset_of(t.f(kn)) {
                return Err(CfError::PreconditionError(format!(
                    "J_{} must be a nonempty subset of F_{kn}",
                    i + 1
                )));
            }
        }
        for (n, jt) in self.j_tilde.iter().enumerate() {
            let ln = self.l[n];
            if jt.is_empty() || !jt.is_subset_of(tt.f(ln)) {
                return Err(CfError::PreconditionError(format!(
                    "J̃_{n} must be a nonempty subset of F̃_{ln}"
                )));
            }
        }
        if self.eps.is_empty() || self.eps.iter().any(|e| *e <= ratio(0, 1)) {
            return Err(CfError::PreconditionError("tolerances must be positive".into()));
        }
        if self.eps.windows(2).any(|w| w[0] < w[1]) {
            return Err(CfError::PreconditionError("tolerances must be nonincreasing".into()));
        }
        Ok(())
    }

    /// Exchanges the two sequences' roles: k' = l, l' = (k₁…), J' = J̃-tail,
    /// J̃' = J. Only canonical-form witnesses (l₀ = 0) mirror.
    pub fn mirror(&self) -> Result<IsoWitness> {
        if self.l.first() != Some(&0) {
            return Err(CfError::PreconditionError(
                "only witnesses with l₀ = 0 can be mirrored".into(),
            ));
        }
        Ok(IsoWitness {
            k: self.l.clone(),
            l: self.k[1..].to_vec(),
            j: self.j_tilde[1..].to_vec(),
            j_tilde: self.j.clone(),
            eps: self.eps.clone(),
        })
    }

    pub fn to_doc(&self) -> WitnessDoc {
        WitnessDoc {
            k: self.k.clone(),
            l: self.l.clone(),
            j: self.j.iter().map(|s| s.to_strings()).collect(),
            j_tilde: self.j_tilde.iter().map(|s| s.to_strings()).collect(),
            eps: self.eps.clone(),
        }
    }

    pub fn from_doc(doc: &WitnessDoc, t: &CfSequence, tt: &CfSequence) -> Result<IsoWitness> {
        let j = doc
            .j
            .iter()
            .map(|texts| FiniteSubset::parse_canonical(t.group(), texts))
            .collect::<Result<Vec<_>>>()?;
        let j_tilde = doc
            .j_tilde
            .iter()
            .map(|texts| FiniteSubset::parse_canonical(tt.group(), texts))
            .collect::<Result<Vec<_>>>()?;
        let w = IsoWitness {
            k: doc.k.clone(),
            l: doc.l.clone(),
            j,
            j_tilde,
            eps: doc.eps.clone(),
        };
        w.validate(t, tt)?;
        Ok(w)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessDoc {
    pub k: Vec<usize>,
    pub l: Vec<usize>,
    #[serde(rename = "J")]
    pub j: Vec<Vec<String>>,
    #[serde(rename = "Jt")]
    pub j_tilde: Vec<Vec<String>>,
    #[serde(with = "ratio_vec_serde")]
    pub eps: Vec<BigRational>,
}

/// One interleaving step's six condition checks. Fields are absent when the
/// witness prefix does not carry the data they need.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessStepCheck {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inclusion_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub injective_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_ratio")]
    pub block_defect: Option<BigRational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_defect_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inclusion_primed_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub injective_primed_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_ratio")]
    pub block_defect_primed: Option<BigRational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_defect_primed_ok: Option<bool>,
    #[serde(with = "ratio_serde")]
    pub bound: BigRational,
}

mod opt_ratio {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        r: &Option<BigRational>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match r {
            Some(v) => s.serialize_some(&crate::report::ratio_string(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<BigRational>, D::Error> {
        let text: Option<String> = serde::Deserialize::deserialize(d)?;
        match text {
            Some(t) => crate::report::parse_ratio(&t)
                .map(Some)
                .map_err(serde::de::Error::custom),
            None => Ok(None),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessReport {
    pub steps: Vec<WitnessStepCheck>,
    pub pass: bool,
}

impl WitnessStepCheck {
    fn ok(&self) -> bool {
        self.inclusion_ok != Some(false)
            && self.injective_ok != Some(false)
            && self.block_defect_ok != Some(false)
            && self.inclusion_primed_ok != Some(false)
            && self.injective_primed_ok != Some(false)
            && self.block_defect_primed_ok != Some(false)
    }
}

fn symdiff_ratio(left: &FiniteSubset, right: &FiniteSubset) -> BigRational {
    ratio(left.symmetric_difference(right).len(), right.len())
}

/// Evaluates every stored step of the witness against both sequences:
/// inclusion and injectivity on each side plus the exact block defects
/// against their bounds.
pub fn check_witness(t: &SeqRef, tt: &SeqRef, w: &IsoWitness) -> Result<WitnessReport> {
    w.validate(t, tt)?;
    let mut steps = Vec::new();
    let max_n = w.k.len().max(w.l.len());
    for n in 0..max_n {
        let bound = ratio(2, 1) * w.eps_for_step(n);
        let mut step = WitnessStepCheck {
            n,
            inclusion_ok: None,
            injective_ok: None,
            block_defect: None,
            block_defect_ok: None,
            inclusion_primed_ok: None,
            injective_primed_ok: None,
            block_defect_primed: None,
            block_defect_primed_ok: None,
            bound: bound.clone(),
        };
        if let (Some(&kn), Some(&ln), Some(jt)) = (w.k.get(n), w.l.get(n), w.jt_set(n)) {
            let prod = t.f(kn).product(jt)?;
            step.inclusion_ok = Some(prod.is_subset_of(tt.f(ln)));
            step.injective_ok = Some(prod.len() == t.f(kn).len() * jt.len());
        }
        if let (Some(&kn), Some(&kn1), Some(jt), Some(jn1)) =
            (w.k.get(n), w.k.get(n + 1), w.jt_set(n), w.j_set(n + 1))
        {
            let block = t.product_block(kn, kn1)?;
            let defect = symdiff_ratio(&jt.product(jn1)?, &block);
            step.block_defect_ok = Some(defect < bound);
            step.block_defect = Some(defect);
        }
        if let (Some(&ln), Some(&kn1), Some(jn1)) = (w.l.get(n), w.k.get(n + 1), w.j_set(n + 1)) {
            let prod = tt.f(ln).product(jn1)?;
            step.inclusion_primed_ok = Some(prod.is_subset_of(t.f(kn1)));
            step.injective_primed_ok = Some(prod.len() == tt.f(ln).len() * jn1.len());
        }
        if let (Some(&ln), Some(&ln1), Some(jn1), Some(jt1)) =
            (w.l.get(n), w.l.get(n + 1), w.j_set(n + 1), w.jt_set(n + 1))
        {
            let block = tt.product_block(ln, ln1)?;
            let defect = symdiff_ratio(&jn1.product(jt1)?, &block);
            step.block_defect_primed_ok = Some(defect < bound);
            step.block_defect_primed = Some(defect);
        }
        steps.push(step);
    }
    let pass = steps.iter().all(|s| s.ok());
    Ok(WitnessReport { steps, pass })
}

/// The auxiliary data a passing witness generates: the chain-equivalent
/// pair of sequences, the reduction sets on both sides, and the four exact
/// defect partial sums.
#[derive(Debug, Clone)]
pub struct Auxiliary {
    pub v: SeqRef,
    pub w: SeqRef,
    /// reduction sets for the k-telescoped side (level n+1 gets a[n])
    pub a: Vec<FiniteSubset>,
    /// reduction sets for the l-telescoped side
    pub b: Vec<FiniteSubset>,
    /// Σ (1 − #A_n/#C-block), Σ (1 − #B_n/#C̃-block),
    /// Σ (1 − #A_n/#(J̃_nJ_{n+1})), Σ (1 − #B_n/#(J_{n+1}J̃_{n+1}))
    pub sums: [BigRational; 4],
    /// number of complete interleaving steps both sides support
    pub depth: usize,
}

/// Builds the two auxiliary sequences V = (F_{k_n}, J̃_nJ_{n+1}) and
/// W = (F̃_{l_n}, J_{n+1}J̃_{n+1}) at the deepest step both sides support,
/// together with the intersection reduction sets and the defect sums.
pub fn build_auxiliary(t: &SeqRef, tt: &SeqRef, w: &IsoWitness) -> Result<Auxiliary> {
    w.validate(t, tt)?;
    let p = w.j.len(); // J₁…J_P
    let q = w.j_tilde.len().saturating_sub(1); // J̃₀…J̃_Q
    let depth = p.min(q);
    if depth == 0 {
        return Err(CfError::PreconditionError(
            "witness too short to build the auxiliary pair".into(),
        ));
    }

    let mut v_f = Vec::with_capacity(depth + 1);
    let mut v_c = Vec::with_capacity(depth);
    let mut w_f = Vec::with_capacity(depth + 1);
    let mut w_c = Vec::with_capacity(depth);
    let mut a_sets = Vec::with_capacity(depth);
    let mut b_sets = Vec::with_capacity(depth);
    let zero = ratio(0, 1);
    let mut sums = [zero.clone(), zero.clone(), zero.clone(), zero];

    for n in 0..=depth {
        v_f.push(t.f(w.k[n]).clone());
        w_f.push(tt.f(w.l[n]).clone());
    }
    for n in 0..depth {
        let jt_n = w.jt_set(n).expect("validated");
        let j_n1 = w.j_set(n + 1).expect("validated");
        let jt_n1 = w.jt_set(n + 1).expect("validated");

        let v_block = jt_n.product(j_n1)?;
        let w_block = j_n1.product(jt_n1)?;
        let t_block = t.product_block(w.k[n], w.k[n + 1])?;
        let tt_block = tt.product_block(w.l[n], w.l[n + 1])?;

        let a_n = v_block.intersection(&t_block);
        let b_n = w_block.intersection(&tt_block);
        if a_n.is_empty() || b_n.is_empty() {
            return Err(CfError::InvariantViolation(format!(
                "witness blocks at step {n} share nothing with the telescoped blocks"
            )));
        }
        sums[0] += ratio(1, 1) - ratio(a_n.len(), t_block.len());
        sums[1] += ratio(1, 1) - ratio(b_n.len(), tt_block.len());
        sums[2] += ratio(1, 1) - ratio(a_n.len(), v_block.len());
        sums[3] += ratio(1, 1) - ratio(b_n.len(), w_block.len());

        v_c.push(v_block);
        w_c.push(w_block);
        a_sets.push(a_n);
        b_sets.push(b_n);
    }

    let v = Arc::new(CfSequence::new(t.group().clone(), v_f, v_c)?);
    let w_seq = Arc::new(CfSequence::new(tt.group().clone(), w_f, w_c)?);
    for (name, s) in [("V", &v), ("W", &w_seq)] {
        let report = s.validate();
        if !report.levels_consistent {
            return Err(CfError::InvariantViolation(format!(
                "auxiliary sequence {name} fails validation: {}",
                report.first_failure().unwrap_or_default()
            )));
        }
    }
    Ok(Auxiliary {
        v,
        w: w_seq,
        a: a_sets,
        b: b_sets,
        sums,
        depth,
    })
}

/// Chain report for the auxiliary pair under the witness subsets.
pub fn auxiliary_chain_report(aux: &Auxiliary, w: &IsoWitness) -> Result<ChainReport> {
    let a: Vec<FiniteSubset> = w.j_tilde[..=aux.depth].to_vec();
    let b: Vec<FiniteSubset> = w.j[..aux.depth].to_vec();
    chain_check(&aux.v, &aux.w, &a, &b)
}

/// Assembles the isomorphism as the composition of seven elementary stages:
/// telescope, reduce, include back into the auxiliary pair, cross it by the
/// chain equivalence, and undo the reductions and the telescoping on the
/// other side.
pub fn build_isomorphism(t: &SeqRef, tt: &SeqRef, w: &IsoWitness) -> Result<PointMap> {
    let report = check_witness(t, tt, w)?;
    if !report.pass {
        return Err(CfError::PreconditionError(
            "witness does not pass its checks".into(),
        ));
    }
    let aux = build_auxiliary(t, tt, w)?;
    let depth = aux.depth;
    let k_prefix = &w.k[..=depth];
    let l_prefix = &w.l[..=depth];

    let (t_k, iota_k) = telescope_relaxed(t, k_prefix)?;
    let (t_ak, rho_a) = {
        let (seq, map, _scale) = reduce_relaxed(&t_k, &aux.a)?;
        (seq, map)
    };
    let (v_a, rho_a_hat) = {
        let (seq, map, _scale) = reduce_relaxed(&aux.v, &aux.a)?;
        (seq, map)
    };
    if *t_ak != *v_a {
        return Err(CfError::InvariantViolation(
            "reduced telescoped sequence differs from the reduced auxiliary sequence".into(),
        ));
    }
    let chain_a: Vec<FiniteSubset> = w.j_tilde[..=depth].to_vec();
    let chain_b: Vec<FiniteSubset> = w.j[..depth].to_vec();
    let psi = chain_map(&aux.v, &aux.w, &chain_a, &chain_b)?;

    let (tt_l, iota_l) = telescope_relaxed(tt, l_prefix)?;
    let (tt_bl, rho_b) = {
        let (seq, map, _scale) = reduce_relaxed(&tt_l, &aux.b)?;
        (seq, map)
    };
    let (w_b, rho_b_hat) = {
        let (seq, map, _scale) = reduce_relaxed(&aux.w, &aux.b)?;
        (seq, map)
    };
    if *tt_bl != *w_b {
        return Err(CfError::InvariantViolation(
            "reduced telescoped sequence differs from the reduced auxiliary sequence".into(),
        ));
    }

    compose(vec![
        iota_k,
        rho_a,
        rho_a_hat.inverse()?,
        psi,
        rho_b_hat,
        rho_b.inverse()?,
        iota_l.inverse()?,
    ])
}

// ---------------------------------------------------------------------------
// Bounded witness search
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SearchBounds {
    /// deepest level index usable on either sequence
    pub max_level: usize,
    /// cap on candidate subset size
    pub max_subset: usize,
    /// ground sets at most this large are enumerated exhaustively;
    /// larger ones get a single greedy packing candidate
    pub exhaustive_threshold: usize,
}

impl SearchBounds {
    pub fn desk(max_level: usize) -> SearchBounds {
        SearchBounds {
            max_level,
            max_subset: 16,
            exhaustive_threshold: 20,
        }
    }
}

struct SearchCtx<'a> {
    t: &'a SeqRef,
    tt: &'a SeqRef,
    eps: &'a [BigRational],
    bounds: &'a SearchBounds,
}

fn eps_at(eps: &[BigRational], n: usize) -> BigRational {
    eps[n.min(eps.len() - 1)].clone()
}

/// Candidate subsets of `ground` in canonical order (lexicographic on the
/// sorted element list), pruned by an injectivity predicate that is
/// monotone under extension and capped in size.
fn subset_candidates(
    ground: &FiniteSubset,
    max_subset: usize,
    keep: &dyn Fn(&FiniteSubset) -> bool,
    out: &mut Vec<FiniteSubset>,
) {
    fn extend(
        ground: &[crate::group::GroupElement],
        start: usize,
        current: &mut Vec<crate::group::GroupElement>,
        max_subset: usize,
        keep: &dyn Fn(&FiniteSubset) -> bool,
        group: &crate::group::Group,
        out: &mut Vec<FiniteSubset>,
    ) {
        for i in start..ground.len() {
            current.push(ground[i].clone());
            let set = FiniteSubset::new(group.clone(), current.clone()).expect("same group");
            if keep(&set) {
                out.push(set);
                if current.len() < max_subset {
                    extend(ground, i + 1, current, max_subset, keep, group, out);
                }
            }
            current.pop();
        }
    }
    let mut current = Vec::new();
    extend(
        ground.elements(),
        0,
        &mut current,
        max_subset,
        keep,
        ground.group(),
        out,
    );
}

/// Elements of `target_shape` whose left translate of `shape` stays inside:
/// the ground set for one side of a step.
fn step_ground(shape: &FiniteSubset, target_shape: &FiniteSubset) -> Result<FiniteSubset> {
    let mut kept = Vec::new();
    for f in target_shape.iter() {
        if shape.translate_right(f)?.is_subset_of(target_shape) {
            kept.push(f.clone());
        }
    }
    FiniteSubset::new(target_shape.group().clone(), kept)
}

fn injective_with(shape: &FiniteSubset, j: &FiniteSubset) -> bool {
    match shape.product(j) {
        Ok(p) => p.len() == shape.len() * j.len(),
        Err(_) => false,
    }
}

fn candidates_for(
    shape: &FiniteSubset,
    target_shape: &FiniteSubset,
    bounds: &SearchBounds,
) -> Result<Vec<FiniteSubset>> {
    let ground = step_ground(shape, target_shape)?;
    if ground.is_empty() {
        return Ok(Vec::new());
    }
    if ground.len() <= bounds.exhaustive_threshold {
        let mut out = Vec::new();
        let shape = shape.clone();
        subset_candidates(
            &ground,
            bounds.max_subset,
            &|j| injective_with(&shape, j),
            &mut out,
        );
        Ok(out)
    } else {
        // greedy packing of shape-translates, trimmed to the size cap
        let (packed, _coverage) = greedy_tiling(shape, target_shape)?;
        if packed.is_empty() {
            return Ok(Vec::new());
        }
        let trimmed: Vec<_> = packed.iter().take(bounds.max_subset).cloned().collect();
        Ok(vec![FiniteSubset::new(ground.group().clone(), trimmed)?])
    }
}

/// Leftmost depth-first completion from the current state. Returns the
/// deepest witness along the first viable branch. `first_l`, when set,
/// pins the l-index of the first step (the parallel split key).
fn search_from(
    ctx: &SearchCtx<'_>,
    k: Vec<usize>,
    l: Vec<usize>,
    j: Vec<FiniteSubset>,
    jt: Vec<FiniteSubset>,
    first_l: Option<usize>,
) -> Result<Option<IsoWitness>> {
    let n = l.len(); // the step being attempted
    let k_n = *k.last().unwrap();
    let l_floor = l.last().map_or(k_n, |&x| x.max(k_n));

    let mut lo = (l_floor + 1).max(1);
    let mut hi = ctx.bounds.max_level.min(ctx.tt.levels());
    if n == 1 {
        if let Some(fl) = first_l {
            if fl < lo || fl > hi {
                return Ok(None);
            }
            lo = fl;
            hi = fl;
        }
    }
    for l_n in lo..=hi {
        let jt_cands = candidates_for(ctx.t.f(k_n), ctx.tt.f(l_n), ctx.bounds)?;
        for jt_n in jt_cands {
            // primed block defect pairing J_n with J̃_n
            if n >= 1 {
                let block = ctx.tt.product_block(l[n - 1], l_n)?;
                let defect = symdiff_ratio(&j[n - 1].product(&jt_n)?, &block);
                if defect >= ratio(2, 1) * eps_at(ctx.eps, n - 1) {
                    continue;
                }
            }
            for k_n1 in (l_n + 1)..=ctx.bounds.max_level.min(ctx.t.levels()) {
                let j_cands = candidates_for(ctx.tt.f(l_n), ctx.t.f(k_n1), ctx.bounds)?;
                for j_n1 in j_cands {
                    let block = ctx.t.product_block(k_n, k_n1)?;
                    let defect = symdiff_ratio(&jt_n.product(&j_n1)?, &block);
                    if defect >= ratio(2, 1) * eps_at(ctx.eps, n) {
                        continue;
                    }
                    let mut k2 = k.clone();
                    let mut l2 = l.clone();
                    let mut j2 = j.clone();
                    let mut jt2 = jt.clone();
                    k2.push(k_n1);
                    l2.push(l_n);
                    j2.push(j_n1);
                    jt2.push(jt_n.clone());
                    if let Some(found) = search_from(ctx, k2, l2, j2, jt2, first_l)? {
                        return Ok(Some(found));
                    }
                }
            }
            // No full step fits beyond (l_n, J̃_n). Once at least one full
            // step exists the half step closes the witness; otherwise keep
            // scanning candidates.
            if k.len() >= 3 {
                let mut l2 = l.clone();
                let mut jt2 = jt.clone();
                l2.push(l_n);
                jt2.push(jt_n);
                return Ok(Some(IsoWitness {
                    k,
                    l: l2,
                    j,
                    j_tilde: jt2,
                    eps: ctx.eps.to_vec(),
                }));
            }
        }
    }
    if k.len() >= 3 {
        // nothing extends; the accumulated state (at least one full step)
        // is the found witness
        return Ok(Some(IsoWitness {
            k,
            l,
            j,
            j_tilde: jt,
            eps: ctx.eps.to_vec(),
        }));
    }
    Ok(None)
}

/// Bounded deterministic search for a witness between two sequences. Both
/// must be in normalized position (identity in the base levels). Returns
/// the leftmost witness in candidate order, independent of `workers`;
/// absence means only "not found within bounds".
pub fn search_witness(
    t: &SeqRef,
    tt: &SeqRef,
    eps: &[BigRational],
    bounds: &SearchBounds,
    workers: usize,
) -> Result<Option<IsoWitness>> {
    if eps.is_empty() {
        return Err(CfError::PreconditionError("empty tolerance list".into()));
    }
    let f0 = t.f(0).clone();
    let ft0 = tt.f(0).clone();
    if f0.len() != 1 || ft0.len() != 1 {
        return Err(CfError::PreconditionError("base levels must be singletons".into()));
    }
    // canonical-form seed: k₀ = k₁ = l₀ = 0, J₁ and J̃₀ the base singletons
    let seed_ok = {
        let prod = ft0.product(&f0)?;
        prod.is_subset_of(&f0)
    };
    if !seed_ok {
        // the seed inclusion F̃₀·J₁ ⊆ F₀ needs identity base levels
        return Ok(None);
    }
    let ctx = SearchCtx {
        t,
        tt,
        eps,
        bounds,
    };
    let k0 = vec![0usize, 0];
    let l0 = vec![0usize];
    let j0 = vec![f0];
    let jt0 = vec![ft0];

    if workers <= 1 {
        return search_from(&ctx, k0, l0, j0, jt0, None);
    }

    // Parallel mode: split on the first l-index; every branch computes its
    // own leftmost result and the first in l-order wins, matching the
    // sequential answer.
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CfError::PreconditionError(format!("worker pool: {e}")))?;
    let max_l = bounds.max_level.min(tt.levels());
    let results: Vec<Result<Option<IsoWitness>>> = pool.install(|| {
        (1..=max_l)
            .into_par_iter()
            .map(|l1| {
                let narrowed = SearchCtx {
                    t,
                    tt,
                    eps,
                    bounds,
                };
                search_from(
                    &narrowed,
                    k0.clone(),
                    l0.clone(),
                    j0.clone(),
                    jt0.clone(),
                    Some(l1),
                )
            })
            .collect()
    });
    for r in results {
        if let Some(found) = r? {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// A built-in end-to-end scenario: a shifted progression family over ℤ whose
// commutant shift is certified by an interleaved witness.
// ---------------------------------------------------------------------------

/// A sequence over ℤ with three-element progression blocks, head room at
/// the odd levels, a shift schedule with finitely many nonzero steps, and
/// the witness (k_n = 2n, l_n = 2n+1) carrying the accumulated shifts.
pub struct ShiftedFamily {
    pub seq: SeqRef,
    /// per-level shift steps (β); only the first two are nonzero
    pub beta: Vec<i64>,
    /// accumulated shifts per level (α)
    pub alpha: Vec<i64>,
    pub witness: IsoWitness,
}

/// Builds the scenario with `pairs` interleaving steps (2·pairs levels).
pub fn shifted_family(pairs: usize) -> Result<ShiftedFamily> {
    if pairs < 2 {
        return Err(CfError::PreconditionError("need at least two pairs".into()));
    }
    let z = crate::group::Group::integers();
    let levels = 2 * pairs;
    let mut f = vec![FiniteSubset::int_range(&z, 1)?];
    let mut c = Vec::with_capacity(levels);
    let mut h = 1i64;
    let mut heights = vec![1i64];
    for n in 1..=levels {
        let step = h;
        c.push(FiniteSubset::ints(&z, &[0, step, 2 * step])?);
        // head room at the odd levels (beyond the first) leaves space for
        // the shifted blocks
        let spacer = if n % 2 == 1 && n >= 3 { 2 * h } else { 0 };
        h = 3 * h + spacer;
        heights.push(h);
        f.push(FiniteSubset::int_range(&z, h)?);
    }
    let seq = Arc::new(CfSequence::new(z.clone(), f, c)?);

    let mut beta = vec![0i64; levels];
    beta[0] = 1;
    beta[1] = heights[1];
    let mut alpha = Vec::with_capacity(levels + 1);
    let mut sum = 0i64;
    alpha.push(0);
    for b in &beta {
        sum += b;
        alpha.push(sum);
    }

    // witness: k_n = 2n, l_n = 2n+1, J from the down-shifted even blocks,
    // J̃ from the up-shifted odd blocks restricted to the usable ground
    let mut k = Vec::with_capacity(pairs + 1);
    let mut l = Vec::with_capacity(pairs);
    for n in 0..=pairs {
        k.push(2 * n);
        if 2 * n < levels {
            l.push(2 * n + 1);
        }
    }
    let mut j = Vec::with_capacity(pairs);
    for n in 1..=pairs {
        let a = z.int(-alpha[2 * n])?;
        let shifted = seq.c(2 * n).translate_left(&a)?;
        let inside = shifted.intersection(seq.f(2 * n));
        j.push(inside);
    }
    let mut j_tilde = Vec::with_capacity(l.len());
    for (i, &ln) in l.iter().enumerate() {
        let a = z.int(alpha[2 * i])?;
        let shifted = seq.c(ln).translate_left(&a)?;
        // restrict to the ground that keeps the tower-shape translate inside
        let mut kept = Vec::new();
        for e in shifted.iter() {
            if seq.f(2 * i).translate_right(e)?.is_subset_of(seq.f(ln)) {
                kept.push(e.clone());
            }
        }
        j_tilde.push(FiniteSubset::new(z.clone(), kept)?);
    }
    let witness = IsoWitness {
        k,
        l,
        j,
        j_tilde,
        eps: vec![ratio(2, 1), ratio(1, 2), ratio(1, 2)],
    };
    witness.validate(&seq, &seq)?;
    Ok(ShiftedFamily {
        seq,
        beta,
        alpha: alpha[1..].to_vec(),
        witness,
    })
}

// ---------------------------------------------------------------------------
// The finite "good prefix" predicate
// ---------------------------------------------------------------------------

/// One step's block data: the tower shapes on both sides, the next tower
/// shape (the inclusion target of the step's J), and the product blocks
/// between consecutive chosen levels.
#[derive(Debug, Clone)]
pub struct GoodStep {
    pub e: FiniteSubset,
    pub e_tilde: FiniteSubset,
    pub e_next: FiniteSubset,
    pub d: FiniteSubset,
    pub d_tilde: FiniteSubset,
}

/// Extracts the step data for a fixed interleaving from two sequences.
pub fn good_steps(
    t: &CfSequence,
    tt: &CfSequence,
    k: &[usize],
    l: &[usize],
) -> Result<Vec<GoodStep>> {
    if k.len() != l.len() || k.is_empty() {
        return Err(CfError::PreconditionError(
            "need matching nonempty index lists".into(),
        ));
    }
    let mut out = Vec::new();
    for n in 0..k.len() - 1 {
        out.push(GoodStep {
            e: t.f(k[n]).clone(),
            e_tilde: tt.f(l[n]).clone(),
            e_next: t.f(k[n + 1]).clone(),
            d: t.product_block(k[n], k[n + 1])?,
            d_tilde: tt.product_block(l[n], l[n + 1])?,
        });
    }
    Ok(out)
}

/// Whether subsets J̃_m, J_{m+1} exist making every step's six clauses hold.
/// Exhaustive over the bounded candidate sets; the empty prefix is good.
pub fn good_sequence(steps: &[GoodStep], eps: &[BigRational], bounds: &SearchBounds) -> Result<bool> {
    if steps.is_empty() {
        return Ok(true);
    }
    fn extend(
        steps: &[GoodStep],
        eps: &[BigRational],
        bounds: &SearchBounds,
        m: usize,
        prev_j: Option<&FiniteSubset>,
        prev_jt: Option<&FiniteSubset>,
    ) -> Result<bool> {
        if m >= steps.len() {
            return Ok(true);
        }
        let step = &steps[m];
        let jt_cands = candidates_for(&step.e, &step.e_tilde, bounds)?;
        for jt in &jt_cands {
            // primed defect of the previous step pairs (J_m, J̃_m)
            if let Some(pj) = prev_j {
                let prev = &steps[m - 1];
                let defect = symdiff_ratio(&pj.product(jt)?, &prev.d_tilde);
                if defect >= ratio(2, 1) * eps_at(eps, m - 1) {
                    continue;
                }
            }
            let _ = prev_jt;
            let j_cands = candidates_for(&step.e_tilde, &step.e_next, bounds)?;
            for jn in &j_cands {
                let defect = symdiff_ratio(&jt.product(jn)?, &step.d);
                if defect >= ratio(2, 1) * eps_at(eps, m) {
                    continue;
                }
                if extend(steps, eps, bounds, m + 1, Some(jn), Some(jt))? {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }
    extend(steps, eps, bounds, 0, None, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{map_divergence, CylinderMap};
    use crate::report::ratio_string;
    use crate::seq::dyadic_odometer;
    use crate::space::Cylinder;

    fn dyadic(levels: usize) -> SeqRef {
        Arc::new(dyadic_odometer(levels))
    }

    fn zsubs(seq: &SeqRef, lists: &[&[i64]]) -> Vec<FiniteSubset> {
        lists
            .iter()
            .map(|ns| FiniteSubset::ints(seq.group(), ns).unwrap())
            .collect()
    }

    /// The canonical self-witness of the dyadic odometer at three steps.
    fn dyadic_self_witness(seq: &SeqRef) -> IsoWitness {
        IsoWitness {
            k: vec![0, 0, 2, 4],
            l: vec![0, 1, 3, 5],
            j: zsubs(seq, &[&[0], &[0, 2], &[0, 8]]),
            j_tilde: zsubs(seq, &[&[0], &[0, 1], &[0, 4], &[0, 16]]),
            eps: default_eps(4),
        }
    }

    #[test]
    fn dyadic_self_witness_passes_with_zero_defects() {
        let seq = dyadic(5);
        let w = dyadic_self_witness(&seq);
        let report = check_witness(&seq, &seq, &w).unwrap();
        assert!(report.pass, "{report:?}");
        for step in &report.steps {
            if let Some(d) = &step.block_defect {
                assert_eq!(ratio_string(d), "0/1");
            }
            if let Some(d) = &step.block_defect_primed {
                assert_eq!(ratio_string(d), "0/1");
            }
        }
    }

    #[test]
    fn empty_j_fails_validation_and_tiny_j_fails_defect() {
        let seq = dyadic(3);
        let mut w = IsoWitness {
            k: vec![0, 0, 2],
            l: vec![0, 1],
            j: zsubs(&seq, &[&[0], &[0]]),
            j_tilde: zsubs(&seq, &[&[0], &[0, 1]]),
            eps: vec![ratio(2, 1), ratio(1, 8)],
        };
        // a singleton J₂ leaves most of the block uncovered
        let report = check_witness(&seq, &seq, &w).unwrap();
        let step1 = &report.steps[1];
        assert_eq!(step1.block_defect_ok, Some(false));
        assert!(!report.pass);

        w.j[1] = FiniteSubset::empty(seq.group().clone());
        assert!(check_witness(&seq, &seq, &w).is_err());
    }

    #[test]
    fn mirrored_witness_swaps_roles() {
        let seq = dyadic(5);
        let w = dyadic_self_witness(&seq);
        let m = w.mirror().unwrap();
        let report = check_witness(&seq, &seq, &m).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn auxiliary_pair_is_chain_equivalent() {
        let seq = dyadic(5);
        let w = dyadic_self_witness(&seq);
        let aux = build_auxiliary(&seq, &seq, &w).unwrap();
        assert_eq!(aux.depth, 3);
        for s in &aux.sums {
            assert_eq!(ratio_string(s), "0/1");
        }
        let chain = auxiliary_chain_report(&aux, &w).unwrap();
        assert!(chain.pass, "{chain:?}");
        assert!(aux.v.validate().structurally_valid);
        assert!(aux.w.validate().structurally_valid);
    }

    #[test]
    fn isomorphism_cylinder_law_and_measure() {
        let seq = dyadic(5);
        let w = dyadic_self_witness(&seq);
        let phi = build_isomorphism(&seq, &seq, &w).unwrap();

        // θ([1]_{k_n}) = [J̃_n]_{l_n} for every complete step (the image may
        // come back in a shallower but equal cylinder representation)
        for n in 1..=3usize {
            let block = Cylinder::identity_block(&seq, w.k[n]).unwrap();
            let image = phi.apply_cylinder(&block).unwrap().unwrap();
            let expected =
                Cylinder::new(seq.clone(), w.l[n], w.j_tilde[n].clone()).unwrap();
            assert!(
                crate::maps::cylinders_equal(&image, &expected).unwrap(),
                "step {n}: image {:?} at level {}",
                image.set().to_strings(),
                image.level()
            );
        }

        // bijective and measure preserving on the depth-3 truncation
        let mut seen = Vec::new();
        for p in Cylinder::full_level(&seq, 3).unwrap().points().unwrap() {
            let cyl = Cylinder::of_point(&p);
            let img = phi.apply_cylinder(&cyl).unwrap().unwrap();
            assert_eq!(
                cyl.measure(false).unwrap().value,
                img.measure(false).unwrap().value
            );
            seen.push(img);
        }
        // the images are pairwise disjoint and cover the target truncation
        let mut union = FiniteSubset::empty(seq.group().clone());
        let mut total = 0usize;
        let level = seen[0].level();
        for img in &seen {
            assert_eq!(img.level(), level);
            total += img.set().len();
            union = union.union(img.set()).unwrap();
        }
        assert_eq!(union.len(), total, "images overlap");
        assert_eq!(&union, phi.target().f(level));
    }

    #[test]
    fn search_finds_dyadic_self_witness() {
        let seq = dyadic(4);
        let eps = default_eps(4);
        let bounds = SearchBounds::desk(4);
        let found = search_witness(&seq, &seq, &eps, &bounds, 1)
            .unwrap()
            .expect("self-witness exists");
        let report = check_witness(&seq, &seq, &found).unwrap();
        assert!(report.pass);
        // deterministic across worker counts
        let found8 = search_witness(&seq, &seq, &eps, &bounds, 8)
            .unwrap()
            .expect("self-witness exists");
        assert_eq!(
            serde_json::to_string(&found.to_doc()).unwrap(),
            serde_json::to_string(&found8.to_doc()).unwrap()
        );
    }

    #[test]
    fn search_rejects_dyadic_vs_triadic_under_tight_eps() {
        let t = dyadic(3);
        let tt = Arc::new(CfSequence::odometer(&[1, 3, 3, 3]).unwrap());
        let eps = vec![ratio(1, 8); 4];
        let bounds = SearchBounds {
            max_level: 3,
            max_subset: 8,
            exhaustive_threshold: 20,
        };
        let found = search_witness(&t, &tt, &eps, &bounds, 1).unwrap();
        assert!(found.is_none(), "found: {found:?}");
    }

    #[test]
    fn huge_eps_is_trivially_satisfiable() {
        let t = dyadic(3);
        let tt = Arc::new(CfSequence::odometer(&[1, 3, 3, 3]).unwrap());
        let eps = vec![ratio(10, 1); 3];
        let bounds = SearchBounds::desk(3);
        let found = search_witness(&t, &tt, &eps, &bounds, 1).unwrap();
        let w = found.expect("loose tolerances always admit a witness");
        assert!(check_witness(&t, &tt, &w).unwrap().pass);
    }

    #[test]
    fn good_prefix_predicate() {
        let seq = dyadic(5);
        let w = dyadic_self_witness(&seq);
        // block data from the passing witness levels is good
        let steps = good_steps(&seq, &seq, &w.k[1..], &w.l[1..]).unwrap();
        assert!(good_sequence(&steps, &w.eps, &SearchBounds::desk(5)).unwrap());
        // the empty prefix is vacuously good
        assert!(good_sequence(&[], &w.eps, &SearchBounds::desk(5)).unwrap());

        // a one-element block with a tight tolerance forces a defect of at
        // least one: nothing can be good
        let z = seq.group().clone();
        let tiny = GoodStep {
            e: FiniteSubset::singleton(z.identity()),
            e_tilde: FiniteSubset::singleton(z.identity()),
            e_next: FiniteSubset::singleton(z.identity()),
            d: FiniteSubset::ints(&z, &[0, 1, 2, 3]).unwrap(),
            d_tilde: FiniteSubset::singleton(z.identity()),
        };
        let tight = vec![ratio(1, 8)];
        assert!(!good_sequence(&[tiny], &tight, &SearchBounds::desk(5)).unwrap());
    }

    #[test]
    fn witness_docs_round_trip() {
        let seq = dyadic(5);
        let w = dyadic_self_witness(&seq);
        let doc = w.to_doc();
        let text = serde_json::to_string(&doc).unwrap();
        let parsed: WitnessDoc = serde_json::from_str(&text).unwrap();
        let back = IsoWitness::from_doc(&parsed, &seq, &seq).unwrap();
        assert_eq!(serde_json::to_string(&back.to_doc()).unwrap(), text);
    }

    #[test]
    fn zero_defect_self_witness_builds_the_identity() {
        // all block defects vanish, so the assembled isomorphism agrees
        // with the identity on every stored cylinder
        let seq = dyadic(5);
        let w = dyadic_self_witness(&seq);
        let phi = build_isomorphism(&seq, &seq, &w).unwrap();
        let ident = PointMap::identity(seq.clone());
        let div = map_divergence(&phi, &ident, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(div, vec![ratio(0, 1); 5]);
    }
}
