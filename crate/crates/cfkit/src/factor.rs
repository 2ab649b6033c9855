//! Factor classification: the finite witness data certifying one action as
//! a measure-theoretic factor of another, the partial factor map it builds,
//! the approximate-equality calculus on finite integer sets, and the
//! congruence criterion for adding-machine factors over ℤ.

use std::sync::Arc;

use num::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{CfError, Result};
use crate::group::GroupDescriptor;
use crate::maps::{
    compose, quotient_check, telescope, telescope_relaxed, MapKind, PointMap, QuotientReport,
};
use crate::report::{ratio, ratio_serde, ratio_vec_serde};
use crate::seq::CfSequence;
use crate::space::SeqRef;
use crate::subset::FiniteSubset;

/// Witness data for "the second sequence's action is a factor of the
/// first's": indices k₀ = 0 < k₁ < ⋯ pairing level n of the factor with
/// level k_n of the extension, subsets J_n ⊆ F_{k_n}, and tolerances.
#[derive(Debug, Clone)]
pub struct FactorWitness {
    pub k: Vec<usize>,
    /// J₁ … J_P with J_n ⊆ F_{k_n}; J₀ is implicitly the identity.
    pub j: Vec<FiniteSubset>,
    pub eps: Vec<BigRational>,
}

impl FactorWitness {
    fn eps_for(&self, n: usize) -> BigRational {
        if self.eps.is_empty() {
            ratio(1, 1)
        } else {
            self.eps[n.saturating_sub(1).min(self.eps.len() - 1)].clone()
        }
    }

    pub fn validate(&self, t: &CfSequence, tt: &CfSequence) -> Result<()> {
        if self.k.first() != Some(&0) {
            return Err(CfError::PreconditionError("factor witness must start at k₀ = 0".into()));
        }
        if self.k.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CfError::PreconditionError("k-indices must strictly increase".into()));
        }
        if self.j.len() + 1 != self.k.len() {
            return Err(CfError::PreconditionError(format!(
                "need one J per k-index after the first: {} J for {} k",
                self.j.len(),
                self.k.len()
            )));
        }
        let steps = self.j.len();
        if *self.k.last().unwrap() > t.levels() || steps > tt.levels() {
            return Err(CfError::PreconditionError("witness index beyond a stored prefix".into()));
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
        if self.eps.is_empty() || self.eps.iter().any(|e| *e <= ratio(0, 1)) {
            return Err(CfError::PreconditionError("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn to_doc(&self) -> FactorWitnessDoc {
        FactorWitnessDoc {
            k: self.k.clone(),
            j: self.j.iter().map(|s| s.to_strings()).collect(),
            eps: self.eps.clone(),
        }
    }

    pub fn from_doc(doc: &FactorWitnessDoc, t: &CfSequence, tt: &CfSequence) -> Result<FactorWitness> {
        let j = doc
            .j
            .iter()
            .map(|texts| FiniteSubset::parse_canonical(t.group(), texts))
            .collect::<Result<Vec<_>>>()?;
        let w = FactorWitness {
            k: doc.k.clone(),
            j,
            eps: doc.eps.clone(),
        };
        w.validate(t, tt)?;
        Ok(w)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorWitnessDoc {
    pub k: Vec<usize>,
    #[serde(rename = "J")]
    pub j: Vec<Vec<String>>,
    #[serde(with = "ratio_vec_serde")]
    pub eps: Vec<BigRational>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorStepCheck {
    pub n: usize,
    /// F̃_n·J_n ⊆ F_{k_n}
    pub inclusion_ok: bool,
    /// (f̃, j) ↦ f̃·j one-to-one
    pub injective_ok: bool,
    /// (#F_{k_n} − #F̃_n·#J_n)/#F_{k_n}, bounded by ε_n
    #[serde(with = "ratio_serde")]
    pub fill_defect: BigRational,
    pub fill_ok: bool,
    /// #((J_{n-1}·C-block) Δ (C̃_n·J_n)) / (#C̃_n·#J_n), bounded by 2ε_{n-1}
    #[serde(with = "ratio_serde")]
    pub block_defect: BigRational,
    pub block_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorReport {
    pub steps: Vec<FactorStepCheck>,
    /// levels of the factor whose normalized mass misses 1 − ε_n/2; the
    /// witness still counts, a telescoping of the factor removes these
    pub mass_warnings: Vec<usize>,
    pub pass: bool,
}

/// Evaluates every witness step: inclusion, injectivity, the exact fill
/// defect against ε_n, and the block intertwining defect against 2ε_{n-1}.
pub fn check_factor_witness(t: &SeqRef, tt: &SeqRef, w: &FactorWitness) -> Result<FactorReport> {
    w.validate(t, tt)?;
    let mut steps = Vec::new();
    let mut prev_j = FiniteSubset::singleton(t.group().identity());
    for n in 1..=w.j.len() {
        let kn = w.k[n];
        let j_n = &w.j[n - 1];
        let prod = tt.f(n).product(j_n)?;
        let inclusion_ok = prod.is_subset_of(t.f(kn));
        let injective_ok = prod.len() == tt.f(n).len() * j_n.len();

        let fill_defect = (ratio(t.f(kn).len(), 1)
            - ratio(tt.f(n).len() * j_n.len(), 1))
            / ratio(t.f(kn).len(), 1);
        let fill_ok = fill_defect < w.eps_for(n);

        let block = t.product_block(w.k[n - 1], kn)?;
        let left = prev_j.product(&block)?;
        let right = tt.c(n).product(j_n)?;
        let block_defect = ratio(
            left.symmetric_difference(&right).len(),
            tt.c(n).len() * j_n.len(),
        );
        let block_ok = block_defect < ratio(2, 1) * w.eps_for(n.saturating_sub(1).max(1));

        steps.push(FactorStepCheck {
            n,
            inclusion_ok,
            injective_ok,
            fill_defect,
            fill_ok,
            block_defect,
            block_ok,
        });
        prev_j = j_n.clone();
    }

    // the standing mass assumption on the factor side, reported only
    let mut mass_warnings = Vec::new();
    if let Ok(profile) = tt.mass_profile() {
        let last = profile.last().cloned().unwrap_or_else(|| ratio(1, 1));
        if last > ratio(0, 1) {
            #[allow(clippy::needless_range_loop)]
            for n in 1..=w.j.len() {
                let normalized = profile[n].clone() / last.clone();
                if normalized <= ratio(1, 1) - w.eps_for(n) / ratio(2, 1) {
                    mass_warnings.push(n);
                }
            }
        }
    }

    let pass = steps
        .iter()
        .all(|s| s.inclusion_ok && s.injective_ok && s.fill_ok && s.block_ok);
    Ok(FactorReport {
        steps,
        mass_warnings,
        pass,
    })
}

/// The factor map a passing witness determines: telescope the extension
/// along k, then decompose each level value as f̃·j. Per-level domain
/// fractions (the mass of decomposable points) ride along.
pub struct FactorMap {
    pub map: PointMap,
    pub domain_fractions: Vec<BigRational>,
}

pub fn build_factor_map(t: &SeqRef, tt: &SeqRef, w: &FactorWitness) -> Result<FactorMap> {
    let report = check_factor_witness(t, tt, w)?;
    if !report.pass {
        return Err(CfError::PreconditionError(
            "factor witness does not pass its checks".into(),
        ));
    }
    let steps = w.j.len();
    let (t_k, iota_k) = telescope_relaxed(t, &w.k)?;
    // the factor prefix truncated to the witness depth
    let tt_prefix: Vec<usize> = (0..=steps).collect();
    let (tt_trunc, _) = telescope_relaxed(tt, &tt_prefix)?;
    let decompose = PointMap::raw(
        MapKind::Quotient {
            sets: w.j.to_vec(),
        },
        t_k.clone(),
        tt_trunc.clone(),
    );
    let mut domain_fractions = Vec::with_capacity(steps);
    for n in 1..=steps {
        let covered = tt.f(n).product(&w.j[n - 1])?;
        domain_fractions.push(ratio(covered.len(), t.f(w.k[n]).len()));
    }
    let map = compose(vec![iota_k, decompose])?;
    Ok(FactorMap {
        map,
        domain_fractions,
    })
}

/// #(A Δ B) < ε·#B, exactly.
pub fn approx_eq(a: &FiniteSubset, b: &FiniteSubset, eps: &BigRational) -> bool {
    let delta = a.symmetric_difference(b).len();
    ratio(delta, 1) < eps.clone() * ratio(b.len(), 1)
}

/// The interval-separation predicate on finite integer sets: the sets do
/// not overlap when one lies entirely left of the other.
pub fn non_overlapping(a: &FiniteSubset, b: &FiniteSubset) -> Result<bool> {
    let bounds = |s: &FiniteSubset| -> Result<(i64, i64)> {
        let mut min = i64::MAX;
        let mut max = i64::MIN;
        for e in s.iter() {
            let v = e.as_int()?;
            min = min.min(v);
            max = max.max(v);
        }
        Ok((min, max))
    };
    if a.is_empty() || b.is_empty() {
        return Ok(true);
    }
    let (a_min, a_max) = bounds(a)?;
    let (b_min, b_max) = bounds(b)?;
    Ok(a_max < b_min || b_max < a_min)
}

/// Adding-machine base data: d₀ = 1, d_n ≥ 2, with moduli D_n = d₁⋯d_n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OdometerSpec {
    pub d: Vec<i64>,
}

impl OdometerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d.first() != Some(&1) || self.d.len() < 2 || self.d[1..].iter().any(|&x| x < 2) {
            return Err(CfError::PreconditionError(
                "odometer bases must start with 1 and continue with values >= 2".into(),
            ));
        }
        Ok(())
    }

    /// D_n = d₁⋯d_n (n = 0 gives 1). Errors past the stored list.
    pub fn modulus(&self, n: usize) -> Result<i64> {
        if n >= self.d.len() {
            return Err(CfError::PreconditionError(format!(
                "modulus index {n} beyond the stored base list"
            )));
        }
        Ok(self.d[1..=n].iter().product())
    }

    pub fn sequence(&self) -> Result<CfSequence> {
        self.validate()?;
        CfSequence::odometer(&self.d)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OdometerBlockDefect {
    pub n: usize,
    pub from: usize,
    pub to: usize,
    pub modulus: i64,
    /// share of block elements not divisible by the modulus
    #[serde(with = "ratio_serde")]
    pub raw: BigRational,
    /// the same share at the best recentering residue
    #[serde(with = "ratio_serde")]
    pub best: BigRational,
    pub best_residue: i64,
}

fn block_defect_mod(block: &FiniteSubset, modulus: i64) -> Result<(BigRational, BigRational, i64)> {
    if modulus <= 0 {
        return Err(CfError::PreconditionError("modulus must be positive".into()));
    }
    let mut counts = vec![0usize; modulus as usize];
    for e in block.iter() {
        let v = e.as_int()?;
        counts[(v.rem_euclid(modulus)) as usize] += 1;
    }
    let total = block.len();
    let raw = ratio(total - counts[0], total);
    let (best_residue, best_hits) = counts
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.cmp(b).then(j.cmp(i)))
        .map(|(i, &c)| (i as i64, c))
        .unwrap_or((0, 0));
    let best = ratio(total - best_hits, total);
    Ok((raw, best, best_residue))
}

/// Per-block divisibility defects of a sequence over ℤ against an
/// adding machine, along the given index list k₀ = 0 < k₁ < ⋯ : block
/// n is C_{k_n+1}⋯C_{k_{n+1}} read modulo D_n.
pub fn odometer_defects(
    t: &SeqRef,
    odo: &OdometerSpec,
    k: &[usize],
) -> Result<Vec<OdometerBlockDefect>> {
    if t.group().descriptor() != &GroupDescriptor::IntegerLine {
        return Err(CfError::PreconditionError(
            "odometer factors are evaluated over the integers".into(),
        ));
    }
    odo.validate()?;
    if k.first() != Some(&0) || k.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CfError::PreconditionError(
            "index list must start at 0 and strictly increase".into(),
        ));
    }
    if *k.last().unwrap() > t.levels() {
        return Err(CfError::PreconditionError("index beyond the stored prefix".into()));
    }
    let mut out = Vec::new();
    for n in 0..k.len() - 1 {
        let block = t.product_block(k[n], k[n + 1])?;
        let modulus = odo.modulus(n)?;
        let (raw, best, best_residue) = block_defect_mod(&block, modulus)?;
        out.push(OdometerBlockDefect {
            n,
            from: k[n],
            to: k[n + 1],
            modulus,
            raw,
            best,
            best_residue,
        });
    }
    Ok(out)
}

/// Greedy search for telescoping indices whose block defects stay under the
/// thresholds: at each step take the smallest next index whose best-residue
/// defect fits. `None` means the greedy got stuck inside the prefix.
pub fn search_odometer_telescoping(
    t: &SeqRef,
    odo: &OdometerSpec,
    thresholds: &[BigRational],
) -> Result<Option<Vec<usize>>> {
    if t.group().descriptor() != &GroupDescriptor::IntegerLine {
        return Err(CfError::PreconditionError(
            "odometer factors are evaluated over the integers".into(),
        ));
    }
    odo.validate()?;
    let mut k = vec![0usize];
    let mut n = 0usize;
    loop {
        let from = *k.last().unwrap();
        if from == t.levels() {
            return Ok(Some(k)); // prefix exhausted
        }
        let Ok(modulus) = odo.modulus(n) else {
            return Ok(Some(k)); // base list exhausted
        };
        let threshold = thresholds
            .get(n)
            .cloned()
            .unwrap_or_else(|| thresholds.last().cloned().unwrap_or_else(|| ratio(1, 1)));
        let mut chosen = None;
        for to in (from + 1)..=t.levels() {
            let block = t.product_block(from, to)?;
            let (_raw, best, _res) = block_defect_mod(&block, modulus)?;
            if best <= threshold {
                chosen = Some(to);
                break;
            }
        }
        match chosen {
            Some(to) => {
                k.push(to);
                n += 1;
            }
            None => return Ok(None),
        }
    }
}

/// Topological factor check: telescope the extension along k,
/// run the quotient conditions, and materialize the factor map on success.
pub fn check_topological_quotient(
    t: &SeqRef,
    tt: &SeqRef,
    k: &[usize],
    a: &[FiniteSubset],
) -> Result<(QuotientReport, Option<PointMap>)> {
    let (t_k, iota_k) = telescope(t, k)?;
    let levels = t_k.levels();
    if tt.levels() < levels {
        return Err(CfError::PreconditionError(
            "factor prefix shorter than the telescoped extension".into(),
        ));
    }
    let tt_prefix: Vec<usize> = (0..=levels).collect();
    let (tt_trunc, _) = telescope_relaxed(tt, &tt_prefix)?;
    let report = quotient_check(&t_k, &tt_trunc, a)?;
    if !report.pass {
        return Ok((report, None));
    }
    let q = crate::maps::quotient_map(&t_k, &tt_trunc, a)?;
    let map = compose(vec![iota_k, q])?;
    Ok((report, Some(map)))
}

/// Triadic-style rank-one prefix C_{n+1} = {0, 3ⁿ, 2·3ⁿ}: coincides with
/// the base-3 adding machine. Handy in tests and examples.
pub fn triadic_rank_one(levels: usize) -> Result<SeqRef> {
    let mut d = vec![1i64];
    d.extend(std::iter::repeat_n(3, levels));
    Ok(Arc::new(CfSequence::odometer(&d)?))
}
