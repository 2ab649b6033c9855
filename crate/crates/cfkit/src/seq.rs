//! Parameter sequences for the cutting-and-stacking construction: a finite
//! prefix (C₁…C_N, F₀…F_N) of subsets of a group, validation of the
//! structural conditions, exact mass bookkeeping, and the named constructors
//! (classical cutting-and-stacking over ℤ, odometers, shifted families).
//!
//! Sequences here are honest finite prefixes. Every "for all levels"
//! condition is checked on the stored prefix and reported level by level;
//! nothing is extrapolated.

use num::{BigRational, One};
use serde::{Deserialize, Serialize};

use crate::error::{CfError, Result};
use crate::group::{Group, GroupDescriptor};
use crate::report::{ratio, ratio_vec_serde};
use crate::subset::FiniteSubset;

/// A validated-shape prefix of a parameter sequence: F-levels F₀…F_N and
/// block sets C₁…C_N. Construction checks lengths and group consistency
/// only; the structural conditions live in [`CfSequence::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfSequence {
    group: Group,
    f: Vec<FiniteSubset>,
    c: Vec<FiniteSubset>,
}

impl CfSequence {
    pub fn new(group: Group, f: Vec<FiniteSubset>, c: Vec<FiniteSubset>) -> Result<Self> {
        if f.is_empty() || f.len() != c.len() + 1 {
            return Err(CfError::PreconditionError(format!(
                "need one more F-level than C-levels, got {} F and {} C",
                f.len(),
                c.len()
            )));
        }
        for s in f.iter().chain(c.iter()) {
            if s.group() != &group {
                return Err(CfError::DomainError(
                    "sequence subset over a different group".into(),
                ));
            }
        }
        Ok(CfSequence { group, f, c })
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    /// Number of C-levels, i.e. the N in F₀…F_N.
    pub fn levels(&self) -> usize {
        self.c.len()
    }

    /// F_n for 0 ≤ n ≤ levels().
    pub fn f(&self, n: usize) -> &FiniteSubset {
        &self.f[n]
    }

    /// C_n for 1 ≤ n ≤ levels().
    pub fn c(&self, n: usize) -> &FiniteSubset {
        &self.c[n - 1]
    }

    pub fn f_levels(&self) -> &[FiniteSubset] {
        &self.f
    }

    pub fn c_levels(&self) -> &[FiniteSubset] {
        &self.c
    }

    /// Checks the structural conditions level by level. Violations are
    /// report content, not errors.
    pub fn validate(&self) -> ValidationReport {
        let f0_singleton = self.f[0].len() == 1;
        let mut levels = Vec::with_capacity(self.levels());
        for n in 1..=self.levels() {
            let c_n = self.c(n);
            let f_prev = self.f(n - 1);
            let f_n = self.f(n);

            let c_size_ok = c_n.len() > 1;

            let mut inclusion_ok = true;
            let mut disjoint_ok = true;
            let mut detail = None;

            // Translates F_{n-1}·c for c in C_n: inclusion in F_n and
            // pairwise disjointness.
            let mut translates: Vec<(String, FiniteSubset)> = Vec::with_capacity(c_n.len());
            for c in c_n.iter() {
                match f_prev.translate_right(c) {
                    Ok(t) => {
                        if !t.is_subset_of(f_n) {
                            inclusion_ok = false;
                            detail.get_or_insert_with(|| {
                                format!("level {n}: F_{}·{c} is not inside F_{n}", n - 1)
                            });
                        }
                        translates.push((c.to_string(), t));
                    }
                    Err(e) => {
                        inclusion_ok = false;
                        detail.get_or_insert_with(|| format!("level {n}: {e}"));
                    }
                }
            }
            'outer: for i in 0..translates.len() {
                for j in (i + 1)..translates.len() {
                    if !translates[i].1.is_disjoint(&translates[j].1) {
                        disjoint_ok = false;
                        detail.get_or_insert_with(|| {
                            format!(
                                "level {n}: translates F_{}·{} and F_{}·{} intersect",
                                n - 1,
                                translates[i].0,
                                n - 1,
                                translates[j].0
                            )
                        });
                        break 'outer;
                    }
                }
            }

            levels.push(LevelCheck {
                level: n,
                c_size_ok,
                inclusion_ok,
                disjoint_ok,
                detail,
            });
        }

        let identity = self.group.identity();
        let identity_in_f = self.f.iter().map(|s| s.contains(&identity)).collect();
        let identity_in_c = self.c.iter().map(|s| s.contains(&identity)).collect();

        let levels_consistent = levels.iter().all(|l| l.inclusion_ok && l.disjoint_ok);
        let structurally_valid = f0_singleton && levels_consistent;
        let accepted = structurally_valid && levels.iter().all(|l| l.c_size_ok);

        ValidationReport {
            f0_singleton,
            levels,
            identity_in_f,
            identity_in_c,
            mass_profile: self.mass_profile_unchecked(),
            levels_consistent,
            structurally_valid,
            accepted,
        }
    }

    /// True when inclusion, disjointness and the singleton base hold. Levels
    /// with a one-element block set are degenerate but consistent (they
    /// re-embed the same tower), so measure computations accept them.
    pub fn is_structurally_valid(&self) -> bool {
        self.validate().structurally_valid
    }

    fn ensure_structural(&self) -> Result<()> {
        let report = self.validate();
        if report.levels_consistent {
            Ok(())
        } else {
            let clause = report
                .first_failure()
                .unwrap_or_else(|| "unknown clause".into());
            Err(CfError::ValidationError(clause))
        }
    }

    fn mass_profile_unchecked(&self) -> Vec<BigRational> {
        let mut out = Vec::with_capacity(self.f.len());
        let mut denom = BigRational::one();
        out.push(ratio(self.f[0].len(), 1));
        for n in 1..=self.levels() {
            denom *= ratio(self.c(n).len(), 1);
            out.push(ratio(self.f(n).len(), 1) / &denom);
        }
        out
    }

    /// Exact level masses (#F_n / ∏_{k≤n} #C_k). The caller inspects
    /// boundedness of the tail as the finite proxy for a finite invariant
    /// measure.
    pub fn mass_profile(&self) -> Result<Vec<BigRational>> {
        self.ensure_structural()?;
        Ok(self.mass_profile_unchecked())
    }

    /// The product block C_{n+1}·C_{n+2}⋯C_m. For n == m this is the
    /// singleton {identity}. Disjointness of translates makes the product
    /// map injective, so the cardinality must be the product of the block
    /// cardinalities; a mismatch means the sequence is invalid.
    pub fn product_block(&self, n: usize, m: usize) -> Result<FiniteSubset> {
        if n > m || m > self.levels() {
            return Err(CfError::PreconditionError(format!(
                "product block ({n},{m}] out of range for {} levels",
                self.levels()
            )));
        }
        let mut block = FiniteSubset::singleton(self.group.identity());
        let mut expected = 1usize;
        for k in (n + 1)..=m {
            block = block.product(self.c(k))?;
            expected *= self.c(k).len();
        }
        if block.len() != expected {
            return Err(CfError::InvariantViolation(format!(
                "block C_{}..C_{} has {} elements, expected {} — sequence violates disjointness",
                n + 1,
                m,
                block.len(),
                expected
            )));
        }
        Ok(block)
    }

    /// Whether the identity belongs to every C_k for `from < k ≤ to`. This
    /// is what lets a point deepen along the trivial tail. On failure the
    /// offending level is returned.
    pub fn identity_tail_available(&self, from: usize, to: usize) -> std::result::Result<(), usize> {
        let identity = self.group.identity();
        for k in (from + 1)..=to {
            if !self.c(k).contains(&identity) {
                return Err(k);
            }
        }
        Ok(())
    }

    // -- constructors ------------------------------------------------------

    /// Classical cutting-and-stacking over ℤ: towers of heights h₁, h₂, …
    /// with `cuts[n]` columns and `spacers[n](i)` spacers on column i.
    /// The output starts with a priming level C₁ = F₁ = {0…h₁−1}; for
    /// h₁ = 1 that level is degenerate (one-element block set) and is
    /// reported as such by `validate`.
    pub fn from_cutting_stacking(
        cuts: &[u32],
        spacers: &[Vec<u64>],
        h1: i64,
    ) -> Result<CfSequence> {
        if cuts.len() != spacers.len() {
            return Err(CfError::PreconditionError(
                "cuts and spacer maps must have the same length".into(),
            ));
        }
        if h1 < 1 {
            return Err(CfError::PreconditionError("h1 must be positive".into()));
        }
        for (r, s) in cuts.iter().zip(spacers) {
            if *r < 2 {
                return Err(CfError::PreconditionError("every cut must be >= 2".into()));
            }
            if s.len() != *r as usize {
                return Err(CfError::PreconditionError(
                    "spacer map length must equal its cut".into(),
                ));
            }
        }

        let z = Group::integers();
        let mut f = vec![FiniteSubset::int_range(&z, 1)?];
        let mut c = Vec::with_capacity(cuts.len() + 1);

        let mut h = h1;
        f.push(FiniteSubset::int_range(&z, h)?);
        c.push(FiniteSubset::int_range(&z, h)?); // priming level C₁ = F₁

        for (&r, s) in cuts.iter().zip(spacers) {
            let mut cs = Vec::with_capacity(r as usize);
            let mut offset = 0i64;
            for (i, spacer) in s.iter().enumerate() {
                cs.push(i as i64 * h + offset);
                offset += *spacer as i64;
            }
            let next_h = r as i64 * h + s.iter().map(|&x| x as i64).sum::<i64>();
            c.push(FiniteSubset::ints(&z, &cs)?);
            h = next_h;
            f.push(FiniteSubset::int_range(&z, h)?);
        }

        CfSequence::new(z, f, c)
    }

    /// The adding-machine sequence for bases d = (1, d₁, d₂, …):
    /// F̃_n = {0 … d₀⋯d_n − 1} and C̃_{n+1} = {d₀⋯d_n · j : 0 ≤ j < d_{n+1}}.
    pub fn odometer(d: &[i64]) -> Result<CfSequence> {
        if d.is_empty() || d[0] != 1 {
            return Err(CfError::PreconditionError("base list must start with 1".into()));
        }
        if d.len() < 2 || d[1..].iter().any(|&x| x < 2) {
            return Err(CfError::PreconditionError(
                "every base after the first must be >= 2".into(),
            ));
        }
        let z = Group::integers();
        let mut f = Vec::with_capacity(d.len());
        let mut c = Vec::with_capacity(d.len() - 1);
        let mut modulus = 1i64;
        f.push(FiniteSubset::int_range(&z, 1)?);
        for &base in &d[1..] {
            let cs: Vec<i64> = (0..base).map(|j| modulus * j).collect();
            c.push(FiniteSubset::ints(&z, &cs)?);
            modulus *= base;
            f.push(FiniteSubset::int_range(&z, modulus)?);
        }
        CfSequence::new(z, f, c)
    }

    // -- file format -------------------------------------------------------

    pub fn to_doc(&self) -> SequenceDoc {
        SequenceDoc {
            group: self.group.descriptor().clone(),
            f: self.f.iter().map(|s| s.to_strings()).collect(),
            c: self.c.iter().map(|s| s.to_strings()).collect(),
        }
    }

    pub fn from_doc(doc: &SequenceDoc) -> Result<CfSequence> {
        let group = Group::new(doc.group.clone())?;
        let f = doc
            .f
            .iter()
            .map(|texts| FiniteSubset::parse_canonical(&group, texts))
            .collect::<Result<Vec<_>>>()?;
        let c = doc
            .c
            .iter()
            .map(|texts| FiniteSubset::parse_canonical(&group, texts))
            .collect::<Result<Vec<_>>>()?;
        CfSequence::new(group, f, c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("sequence doc serializes")
    }

    pub fn from_json(text: &str) -> Result<CfSequence> {
        let doc: SequenceDoc = serde_json::from_str(text)?;
        CfSequence::from_doc(&doc)
    }
}

/// On-disk form of a sequence: element lists in canonical order, rejected
/// otherwise so files round-trip bit exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceDoc {
    pub group: GroupDescriptor,
    #[serde(rename = "F")]
    pub f: Vec<Vec<String>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<String>>,
}

/// One level's structural checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelCheck {
    pub level: usize,
    /// #C_n > 1
    pub c_size_ok: bool,
    /// F_{n-1}·C_n ⊆ F_n
    pub inclusion_ok: bool,
    /// translates F_{n-1}·c pairwise disjoint
    pub disjoint_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub f0_singleton: bool,
    pub levels: Vec<LevelCheck>,
    /// identity membership per F-level (normalization diagnostic; reported,
    /// not required — a calibration can always establish it)
    pub identity_in_f: Vec<bool>,
    /// identity membership per C-level
    pub identity_in_c: Vec<bool>,
    #[serde(with = "ratio_vec_serde")]
    pub mass_profile: Vec<BigRational>,
    /// inclusion + disjointness at every level (the measure arithmetic is
    /// meaningful exactly when this holds)
    pub levels_consistent: bool,
    /// levels consistent and the base level is a singleton
    pub structurally_valid: bool,
    /// structurally valid and every block set has more than one element
    pub accepted: bool,
}

impl ValidationReport {
    pub fn first_failure(&self) -> Option<String> {
        if !self.f0_singleton {
            return Some("F_0 is not a singleton".into());
        }
        for l in &self.levels {
            if !l.inclusion_ok {
                return Some(
                    l.detail
                        .clone()
                        .unwrap_or_else(|| format!("level {}: inclusion fails", l.level)),
                );
            }
            if !l.disjoint_ok {
                return Some(
                    l.detail
                        .clone()
                        .unwrap_or_else(|| format!("level {}: disjointness fails", l.level)),
                );
            }
        }
        for l in &self.levels {
            if !l.c_size_ok {
                return Some(format!("level {}: block set has fewer than 2 elements", l.level));
            }
        }
        None
    }
}

/// Overlap diagnostics for a shifted family over ℤ: how much each block set
/// survives a shift by β_n, and each tower shape a shift by the partial sum
/// α_n = β₁+⋯+β_n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShiftFamilyReport {
    pub beta: Vec<i64>,
    pub alpha: Vec<i64>,
    #[serde(with = "ratio_vec_serde")]
    pub c_overlap: Vec<BigRational>,
    #[serde(with = "ratio_vec_serde")]
    pub f_overlap: Vec<BigRational>,
}

/// Exact overlap ratios #((C_n+β_n)∩C_n)/#C_n and #((F_n+α_n)∩F_n)/#F_n
/// for a sequence over ℤ. The sequence itself is left untouched.
pub fn shift_family_report(seq: &CfSequence, beta: &[i64]) -> Result<ShiftFamilyReport> {
    if seq.group().descriptor() != &GroupDescriptor::IntegerLine {
        return Err(CfError::PreconditionError(
            "shift families are defined over the integers".into(),
        ));
    }
    if beta.len() != seq.levels() {
        return Err(CfError::PreconditionError(format!(
            "need one shift per level: {} shifts for {} levels",
            beta.len(),
            seq.levels()
        )));
    }
    let z = seq.group().clone();
    let mut alpha = Vec::with_capacity(beta.len());
    let mut sum = 0i64;
    for &b in beta {
        sum += b;
        alpha.push(sum);
    }
    let mut c_overlap = Vec::with_capacity(beta.len());
    for (n, &b) in beta.iter().enumerate() {
        let c_n = seq.c(n + 1);
        let shifted = c_n.translate_left(&z.int(b)?)?;
        c_overlap.push(ratio(shifted.intersection(c_n).len(), c_n.len()));
    }
    let mut f_overlap = Vec::with_capacity(beta.len());
    for (n, &a) in alpha.iter().enumerate() {
        let f_n = seq.f(n + 1);
        let shifted = f_n.translate_left(&z.int(a)?)?;
        f_overlap.push(ratio(shifted.intersection(f_n).len(), f_n.len()));
    }
    Ok(ShiftFamilyReport {
        beta: beta.to_vec(),
        alpha,
        c_overlap,
        f_overlap,
    })
}

/// Shorthand used across tests and examples: the base-2 adding machine with
/// `levels` block sets.
pub fn dyadic_odometer(levels: usize) -> CfSequence {
    let mut d = vec![1i64];
    d.extend(std::iter::repeat_n(2, levels));
    CfSequence::odometer(&d).expect("dyadic odometer is well formed")
}
