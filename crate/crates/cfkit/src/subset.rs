//! Canonically ordered finite subsets of a group. These carry the tower
//! shapes and the block sets of a parameter sequence, so the set algebra
//! here (products, translates, symmetric differences) is what every other
//! module is built on.

use std::fmt;

use crate::error::{CfError, Result};
use crate::group::{Group, GroupElement};

/// A finite subset of a group, stored sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FiniteSubset {
    group: Group,
    elems: Vec<GroupElement>,
}

impl FiniteSubset {
    /// Builds a subset from arbitrary elements, canonicalizing order and
    /// dropping duplicates. All elements must share the group.
    pub fn new(group: Group, mut elems: Vec<GroupElement>) -> Result<Self> {
        for e in &elems {
            if e.group() != &group {
                return Err(CfError::DomainError(
                    "subset element from a different group".into(),
                ));
            }
        }
        elems.sort();
        elems.dedup();
        Ok(FiniteSubset { group, elems })
    }

    pub fn empty(group: Group) -> Self {
        FiniteSubset {
            group,
            elems: Vec::new(),
        }
    }

    pub fn singleton(e: GroupElement) -> Self {
        FiniteSubset {
            group: e.group().clone(),
            elems: vec![e],
        }
    }

    /// Subset of ℤ from raw integers.
    pub fn ints(group: &Group, ns: &[i64]) -> Result<Self> {
        let elems = ns
            .iter()
            .map(|&n| group.int(n))
            .collect::<Result<Vec<_>>>()?;
        FiniteSubset::new(group.clone(), elems)
    }

    /// The interval {0, 1, ..., len-1} in ℤ.
    pub fn int_range(group: &Group, len: i64) -> Result<Self> {
        FiniteSubset::ints(group, &(0..len).collect::<Vec<_>>())
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroupElement> {
        self.elems.iter()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elems
    }

    pub fn contains(&self, e: &GroupElement) -> bool {
        self.elems.binary_search(e).is_ok()
    }

    pub fn min(&self) -> Option<&GroupElement> {
        self.elems.first()
    }

    pub fn insert(&mut self, e: GroupElement) -> Result<()> {
        if e.group() != &self.group {
            return Err(CfError::DomainError(
                "subset element from a different group".into(),
            ));
        }
        if let Err(pos) = self.elems.binary_search(&e) {
            self.elems.insert(pos, e);
        }
        Ok(())
    }

    fn same_group(&self, other: &FiniteSubset) -> Result<()> {
        if self.group != other.group {
            return Err(CfError::DomainError("subsets of different groups".into()));
        }
        Ok(())
    }

    /// Elementwise product {a·b : a ∈ self, b ∈ other}.
    pub fn product(&self, other: &FiniteSubset) -> Result<FiniteSubset> {
        self.same_group(other)?;
        let mut out = Vec::with_capacity(self.len() * other.len());
        for a in &self.elems {
            for b in &other.elems {
                out.push(a.mul(b)?);
            }
        }
        FiniteSubset::new(self.group.clone(), out)
    }

    /// Left translate g·self.
    pub fn translate_left(&self, g: &GroupElement) -> Result<FiniteSubset> {
        let elems = self
            .elems
            .iter()
            .map(|e| g.mul(e))
            .collect::<Result<Vec<_>>>()?;
        FiniteSubset::new(self.group.clone(), elems)
    }

    /// Right translate self·g.
    pub fn translate_right(&self, g: &GroupElement) -> Result<FiniteSubset> {
        let elems = self
            .elems
            .iter()
            .map(|e| e.mul(g))
            .collect::<Result<Vec<_>>>()?;
        FiniteSubset::new(self.group.clone(), elems)
    }

    /// {a⁻¹ : a ∈ self}.
    pub fn inverses(&self) -> FiniteSubset {
        let mut elems: Vec<_> = self.elems.iter().map(|e| e.inv()).collect();
        elems.sort();
        FiniteSubset {
            group: self.group.clone(),
            elems,
        }
    }

    pub fn is_subset_of(&self, other: &FiniteSubset) -> bool {
        self.elems.iter().all(|e| other.contains(e))
    }

    pub fn intersection(&self, other: &FiniteSubset) -> FiniteSubset {
        let elems = self
            .elems
            .iter()
            .filter(|e| other.contains(e))
            .cloned()
            .collect();
        FiniteSubset {
            group: self.group.clone(),
            elems,
        }
    }

    pub fn union(&self, other: &FiniteSubset) -> Result<FiniteSubset> {
        self.same_group(other)?;
        let mut elems = self.elems.clone();
        elems.extend_from_slice(&other.elems);
        FiniteSubset::new(self.group.clone(), elems)
    }

    pub fn difference(&self, other: &FiniteSubset) -> FiniteSubset {
        let elems = self
            .elems
            .iter()
            .filter(|e| !other.contains(e))
            .cloned()
            .collect();
        FiniteSubset {
            group: self.group.clone(),
            elems,
        }
    }

    pub fn symmetric_difference(&self, other: &FiniteSubset) -> FiniteSubset {
        let mut elems: Vec<_> = self
            .elems
            .iter()
            .filter(|e| !other.contains(e))
            .cloned()
            .collect();
        elems.extend(other.elems.iter().filter(|e| !self.contains(e)).cloned());
        elems.sort();
        FiniteSubset {
            group: self.group.clone(),
            elems,
        }
    }

    pub fn is_disjoint(&self, other: &FiniteSubset) -> bool {
        // Merge-walk over the two sorted lists.
        let (mut i, mut j) = (0, 0);
        while i < self.elems.len() && j < other.elems.len() {
            match self.elems[i].cmp(&other.elems[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    /// Whether (a, b) ↦ a·b is one-to-one on self × other.
    pub fn product_injective(&self, other: &FiniteSubset) -> Result<bool> {
        Ok(self.product(other)?.len() == self.len() * other.len())
    }

    /// Encode as the canonical list of element strings.
    pub fn to_strings(&self) -> Vec<String> {
        self.elems.iter().map(|e| e.to_string()).collect()
    }

    /// Decode from element strings; the list must already be canonical
    /// (sorted, duplicate-free) so that files round-trip bit exactly.
    pub fn parse_canonical(group: &Group, texts: &[String]) -> Result<FiniteSubset> {
        let elems = texts
            .iter()
            .map(|t| group.parse(t))
            .collect::<Result<Vec<_>>>()?;
        let set = FiniteSubset::new(group.clone(), elems.clone())?;
        if set.elements() != elems.as_slice() {
            return Err(CfError::ParseError(
                "subset element list is not in canonical order".into(),
            ));
        }
        Ok(set)
    }
}

impl fmt::Display for FiniteSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.elems.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zset(ns: &[i64]) -> FiniteSubset {
        FiniteSubset::ints(&Group::integers(), ns).unwrap()
    }

    #[test]
    fn canonicalization() {
        let s = zset(&[3, 1, 1, 2]);
        assert_eq!(s.to_strings(), vec!["1", "2", "3"]);
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn product_and_translates() {
        let a = zset(&[0, 1]);
        let b = zset(&[0, 2]);
        assert_eq!(a.product(&b).unwrap(), zset(&[0, 1, 2, 3]));
        assert!(a.product_injective(&b).unwrap());
        let c = zset(&[0, 1, 2]);
        // 0+1 = 1+0 collides
        assert!(!zset(&[0, 1]).product_injective(&c).unwrap());
        let g = Group::integers().int(5).unwrap();
        assert_eq!(a.translate_left(&g).unwrap(), zset(&[5, 6]));
    }

    #[test]
    fn set_algebra() {
        let a = zset(&[0, 1, 2, 3]);
        let b = zset(&[0, 1, 2, 4]);
        assert_eq!(a.symmetric_difference(&b), zset(&[3, 4]));
        assert_eq!(a.intersection(&b), zset(&[0, 1, 2]));
        assert!(!a.is_disjoint(&b));
        assert!(zset(&[0]).is_disjoint(&zset(&[1])));
        assert!(zset(&[1, 2]).is_subset_of(&a));
    }

    #[test]
    fn canonical_parse_rejects_disorder() {
        let g = Group::integers();
        assert!(FiniteSubset::parse_canonical(
            &g,
            &["2".to_string(), "1".to_string()]
        )
        .is_err());
        assert!(FiniteSubset::parse_canonical(
            &g,
            &["1".to_string(), "2".to_string()]
        )
        .is_ok());
    }
}
