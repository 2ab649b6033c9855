//! Exact arithmetic for the concrete countable discrete groups over which
//! the parameter sequences live: the integers, integer lattices, finitely
//! generated free groups, and finite direct products of those.
//!
//! Elements carry their group handle and are kept in canonical form (free
//! group words are always reduced), so equality of canonical forms is group
//! equality and the derived lexicographic order is a strict total order.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CfError, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupDescriptor {
    #[serde(rename = "int")]
    IntegerLine,
    #[serde(rename = "lattice")]
    IntegerLattice { rank: usize },
    #[serde(rename = "free")]
    FreeGroup { rank: usize },
    #[serde(rename = "product")]
    DirectProduct { components: Vec<GroupDescriptor> },
}

impl GroupDescriptor {
    pub fn validate(&self) -> Result<()> {
        match self {
            GroupDescriptor::IntegerLine => Ok(()),
            GroupDescriptor::IntegerLattice { rank } | GroupDescriptor::FreeGroup { rank } => {
                if *rank >= 1 {
                    Ok(())
                } else {
                    Err(CfError::PreconditionError("rank must be >= 1".into()))
                }
            }
            GroupDescriptor::DirectProduct { components } => {
                if components.len() < 2 {
                    return Err(CfError::PreconditionError(
                        "direct product needs at least 2 components".into(),
                    ));
                }
                components.iter().try_for_each(|c| c.validate())
            }
        }
    }
}

/// Cheap-to-clone handle on a group descriptor. Elements and subsets carry
/// one of these so that mismatches can be detected.
#[derive(Debug, Clone)]
pub struct Group(Arc<GroupDescriptor>);

impl Group {
    pub fn new(descriptor: GroupDescriptor) -> Result<Self> {
        descriptor.validate()?;
        Ok(Group(Arc::new(descriptor)))
    }

    pub fn integers() -> Self {
        Group(Arc::new(GroupDescriptor::IntegerLine))
    }

    pub fn lattice(rank: usize) -> Result<Self> {
        Group::new(GroupDescriptor::IntegerLattice { rank })
    }

    pub fn free(rank: usize) -> Result<Self> {
        Group::new(GroupDescriptor::FreeGroup { rank })
    }

    pub fn product(components: Vec<GroupDescriptor>) -> Result<Self> {
        Group::new(GroupDescriptor::DirectProduct { components })
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.0
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            group: self.clone(),
            value: identity_value(self.descriptor()),
        }
    }

    /// Integer element of ℤ. Errors on any other group.
    pub fn int(&self, n: i64) -> Result<GroupElement> {
        match self.descriptor() {
            GroupDescriptor::IntegerLine => Ok(GroupElement {
                group: self.clone(),
                value: Value::Int(n),
            }),
            _ => Err(CfError::DomainError("int element on a non-integer group".into())),
        }
    }

    pub fn vector(&self, v: Vec<i64>) -> Result<GroupElement> {
        match self.descriptor() {
            GroupDescriptor::IntegerLattice { rank } if *rank == v.len() => Ok(GroupElement {
                group: self.clone(),
                value: Value::Vector(v),
            }),
            GroupDescriptor::IntegerLattice { rank } => Err(CfError::DomainError(format!(
                "vector length {} does not match lattice rank {rank}",
                v.len()
            ))),
            _ => Err(CfError::DomainError("vector element on a non-lattice group".into())),
        }
    }

    /// Free-group word from signed generator indices: `+i` is the i-th
    /// generator (1-based), `-i` its inverse. The word is reduced here.
    pub fn word(&self, letters: &[i32]) -> Result<GroupElement> {
        match self.descriptor() {
            GroupDescriptor::FreeGroup { rank } => {
                for &l in letters {
                    if l == 0 || l.unsigned_abs() as usize > *rank {
                        return Err(CfError::DomainError(format!(
                            "letter {l} out of range for free group of rank {rank}"
                        )));
                    }
                }
                Ok(GroupElement {
                    group: self.clone(),
                    value: Value::Word(reduce_word(letters)),
                })
            }
            _ => Err(CfError::DomainError("word element on a non-free group".into())),
        }
    }

    pub fn tuple(&self, parts: Vec<GroupElement>) -> Result<GroupElement> {
        match self.descriptor() {
            GroupDescriptor::DirectProduct { components } => {
                if components.len() != parts.len() {
                    return Err(CfError::DomainError(format!(
                        "tuple arity {} does not match product arity {}",
                        parts.len(),
                        components.len()
                    )));
                }
                for (c, p) in components.iter().zip(&parts) {
                    if c != p.group.descriptor() {
                        return Err(CfError::DomainError(
                            "tuple component group mismatch".into(),
                        ));
                    }
                }
                Ok(GroupElement {
                    group: self.clone(),
                    value: Value::Tuple(parts.into_iter().map(|p| p.value).collect()),
                })
            }
            _ => Err(CfError::DomainError("tuple element on a non-product group".into())),
        }
    }

    /// Decode the text encoding of an element of this group.
    pub fn parse(&self, text: &str) -> Result<GroupElement> {
        let value = parse_value(self.descriptor(), text)?;
        Ok(GroupElement {
            group: self.clone(),
            value,
        })
    }
}

impl PartialEq for Group {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}
impl Eq for Group {}

impl PartialOrd for Group {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Group {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            Ordering::Equal
        } else {
            self.0.cmp(&other.0)
        }
    }
}

/// Canonical form of an element, without the group tag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Vector(Vec<i64>),
    /// Reduced word; `+i` = generator i (1-based), `-i` = its inverse.
    Word(Vec<i32>),
    Tuple(Vec<Value>),
}

fn identity_value(d: &GroupDescriptor) -> Value {
    match d {
        GroupDescriptor::IntegerLine => Value::Int(0),
        GroupDescriptor::IntegerLattice { rank } => Value::Vector(vec![0; *rank]),
        GroupDescriptor::FreeGroup { .. } => Value::Word(Vec::new()),
        GroupDescriptor::DirectProduct { components } => {
            Value::Tuple(components.iter().map(identity_value).collect())
        }
    }
}

fn reduce_word(letters: &[i32]) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::with_capacity(letters.len());
    for &l in letters {
        if let Some(&last) = out.last() {
            if last + l == 0 {
                out.pop();
                continue;
            }
        }
        out.push(l);
    }
    out
}

fn mul_values(d: &GroupDescriptor, a: &Value, b: &Value) -> Value {
    match (d, a, b) {
        (GroupDescriptor::IntegerLine, Value::Int(x), Value::Int(y)) => Value::Int(x + y),
        (GroupDescriptor::IntegerLattice { .. }, Value::Vector(x), Value::Vector(y)) => {
            Value::Vector(x.iter().zip(y).map(|(p, q)| p + q).collect())
        }
        (GroupDescriptor::FreeGroup { .. }, Value::Word(x), Value::Word(y)) => {
            let mut joined = x.clone();
            joined.extend_from_slice(y);
            Value::Word(reduce_word(&joined))
        }
        (GroupDescriptor::DirectProduct { components }, Value::Tuple(x), Value::Tuple(y)) => {
            Value::Tuple(
                components
                    .iter()
                    .zip(x.iter().zip(y))
                    .map(|(c, (p, q))| mul_values(c, p, q))
                    .collect(),
            )
        }
        _ => unreachable!("element value inconsistent with its descriptor"),
    }
}

fn inv_value(d: &GroupDescriptor, a: &Value) -> Value {
    match (d, a) {
        (GroupDescriptor::IntegerLine, Value::Int(x)) => Value::Int(-x),
        (GroupDescriptor::IntegerLattice { .. }, Value::Vector(x)) => {
            Value::Vector(x.iter().map(|p| -p).collect())
        }
        (GroupDescriptor::FreeGroup { .. }, Value::Word(x)) => {
            Value::Word(x.iter().rev().map(|l| -l).collect())
        }
        (GroupDescriptor::DirectProduct { components }, Value::Tuple(x)) => Value::Tuple(
            components
                .iter()
                .zip(x)
                .map(|(c, p)| inv_value(c, p))
                .collect(),
        ),
        _ => unreachable!("element value inconsistent with its descriptor"),
    }
}

/// A group element in canonical form, tagged with its group.
#[derive(Debug, Clone)]
pub struct GroupElement {
    group: Group,
    value: Value,
}

impl GroupElement {
    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn value(&self) -> &Value {
        &self.value
    }

    pub fn is_identity(&self) -> bool {
        self.value == identity_value(self.group.descriptor())
    }

    pub fn mul(&self, other: &GroupElement) -> Result<GroupElement> {
        if self.group != other.group {
            return Err(CfError::DomainError(format!(
                "cannot multiply elements of different groups ({self} vs {other})"
            )));
        }
        Ok(GroupElement {
            group: self.group.clone(),
            value: mul_values(self.group.descriptor(), &self.value, &other.value),
        })
    }

    pub fn inv(&self) -> GroupElement {
        GroupElement {
            group: self.group.clone(),
            value: inv_value(self.group.descriptor(), &self.value),
        }
    }

    /// Integer payload for elements of ℤ.
    pub fn as_int(&self) -> Result<i64> {
        match &self.value {
            Value::Int(n) => Ok(*n),
            _ => Err(CfError::DomainError("element is not an integer".into())),
        }
    }
}

impl PartialEq for GroupElement {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group && self.value == other.value
    }
}
impl Eq for GroupElement {}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for GroupElement {
    fn cmp(&self, other: &Self) -> Ordering {
        self.group
            .cmp(&other.group)
            .then_with(|| self.value.cmp(&other.value))
    }
}

impl std::hash::Hash for GroupElement {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.value.hash(state);
    }
}

// ---------------------------------------------------------------------------
// Text encoding.
//
// Integers are decimal, lattice vectors are "(a,b,...)", free-group words are
// strings over a..z with capitals denoting inverses (empty string = identity),
// and direct-product tuples are "[x|y|...]". Round-trips are bit exact.
// ---------------------------------------------------------------------------

fn fmt_value(d: &GroupDescriptor, v: &Value, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match (d, v) {
        (GroupDescriptor::IntegerLine, Value::Int(n)) => write!(f, "{n}"),
        (GroupDescriptor::IntegerLattice { .. }, Value::Vector(xs)) => {
            write!(f, "(")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, ")")
        }
        (GroupDescriptor::FreeGroup { .. }, Value::Word(ls)) => {
            for &l in ls {
                let idx = (l.unsigned_abs() - 1) as u8;
                let ch = if l > 0 { b'a' + idx } else { b'A' + idx };
                write!(f, "{}", ch as char)?;
            }
            Ok(())
        }
        (GroupDescriptor::DirectProduct { components }, Value::Tuple(parts)) => {
            write!(f, "[")?;
            for (i, (c, p)) in components.iter().zip(parts).enumerate() {
                if i > 0 {
                    write!(f, "|")?;
                }
                fmt_value(c, p, f)?;
            }
            write!(f, "]")
        }
        _ => unreachable!("element value inconsistent with its descriptor"),
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_value(self.group.descriptor(), &self.value, f)
    }
}

fn parse_value(d: &GroupDescriptor, text: &str) -> Result<Value> {
    match d {
        GroupDescriptor::IntegerLine => text
            .parse::<i64>()
            .map(Value::Int)
            .map_err(|_| CfError::ParseError(format!("bad integer element {text:?}"))),
        GroupDescriptor::IntegerLattice { rank } => {
            let inner = text
                .strip_prefix('(')
                .and_then(|t| t.strip_suffix(')'))
                .ok_or_else(|| CfError::ParseError(format!("bad vector element {text:?}")))?;
            let parts: Vec<i64> = inner
                .split(',')
                .map(|p| {
                    p.parse::<i64>()
                        .map_err(|_| CfError::ParseError(format!("bad vector entry {p:?}")))
                })
                .collect::<Result<_>>()?;
            if parts.len() != *rank {
                return Err(CfError::ParseError(format!(
                    "vector {text:?} has {} entries, lattice rank is {rank}",
                    parts.len()
                )));
            }
            Ok(Value::Vector(parts))
        }
        GroupDescriptor::FreeGroup { rank } => {
            if *rank > 26 {
                return Err(CfError::ParseError(
                    "text encoding of free-group words supports rank <= 26".into(),
                ));
            }
            let mut letters = Vec::with_capacity(text.len());
            for ch in text.chars() {
                let l = match ch {
                    'a'..='z' => (ch as u8 - b'a') as i32 + 1,
                    'A'..='Z' => -((ch as u8 - b'A') as i32 + 1),
                    _ => {
                        return Err(CfError::ParseError(format!(
                            "bad letter {ch:?} in word {text:?}"
                        )))
                    }
                };
                if l.unsigned_abs() as usize > *rank {
                    return Err(CfError::ParseError(format!(
                        "letter {ch:?} exceeds free-group rank {rank}"
                    )));
                }
                letters.push(l);
            }
            let reduced = reduce_word(&letters);
            if reduced != letters {
                return Err(CfError::ParseError(format!(
                    "word {text:?} is not reduced"
                )));
            }
            Ok(Value::Word(letters))
        }
        GroupDescriptor::DirectProduct { components } => {
            let inner = text
                .strip_prefix('[')
                .and_then(|t| t.strip_suffix(']'))
                .ok_or_else(|| CfError::ParseError(format!("bad tuple element {text:?}")))?;
            let parts = split_tuple(inner);
            if parts.len() != components.len() {
                return Err(CfError::ParseError(format!(
                    "tuple {text:?} has {} components, product arity is {}",
                    parts.len(),
                    components.len()
                )));
            }
            let values = components
                .iter()
                .zip(parts)
                .map(|(c, p)| parse_value(c, p))
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::Tuple(values))
        }
    }
}

/// Split a tuple body on '|' at bracket depth zero, so nested products work.
fn split_tuple(inner: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, ch) in inner.char_indices() {
        match ch {
            '[' | '(' => depth += 1,
            ']' | ')' => depth = depth.saturating_sub(1),
            '|' if depth == 0 => {
                parts.push(&inner[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&inner[start..]);
    parts
}
