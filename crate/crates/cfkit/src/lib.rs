//! Exact combinatorics for parameter sequences of rank-one group actions.
//!
//! The crate represents finite prefixes of cutting-and-stacking parameter
//! sequences over concrete countable groups (the integers, integer
//! lattices, free groups, and their finite direct products), applies the
//! elementary isomorphisms between them — calibration, telescoping,
//! reduction, chain equivalence — and the quotient map, and checks or
//! searches the finite witness data that certifies isomorphism or factor
//! relations. Everything is exact integer and rational arithmetic; every
//! "for all levels" statement is evaluated on the stored prefix and
//! reported level by level.
//!
//! The map machinery evaluates on [`Cylinder`]s (a level plus a subset of
//! its tower shape), which is the exact finite shadow of each elementary
//! map; [`DepthPoint`]s provide the point-level view with explicit partial
//! definedness.
//!
//! Start with [`CfSequence`] and the runnable programs under `examples/`;
//! the `cfkit` binary exposes the same operations on JSON files.

pub mod cli;
pub mod error;
pub mod factor;
pub mod group;
pub mod iso;
pub mod maps;
pub mod report;
pub mod seq;
pub mod space;
pub mod subset;

pub use error::{CfError, Result};
pub use factor::{FactorWitness, OdometerSpec};
pub use group::{Group, GroupDescriptor, GroupElement};
pub use iso::IsoWitness;
pub use maps::{CylinderMap, PointMap};
pub use seq::{CfSequence, SequenceDoc, ValidationReport};
pub use space::{Cylinder, DepthPoint, SeqRef};
pub use subset::FiniteSubset;
