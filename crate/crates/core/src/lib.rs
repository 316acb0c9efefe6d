//! Differential testing for graph database engines.
//!
//! The pipeline has three stages:
//!
//! 1. generate a random labeled property graph ([`gen`]) and load it into every engine,
//! 2. ask a query generator (a chat-completion service, or recorded fixtures) for queries
//!    written against that graph ([`prompt`], [`querygen`]),
//! 3. filter the queries ([`lint`]), run them on a pair of engines ([`adapter`]), normalize
//!    the engine-styled output ([`normalize`]) and compare it at the level of meaning
//!    ([`compare`]).
//!
//! [`campaign`] wires the stages together. An embedded reference engine ([`engine`]) with a
//! catalog of ten switchable wrong-result faults makes the whole pipeline testable without
//! external databases.

pub mod adapter;
pub mod campaign;
pub mod compare;
pub mod engine;
pub mod gen;
pub mod inject;
pub mod ir;
pub mod lint;
pub mod model;
pub mod normalize;
pub mod prompt;
pub mod querygen;
pub mod value;

pub use compare::{compare_results, Verdict};
pub use engine::{FaultSet, Store};
pub use model::{Dialect, Edge, GraphSchema, LabeledPropertyGraph, Node, PropertyValue};
pub use value::{CanonicalValue, RecordSet};
