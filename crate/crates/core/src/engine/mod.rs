//! In-memory reference engine for the query subset, with ten switchable wrong-result faults.
//!
//! With every fault off the engine defines the expected semantics. Each fault swaps one rule
//! for a known-wrong one so the rest of the pipeline can be shown to catch it.

mod cypher;
mod gremlin;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ir::QueryIr;
use crate::model::{GraphSchema, LabeledPropertyGraph, Properties, PropertyValue};
use crate::value::RecordSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fault {
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
    F7,
    F8,
    F9,
    F10,
}

impl Fault {
    pub const ALL: [Fault; 10] = [
        Fault::F1,
        Fault::F2,
        Fault::F3,
        Fault::F4,
        Fault::F5,
        Fault::F6,
        Fault::F7,
        Fault::F8,
        Fault::F9,
        Fault::F10,
    ];

    /// 1-based number.
    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<Fault> {
        Fault::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    pub fn description(self) -> &'static str {
        match self {
            Fault::F1 => "count beside a property aggregate skips rows where that property is null",
            Fault::F2 => "sum over no values returns 0 instead of null",
            Fault::F3 => "UNWIND of a property expression yields no rows",
            Fault::F4 => "collect(node) returns property-less node stubs",
            Fault::F5 => "booleans compare greater than every integer",
            Fault::F6 => "comma-separated patterns are cross-joined instead of joined",
            Fault::F7 => "collect(DISTINCT x) keeps null",
            Fault::F8 => "without(strings) keeps only elements whose value is true",
            Fault::F9 => "a key's first-written value type sticks and coerces later writes",
            Fault::F10 => "the string 'false' compares equal to boolean false in eq/neq",
        }
    }
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.number())
    }
}

impl FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim()
            .strip_prefix(['F', 'f'])
            .and_then(|n| n.parse().ok())
            .and_then(Fault::from_number)
            .ok_or_else(|| format!("unknown fault `{s}` (expected F1..F10)"))
    }
}

/// Independent on/off flags for the ten faults. The default has every fault off.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct FaultSet {
    mask: u16,
}

impl FaultSet {
    pub fn none() -> Self {
        FaultSet::default()
    }

    pub fn only(f: Fault) -> Self {
        FaultSet::none().with(f)
    }

    pub fn all() -> Self {
        Fault::ALL.into_iter().fold(FaultSet::none(), FaultSet::with)
    }

    pub fn with(mut self, f: Fault) -> Self {
        self.mask |= 1 << (f as u16);
        self
    }

    pub fn without(mut self, f: Fault) -> Self {
        self.mask &= !(1 << (f as u16));
        self
    }

    pub fn has(&self, f: Fault) -> bool {
        self.mask & (1 << (f as u16)) != 0
    }

    pub fn from_mask(mask: u16) -> Self {
        FaultSet {
            mask: mask & ((1 << Fault::ALL.len()) - 1),
        }
    }

    pub fn mask(&self) -> u16 {
        self.mask
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Fault> + '_ {
        Fault::ALL.into_iter().filter(|f| self.has(*f))
    }
}

impl fmt::Display for FaultSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("none");
        }
        let names: Vec<String> = self.iter().map(|x| x.to_string()).collect();
        f.write_str(&names.join(","))
    }
}

impl FromStr for FaultSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s.eq_ignore_ascii_case("none") {
            return Ok(FaultSet::none());
        }
        s.split(',')
            .map(str::parse::<Fault>)
            .try_fold(FaultSet::none(), |acc, f| Ok(acc.with(f?)))
    }
}

impl Serialize for Fault {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fault {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for FaultSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter().map(|f| f.to_string()))
    }
}

impl<'de> Deserialize<'de> for FaultSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(d)?;
        names.iter().try_fold(FaultSet::none(), |acc, n| {
            Ok(acc.with(n.parse().map_err(serde::de::Error::custom)?))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("mutation rejected: the store is read-only")]
    ReadOnly,
    #[error("{0}")]
    Runtime(String),
}

impl EngineError {
    pub fn class(&self) -> &'static str {
        match self {
            EngineError::Unsupported(_) => "unsupported",
            EngineError::ReadOnly => "mutation-in-readonly-mode",
            EngineError::Runtime(_) => "runtime",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ValueType {
    Int,
    Float,
    Str,
    Bool,
}

fn type_of(v: &PropertyValue) -> ValueType {
    match v {
        PropertyValue::Int(_) => ValueType::Int,
        PropertyValue::Float(_) => ValueType::Float,
        PropertyValue::Str(_) => ValueType::Str,
        PropertyValue::Bool(_) => ValueType::Bool,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct StoredNode {
    label: String,
    props: Properties,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct StoredEdge {
    label: String,
    src: u64,
    dst: u64,
    props: Properties,
}

/// Mutable graph state of one engine instance.
#[derive(Debug, Clone, Default)]
pub struct Store {
    schema: GraphSchema,
    nodes: BTreeMap<u64, StoredNode>,
    edges: BTreeMap<u64, StoredEdge>,
    next_id: u64,
    /// First-written value type per property key; survives drops, cleared only by reset.
    type_cache: BTreeMap<String, ValueType>,
    read_only: bool,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    pub fn from_graph(g: &LabeledPropertyGraph) -> Self {
        let mut s = Store::new();
        s.load(g);
        s
    }

    /// Bulk import. Ids are kept; properties are stored as given, with no fault coercion.
    pub fn load(&mut self, g: &LabeledPropertyGraph) {
        self.schema = g.schema.clone();
        for n in &g.nodes {
            for (k, v) in &n.properties {
                self.type_cache.entry(k.clone()).or_insert(type_of(v));
            }
            self.nodes.insert(
                n.id,
                StoredNode {
                    label: n.label.clone(),
                    props: n.properties.clone(),
                },
            );
            self.next_id = self.next_id.max(n.id + 1);
        }
        for e in &g.edges {
            for (k, v) in &e.properties {
                self.type_cache.entry(k.clone()).or_insert(type_of(v));
            }
            self.edges.insert(
                e.id,
                StoredEdge {
                    label: e.label.clone(),
                    src: e.src,
                    dst: e.dst,
                    props: e.properties.clone(),
                },
            );
            self.next_id = self.next_id.max(e.id + 1);
        }
    }

    /// Back to an empty store. Unlike dropping every element, this also forgets cached types.
    pub fn reset(&mut self) {
        let read_only = self.read_only;
        *self = Store::new();
        self.read_only = read_only;
    }

    pub fn set_read_only(&mut self, read_only: bool) {
        self.read_only = read_only;
    }

    pub fn is_read_only(&self) -> bool {
        self.read_only
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn execute(&mut self, ir: &QueryIr, faults: FaultSet) -> Result<RecordSet, EngineError> {
        if ir.is_mutating() && self.read_only {
            return Err(EngineError::ReadOnly);
        }
        match ir {
            QueryIr::Cypher(q) => cypher::execute(self, q, faults),
            QueryIr::Gremlin(q) => gremlin::execute(self, q, faults),
        }
    }

    /// Snapshot of the current contents. Labels and keys introduced by mutations are appended
    /// to the loaded schema.
    pub fn export_graph(&self) -> LabeledPropertyGraph {
        let mut schema = self.schema.clone();
        let add = |list: &mut Vec<String>, item: &str| {
            if !list.iter().any(|x| x == item) {
                list.push(item.to_owned());
            }
        };
        let mut g = LabeledPropertyGraph::empty(GraphSchema::default());
        for (id, n) in &self.nodes {
            add(&mut schema.node_labels, &n.label);
            for k in n.props.keys() {
                add(&mut schema.property_keys, k);
            }
            g.nodes.push(crate::model::Node {
                id: *id,
                label: n.label.clone(),
                properties: n.props.clone(),
            });
        }
        for (id, e) in &self.edges {
            add(&mut schema.edge_labels, &e.label);
            for k in e.props.keys() {
                add(&mut schema.property_keys, k);
            }
            g.edges.push(crate::model::Edge {
                id: *id,
                label: e.label.clone(),
                src: e.src,
                dst: e.dst,
                properties: e.props.clone(),
            });
        }
        g.schema = schema;
        g
    }

    /// Hash of everything that can influence a later query result.
    pub fn digest(&self) -> String {
        let state = serde_json::json!({
            "nodes": self.nodes,
            "edges": self.edges,
            "types": self.type_cache,
            "next_id": self.next_id,
        });
        hex::encode(Sha256::digest(state.to_string().as_bytes()))
    }

    fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn add_node(&mut self, label: &str) -> u64 {
        let id = self.fresh_id();
        self.nodes.insert(
            id,
            StoredNode {
                label: label.to_owned(),
                props: Properties::new(),
            },
        );
        id
    }

    fn add_edge(&mut self, label: &str, src: u64, dst: u64) -> u64 {
        let id = self.fresh_id();
        self.edges.insert(
            id,
            StoredEdge {
                label: label.to_owned(),
                src,
                dst,
                props: Properties::new(),
            },
        );
        id
    }

    /// Applies the F9 coercion when that fault is on.
    fn coerce(&mut self, key: &str, value: PropertyValue, faults: FaultSet) -> PropertyValue {
        let cached = *self
            .type_cache
            .entry(key.to_owned())
            .or_insert(type_of(&value));
        if !faults.has(Fault::F9) {
            return value;
        }
        match (cached, value) {
            (ValueType::Float, PropertyValue::Int(i)) => PropertyValue::Float(i as f64),
            (ValueType::Str, PropertyValue::Str(s)) => PropertyValue::Str(s),
            (ValueType::Str, other) => PropertyValue::Str(match other {
                PropertyValue::Float(x) => crate::model::format_float(x),
                v => v.to_string(),
            }),
            (_, v) => v,
        }
    }

    fn set_node_prop(&mut self, id: u64, key: &str, value: PropertyValue, faults: FaultSet) {
        let value = self.coerce(key, value, faults);
        if let Some(n) = self.nodes.get_mut(&id) {
            n.props.insert(key.to_owned(), value);
        }
    }

    fn set_edge_prop(&mut self, id: u64, key: &str, value: PropertyValue, faults: FaultSet) {
        let value = self.coerce(key, value, faults);
        if let Some(e) = self.edges.get_mut(&id) {
            e.props.insert(key.to_owned(), value);
        }
    }

    fn drop_node(&mut self, id: u64) {
        self.nodes.remove(&id);
        self.edges.retain(|_, e| e.src != id && e.dst != id);
    }

    fn drop_edge(&mut self, id: u64) {
        self.edges.remove(&id);
    }

    fn node_value(&self, id: u64, with_label: bool) -> crate::value::CanonicalValue {
        let n = &self.nodes[&id];
        crate::value::CanonicalValue::Node {
            label: with_label.then(|| n.label.clone()),
            props: canonical_props(&n.props),
        }
    }

    fn edge_value(&self, id: u64, with_label: bool) -> crate::value::CanonicalValue {
        let e = &self.edges[&id];
        crate::value::CanonicalValue::Edge {
            label: with_label.then(|| e.label.clone()),
            props: canonical_props(&e.props),
        }
    }
}

fn canonical_props(p: &Properties) -> BTreeMap<String, crate::value::CanonicalValue> {
    p.iter().map(|(k, v)| (k.clone(), v.into())).collect()
}

/// Evaluates `ir` against `store`.
pub fn execute_ir(store: &mut Store, ir: &QueryIr, faults: FaultSet) -> Result<RecordSet, EngineError> {
    store.execute(ir, faults)
}

pub fn export_graph(store: &Store) -> LabeledPropertyGraph {
    store.export_graph()
}

/// Sum of floats in ascending order, so results do not depend on row order.
pub(crate) fn stable_sum(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.into_iter().sum()
}
