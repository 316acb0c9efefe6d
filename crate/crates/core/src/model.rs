//! Property graph types shared by every stage of the pipeline.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

/// The property key every node and edge carries as its unique name.
pub const NAME_KEY: &str = "name";

/// Query language spoken by an engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    Cypher,
    Gremlin,
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dialect::Cypher => "cypher",
            Dialect::Gremlin => "gremlin",
        })
    }
}

impl std::str::FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cypher" => Ok(Dialect::Cypher),
            "gremlin" => Ok(Dialect::Gremlin),
            other => Err(format!("unknown dialect `{other}`")),
        }
    }
}

/// A single property value. Floats are always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", content = "v", rename_all = "lowercase")]
pub enum PropertyValue {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
}

impl PropertyValue {
    pub fn type_name(&self) -> &'static str {
        match self {
            PropertyValue::Int(_) => "int",
            PropertyValue::Float(_) => "float",
            PropertyValue::Str(_) => "str",
            PropertyValue::Bool(_) => "bool",
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            PropertyValue::Str(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for PropertyValue {
    /// Literal rendering shared by the prompt serializers and the load statements:
    /// strings double-quoted, booleans lowercase, floats always with a fractional part.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertyValue::Int(i) => write!(f, "{i}"),
            PropertyValue::Float(x) => f.write_str(&format_float(*x)),
            PropertyValue::Str(s) => f.write_str(&quote_double(s)),
            PropertyValue::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// Shortest round-trip rendering of a float that always reads back as a float (`2.0`, not `2`).
pub fn format_float(x: f64) -> String {
    let s = format!("{x}");
    if s.contains(['.', 'e', 'E', 'N', 'n']) {
        s
    } else {
        format!("{s}.0")
    }
}

pub fn quote_double(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn quote_single(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

/// Property map in insertion order.
pub type Properties = IndexMap<String, PropertyValue>;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GraphSchema {
    pub node_labels: Vec<String>,
    pub edge_labels: Vec<String>,
    pub property_keys: Vec<String>,
}

impl GraphSchema {
    /// Property keys other than `name`, i.e. the keys the generator draws extra pairs from.
    pub fn value_keys(&self) -> impl Iterator<Item = &str> {
        self.property_keys
            .iter()
            .map(String::as_str)
            .filter(|k| *k != NAME_KEY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: u64,
    pub label: String,
    pub properties: Properties,
}

impl Node {
    pub fn name(&self) -> Option<&str> {
        self.properties.get(NAME_KEY).and_then(PropertyValue::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: u64,
    pub label: String,
    pub src: u64,
    pub dst: u64,
    pub properties: Properties,
}

impl Edge {
    pub fn name(&self) -> Option<&str> {
        self.properties.get(NAME_KEY).and_then(PropertyValue::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPropertyGraph {
    pub schema: GraphSchema,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, thiserror::Error)]
pub enum GraphFileError {
    #[error("malformed graph document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("graph violates {} invariant(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),
}

impl LabeledPropertyGraph {
    pub fn empty(schema: GraphSchema) -> Self {
        LabeledPropertyGraph {
            schema,
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn node(&self, id: u64) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Parses the graph export format and rejects graphs that violate the model invariants.
    pub fn from_json(text: &str) -> Result<Self, GraphFileError> {
        let graph: LabeledPropertyGraph = serde_json::from_str(text)?;
        let violations = validate_graph(&graph);
        if violations.is_empty() {
            Ok(graph)
        } else {
            Err(GraphFileError::Invalid(violations))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serialization is infallible")
    }

    /// Equality that ignores element ids and property order: nodes are matched by name,
    /// edge endpoints are compared through the names of the nodes they reference.
    pub fn equivalent_modulo_ids(&self, other: &LabeledPropertyGraph) -> bool {
        fn sorted(p: &Properties) -> BTreeMap<&str, &PropertyValue> {
            p.iter().map(|(k, v)| (k.as_str(), v)).collect()
        }
        fn node_view(g: &LabeledPropertyGraph) -> Vec<(String, BTreeMap<&str, &PropertyValue>)> {
            let mut v: Vec<_> = g
                .nodes
                .iter()
                .map(|n| (n.label.clone(), sorted(&n.properties)))
                .collect();
            v.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
            v
        }
        fn edge_view(
            g: &LabeledPropertyGraph,
        ) -> Vec<(String, Option<String>, Option<String>, BTreeMap<&str, &PropertyValue>)> {
            let names: HashMap<u64, Option<String>> = g
                .nodes
                .iter()
                .map(|n| (n.id, n.name().map(str::to_owned)))
                .collect();
            let mut v: Vec<_> = g
                .edges
                .iter()
                .map(|e| {
                    (
                        e.label.clone(),
                        names.get(&e.src).cloned().flatten(),
                        names.get(&e.dst).cloned().flatten(),
                        sorted(&e.properties),
                    )
                })
                .collect();
            v.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
            v
        }
        self.schema == other.schema
            && node_view(self) == node_view(other)
            && edge_view(self) == edge_view(other)
    }
}

/// One broken invariant, naming the offending element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub element: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.element, self.rule)
    }
}

/// Checks every model invariant. An empty result means the graph is well formed.
pub fn validate_graph(g: &LabeledPropertyGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |element: String, rule: &str| {
        out.push(Violation {
            element,
            rule: rule.to_owned(),
        })
    };

    let schema = &g.schema;
    for (kind, list) in [
        ("node label", &schema.node_labels),
        ("edge label", &schema.edge_labels),
        ("property key", &schema.property_keys),
    ] {
        let mut seen = HashSet::new();
        for item in list {
            if item.is_empty() {
                push(format!("schema {kind}"), "must be non-empty");
            } else if !seen.insert(item) {
                push(format!("schema {kind} {item:?}"), "must be unique");
            }
        }
    }
    if !schema.property_keys.iter().any(|k| k == NAME_KEY) {
        push("schema".into(), "property keys must contain \"name\"");
    }

    let keys: HashSet<&str> = schema.property_keys.iter().map(String::as_str).collect();
    let check_props = |what: String, props: &Properties, push: &mut dyn FnMut(String, &str)| {
        match props.get(NAME_KEY) {
            Some(PropertyValue::Str(_)) => {}
            Some(_) => push(what.clone(), "\"name\" must be a string"),
            None => push(what.clone(), "missing \"name\" property"),
        }
        for (k, v) in props {
            if !keys.contains(k.as_str()) {
                push(what.clone(), &format!("property key {k:?} not in schema"));
            }
            if let PropertyValue::Float(x) = v {
                if !x.is_finite() {
                    push(what.clone(), &format!("property {k:?} is not finite"));
                }
            }
        }
    };

    let mut node_names = HashSet::new();
    let mut node_ids = HashSet::new();
    for n in &g.nodes {
        let what = format!("node {}", n.name().unwrap_or("<unnamed>"));
        if !schema.node_labels.contains(&n.label) {
            push(what.clone(), &format!("label {:?} not in schema", n.label));
        }
        check_props(what.clone(), &n.properties, &mut push);
        if let Some(name) = n.name() {
            if !node_names.insert(name.to_owned()) {
                push(format!("node {name}"), "duplicate node name");
            }
        }
        if !node_ids.insert(n.id) {
            push(what, "duplicate node id");
        }
    }

    let mut edge_names = HashSet::new();
    for e in &g.edges {
        let what = format!("edge {}", e.name().unwrap_or("<unnamed>"));
        if !schema.edge_labels.contains(&e.label) {
            push(what.clone(), &format!("label {:?} not in schema", e.label));
        }
        check_props(what.clone(), &e.properties, &mut push);
        if let Some(name) = e.name() {
            if !edge_names.insert(name.to_owned()) {
                push(format!("edge {name}"), "duplicate edge name");
            }
        }
        if e.src == e.dst {
            push(what.clone(), "self-loop (src == dst)");
        }
        if !node_ids.contains(&e.src) || !node_ids.contains(&e.dst) {
            push(what, "endpoint does not resolve to a node");
        }
    }
    out
}

fn props(pairs: &[(&str, PropertyValue)]) -> Properties {
    pairs
        .iter()
        .map(|(k, v)| ((*k).to_owned(), v.clone()))
        .collect()
}

/// The four-node fixture used throughout the tests: mixed value types on `p2`.
pub fn fixture_g0() -> LabeledPropertyGraph {
    use PropertyValue::*;
    let s = |x: &str| Str(x.to_owned());
    let schema = GraphSchema {
        node_labels: vec!["nt0".into(), "nt1".into()],
        edge_labels: vec!["et0".into(), "et1".into()],
        property_keys: vec!["name".into(), "p2".into(), "p8".into()],
    };
    let node = |id, label: &str, p: Properties| Node {
        id,
        label: label.into(),
        properties: p,
    };
    let edge = |id, label: &str, src, dst, p: Properties| Edge {
        id,
        label: label.into(),
        src,
        dst,
        properties: p,
    };
    LabeledPropertyGraph {
        schema,
        nodes: vec![
            node(1, "nt0", props(&[("p2", Bool(true)), ("name", s("u1"))])),
            node(2, "nt0", props(&[("p2", Bool(false)), ("name", s("u2"))])),
            node(3, "nt1", props(&[("p8", Float(2.0)), ("name", s("u3"))])),
            node(4, "nt1", props(&[("p2", s("GhR")), ("name", s("u4"))])),
        ],
        edges: vec![
            edge(1, "et0", 1, 2, props(&[("p2", s("GhR")), ("name", s("e1"))])),
            edge(2, "et0", 2, 3, props(&[("p2", Bool(true)), ("name", s("e2"))])),
            edge(3, "et1", 3, 1, props(&[("p2", Bool(false)), ("name", s("e3"))])),
        ],
    }
}
