//! Random schema and graph generation, plus the textual renderings of a graph: the two
//! prompt edge formats and the per-dialect load statements.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    quote_single, Dialect, Edge, GraphSchema, LabeledPropertyGraph, Node, Properties,
    PropertyValue, NAME_KEY,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenError {
    #[error("count out of range: {0}")]
    CountOutOfRange(String),
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
}

/// Knobs for [`generate_graph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    pub nodes: usize,
    pub edges: usize,
    /// Probability of attaching 1, 2, 3 or 4 extra property pairs (besides `name`).
    pub pair_distribution: [f64; 4],
    pub seed: u64,
    /// Inclusive bounds on generated string length.
    pub str_len: (usize, usize),
    /// Half-open range for floats; values are rounded to two decimals.
    pub float_range: (f64, f64),
    /// Half-open range for integers.
    pub int_range: (i64, i64),
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            nodes: 100,
            edges: 200,
            pair_distribution: [0.8, 0.1, 0.05, 0.05],
            seed: 0,
            str_len: (1, 4),
            float_range: (0.0, 100.0),
            int_range: (0, 100),
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), GenError> {
        let p = &self.pair_distribution;
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(GenError::InvalidParams(
                "pair distribution entries must be finite and non-negative".into(),
            ));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(GenError::InvalidParams(format!(
                "pair distribution sums to {total}, expected 1"
            )));
        }
        if self.edges > 0 && self.nodes < 2 {
            return Err(GenError::InvalidParams(
                "edges require at least two nodes".into(),
            ));
        }
        if self.str_len.0 == 0 || self.str_len.0 > self.str_len.1 {
            return Err(GenError::InvalidParams("bad string length range".into()));
        }
        let (lo, hi) = self.float_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(GenError::InvalidParams("bad float range".into()));
        }
        if self.int_range.0 >= self.int_range.1 {
            return Err(GenError::InvalidParams("bad integer range".into()));
        }
        Ok(())
    }
}

/// Builds the label and key sets `nt0..`, `et0..`, `name, p0..`.
///
/// The names are fixed by the counts; the seed is accepted so the call has the same shape as
/// the rest of the generator and stays deterministic if the naming ever becomes random.
pub fn generate_schema(
    node_labels: usize,
    edge_labels: usize,
    property_keys: usize,
    _seed: u64,
) -> Result<GraphSchema, GenError> {
    if node_labels == 0 || edge_labels == 0 {
        return Err(GenError::CountOutOfRange(
            "label counts must be at least 1".into(),
        ));
    }
    if property_keys < 2 {
        return Err(GenError::CountOutOfRange(
            "need at least two property keys (name plus one)".into(),
        ));
    }
    Ok(GraphSchema {
        node_labels: (0..node_labels).map(|i| format!("nt{i}")).collect(),
        edge_labels: (0..edge_labels).map(|i| format!("et{i}")).collect(),
        property_keys: std::iter::once(NAME_KEY.to_owned())
            .chain((0..property_keys - 1).map(|i| format!("p{i}")))
            .collect(),
    })
}

const ALNUM: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";

struct Sampler<'a> {
    rng: ChaCha8Rng,
    params: &'a GenParams,
    keys: Vec<&'a str>,
}

impl Sampler<'_> {
    fn pair_count(&mut self) -> usize {
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        for (i, p) in self.params.pair_distribution.iter().enumerate() {
            acc += p;
            if u < acc {
                return i + 1;
            }
        }
        // rounding slack: fall back to the last non-zero bucket
        self.params
            .pair_distribution
            .iter()
            .rposition(|p| *p > 0.0)
            .map_or(1, |i| i + 1)
    }

    fn value(&mut self) -> PropertyValue {
        let p = self.params;
        match self.rng.random_range(0..4u8) {
            0 => PropertyValue::Int(self.rng.random_range(p.int_range.0..p.int_range.1)),
            1 => {
                let lo = (p.float_range.0 * 100.0).ceil() as i64;
                let hi = ((p.float_range.1 * 100.0).ceil() as i64).max(lo + 1);
                PropertyValue::Float(self.rng.random_range(lo..hi) as f64 / 100.0)
            }
            2 => {
                let len = self.rng.random_range(p.str_len.0..=p.str_len.1);
                let s = (0..len)
                    .map(|_| ALNUM[self.rng.random_range(0..ALNUM.len())] as char)
                    .collect();
                PropertyValue::Str(s)
            }
            _ => PropertyValue::Bool(self.rng.random()),
        }
    }

    /// `k` extra pairs drawn without repetition, with `name` inserted at a random slot.
    fn properties(&mut self, name: String) -> Properties {
        let k = self.pair_count().min(self.keys.len());
        let picked = sample(&mut self.rng, self.keys.len(), k);
        let name_slot = self.rng.random_range(0..=k);
        let mut props = Properties::with_capacity(k + 1);
        for (slot, idx) in picked.into_iter().enumerate() {
            if slot == name_slot {
                props.insert(NAME_KEY.to_owned(), PropertyValue::Str(name.clone()));
            }
            let v = self.value();
            props.insert(self.keys[idx].to_owned(), v);
        }
        if name_slot == k {
            props.insert(NAME_KEY.to_owned(), PropertyValue::Str(name));
        }
        props
    }
}

/// Generates a graph with exactly `params.nodes` nodes named `u0..` and `params.edges` edges
/// named `e0..`. Edge sources are uniform over nodes, targets uniform over the other nodes.
pub fn generate_graph(
    schema: &GraphSchema,
    params: &GenParams,
) -> Result<LabeledPropertyGraph, GenError> {
    params.validate()?;
    let keys: Vec<&str> = schema.value_keys().collect();
    if keys.is_empty() {
        return Err(GenError::InvalidParams(
            "schema has no value property keys".into(),
        ));
    }
    let mut s = Sampler {
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        params,
        keys,
    };

    let mut nodes = Vec::with_capacity(params.nodes);
    for i in 0..params.nodes {
        let label = schema.node_labels[s.rng.random_range(0..schema.node_labels.len())].clone();
        let properties = s.properties(format!("u{i}"));
        nodes.push(Node {
            id: i as u64,
            label,
            properties,
        });
    }

    let mut edges = Vec::with_capacity(params.edges);
    for j in 0..params.edges {
        let src = s.rng.random_range(0..params.nodes);
        let mut dst = s.rng.random_range(0..params.nodes - 1);
        if dst >= src {
            dst += 1;
        }
        let label = schema.edge_labels[s.rng.random_range(0..schema.edge_labels.len())].clone();
        let properties = s.properties(format!("e{j}"));
        edges.push(Edge {
            id: j as u64,
            label,
            src: src as u64,
            dst: dst as u64,
            properties,
        });
    }

    Ok(LabeledPropertyGraph {
        schema: schema.clone(),
        nodes,
        edges,
    })
}

/// `{k1: v1,k2: v2}` in insertion order.
pub fn render_prompt_map(props: &Properties) -> String {
    let body: Vec<String> = props.iter().map(|(k, v)| format!("{k}: {v}")).collect();
    format!("{{{}}}", body.join(","))
}

fn endpoints<'g>(g: &'g LabeledPropertyGraph, e: &Edge) -> (&'g Node, &'g Node) {
    let src = g.node(e.src).expect("edge source resolves");
    let dst = g.node(e.dst).expect("edge target resolves");
    (src, dst)
}

/// One `(label {..})-(label {..})->(label {..})` line per edge.
pub fn serialize_edges_plain(g: &LabeledPropertyGraph) -> String {
    g.edges
        .iter()
        .map(|e| {
            let (a, b) = endpoints(g, e);
            format!(
                "({} {})-({} {})->({} {})",
                a.label,
                render_prompt_map(&a.properties),
                e.label,
                render_prompt_map(&e.properties),
                b.label,
                render_prompt_map(&b.properties)
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// One `|(:label {..})|(:label {..})|(:label {..})|` line per edge.
pub fn serialize_edges_piped(g: &LabeledPropertyGraph) -> String {
    g.edges
        .iter()
        .map(|e| {
            let (a, b) = endpoints(g, e);
            format!(
                "|(:{} {})|(:{} {})|(:{} {})|",
                a.label,
                render_prompt_map(&a.properties),
                e.label,
                render_prompt_map(&e.properties),
                b.label,
                render_prompt_map(&b.properties)
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Name first, then the remaining pairs in insertion order.
fn name_first(props: &Properties) -> impl Iterator<Item = (&String, &PropertyValue)> {
    props
        .iter()
        .filter(|(k, _)| *k == NAME_KEY)
        .chain(props.iter().filter(|(k, _)| *k != NAME_KEY))
}

fn cypher_map(props: &Properties) -> String {
    let body: Vec<String> = name_first(props)
        .map(|(k, v)| format!("{k}: {v}"))
        .collect();
    format!("{{{}}}", body.join(", "))
}

fn gremlin_literal(v: &PropertyValue) -> String {
    match v {
        PropertyValue::Str(s) => quote_single(s),
        other => other.to_string(),
    }
}

fn gremlin_properties(props: &Properties) -> String {
    name_first(props)
        .map(|(k, v)| format!(".property({}, {})", quote_single(k), gremlin_literal(v)))
        .collect()
}

/// Statements that recreate `g` on an empty engine: all nodes first, then edges between
/// nodes looked up by name.
pub fn emit_load_statements(g: &LabeledPropertyGraph, dialect: Dialect) -> Vec<String> {
    let mut out = Vec::with_capacity(g.nodes.len() + g.edges.len());
    match dialect {
        Dialect::Cypher => {
            for n in &g.nodes {
                out.push(format!("CREATE (:{} {})", n.label, cypher_map(&n.properties)));
            }
            for e in &g.edges {
                let (a, b) = endpoints(g, e);
                out.push(format!(
                    "MATCH (a:{} {{name: {}}}), (b:{} {{name: {}}}) CREATE (a)-[:{} {}]->(b)",
                    a.label,
                    a.properties[NAME_KEY],
                    b.label,
                    b.properties[NAME_KEY],
                    e.label,
                    cypher_map(&e.properties)
                ));
            }
        }
        Dialect::Gremlin => {
            for n in &g.nodes {
                out.push(format!(
                    "g.addV({}){}",
                    quote_single(&n.label),
                    gremlin_properties(&n.properties)
                ));
            }
            for e in &g.edges {
                let (a, b) = endpoints(g, e);
                out.push(format!(
                    "g.V().has('name', {}).addE({}).to(__.V().has('name', {})){}",
                    gremlin_literal(&a.properties[NAME_KEY]),
                    quote_single(&e.label),
                    gremlin_literal(&b.properties[NAME_KEY]),
                    gremlin_properties(&e.properties)
                ));
            }
        }
    }
    out
}
