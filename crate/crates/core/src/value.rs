//! Engine-independent result values.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value as Json};

use crate::model::{format_float, PropertyValue};

/// Canonical form of one result cell. Element values carry no engine ids: two nodes are the
/// same node when their property maps (including `name`) agree.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "Json", try_from = "Json")]
pub enum CanonicalValue {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Node {
        label: Option<String>,
        props: BTreeMap<String, CanonicalValue>,
    },
    Edge {
        label: Option<String>,
        props: BTreeMap<String, CanonicalValue>,
    },
    List(Vec<CanonicalValue>),
}

impl From<&PropertyValue> for CanonicalValue {
    fn from(v: &PropertyValue) -> Self {
        match v {
            PropertyValue::Int(i) => CanonicalValue::Int(*i),
            PropertyValue::Float(x) => CanonicalValue::Float(*x),
            PropertyValue::Str(s) => CanonicalValue::Str(s.clone()),
            PropertyValue::Bool(b) => CanonicalValue::Bool(*b),
        }
    }
}

impl PartialEq for CanonicalValue {
    /// Exact equality, except that integers and floats compare numerically.
    fn eq(&self, other: &Self) -> bool {
        use CanonicalValue::*;
        match (self, other) {
            (Null, Null) => true,
            (Bool(a), Bool(b)) => a == b,
            (Int(a), Int(b)) => a == b,
            (Float(a), Float(b)) => a == b,
            (Int(a), Float(b)) | (Float(b), Int(a)) => (*a as f64) == *b,
            (Str(a), Str(b)) => a == b,
            (Node { props: a, .. }, Node { props: b, .. })
            | (Edge { props: a, .. }, Edge { props: b, .. })
            | (Node { props: a, .. }, Edge { props: b, .. })
            | (Edge { props: a, .. }, Node { props: b, .. }) => a == b,
            (List(a), List(b)) => a == b,
            _ => false,
        }
    }
}

impl CanonicalValue {
    pub fn is_null(&self) -> bool {
        matches!(self, CanonicalValue::Null)
    }

    pub fn is_element(&self) -> bool {
        matches!(self, CanonicalValue::Node { .. } | CanonicalValue::Edge { .. })
    }

    pub fn props(&self) -> Option<&BTreeMap<String, CanonicalValue>> {
        match self {
            CanonicalValue::Node { props, .. } | CanonicalValue::Edge { props, .. } => Some(props),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            CanonicalValue::Int(i) => Some(*i as f64),
            CanonicalValue::Float(x) => Some(*x),
            _ => None,
        }
    }

    /// A string that is equal for two values exactly when `==` holds. Usable as a hash or
    /// grouping key.
    pub fn key(&self) -> String {
        let mut s = String::new();
        self.write_key(&mut s, true);
        s
    }

    /// Like [`key`](Self::key) but with every number replaced by a placeholder, so values that
    /// differ only in float payloads share a key.
    pub fn shape_key(&self) -> String {
        let mut s = String::new();
        self.write_key(&mut s, false);
        s
    }

    fn write_key(&self, out: &mut String, numbers: bool) {
        use std::fmt::Write;
        match self {
            CanonicalValue::Null => out.push('N'),
            CanonicalValue::Bool(b) => out.push(if *b { 'T' } else { 'F' }),
            CanonicalValue::Int(i) if numbers => write!(out, "#{i}").unwrap(),
            CanonicalValue::Float(x) if numbers => {
                if x.fract() == 0.0 && x.abs() < 9.0e15 {
                    write!(out, "#{}", *x as i64).unwrap()
                } else {
                    write!(out, "#{x:?}").unwrap()
                }
            }
            CanonicalValue::Int(_) | CanonicalValue::Float(_) => out.push('#'),
            CanonicalValue::Str(s) => write!(out, "S{}:{s}", s.len()).unwrap(),
            CanonicalValue::Node { props, .. } | CanonicalValue::Edge { props, .. } => {
                out.push('{');
                for (k, v) in props {
                    write!(out, "{}:{k}=", k.len()).unwrap();
                    v.write_key(out, numbers);
                    out.push(',');
                }
                out.push('}');
            }
            CanonicalValue::List(items) => {
                out.push('[');
                for v in items {
                    v.write_key(out, numbers);
                    out.push(',');
                }
                out.push(']');
            }
        }
    }

    pub fn to_json(&self) -> Json {
        fn props_json(props: &BTreeMap<String, CanonicalValue>) -> Json {
            Json::Object(props.iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
        }
        match self {
            CanonicalValue::Null => Json::Null,
            CanonicalValue::Bool(b) => json!(b),
            CanonicalValue::Int(i) => json!(i),
            CanonicalValue::Float(x) => json!(x),
            CanonicalValue::Str(s) => json!(s),
            CanonicalValue::Node { label, props } => {
                json!({"node": {"label": label, "properties": props_json(props)}})
            }
            CanonicalValue::Edge { label, props } => {
                json!({"edge": {"label": label, "properties": props_json(props)}})
            }
            CanonicalValue::List(items) => Json::Array(items.iter().map(|v| v.to_json()).collect()),
        }
    }

    /// Inverse of [`to_json`](Self::to_json). Objects without a `node`/`edge` wrapper are read
    /// as bare property maps; engine fields (`id`, `tid`) are dropped and one-element lists in
    /// property position are unwrapped.
    pub fn from_json(v: &Json) -> Result<Self, String> {
        Ok(match v {
            Json::Null => CanonicalValue::Null,
            Json::Bool(b) => CanonicalValue::Bool(*b),
            Json::Number(n) => {
                if let Some(i) = n.as_i64() {
                    CanonicalValue::Int(i)
                } else {
                    let x = n.as_f64().ok_or_else(|| format!("unrepresentable number {n}"))?;
                    CanonicalValue::Float(x)
                }
            }
            Json::String(s) => CanonicalValue::Str(s.clone()),
            Json::Array(items) => CanonicalValue::List(
                items.iter().map(CanonicalValue::from_json).collect::<Result<_, _>>()?,
            ),
            Json::Object(map) => {
                if map.len() == 1 {
                    if let Some(inner) = map.get("node") {
                        let (label, props) = element_from_json(inner)?;
                        return Ok(CanonicalValue::Node { label, props });
                    }
                    if let Some(inner) = map.get("edge") {
                        let (label, props) = element_from_json(inner)?;
                        return Ok(CanonicalValue::Edge { label, props });
                    }
                }
                CanonicalValue::Node {
                    label: None,
                    props: props_from_json(map)?,
                }
            }
        })
    }
}

type ElementParts = (Option<String>, BTreeMap<String, CanonicalValue>);

fn element_from_json(v: &Json) -> Result<ElementParts, String> {
    let obj = v.as_object().ok_or("element payload must be an object")?;
    let label = match obj.get("label") {
        None | Some(Json::Null) => None,
        Some(Json::String(s)) => Some(s.clone()),
        Some(other) => return Err(format!("bad element label {other}")),
    };
    let props = match obj.get("properties") {
        None | Some(Json::Null) => BTreeMap::new(),
        Some(Json::Object(m)) => props_from_json(m)?,
        Some(other) => return Err(format!("bad element properties {other}")),
    };
    Ok((label, props))
}

fn props_from_json(map: &Map<String, Json>) -> Result<BTreeMap<String, CanonicalValue>, String> {
    let mut out = BTreeMap::new();
    for (k, v) in map {
        if k == "id" || k == "tid" {
            continue;
        }
        let v = match v {
            Json::Array(items) if items.len() == 1 => &items[0],
            other => other,
        };
        out.insert(k.clone(), CanonicalValue::from_json(v)?);
    }
    Ok(out)
}

impl From<CanonicalValue> for Json {
    fn from(v: CanonicalValue) -> Json {
        v.to_json()
    }
}

impl TryFrom<Json> for CanonicalValue {
    type Error = String;

    fn try_from(v: Json) -> Result<Self, String> {
        CanonicalValue::from_json(&v)
    }
}

impl fmt::Display for CanonicalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_props(
            f: &mut fmt::Formatter<'_>,
            props: &BTreeMap<String, CanonicalValue>,
        ) -> fmt::Result {
            f.write_str("{")?;
            for (i, (k, v)) in props.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{k}: {v}")?;
            }
            f.write_str("}")
        }
        match self {
            CanonicalValue::Null => f.write_str("null"),
            CanonicalValue::Bool(b) => write!(f, "{b}"),
            CanonicalValue::Int(i) => write!(f, "{i}"),
            CanonicalValue::Float(x) => f.write_str(&format_float(*x)),
            CanonicalValue::Str(s) => write!(f, "{s:?}"),
            CanonicalValue::Node { label, props } => {
                write!(f, "({}", label.as_deref().map(|l| format!(":{l} ")).unwrap_or_default())?;
                write_props(f, props)?;
                f.write_str(")")
            }
            CanonicalValue::Edge { label, props } => {
                write!(f, "[{}", label.as_deref().map(|l| format!(":{l} ")).unwrap_or_default())?;
                write_props(f, props)?;
                f.write_str("]")
            }
            CanonicalValue::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// A normalized query result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSet {
    pub ordered: bool,
    pub records: Vec<Vec<CanonicalValue>>,
    pub non_empty: bool,
}

impl RecordSet {
    pub fn new(ordered: bool, records: Vec<Vec<CanonicalValue>>) -> Self {
        let non_empty = !records.is_empty();
        RecordSet {
            ordered,
            records,
            non_empty,
        }
    }

    pub fn unordered(records: Vec<Vec<CanonicalValue>>) -> Self {
        Self::new(false, records)
    }

    pub fn empty() -> Self {
        Self::new(false, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Arity of the records, or `None` when the set is empty or ragged.
    pub fn arity(&self) -> Option<usize> {
        let first = self.records.first()?.len();
        self.records.iter().all(|r| r.len() == first).then_some(first)
    }

    /// Rows in the bridge's structured (`canonical-json`) form: one JSON array per record.
    pub fn to_json_rows(&self) -> Vec<Json> {
        self.records
            .iter()
            .map(|r| Json::Array(r.iter().map(CanonicalValue::to_json).collect()))
            .collect()
    }
}

impl fmt::Display for RecordSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, r) in self.records.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("(")?;
            for (j, v) in r.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{v}")?;
            }
            f.write_str(")")?;
        }
        f.write_str("]")
    }
}
