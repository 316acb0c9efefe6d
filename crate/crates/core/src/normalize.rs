//! Engine-styled result text to canonical record sets.
//!
//! Drivers print results as Python-ish literals with engine-specific element renderings:
//!
//! | style | element | record |
//! |---|---|---|
//! | `neo4j-ish` | `Node('nt0', name='u1', p4=True)` or `<Node ... labels=frozenset({'nt0'}) properties={...}>` | `[v1, v2]` |
//! | `agens-ish` | `'nt0[4.4]{"name": "u1"}'` or `{'id': '4.1', 'tid': '(0,1)', 'properties': {...}}` | `(v1, v2,)` |
//! | `canonical-json` | `{"node": {"label": .., "properties": {..}}}` | JSON array |
//! | `gremlin-text` | `v[16416]` (dereferenced), valueMap dicts with one-element lists | one per list element |

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::adapter::RawResult;
use crate::value::{CanonicalValue as C, RecordSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Style {
    #[serde(rename = "neo4j-ish")]
    Neo4jIsh,
    #[serde(rename = "agens-ish")]
    AgensIsh,
    #[serde(rename = "canonical-json")]
    CanonicalJson,
    #[serde(rename = "gremlin-text")]
    GremlinText,
}

impl Style {
    pub const ALL: [Style; 4] = [Style::Neo4jIsh, Style::AgensIsh, Style::CanonicalJson, Style::GremlinText];

    pub fn as_str(self) -> &'static str {
        match self {
            Style::Neo4jIsh => "neo4j-ish",
            Style::AgensIsh => "agens-ish",
            Style::CanonicalJson => "canonical-json",
            Style::GremlinText => "gremlin-text",
        }
    }
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Style {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Style::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown result style `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NormalizeError {
    #[error("result is not a row set")]
    NotRows,
    #[error("cannot parse `{text}` at {position}: {message}")]
    Parse {
        text: String,
        position: usize,
        message: String,
    },
    #[error("{0}")]
    Shape(String),
    #[error("dereference-failure: {0}")]
    Dereference(String),
}

/// Parsed driver literal, before style rules turn it into a canonical value.
#[derive(Debug, Clone, PartialEq)]
enum Lit {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<Lit>),
    Tuple(Vec<Lit>),
    Dict(Vec<(Key, Lit)>),
    Element {
        edge: bool,
        label: Option<String>,
        props: Vec<(String, Lit)>,
    },
    Ref {
        edge: bool,
        id: String,
    },
    /// Comma-separated values at the top level of a transcript.
    Seq(Vec<Lit>),
}

#[derive(Debug, Clone, PartialEq)]
enum Key {
    Name(String),
    /// gremlinpython's `T.id` / `T.label` tokens
    Token(String),
}

struct Parser<'a> {
    text: &'a str,
    chars: Vec<char>,
    i: usize,
    bare_bools: bool,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            text,
            chars: text.chars().collect(),
            i: 0,
            bare_bools: false,
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, NormalizeError> {
        Err(NormalizeError::Parse {
            text: self.text.to_owned(),
            position: self.i,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.i += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.ws();
        if self.peek() == Some(c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), NormalizeError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn top(&mut self) -> Result<Lit, NormalizeError> {
        let first = self.value()?;
        let mut items = vec![first];
        while self.eat(',') {
            self.ws();
            if self.peek().is_none() {
                break;
            }
            items.push(self.value()?);
        }
        self.ws();
        if self.peek().is_some() {
            return self.err("trailing text");
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Lit::Seq(items)
        })
    }

    fn sequence(&mut self, close: char) -> Result<(Vec<Lit>, bool), NormalizeError> {
        let mut items = Vec::new();
        let mut trailing = false;
        loop {
            if self.eat(close) {
                return Ok((items, trailing));
            }
            items.push(self.value()?);
            trailing = self.eat(',');
            if !trailing {
                self.expect(close)?;
                return Ok((items, false));
            }
        }
    }

    fn value(&mut self) -> Result<Lit, NormalizeError> {
        self.ws();
        let Some(c) = self.peek() else {
            return self.err("unexpected end of text");
        };
        match c {
            '[' => {
                self.i += 1;
                Ok(Lit::List(self.sequence(']')?.0))
            }
            '(' => {
                self.i += 1;
                let (mut items, trailing) = self.sequence(')')?;
                Ok(if items.len() == 1 && !trailing {
                    items.pop().unwrap()
                } else {
                    Lit::Tuple(items)
                })
            }
            '{' => self.dict(),
            '\'' | '"' => Ok(Lit::Str(self.string()?)),
            '<' => self.angle(),
            c if c == '-' || c == '+' || c == '.' || c.is_ascii_digit() => self.number(),
            c if c.is_alphabetic() || c == '_' => self.word(),
            other => self.err(format!("unexpected `{other}`")),
        }
    }

    fn string(&mut self) -> Result<String, NormalizeError> {
        let quote = self.chars[self.i];
        self.i += 1;
        let mut out = String::new();
        loop {
            let Some(c) = self.peek() else {
                return self.err("unterminated string");
            };
            self.i += 1;
            if c == quote {
                return Ok(out);
            }
            if c != '\\' {
                out.push(c);
                continue;
            }
            let Some(e) = self.peek() else {
                return self.err("unterminated escape");
            };
            self.i += 1;
            match e {
                'n' => out.push('\n'),
                't' => out.push('\t'),
                'r' => out.push('\r'),
                'u' | 'x' => {
                    let n = if e == 'u' { 4 } else { 2 };
                    let hex: String = self.chars.iter().skip(self.i).take(n).collect();
                    let Some(ch) = u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) else {
                        return self.err("bad escape");
                    };
                    self.i += n;
                    out.push(ch);
                }
                other => out.push(other),
            }
        }
    }

    fn number(&mut self) -> Result<Lit, NormalizeError> {
        let start = self.i;
        if matches!(self.peek(), Some('-' | '+')) {
            self.i += 1;
        }
        let mut float = false;
        while let Some(c) = self.peek() {
            match c {
                '0'..='9' => {}
                '.' => float = true,
                'e' | 'E' => {
                    float = true;
                    if matches!(self.chars.get(self.i + 1), Some('-' | '+')) {
                        self.i += 1;
                    }
                }
                _ => break,
            }
            self.i += 1;
        }
        let text: String = self.chars[start..self.i].iter().collect();
        if !float {
            if let Ok(i) = text.parse::<i64>() {
                return Ok(Lit::Int(i));
            }
        }
        match text.parse::<f64>() {
            Ok(x) => Ok(Lit::Float(x)),
            Err(_) => {
                self.i = start;
                self.err(format!("bad number `{text}`"))
            }
        }
    }

    fn ident(&mut self) -> String {
        let start = self.i;
        while self
            .peek()
            .is_some_and(|c| c.is_alphanumeric() || c == '_' || c == '.' || c == ':')
        {
            self.i += 1;
        }
        self.chars[start..self.i].iter().collect()
    }

    /// Raw text up to the next `]`, after the opening `[`.
    fn bracketed(&mut self) -> Result<String, NormalizeError> {
        self.i += 1;
        let start = self.i;
        while self.peek().is_some_and(|c| c != ']') {
            self.i += 1;
        }
        if self.peek().is_none() {
            return self.err("unterminated `[`");
        }
        let s = self.chars[start..self.i].iter().collect();
        self.i += 1;
        Ok(s)
    }

    fn word(&mut self) -> Result<Lit, NormalizeError> {
        let start = self.i;
        let w = self.ident();
        match w.as_str() {
            "None" | "null" | "NULL" | "none" => return Ok(Lit::None),
            "True" | "true" | "TRUE" => return Ok(Lit::Bool(true)),
            "False" | "false" | "FALSE" => return Ok(Lit::Bool(false)),
            "t" if self.bare_bools => return Ok(Lit::Bool(true)),
            "f" if self.bare_bools => return Ok(Lit::Bool(false)),
            "nan" | "NaN" => return Ok(Lit::Float(f64::NAN)),
            "inf" | "Infinity" => return Ok(Lit::Float(f64::INFINITY)),
            _ => {}
        }
        match self.peek() {
            Some('(') => {
                self.i += 1;
                match w.as_str() {
                    "Node" => self.element_call(false, ')'),
                    "Relationship" | "Edge" | "Relation" => self.element_call(true, ')'),
                    "frozenset" | "set" | "list" | "tuple" => {
                        let (mut items, _) = self.sequence(')')?;
                        Ok(match items.pop() {
                            None => Lit::List(Vec::new()),
                            Some(inner) if items.is_empty() => inner,
                            Some(_) => return self.err("too many arguments"),
                        })
                    }
                    "Decimal" => {
                        let (items, _) = self.sequence(')')?;
                        match items.as_slice() {
                            [Lit::Str(s)] => match s.parse::<f64>() {
                                Ok(x) => Ok(Lit::Float(x)),
                                Err(_) => self.err("bad Decimal"),
                            },
                            [Lit::Int(i)] => Ok(Lit::Float(*i as f64)),
                            [Lit::Float(x)] => Ok(Lit::Float(*x)),
                            _ => self.err("bad Decimal"),
                        }
                    }
                    _ => {
                        self.i = start;
                        self.err(format!("unknown constructor `{w}`"))
                    }
                }
            }
            Some('[') => {
                let id = self.bracketed()?;
                let second = if self.peek() == Some('[') {
                    Some(self.bracketed()?)
                } else {
                    None
                };
                if self.peek() == Some('{') {
                    let saved = self.bare_bools;
                    self.bare_bools = true;
                    let dict = self.dict();
                    self.bare_bools = saved;
                    let Lit::Dict(entries) = dict? else {
                        return self.err("expected a property map");
                    };
                    let props = entries
                        .into_iter()
                        .map(|(k, v)| match k {
                            Key::Name(k) | Key::Token(k) => (k, v),
                        })
                        .collect();
                    return Ok(Lit::Element {
                        edge: second.is_some(),
                        label: Some(w),
                        props,
                    });
                }
                match w.as_str() {
                    "v" => Ok(Lit::Ref { edge: false, id }),
                    "e" => Ok(Lit::Ref { edge: true, id }),
                    _ => {
                        self.i = start;
                        self.err(format!("unexpected `{w}[`"))
                    }
                }
            }
            _ => {
                self.i = start;
                self.err(format!("unexpected identifier `{w}`"))
            }
        }
    }

    fn dict(&mut self) -> Result<Lit, NormalizeError> {
        self.i += 1;
        if self.eat('}') {
            return Ok(Lit::Dict(Vec::new()));
        }
        let first = self.value_or_key()?;
        if !self.eat(':') {
            // a set literal
            let mut items = vec![key_value(first)];
            while self.eat(',') {
                if self.eat('}') {
                    return Ok(Lit::List(items));
                }
                items.push(self.value()?);
            }
            self.expect('}')?;
            return Ok(Lit::List(items));
        }
        let mut entries = Vec::new();
        let mut key = first;
        loop {
            let k = match key {
                KeyOrValue::Key(k) => k,
                KeyOrValue::Value(Lit::Str(s)) => Key::Name(s),
                KeyOrValue::Value(Lit::Int(i)) => Key::Name(i.to_string()),
                KeyOrValue::Value(other) => return self.err(format!("unsupported map key {other:?}")),
            };
            entries.push((k, self.value()?));
            if !self.eat(',') {
                self.expect('}')?;
                return Ok(Lit::Dict(entries));
            }
            if self.eat('}') {
                return Ok(Lit::Dict(entries));
            }
            key = self.value_or_key()?;
            self.expect(':')?;
        }
    }

    fn value_or_key(&mut self) -> Result<KeyOrValue, NormalizeError> {
        self.ws();
        if self.peek() == Some('<') {
            if let Lit::Str(t) = self.angle()? {
                return Ok(KeyOrValue::Key(Key::Token(t)));
            }
            return self.err("unexpected element in key position");
        }
        if self.peek().is_some_and(|c| c.is_alphabetic()) {
            let start = self.i;
            let w = self.ident();
            if let Some(t) = w.strip_prefix("T.") {
                return Ok(KeyOrValue::Key(Key::Token(t.to_owned())));
            }
            self.i = start;
        }
        Ok(KeyOrValue::Value(self.value()?))
    }

    /// `<T.id: 1>` (returned as `Str("id")`) or a `<Node ...>`/`<Relationship ...>` repr.
    fn angle(&mut self) -> Result<Lit, NormalizeError> {
        self.i += 1;
        let w = self.ident();
        if let Some(t) = w.strip_prefix("T.") {
            let t = t.trim_end_matches(':').to_owned();
            while self.peek().is_some_and(|c| c != '>') {
                self.i += 1;
            }
            self.expect('>')?;
            return Ok(Lit::Str(t));
        }
        match w.as_str() {
            "Node" => self.element_call(false, '>'),
            "Relationship" => self.element_call(true, '>'),
            _ => self.err(format!("unknown `<{w}` form")),
        }
    }

    fn element_call(&mut self, edge: bool, close: char) -> Result<Lit, NormalizeError> {
        let mut label = None;
        let mut props = Vec::new();
        loop {
            if self.eat(close) {
                break;
            }
            self.ws();
            let start = self.i;
            let kw = if self.peek().is_some_and(|c| c.is_alphabetic() || c == '_') {
                let w = self.ident();
                self.ws();
                if self.peek() == Some('=') && self.chars.get(self.i + 1) != Some(&'=') {
                    self.i += 1;
                    Some(w)
                } else {
                    self.i = start;
                    None
                }
            } else {
                None
            };
            let v = self.value()?;
            match (kw.as_deref(), v) {
                (None, Lit::Str(s)) if label.is_none() => label = Some(s),
                (None, Lit::List(ls)) if label.is_none() => label = first_str(&ls),
                (None, other) => return self.err(format!("unexpected argument {other:?}")),
                (Some("labels"), Lit::List(ls)) => label = first_str(&ls),
                (Some("labels"), Lit::Str(s)) | (Some("type"), Lit::Str(s)) => label = Some(s),
                (Some("properties"), Lit::Dict(entries)) => {
                    for (k, v) in entries {
                        let (Key::Name(k) | Key::Token(k)) = k;
                        props.push((k, v));
                    }
                }
                (Some("id" | "element_id" | "nodes" | "start" | "end"), _) => {}
                (Some(k), v) => props.push((k.to_owned(), v)),
            }
            self.eat(',');
        }
        Ok(Lit::Element { edge, label, props })
    }
}

enum KeyOrValue {
    Key(Key),
    Value(Lit),
}

fn key_value(k: KeyOrValue) -> Lit {
    match k {
        KeyOrValue::Key(Key::Name(s) | Key::Token(s)) => Lit::Str(s),
        KeyOrValue::Value(v) => v,
    }
}

fn first_str(items: &[Lit]) -> Option<String> {
    items.iter().find_map(|l| match l {
        Lit::Str(s) => Some(s.clone()),
        _ => None,
    })
}

fn parse_lit(text: &str) -> Result<Lit, NormalizeError> {
    Parser::new(text).top()
}

const ENGINE_FIELDS: [&str; 2] = ["id", "tid"];

/// Dereferenced elements, keyed by `(is_edge, id)`.
type Resolved = HashMap<(bool, String), C>;

struct Canon<'r> {
    style: Style,
    resolved: &'r Resolved,
}

impl Canon<'_> {
    fn value(&self, lit: &Lit) -> Result<C, NormalizeError> {
        Ok(match lit {
            Lit::None => C::Null,
            Lit::Bool(b) => C::Bool(*b),
            Lit::Int(i) => C::Int(*i),
            Lit::Float(x) => C::Float(*x),
            Lit::Str(s) => {
                if self.style == Style::AgensIsh {
                    if let Some(el) = agens_element(s) {
                        return self.value(&el);
                    }
                }
                C::Str(s.clone())
            }
            Lit::List(items) | Lit::Tuple(items) | Lit::Seq(items) => {
                C::List(items.iter().map(|l| self.value(l)).collect::<Result<_, _>>()?)
            }
            Lit::Element { edge, label, props } => {
                let mut map = BTreeMap::new();
                for (k, v) in props {
                    map.insert(k.clone(), self.prop(v)?);
                }
                element(*edge, label.clone(), map)
            }
            Lit::Ref { edge, id } => self
                .resolved
                .get(&(*edge, id.clone()))
                .cloned()
                .ok_or_else(|| {
                    NormalizeError::Dereference(format!("{}[{id}] was not resolved", if *edge { "e" } else { "v" }))
                })?,
            Lit::Dict(entries) => self.dict(entries)?,
        })
    }

    fn prop(&self, v: &Lit) -> Result<C, NormalizeError> {
        match v {
            Lit::List(items) if items.len() == 1 && self.style == Style::GremlinText => self.value(&items[0]),
            other => self.value(other),
        }
    }

    fn dict(&self, entries: &[(Key, Lit)]) -> Result<C, NormalizeError> {
        let get = |name: &str| {
            entries.iter().find_map(|(k, v)| match k {
                Key::Name(n) if n == name => Some(v),
                _ => None,
            })
        };
        // GraphSON typed value
        if let (Some(Lit::Str(ty)), Some(v), 2) = (get("@type"), get("@value"), entries.len()) {
            let v = self.value(v)?;
            return Ok(match (ty.as_str(), v) {
                ("gx:BigDecimal" | "g:Double" | "g:Float", C::Int(i)) => C::Float(i as f64),
                (_, v) => v,
            });
        }
        if self.style == Style::AgensIsh {
            let engine_shaped = entries.iter().all(|(k, _)| {
                matches!(k, Key::Name(n) if ENGINE_FIELDS.contains(&n.as_str()) || n == "properties" || n == "label")
            });
            if let (true, Some(p)) = (engine_shaped, get("properties")) {
                let label = match get("label") {
                    Some(Lit::Str(s)) => Some(s.clone()),
                    _ => None,
                };
                let props = match p {
                    Lit::None => BTreeMap::new(),
                    Lit::Dict(inner) => self.map(inner)?,
                    other => return Err(NormalizeError::Shape(format!("bad properties {other:?}"))),
                };
                return Ok(element(false, label, props));
            }
        }
        let label = entries.iter().find_map(|(k, v)| match (k, v) {
            (Key::Token(t), Lit::Str(s)) if t == "label" => Some(s.clone()),
            _ => None,
        });
        Ok(element(false, label, self.map(entries)?))
    }

    fn map(&self, entries: &[(Key, Lit)]) -> Result<BTreeMap<String, C>, NormalizeError> {
        let mut out = BTreeMap::new();
        for (k, v) in entries {
            match k {
                Key::Token(_) => {}
                Key::Name(n) if ENGINE_FIELDS.contains(&n.as_str()) => {}
                Key::Name(n) => {
                    out.insert(n.clone(), self.prop(v)?);
                }
            }
        }
        Ok(out)
    }
}

fn element(edge: bool, label: Option<String>, props: BTreeMap<String, C>) -> C {
    let props = props.into_iter().filter(|(_, v)| !v.is_null()).collect();
    if edge {
        C::Edge { label, props }
    } else {
        C::Node { label, props }
    }
}

/// `label[graphid]{json}` or `label[graphid][start,end]{json}`.
fn agens_element(s: &str) -> Option<Lit> {
    let s = s.trim();
    if !s.starts_with(|c: char| c.is_alphabetic() || c == '_') || !s.ends_with('}') || !s.contains('[') {
        return None;
    }
    let mut p = Parser::new(s);
    p.bare_bools = true;
    match p.top() {
        Ok(el @ Lit::Element { .. }) => Some(el),
        _ => None,
    }
}

fn collect_refs(lit: &Lit, out: &mut Vec<(bool, String)>) {
    match lit {
        Lit::Ref { edge, id } => {
            if !out.contains(&(*edge, id.clone())) {
                out.push((*edge, id.clone()));
            }
        }
        Lit::List(items) | Lit::Tuple(items) | Lit::Seq(items) => items.iter().for_each(|l| collect_refs(l, out)),
        Lit::Dict(entries) => entries.iter().for_each(|(_, l)| collect_refs(l, out)),
        Lit::Element { props, .. } => props.iter().for_each(|(_, l)| collect_refs(l, out)),
        _ => {}
    }
}

/// One Rows item as a list of records, still in literal form.
fn item_records(item: &Json, style: Style) -> Result<Vec<Vec<Lit>>, NormalizeError> {
    let text = match item {
        Json::String(s) if style != Style::CanonicalJson => s,
        Json::String(s) => {
            let v: Json = serde_json::from_str(s).map_err(|e| NormalizeError::Parse {
                text: s.clone(),
                position: e.column(),
                message: e.to_string(),
            })?;
            return item_records(&v, style);
        }
        structured => {
            return Ok(vec![match structured {
                Json::Array(cells) => cells.iter().map(json_lit).collect(),
                other => vec![json_lit(other)],
            }])
        }
    };
    let lit = parse_lit(text)?;
    Ok(match (style, lit) {
        (Style::Neo4jIsh, Lit::List(cells)) | (Style::AgensIsh, Lit::Tuple(cells)) => vec![cells],
        (Style::GremlinText, Lit::List(items) | Lit::Seq(items)) => items.into_iter().map(|l| vec![l]).collect(),
        (_, Lit::Seq(_)) => {
            return Err(NormalizeError::Shape(format!(
                "`{text}` holds several records; split the transcript first"
            )))
        }
        (_, single) => vec![vec![single]],
    })
}

/// Structured rows are already canonical; wrap so the same pipeline applies.
fn json_lit(v: &Json) -> Lit {
    match v {
        Json::Null => Lit::None,
        Json::Bool(b) => Lit::Bool(*b),
        Json::Number(n) => n.as_i64().map(Lit::Int).unwrap_or_else(|| Lit::Float(n.as_f64().unwrap_or(f64::NAN))),
        Json::String(s) => Lit::Str(s.clone()),
        Json::Array(items) => Lit::List(items.iter().map(json_lit).collect()),
        Json::Object(map) => {
            for (tag, edge) in [("node", false), ("edge", true)] {
                if let (1, Some(Json::Object(inner))) = (map.len(), map.get(tag)) {
                    let label = inner.get("label").and_then(Json::as_str).map(str::to_owned);
                    let props = inner
                        .get("properties")
                        .and_then(Json::as_object)
                        .map(|p| p.iter().map(|(k, v)| (k.clone(), json_lit(v))).collect())
                        .unwrap_or_default();
                    return Lit::Element { edge, label, props };
                }
            }
            Lit::Dict(map.iter().map(|(k, v)| (Key::Name(k.clone()), json_lit(v))).collect())
        }
    }
}

fn finish(records: Vec<Vec<Lit>>, style: Style, resolved: &Resolved) -> Result<RecordSet, NormalizeError> {
    let canon = Canon { style, resolved };
    let records: Vec<Vec<C>> = records
        .iter()
        .map(|r| r.iter().map(|l| canon.value(l)).collect())
        .collect::<Result<_, _>>()?;
    let rs = RecordSet::unordered(records);
    if !rs.is_empty() && rs.arity().is_none() {
        return Err(NormalizeError::Shape("records have different arities".into()));
    }
    Ok(rs)
}

fn rows(raw: &RawResult) -> Result<&[Json], NormalizeError> {
    match raw {
        RawResult::Rows { rows } => Ok(rows),
        _ => Err(NormalizeError::NotRows),
    }
}

/// Normalizes a Cypher-side result. Each Rows item is one record.
pub fn normalize_cypher(raw: &RawResult, style: Style) -> Result<RecordSet, NormalizeError> {
    let mut records = Vec::new();
    for item in rows(raw)? {
        records.extend(item_records(item, style)?);
    }
    finish(records, style, &Resolved::new())
}

/// Normalizes a Gremlin result. String items are `toList()` printouts; `v[id]`/`e[id]` tokens
/// are resolved with one batched `valueMap(true)` query per element kind through `executor`.
pub fn normalize_gremlin(
    raw: &RawResult,
    executor: &mut dyn FnMut(&str) -> RawResult,
) -> Result<RecordSet, NormalizeError> {
    let mut records = Vec::new();
    for item in rows(raw)? {
        records.extend(item_records(item, Style::GremlinText)?);
    }
    let mut refs = Vec::new();
    records.iter().flatten().for_each(|l| collect_refs(l, &mut refs));
    let mut resolved = Resolved::new();
    for edge in [false, true] {
        let ids: Vec<&String> = refs.iter().filter(|(e, _)| *e == edge).map(|(_, id)| id).collect();
        if !ids.is_empty() {
            dereference(edge, &ids, executor, &mut resolved)?;
        }
    }
    finish(records, Style::GremlinText, &resolved)
}

fn id_literal(id: &str) -> String {
    if id.parse::<i64>().is_ok() {
        id.to_owned()
    } else {
        crate::model::quote_single(id)
    }
}

fn dereference(
    edge: bool,
    ids: &[&String],
    executor: &mut dyn FnMut(&str) -> RawResult,
    resolved: &mut Resolved,
) -> Result<(), NormalizeError> {
    let list: Vec<String> = ids.iter().map(|id| id_literal(id)).collect();
    let query = format!("g.{}({}).valueMap(true)", if edge { "E" } else { "V" }, list.join(", "));
    let reply = executor(&query);
    let items = match &reply {
        RawResult::Rows { rows } => rows,
        other => return Err(NormalizeError::Dereference(format!("`{query}` failed: {other:?}"))),
    };
    let mut maps = Vec::new();
    for item in items {
        maps.extend(item_records(item, Style::GremlinText)?.into_iter().flatten());
    }
    let map_id = |l: &Lit| match l {
        Lit::Dict(entries) => entries.iter().find_map(|(k, v)| match (k, v) {
            (Key::Token(t), Lit::Int(i)) if t == "id" => Some(i.to_string()),
            (Key::Token(t), Lit::Str(s)) if t == "id" => Some(s.clone()),
            _ => None,
        }),
        _ => None,
    };
    let canon = Canon {
        style: Style::GremlinText,
        resolved: &Resolved::new(),
    };
    let with_ids = maps.iter().all(|m| map_id(m).is_some());
    for (pos, m) in maps.iter().enumerate() {
        let key = match map_id(m) {
            Some(id) if with_ids => id,
            // without T.id keys the reply is read in request order
            _ if maps.len() == ids.len() => ids[pos].clone(),
            _ => {
                return Err(NormalizeError::Dereference(format!(
                    "`{query}` returned {} maps for {} ids",
                    maps.len(),
                    ids.len()
                )))
            }
        };
        let value = match canon.value(m)? {
            C::Node { label, props } if edge => C::Edge { label, props },
            v => v,
        };
        resolved.insert((edge, key), value);
    }
    for id in ids {
        if !resolved.contains_key(&(edge, (*id).clone())) {
            return Err(NormalizeError::Dereference(format!("{}[{id}] no longer exists", if edge { "e" } else { "v" })));
        }
    }
    Ok(())
}

/// Normalizes any style. Gremlin text without element references needs no executor.
pub fn normalize(raw: &RawResult, style: Style) -> Result<RecordSet, NormalizeError> {
    match style {
        Style::GremlinText => normalize_gremlin(raw, &mut |q| {
            RawResult::error("unavailable", format!("no executor for `{q}`"))
        }),
        other => normalize_cypher(raw, other),
    }
}

/// Splits a whole printed result (as copied from a driver session) into record texts' worth
/// of canonical records.
///
/// Cypher styles accept a list of records (`[[..], [..]]`, `[(..), (..)]`), several records
/// separated by commas (`[..], [..]`) or a single record. Gremlin text is a `toList()`
/// printout.
pub fn normalize_transcript(text: &str, style: Style) -> Result<RecordSet, NormalizeError> {
    if style == Style::CanonicalJson {
        let v: Json = serde_json::from_str(text).map_err(|e| NormalizeError::Parse {
            text: text.to_owned(),
            position: e.column(),
            message: e.to_string(),
        })?;
        let rows = match v {
            Json::Array(rows) => rows,
            other => vec![other],
        };
        return normalize_cypher(&RawResult::rows(rows), style);
    }
    let lit = parse_lit(text)?;
    let is_record = |l: &Lit| match style {
        Style::Neo4jIsh => matches!(l, Lit::List(_)),
        _ => matches!(l, Lit::Tuple(_)),
    };
    let cells = |l: Lit| match l {
        Lit::List(c) | Lit::Tuple(c) => c,
        other => vec![other],
    };
    let records: Vec<Vec<Lit>> = match (style, lit) {
        (Style::GremlinText, Lit::List(items) | Lit::Seq(items)) => items.into_iter().map(|l| vec![l]).collect(),
        (Style::GremlinText, single) => vec![vec![single]],
        (_, Lit::Seq(items)) => items.into_iter().map(cells).collect(),
        (_, Lit::List(items)) if !items.is_empty() && items.iter().all(is_record) => {
            items.into_iter().map(cells).collect()
        }
        (_, Lit::List(items)) if items.is_empty() => Vec::new(),
        (_, single) => vec![cells(single)],
    };
    finish(records, style, &Resolved::new())
}
