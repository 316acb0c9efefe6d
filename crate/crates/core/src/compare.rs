//! Meaning-level equivalence of two normalized results.
//!
//! Two results are equivalent when their records agree as multisets (or as sequences for
//! ordered queries) under canonical-value equality, with floats compared by relative tolerance.
//! `null` equals only `null`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ir::lex::{tokenize, Token};
use crate::model::Dialect;
use crate::value::{CanonicalValue as C, RecordSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerance {
    pub float_rel_tol: f64,
    pub float_abs_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            float_rel_tol: 1e-9,
            float_abs_tol: 1e-12,
        }
    }
}

impl Tolerance {
    pub fn relative(float_rel_tol: f64) -> Self {
        Tolerance {
            float_rel_tol,
            ..Tolerance::default()
        }
    }

    pub fn floats_equal(&self, a: f64, b: f64) -> bool {
        if a == b || (a.is_nan() && b.is_nan()) {
            return true;
        }
        let diff = (a - b).abs();
        diff <= self.float_abs_tol || diff <= self.float_rel_tol * a.abs().max(b.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscrepancyKind {
    Cardinality,
    Value,
    NullVsValue,
    MissingRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncomparableReason {
    NormalizationFailure,
    Unsupported,
    Timeout,
    EngineError,
}

macro_rules! kebab_display {
    ($t:ty { $($v:ident => $s:literal),* }) => {
        impl $t {
            pub fn as_str(self) -> &'static str {
                match self { $(Self::$v => $s),* }
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

kebab_display!(DiscrepancyKind {
    Cardinality => "cardinality",
    Value => "value",
    NullVsValue => "null-vs-value",
    MissingRecord => "missing-record"
});

kebab_display!(IncomparableReason {
    NormalizationFailure => "normalization-failure",
    Unsupported => "unsupported",
    Timeout => "timeout",
    EngineError => "engine-error"
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Equivalent,
    Discrepancy { kind: DiscrepancyKind, detail: String },
    Incomparable { reason: IncomparableReason, detail: String },
}

impl Verdict {
    pub fn tag(&self) -> &'static str {
        match self {
            Verdict::Equivalent => "equivalent",
            Verdict::Discrepancy { .. } => "discrepancy",
            Verdict::Incomparable { .. } => "incomparable",
        }
    }

    pub fn is_discrepancy(&self) -> bool {
        matches!(self, Verdict::Discrepancy { .. })
    }

    fn discrepancy(kind: DiscrepancyKind, detail: impl Into<String>) -> Self {
        Verdict::Discrepancy {
            kind,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Equivalent => f.write_str("equivalent"),
            Verdict::Discrepancy { kind, detail } => write!(f, "discrepancy ({kind}): {detail}"),
            Verdict::Incomparable { reason, detail } => write!(f, "incomparable ({reason}): {detail}"),
        }
    }
}

/// Cell equality. Lists are compared as multisets unless `ordered`.
pub fn values_equal(a: &C, b: &C, tol: &Tolerance, ordered: bool) -> bool {
    match (a, b) {
        (C::Null, C::Null) => true,
        (C::Null, _) | (_, C::Null) => false,
        (C::Int(x), C::Int(y)) => x == y,
        (C::Int(_) | C::Float(_), C::Int(_) | C::Float(_)) => {
            tol.floats_equal(a.as_f64().unwrap(), b.as_f64().unwrap())
        }
        (C::Bool(x), C::Bool(y)) => x == y,
        (C::Str(x), C::Str(y)) => x == y,
        (C::List(xs), C::List(ys)) => {
            if xs.len() != ys.len() {
                return false;
            }
            if ordered {
                xs.iter().zip(ys).all(|(x, y)| values_equal(x, y, tol, ordered))
            } else {
                let rows_a: Vec<Vec<C>> = xs.iter().map(|x| vec![x.clone()]).collect();
                let rows_b: Vec<Vec<C>> = ys.iter().map(|y| vec![y.clone()]).collect();
                unmatched(&rows_a, &rows_b, tol).0.is_empty()
            }
        }
        _ => match (a.props(), b.props()) {
            (Some(pa), Some(pb)) => {
                pa.len() == pb.len()
                    && pa
                        .iter()
                        .all(|(k, v)| pb.get(k).is_some_and(|w| values_equal(v, w, tol, ordered)))
            }
            _ => false,
        },
    }
}

fn records_equal(a: &[C], b: &[C], tol: &Tolerance) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| values_equal(x, y, tol, false))
}

/// Exact key with list elements sorted, so records equal as multisets share it when they
/// contain no tolerance-sensitive floats.
fn sorted_key(v: &C) -> String {
    match v {
        C::List(items) => {
            let mut keys: Vec<String> = items.iter().map(sorted_key).collect();
            keys.sort();
            format!("[{}]", keys.join(","))
        }
        C::Node { props, .. } | C::Edge { props, .. } => {
            let inner: Vec<String> = props.iter().map(|(k, v)| format!("{}:{k}={}", k.len(), sorted_key(v))).collect();
            format!("{{{}}}", inner.join(","))
        }
        other => other.key(),
    }
}

fn record_key(r: &[C]) -> String {
    r.iter().map(sorted_key).collect::<Vec<_>>().join("|")
}

/// Pairs records of `a` with equal records of `b`: exact keys first, then maximum bipartite
/// matching under tolerance for the rest. Returns the unmatched indices of each side.
fn unmatched(a: &[Vec<C>], b: &[Vec<C>], tol: &Tolerance) -> (Vec<usize>, Vec<usize>) {
    let mut by_key: HashMap<String, Vec<usize>> = HashMap::new();
    for (j, r) in b.iter().enumerate().rev() {
        by_key.entry(record_key(r)).or_default().push(j);
    }
    let mut left_a = Vec::new();
    for (i, r) in a.iter().enumerate() {
        match by_key.get_mut(&record_key(r)).and_then(Vec::pop) {
            Some(_) => {}
            None => left_a.push(i),
        }
    }
    let mut left_b: Vec<usize> = by_key.into_values().flatten().collect();
    left_b.sort_unstable();
    if left_a.is_empty() || left_b.is_empty() {
        return (left_a, left_b);
    }

    let adj: Vec<Vec<usize>> = left_a
        .iter()
        .map(|&i| {
            (0..left_b.len())
                .filter(|&k| records_equal(&a[i], &b[left_b[k]], tol))
                .collect()
        })
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; left_b.len()];
    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &k in &adj[u] {
            if seen[k] {
                continue;
            }
            seen[k] = true;
            if owner[k].is_none_or(|w| augment(w, adj, seen, owner)) {
                owner[k] = Some(u);
                return true;
            }
        }
        false
    }
    let mut matched_a = vec![false; left_a.len()];
    for u in 0..left_a.len() {
        let mut seen = vec![false; left_b.len()];
        matched_a[u] = augment(u, &adj, &mut seen, &mut owner);
    }
    let rest_a = left_a
        .iter()
        .zip(&matched_a)
        .filter(|(_, m)| !**m)
        .map(|(i, _)| *i)
        .collect();
    let rest_b = left_b
        .iter()
        .zip(&owner)
        .filter(|(_, o)| o.is_none())
        .map(|(j, _)| *j)
        .collect();
    (rest_a, rest_b)
}

fn show(r: &[C]) -> String {
    let cells: Vec<String> = r.iter().map(ToString::to_string).collect();
    format!("({})", cells.join(", "))
}

/// Classifies the difference between two records already known to differ.
fn record_difference(ra: &[C], rb: &[C], tol: &Tolerance, ordered: bool) -> (DiscrepancyKind, Vec<usize>, bool) {
    let differing: Vec<usize> = (0..ra.len())
        .filter(|&c| !values_equal(&ra[c], &rb[c], tol, ordered))
        .collect();
    let null_only = !differing.is_empty() && differing.iter().all(|&c| ra[c].is_null() != rb[c].is_null());
    let kind = if null_only {
        DiscrepancyKind::NullVsValue
    } else if ra.len() > 1 && differing.len() == ra.len() {
        DiscrepancyKind::MissingRecord
    } else {
        DiscrepancyKind::Value
    };
    (kind, differing, null_only)
}

fn columns(cols: &[usize]) -> String {
    let names: Vec<String> = cols.iter().map(|c| (c + 1).to_string()).collect();
    format!("column{} {}", if cols.len() > 1 { "s" } else { "" }, names.join(", "))
}

pub fn compare_results(a: &RecordSet, b: &RecordSet, ordered: bool, tol: &Tolerance) -> Verdict {
    if let (Some(x), Some(y)) = (a.arity(), b.arity()) {
        if x != y {
            return Verdict::discrepancy(DiscrepancyKind::Cardinality, format!("arity {x} vs {y}"));
        }
    }
    if a.len() != b.len() {
        return Verdict::discrepancy(
            DiscrepancyKind::Cardinality,
            format!("{} records vs {}", a.len(), b.len()),
        );
    }
    if ordered {
        for (n, (ra, rb)) in a.records.iter().zip(&b.records).enumerate() {
            if ra.len() != rb.len() || !ra.iter().zip(rb).all(|(x, y)| values_equal(x, y, tol, true)) {
                let (kind, cols, _) = record_difference(ra, rb, tol, true);
                return Verdict::discrepancy(
                    kind,
                    format!("record {} differs at {}: {} vs {}", n + 1, columns(&cols), show(ra), show(rb)),
                );
            }
        }
        return Verdict::Equivalent;
    }
    let (ua, ub) = unmatched(&a.records, &b.records, tol);
    if ua.is_empty() {
        return Verdict::Equivalent;
    }
    // explain with the closest unmatched pair, preferring null-vs-value explanations
    let mut best: Option<(bool, usize, usize, usize)> = None;
    for &i in &ua {
        for &j in &ub {
            let (_, cols, null_only) = record_difference(&a.records[i], &b.records[j], tol, false);
            let cand = (!null_only, cols.len(), i, j);
            if best.is_none_or(|b| (cand.0, cand.1) < (b.0, b.1)) {
                best = Some(cand);
            }
        }
    }
    let (_, _, i, j) = best.expect("both sides have unmatched records");
    let (ra, rb) = (&a.records[i], &b.records[j]);
    let (kind, cols, _) = record_difference(ra, rb, tol, false);
    Verdict::discrepancy(
        kind,
        format!(
            "{} unmatched record(s); closest pair differs at {}: {} vs {}",
            ua.len(),
            columns(&cols),
            show(ra),
            show(rb)
        ),
    )
}

/// True when the query asks for an order: Cypher `ORDER BY` or Gremlin `order().by(`.
pub fn is_ordered_query(text: &str, dialect: Dialect) -> bool {
    let Ok(tokens) = tokenize(text) else {
        return false;
    };
    let word = |i: usize| tokens.get(i).and_then(Token::ident);
    let punct = |i: usize, p: &str| tokens.get(i).is_some_and(|t| t.is_punct(p));
    (0..tokens.len()).any(|i| match dialect {
        Dialect::Cypher => {
            word(i).is_some_and(|w| w.eq_ignore_ascii_case("ORDER"))
                && word(i + 1).is_some_and(|w| w.eq_ignore_ascii_case("BY"))
        }
        Dialect::Gremlin => {
            word(i) == Some("order")
                && punct(i + 1, "(")
                && punct(i + 2, ")")
                && punct(i + 3, ".")
                && word(i + 4) == Some("by")
        }
    })
}

/// What one engine produced for a query, after normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum EngineOutcome {
    Rows { records: RecordSet },
    Error { class: String, message: String },
    Timeout,
    NormalizationFailure { message: String },
}

impl EngineOutcome {
    pub fn records(&self) -> Option<&RecordSet> {
        match self {
            EngineOutcome::Rows { records } => Some(records),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub verdict: Verdict,
    pub non_empty_a: Option<bool>,
    pub non_empty_b: Option<bool>,
}

pub fn classify_pair(
    query: &str,
    dialect: Dialect,
    a: &EngineOutcome,
    b: &EngineOutcome,
    tol: &Tolerance,
) -> PairOutcome {
    use EngineOutcome as O;
    let incomparable = |reason, detail: String| Verdict::Incomparable { reason, detail };
    let verdict = match (a, b) {
        (O::Error { class: ca, .. }, O::Error { class: cb, .. }) if ca == cb => Verdict::Equivalent,
        (O::Timeout, _) | (_, O::Timeout) => incomparable(IncomparableReason::Timeout, "engine timed out".into()),
        (O::NormalizationFailure { message }, _) | (_, O::NormalizationFailure { message }) => {
            incomparable(IncomparableReason::NormalizationFailure, message.clone())
        }
        (O::Error { class, message }, _) | (_, O::Error { class, message }) => {
            let reason = if class == "unsupported" {
                IncomparableReason::Unsupported
            } else {
                IncomparableReason::EngineError
            };
            incomparable(reason, format!("{class}: {message}"))
        }
        (O::Rows { records: ra }, O::Rows { records: rb }) => {
            compare_results(ra, rb, is_ordered_query(query, dialect), tol)
        }
    };
    PairOutcome {
        verdict,
        non_empty_a: a.records().map(|r| r.non_empty),
        non_empty_b: b.records().map(|r| r.non_empty),
    }
}
