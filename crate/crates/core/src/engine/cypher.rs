use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use super::{stable_sum, EngineError, Fault, FaultSet, Store};
use crate::ir::{
    BoolExpr, CmpOp, CypherQuery, Direction, Expr, Literal, NodePat, PathPattern, Projection,
    RelPat, ReturnExpr, Stage,
};
use crate::model::PropertyValue;
use crate::value::{CanonicalValue as C, RecordSet};

#[derive(Debug, Clone)]
enum Val {
    Node(u64),
    Edge(u64),
    V(C),
}

type Row = BTreeMap<String, Val>;

pub(super) fn execute(store: &mut Store, q: &CypherQuery, faults: FaultSet) -> Result<RecordSet, EngineError> {
    let patterns = name_anonymous(&q.patterns, "m");
    let mut rows = if patterns.is_empty() {
        vec![Row::new()]
    } else if faults.has(Fault::F6) && patterns.len() > 1 {
        cross_join(store, &patterns)
    } else {
        let mut rows = vec![Row::new()];
        for p in &patterns {
            rows = rows
                .iter()
                .flat_map(|r| match_path(store, p, r))
                .collect();
        }
        rows
    };
    if let Some(w) = &q.where_ {
        rows.retain(|r| holds(store, w, r, faults));
    }
    for stage in &q.pipeline {
        rows = match stage {
            Stage::Unwind { expr, alias } => unwind(store, rows, expr, alias, faults),
            Stage::With { projection, where_ } => {
                let names: Vec<String> = projection
                    .items
                    .iter()
                    .map(|i| i.binding_name().unwrap_or_default().to_owned())
                    .collect();
                let projected = project(store, projection, &rows, faults);
                let mut next: Vec<Row> = projected
                    .into_iter()
                    .map(|vals| names.iter().cloned().zip(vals).collect())
                    .collect();
                if let Some(w) = where_ {
                    next.retain(|r| holds(store, w, r, faults));
                }
                next
            }
        };
    }
    if !q.creates.is_empty() {
        let creates = name_anonymous(&q.creates, "c");
        for row in &mut rows {
            create(store, &creates, row, faults)?;
        }
    }
    let Some(ret) = &q.returns else {
        return Ok(RecordSet::unordered(Vec::new()));
    };
    let records = project(store, ret, &rows, faults)
        .into_iter()
        .map(|vals| vals.iter().map(|v| output(store, v)).collect())
        .collect();
    Ok(RecordSet::unordered(records))
}

/// Gives unnamed pattern elements internal names that cannot collide with parsed ones.
fn name_anonymous(patterns: &[PathPattern], tag: &str) -> Vec<PathPattern> {
    let mut n = 0;
    let mut fresh = || {
        n += 1;
        format!("\u{0}{tag}{n}")
    };
    patterns
        .iter()
        .map(|p| {
            let mut p = p.clone();
            if p.start.var.is_none() {
                p.start.var = Some(fresh());
            }
            for (r, node) in &mut p.hops {
                if r.var.is_none() {
                    r.var = Some(fresh());
                }
                if node.var.is_none() {
                    node.var = Some(fresh());
                }
            }
            p
        })
        .collect()
}

fn props_match(props: &crate::model::Properties, want: &[(String, Literal)]) -> bool {
    want.iter().all(|(k, lit)| match (props.get(k), lit.to_property()) {
        (Some(have), Some(w)) => C::from(have) == C::from(&w),
        _ => false,
    })
}

fn node_ok(store: &Store, id: u64, pat: &NodePat) -> bool {
    let n = &store.nodes[&id];
    pat.label.as_ref().is_none_or(|l| *l == n.label) && props_match(&n.props, &pat.props)
}

fn bind(row: &Row, var: &Option<String>, val: Val) -> Option<Row> {
    let var = var.as_ref()?;
    match (row.get(var), &val) {
        (None, _) => {
            let mut r = row.clone();
            r.insert(var.clone(), val);
            Some(r)
        }
        (Some(Val::Node(a)), Val::Node(b)) | (Some(Val::Edge(a)), Val::Edge(b)) if a == b => {
            Some(row.clone())
        }
        _ => None,
    }
}

/// All extensions of `row` that match the path, in node-id then edge-id order.
fn match_path(store: &Store, p: &PathPattern, row: &Row) -> Vec<Row> {
    let mut partial: Vec<(Row, u64)> = store
        .nodes
        .keys()
        .filter(|id| node_ok(store, **id, &p.start))
        .filter_map(|id| bind(row, &p.start.var, Val::Node(*id)).map(|r| (r, *id)))
        .collect();
    for (rel, node) in &p.hops {
        let mut next = Vec::new();
        for (r, at) in &partial {
            for (eid, other) in steps(store, *at, rel) {
                if !node_ok(store, other, node) {
                    continue;
                }
                let Some(r2) = bind(r, &rel.var, Val::Edge(eid)) else { continue };
                let Some(r3) = bind(&r2, &node.var, Val::Node(other)) else { continue };
                next.push((r3, other));
            }
        }
        partial = next;
    }
    partial.into_iter().map(|(r, _)| r).collect()
}

/// Edges leaving `at` that satisfy `rel`, with the node at their far end.
fn steps(store: &Store, at: u64, rel: &RelPat) -> Vec<(u64, u64)> {
    store
        .edges
        .iter()
        .filter(|(_, e)| rel.rel_type.as_ref().is_none_or(|t| *t == e.label))
        .filter(|(_, e)| props_match(&e.props, &rel.props))
        .filter_map(|(id, e)| {
            let out = e.src == at && matches!(rel.direction, Direction::Out | Direction::Both);
            let inc = e.dst == at && matches!(rel.direction, Direction::In | Direction::Both);
            if out {
                Some((*id, e.dst))
            } else if inc {
                Some((*id, e.src))
            } else {
                None
            }
        })
        .collect()
}

/// Each pattern matched on its own, then every combination kept; a variable bound by an
/// earlier pattern keeps that binding.
fn cross_join(store: &Store, patterns: &[PathPattern]) -> Vec<Row> {
    let mut rows = vec![Row::new()];
    for p in patterns {
        let matches = match_path(store, p, &Row::new());
        let mut next = Vec::new();
        for r in &rows {
            for m in &matches {
                let mut joined = r.clone();
                for (k, v) in m {
                    joined.entry(k.clone()).or_insert_with(|| v.clone());
                }
                next.push(joined);
            }
        }
        rows = next;
    }
    rows
}

fn lit_value(l: &Literal) -> C {
    match l {
        Literal::Null => C::Null,
        Literal::Bool(b) => C::Bool(*b),
        Literal::Int(i) => C::Int(*i),
        Literal::Float(x) => C::Float(*x),
        Literal::Str(s) => C::Str(s.clone()),
        Literal::List(items) => C::List(items.iter().map(lit_value).collect()),
    }
}

fn eval(store: &Store, e: &Expr, row: &Row) -> Val {
    match e {
        Expr::Lit(l) => Val::V(lit_value(l)),
        Expr::Var(v) => row.get(v).cloned().unwrap_or(Val::V(C::Null)),
        Expr::Prop(v, k) => {
            let props = match row.get(v) {
                Some(Val::Node(id)) => store.nodes.get(id).map(|n| &n.props),
                Some(Val::Edge(id)) => store.edges.get(id).map(|e| &e.props),
                _ => None,
            };
            Val::V(props.and_then(|p| p.get(k)).map_or(C::Null, C::from))
        }
    }
}

fn output(store: &Store, v: &Val) -> C {
    match v {
        Val::Node(id) => store.node_value(*id, true),
        Val::Edge(id) => store.edge_value(*id, true),
        Val::V(c) => c.clone(),
    }
}

/// Three-valued comparison; `None` is null.
fn compare(a: &Val, op: CmpOp, b: &Val, faults: FaultSet) -> Option<bool> {
    let ord: Option<Ordering> = match (a, b) {
        (Val::Node(x), Val::Node(y)) | (Val::Edge(x), Val::Edge(y)) => {
            return match op {
                CmpOp::Eq => Some(x == y),
                CmpOp::Ne => Some(x != y),
                _ => None,
            }
        }
        (Val::V(x), Val::V(y)) => match (x, y) {
            (C::Null, _) | (_, C::Null) => return None,
            (C::Int(_) | C::Float(_), C::Int(_) | C::Float(_)) => {
                x.as_f64()?.partial_cmp(&y.as_f64()?)
            }
            (C::Str(s), C::Str(t)) => Some(s.cmp(t)),
            (C::Bool(s), C::Bool(t)) => Some(s.cmp(t)),
            (C::Bool(_), C::Int(_)) if faults.has(Fault::F5) => Some(Ordering::Greater),
            (C::Int(_), C::Bool(_)) if faults.has(Fault::F5) => Some(Ordering::Less),
            (C::List(_), C::List(_)) => {
                return match op {
                    CmpOp::Eq => Some(x == y),
                    CmpOp::Ne => Some(x != y),
                    _ => None,
                }
            }
            _ => return None,
        },
        _ => return None,
    };
    let ord = ord?;
    Some(match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
    })
}

fn holds(store: &Store, w: &BoolExpr, row: &Row, faults: FaultSet) -> bool {
    w.conjuncts.iter().all(|c| {
        compare(&eval(store, &c.lhs, row), c.op, &eval(store, &c.rhs, row), faults) == Some(true)
    })
}

fn unwind(store: &Store, rows: Vec<Row>, expr: &Expr, alias: &str, faults: FaultSet) -> Vec<Row> {
    if faults.has(Fault::F3) && matches!(expr, Expr::Prop(..)) {
        return Vec::new();
    }
    let mut out = Vec::new();
    for row in rows {
        let items = match eval(store, expr, &row) {
            Val::V(C::Null) => vec![],
            Val::V(C::List(items)) => items.into_iter().map(Val::V).collect(),
            v => vec![v],
        };
        for item in items {
            let mut r = row.clone();
            r.insert(alias.to_owned(), item);
            out.push(r);
        }
    }
    out
}

/// Identity key for grouping and DISTINCT; elements by id, values by canonical equality.
fn val_key(v: &Val) -> String {
    match v {
        Val::Node(id) => format!("n{id}"),
        Val::Edge(id) => format!("e{id}"),
        Val::V(c) => format!("v{}", c.key()),
    }
}

fn project(store: &Store, p: &Projection, rows: &[Row], faults: FaultSet) -> Vec<Vec<Val>> {
    let mut out: Vec<Vec<Val>> = if p.is_aggregating() {
        aggregate(store, p, rows, faults)
    } else {
        rows.iter()
            .map(|r| {
                p.items
                    .iter()
                    .map(|i| match &i.expr {
                        ReturnExpr::Plain(e) => eval(store, e, r),
                        _ => unreachable!("non-aggregating projection"),
                    })
                    .collect()
            })
            .collect()
    };
    if p.distinct {
        let mut seen = HashSet::new();
        out.retain(|vals| seen.insert(vals.iter().map(val_key).collect::<Vec<_>>()));
    }
    out
}

/// The property a count(v) must be filtered on under F1: another aggregate over `v.key` in
/// the same projection.
fn f1_filter(p: &Projection, var: &str) -> Option<String> {
    p.items.iter().find_map(|i| match &i.expr {
        ReturnExpr::Avg(Expr::Prop(v, k)) | ReturnExpr::Sum(Expr::Prop(v, k)) if v == var => {
            Some(k.clone())
        }
        _ => None,
    })
}

fn aggregate(store: &Store, p: &Projection, rows: &[Row], faults: FaultSet) -> Vec<Vec<Val>> {
    let key_items: Vec<usize> = (0..p.items.len())
        .filter(|i| matches!(p.items[*i].expr, ReturnExpr::Plain(_)))
        .collect();
    let mut groups: Vec<(Vec<Val>, Vec<&Row>)> = Vec::new();
    let mut index: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    for r in rows {
        let keys: Vec<Val> = key_items
            .iter()
            .map(|i| match &p.items[*i].expr {
                ReturnExpr::Plain(e) => eval(store, e, r),
                _ => unreachable!(),
            })
            .collect();
        let k: Vec<String> = keys.iter().map(val_key).collect();
        let slot = *index.entry(k).or_insert_with(|| {
            groups.push((keys, Vec::new()));
            groups.len() - 1
        });
        groups[slot].1.push(r);
    }
    if groups.is_empty() && key_items.is_empty() {
        groups.push((Vec::new(), Vec::new()));
    }
    groups
        .into_iter()
        .map(|(keys, members)| {
            let mut keys = keys.into_iter();
            p.items
                .iter()
                .map(|item| match &item.expr {
                    ReturnExpr::Plain(_) => keys.next().expect("group key"),
                    agg => Val::V(fold(store, p, agg, &members, faults)),
                })
                .collect()
        })
        .collect()
}

fn fold(store: &Store, p: &Projection, agg: &ReturnExpr, rows: &[&Row], faults: FaultSet) -> C {
    let values = |e: &Expr| -> Vec<Val> { rows.iter().map(|r| eval(store, e, r)).collect() };
    let is_null = |v: &Val| matches!(v, Val::V(C::Null));
    match agg {
        ReturnExpr::Count(None) => C::Int(rows.len() as i64),
        ReturnExpr::Count(Some(e)) => {
            let filter = match e {
                Expr::Var(v) if faults.has(Fault::F1) => f1_filter(p, v).map(|k| (v.clone(), k)),
                _ => None,
            };
            let n = rows
                .iter()
                .filter(|r| !is_null(&eval(store, e, r)))
                .filter(|r| match &filter {
                    Some((v, k)) => !is_null(&eval(store, &Expr::Prop(v.clone(), k.clone()), r)),
                    None => true,
                })
                .count();
            C::Int(n as i64)
        }
        ReturnExpr::Sum(e) | ReturnExpr::Avg(e) => {
            let nums: Vec<C> = values(e)
                .into_iter()
                .filter_map(|v| match v {
                    Val::V(c @ (C::Int(_) | C::Float(_))) => Some(c),
                    _ => None,
                })
                .collect();
            if nums.is_empty() {
                return match agg {
                    ReturnExpr::Sum(_) if faults.has(Fault::F2) => C::Int(0),
                    _ => C::Null,
                };
            }
            let all_int = nums.iter().all(|c| matches!(c, C::Int(_)));
            let floats: Vec<f64> = nums.iter().filter_map(C::as_f64).collect();
            match agg {
                ReturnExpr::Sum(_) if all_int => {
                    let mut ints = nums.iter().map(|c| match c {
                        C::Int(i) => *i,
                        _ => 0,
                    });
                    ints.try_fold(0i64, i64::checked_add)
                        .map_or_else(|| C::Float(stable_sum(floats.clone())), C::Int)
                }
                ReturnExpr::Sum(_) => C::Float(stable_sum(floats)),
                _ => {
                    let n = floats.len() as f64;
                    C::Float(stable_sum(floats) / n)
                }
            }
        }
        ReturnExpr::Collect { expr, distinct } => {
            let vals = values(expr);
            let had_null = vals.iter().any(is_null);
            let mut items: Vec<C> = vals
                .iter()
                .filter(|v| !is_null(v))
                .map(|v| match v {
                    Val::Node(_) if faults.has(Fault::F4) => C::Node {
                        label: None,
                        props: BTreeMap::new(),
                    },
                    v => output(store, v),
                })
                .collect();
            if *distinct {
                let mut seen = HashSet::new();
                items.retain(|c| seen.insert(c.key()));
                if had_null && faults.has(Fault::F7) {
                    items.push(C::Null);
                }
            }
            C::List(items)
        }
        ReturnExpr::Plain(_) => unreachable!("not an aggregate"),
    }
}

fn create(store: &mut Store, patterns: &[PathPattern], row: &mut Row, faults: FaultSet) -> Result<(), EngineError> {
    let node = |store: &mut Store, row: &mut Row, pat: &NodePat| -> Result<u64, EngineError> {
        let var = pat.var.clone().unwrap_or_default();
        if let Some(v) = row.get(&var) {
            return match v {
                Val::Node(id) if pat.label.is_none() && pat.props.is_empty() => Ok(*id),
                Val::Node(_) => Err(EngineError::Runtime(format!(
                    "variable `{var}` is already bound and cannot be redeclared"
                ))),
                _ => Err(EngineError::Runtime(format!("`{var}` is not a node"))),
            };
        }
        let label = pat
            .label
            .as_deref()
            .ok_or_else(|| EngineError::Unsupported("CREATE of an unlabeled node".into()))?;
        let id = store.add_node(label);
        for (k, lit) in &pat.props {
            store.set_node_prop(id, k, property(lit)?, faults);
        }
        row.insert(var, Val::Node(id));
        Ok(id)
    };
    for p in patterns {
        let mut at = node(store, row, &p.start)?;
        for (rel, next) in &p.hops {
            let other = node(store, row, next)?;
            let (src, dst) = match rel.direction {
                Direction::Out => (at, other),
                Direction::In => (other, at),
                Direction::Both => {
                    return Err(EngineError::Runtime(
                        "CREATE needs a directed relationship".into(),
                    ))
                }
            };
            let label = rel
                .rel_type
                .as_deref()
                .ok_or_else(|| EngineError::Runtime("CREATE needs a relationship type".into()))?;
            let id = store.add_edge(label, src, dst);
            for (k, lit) in &rel.props {
                store.set_edge_prop(id, k, property(lit)?, faults);
            }
            if let Some(v) = &rel.var {
                row.insert(v.clone(), Val::Edge(id));
            }
            at = other;
        }
    }
    Ok(())
}

fn property(lit: &Literal) -> Result<PropertyValue, EngineError> {
    lit.to_property()
        .ok_or_else(|| EngineError::Unsupported("null or list property value".into()))
}
