//! A deliberately naive evaluator for the supported query subset. Every MATCH tries every
//! assignment of graph elements to pattern variables and keeps the ones that fit.

use std::collections::{BTreeMap, HashSet};

use graphdiff::ir::{
    parse, CmpOp, CypherQuery, Direction, Expr, GremlinQuery, Literal, PathPattern, Pred, Projection,
    QueryIr, ReturnExpr, Source, Stage, Step,
};
use graphdiff::model::Properties;
use graphdiff::{CanonicalValue as C, Dialect, LabeledPropertyGraph, PropertyValue};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
enum B {
    Node(usize),
    Edge(usize),
    V(C),
}

type Row = BTreeMap<String, B>;

pub fn evaluate(g: &LabeledPropertyGraph, query: &str, dialect: Dialect) -> Vec<Vec<C>> {
    match parse(query, dialect).unwrap_or_else(|e| panic!("`{query}` is outside the subset: {e}")) {
        QueryIr::Cypher(q) => cypher(g, &q),
        QueryIr::Gremlin(q) => gremlin(g, &q),
    }
}

/// Exact key of a value, except that list items are taken in sorted order: collect() fixes
/// no element order.
fn bag_key(c: &C) -> String {
    match c {
        C::List(items) => {
            let mut keys: Vec<String> = items.iter().map(bag_key).collect();
            keys.sort();
            format!("[{}]", keys.join(","))
        }
        other => other.key(),
    }
}

/// Order-independent form of a result, for exact multiset comparison.
pub fn multiset(records: &[Vec<C>]) -> Vec<String> {
    let mut keys: Vec<String> = records
        .iter()
        .map(|r| r.iter().map(bag_key).collect::<Vec<_>>().join("|"))
        .collect();
    keys.sort();
    keys
}

fn props(p: &Properties) -> BTreeMap<String, C> {
    p.iter().map(|(k, v)| (k.clone(), C::from(v))).collect()
}

fn lit(l: &Literal) -> C {
    match l {
        Literal::Null => C::Null,
        Literal::Bool(b) => C::Bool(*b),
        Literal::Int(i) => C::Int(*i),
        Literal::Float(x) => C::Float(*x),
        Literal::Str(s) => C::Str(s.clone()),
        Literal::List(items) => C::List(items.iter().map(lit).collect()),
    }
}

fn has_props(p: &Properties, want: &[(String, Literal)]) -> bool {
    want.iter().all(|(k, l)| p.get(k).is_some_and(|v| C::from(v) == lit(l)))
}

// ---------------------------------------------------------------------------------------------
// Cypher

struct Vars {
    nodes: Vec<String>,
    rels: Vec<String>,
}

fn name_all(patterns: &[PathPattern]) -> (Vec<PathPattern>, Vars) {
    let mut n = 0;
    let mut fresh = |v: &mut Option<String>| {
        if v.is_none() {
            n += 1;
            *v = Some(format!("#{n}"));
        }
        v.clone().unwrap()
    };
    let mut vars = Vars { nodes: Vec::new(), rels: Vec::new() };
    let push = |list: &mut Vec<String>, name: String| {
        if !list.contains(&name) {
            list.push(name);
        }
    };
    let mut named = patterns.to_vec();
    for p in &mut named {
        let s = fresh(&mut p.start.var);
        push(&mut vars.nodes, s);
        for (r, node) in &mut p.hops {
            let rv = fresh(&mut r.var);
            push(&mut vars.rels, rv);
            let nv = fresh(&mut node.var);
            push(&mut vars.nodes, nv);
        }
    }
    (named, vars)
}

/// Every tuple in `0..n` of length `k`.
fn tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..n).map(move |i| {
                    let mut t = t.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

fn matches(g: &LabeledPropertyGraph, patterns: &[PathPattern], vars: &Vars) -> Vec<Row> {
    let mut rows = Vec::new();
    let at = |names: &[String], t: &[usize], v: &Option<String>| t[names.iter().position(|x| Some(x) == v.as_ref()).unwrap()];
    for nt in tuples(g.nodes.len(), vars.nodes.len()) {
        let node_ok = |pat: &graphdiff::ir::NodePat| {
            let n = &g.nodes[at(&vars.nodes, &nt, &pat.var)];
            pat.label.as_ref().is_none_or(|l| *l == n.label) && has_props(&n.properties, &pat.props)
        };
        if !patterns.iter().all(|p| node_ok(&p.start) && p.hops.iter().all(|(_, n)| node_ok(n))) {
            continue;
        }
        for et in tuples(g.edges.len(), vars.rels.len()) {
            let fits = patterns.iter().all(|p| {
                let mut from = at(&vars.nodes, &nt, &p.start.var);
                p.hops.iter().all(|(r, node)| {
                    let e = &g.edges[at(&vars.rels, &et, &r.var)];
                    let to = at(&vars.nodes, &nt, &node.var);
                    let (a, b) = (g.nodes[from].id, g.nodes[to].id);
                    let joined = match r.direction {
                        Direction::Out => e.src == a && e.dst == b,
                        Direction::In => e.src == b && e.dst == a,
                        Direction::Both => (e.src == a && e.dst == b) || (e.src == b && e.dst == a),
                    };
                    from = to;
                    joined && r.rel_type.as_ref().is_none_or(|t| *t == e.label) && has_props(&e.properties, &r.props)
                })
            });
            if fits {
                let mut row = Row::new();
                for (name, i) in vars.nodes.iter().zip(&nt) {
                    row.insert(name.clone(), B::Node(*i));
                }
                for (name, i) in vars.rels.iter().zip(&et) {
                    row.insert(name.clone(), B::Edge(*i));
                }
                rows.push(row);
            }
        }
    }
    rows
}

fn value(g: &LabeledPropertyGraph, e: &Expr, row: &Row) -> B {
    match e {
        Expr::Lit(l) => B::V(lit(l)),
        Expr::Var(v) => row[v].clone(),
        Expr::Prop(v, k) => {
            let p = match &row[v] {
                B::Node(i) => Some(&g.nodes[*i].properties),
                B::Edge(i) => Some(&g.edges[*i].properties),
                B::V(_) => None,
            };
            B::V(p.and_then(|p| p.get(k)).map_or(C::Null, C::from))
        }
    }
}

fn out(g: &LabeledPropertyGraph, b: &B) -> C {
    match b {
        B::Node(i) => C::Node { label: Some(g.nodes[*i].label.clone()), props: props(&g.nodes[*i].properties) },
        B::Edge(i) => C::Edge { label: Some(g.edges[*i].label.clone()), props: props(&g.edges[*i].properties) },
        B::V(c) => c.clone(),
    }
}

fn identity(b: &B) -> String {
    match b {
        B::Node(i) => format!("node {i}"),
        B::Edge(i) => format!("edge {i}"),
        B::V(c) => c.key(),
    }
}

/// `None` when the comparison is null.
fn test(a: &B, op: CmpOp, b: &B) -> Option<bool> {
    let equality_only = |same: bool| match op {
        CmpOp::Eq => Some(same),
        CmpOp::Ne => Some(!same),
        _ => None,
    };
    let ord = match (a, b) {
        (B::Node(x), B::Node(y)) | (B::Edge(x), B::Edge(y)) => return equality_only(x == y),
        (B::V(C::Int(x)), B::V(C::Int(y))) => (*x as f64).partial_cmp(&(*y as f64)),
        (B::V(C::Int(x)), B::V(C::Float(y))) => (*x as f64).partial_cmp(y),
        (B::V(C::Float(x)), B::V(C::Int(y))) => x.partial_cmp(&(*y as f64)),
        (B::V(C::Float(x)), B::V(C::Float(y))) => x.partial_cmp(y),
        (B::V(C::Str(x)), B::V(C::Str(y))) => Some(x.cmp(y)),
        (B::V(C::Bool(x)), B::V(C::Bool(y))) => Some(x.cmp(y)),
        (B::V(x @ C::List(_)), B::V(y @ C::List(_))) => return equality_only(x == y),
        _ => None,
    }?;
    use std::cmp::Ordering::*;
    Some(match op {
        CmpOp::Eq => ord == Equal,
        CmpOp::Ne => ord != Equal,
        CmpOp::Lt => ord == Less,
        CmpOp::Le => ord != Greater,
        CmpOp::Gt => ord == Greater,
        CmpOp::Ge => ord != Less,
    })
}

fn keep(g: &LabeledPropertyGraph, w: &Option<graphdiff::ir::BoolExpr>, row: &Row) -> bool {
    w.as_ref().is_none_or(|w| {
        w.conjuncts
            .iter()
            .all(|c| test(&value(g, &c.lhs, row), c.op, &value(g, &c.rhs, row)) == Some(true))
    })
}

fn sum(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.iter().sum()
}

fn fold(g: &LabeledPropertyGraph, agg: &ReturnExpr, rows: &[&Row]) -> C {
    let vals = |e: &Expr| rows.iter().map(|r| value(g, e, r)).collect::<Vec<_>>();
    let present = |v: &B| !matches!(v, B::V(C::Null));
    match agg {
        ReturnExpr::Count(None) => C::Int(rows.len() as i64),
        ReturnExpr::Count(Some(e)) => C::Int(vals(e).iter().filter(|v| present(v)).count() as i64),
        ReturnExpr::Sum(e) | ReturnExpr::Avg(e) => {
            let nums: Vec<C> = vals(e)
                .into_iter()
                .filter_map(|v| match v {
                    B::V(c @ (C::Int(_) | C::Float(_))) => Some(c),
                    _ => None,
                })
                .collect();
            if nums.is_empty() {
                return C::Null;
            }
            let mut fs: Vec<f64> = nums.iter().map(|c| c.as_f64().unwrap()).collect();
            match agg {
                ReturnExpr::Avg(_) => C::Float(sum(&mut fs) / fs.len() as f64),
                _ if nums.iter().all(|c| matches!(c, C::Int(_))) => {
                    C::Int(nums.iter().map(|c| if let C::Int(i) = c { *i } else { 0 }).sum())
                }
                _ => C::Float(sum(&mut fs)),
            }
        }
        ReturnExpr::Collect { expr, distinct } => {
            let mut items: Vec<C> = vals(expr).iter().filter(|v| present(v)).map(|v| out(g, v)).collect();
            if *distinct {
                let mut kept: Vec<C> = Vec::new();
                for c in items {
                    if !kept.contains(&c) {
                        kept.push(c);
                    }
                }
                items = kept;
            }
            C::List(items)
        }
        ReturnExpr::Plain(_) => unreachable!(),
    }
}

fn project(g: &LabeledPropertyGraph, p: &Projection, rows: &[Row]) -> Vec<Vec<B>> {
    let plain = |i: &graphdiff::ir::ReturnItem, r: &Row| match &i.expr {
        ReturnExpr::Plain(e) => Some(value(g, e, r)),
        _ => None,
    };
    let mut result: Vec<Vec<B>> = if !p.is_aggregating() {
        rows.iter().map(|r| p.items.iter().map(|i| plain(i, r).unwrap()).collect()).collect()
    } else {
        let mut groups: Vec<(Vec<String>, Vec<&Row>)> = Vec::new();
        for r in rows {
            let key: Vec<String> = p.items.iter().filter_map(|i| plain(i, r)).map(|b| identity(&b)).collect();
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, members)) => members.push(r),
                None => groups.push((key, vec![r])),
            }
        }
        if groups.is_empty() && p.items.iter().all(|i| !matches!(i.expr, ReturnExpr::Plain(_))) {
            groups.push((Vec::new(), Vec::new()));
        }
        groups
            .iter()
            .map(|(_, members)| {
                p.items
                    .iter()
                    .map(|i| match &i.expr {
                        ReturnExpr::Plain(e) => value(g, e, members[0]),
                        agg => B::V(fold(g, agg, members)),
                    })
                    .collect()
            })
            .collect()
    };
    if p.distinct {
        let mut seen = HashSet::new();
        result.retain(|r| seen.insert(r.iter().map(identity).collect::<Vec<_>>()));
    }
    result
}

fn cypher(g: &LabeledPropertyGraph, q: &CypherQuery) -> Vec<Vec<C>> {
    assert!(q.creates.is_empty(), "the oracle only reads");
    let (patterns, vars) = name_all(&q.patterns);
    let mut rows = if patterns.is_empty() { vec![Row::new()] } else { matches(g, &patterns, &vars) };
    rows.retain(|r| keep(g, &q.where_, r));
    for stage in &q.pipeline {
        match stage {
            Stage::Unwind { expr, alias } => {
                let mut next = Vec::new();
                for r in &rows {
                    let items = match value(g, expr, r) {
                        B::V(C::Null) => vec![],
                        B::V(C::List(xs)) => xs.into_iter().map(B::V).collect(),
                        other => vec![other],
                    };
                    for item in items {
                        let mut r = r.clone();
                        r.insert(alias.clone(), item);
                        next.push(r);
                    }
                }
                rows = next;
            }
            Stage::With { projection, where_ } => {
                rows = project(g, projection, &rows)
                    .into_iter()
                    .map(|vals| {
                        projection
                            .items
                            .iter()
                            .map(|i| i.binding_name().unwrap_or_default().to_owned())
                            .zip(vals)
                            .collect()
                    })
                    .collect();
                rows.retain(|r| keep(g, where_, r));
            }
        }
    }
    match &q.returns {
        Some(p) => project(g, p, &rows).iter().map(|r| r.iter().map(|b| out(g, b)).collect()).collect(),
        None => Vec::new(),
    }
}

// ---------------------------------------------------------------------------------------------
// Gremlin

fn gremlin(g: &LabeledPropertyGraph, q: &GremlinQuery) -> Vec<Vec<C>> {
    let wanted = |ids: &[Literal], have: Vec<u64>| -> Vec<u64> {
        if ids.is_empty() {
            return have;
        }
        ids.iter()
            .filter_map(|l| match l {
                Literal::Int(i) => Some(*i as u64),
                _ => None,
            })
            .filter(|id| have.contains(id))
            .collect()
    };
    let mut cur: Vec<B> = match &q.source {
        Source::V(ids) => wanted(ids, g.nodes.iter().map(|n| n.id).collect())
            .into_iter()
            .map(|id| B::Node(g.nodes.iter().position(|n| n.id == id).unwrap()))
            .collect(),
        Source::E(ids) => wanted(ids, g.edges.iter().map(|e| e.id).collect())
            .into_iter()
            .map(|id| B::Edge(g.edges.iter().position(|e| e.id == id).unwrap()))
            .collect(),
        Source::AddV(_) => panic!("the oracle only reads"),
    };
    let element = |b: &B| match b {
        B::Node(i) => Some((&g.nodes[*i].label, &g.nodes[*i].properties)),
        B::Edge(i) => Some((&g.edges[*i].label, &g.edges[*i].properties)),
        B::V(_) => None,
    };
    for step in &q.steps {
        cur = match step {
            Step::HasLabel(ls) => cur.into_iter().filter(|b| element(b).is_some_and(|(l, _)| ls.contains(l))).collect(),
            Step::Has(k) => cur.into_iter().filter(|b| element(b).is_some_and(|(_, p)| p.contains_key(k))).collect(),
            Step::HasValue(k, pred) => cur
                .into_iter()
                .filter(|b| element(b).and_then(|(_, p)| p.get(k)).is_some_and(|v| satisfies(v, pred)))
                .collect(),
            Step::Count => vec![B::V(C::Int(cur.len() as i64))],
            Step::ValueMap => cur
                .iter()
                .map(|b| match b {
                    B::Node(i) => B::V(C::Node { label: None, props: props(&g.nodes[*i].properties) }),
                    B::Edge(i) => B::V(C::Edge { label: None, props: props(&g.edges[*i].properties) }),
                    B::V(_) => panic!("valueMap over values"),
                })
                .collect(),
            Step::Property(..) | Step::Drop | Step::AddE { .. } => panic!("the oracle only reads"),
        };
    }
    cur.iter().map(|b| vec![out(g, b)]).collect()
}

fn satisfies(v: &PropertyValue, pred: &Pred) -> bool {
    let v = C::from(v);
    let cmp = |l: &Literal| test(&B::V(v.clone()), CmpOp::Lt, &B::V(lit(l))).map(|lt| {
        if lt {
            std::cmp::Ordering::Less
        } else if v == lit(l) {
            std::cmp::Ordering::Equal
        } else {
            std::cmp::Ordering::Greater
        }
    });
    use std::cmp::Ordering::*;
    match pred {
        Pred::Value(l) | Pred::Eq(l) => v == lit(l),
        Pred::Neq(l) => v != lit(l),
        Pred::Gt(l) => cmp(l) == Some(Greater),
        Pred::Gte(l) => matches!(cmp(l), Some(Greater | Equal)),
        Pred::Lt(l) => cmp(l) == Some(Less),
        Pred::Lte(l) => matches!(cmp(l), Some(Less | Equal)),
        Pred::Within(ls) => ls.iter().any(|l| v == lit(l)),
        Pred::Without(ls) => ls.iter().all(|l| v != lit(l)),
    }
}

// ---------------------------------------------------------------------------------------------
// Inputs

/// A small graph with mixed value types on every key, self-loops and parallel edges allowed.
pub fn random_graph(seed: u64) -> LabeledPropertyGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = graphdiff::GraphSchema {
        node_labels: vec!["nt0".into(), "nt1".into(), "nt2".into()],
        edge_labels: vec!["et0".into(), "et1".into()],
        property_keys: vec!["name".into(), "p0".into(), "p1".into(), "p2".into()],
    };
    let values = |rng: &mut ChaCha8Rng, name: String| {
        let mut p = Properties::new();
        p.insert("name".into(), PropertyValue::Str(name));
        for k in ["p0", "p1", "p2"] {
            if rng.random_bool(0.6) {
                let v = match rng.random_range(0..4) {
                    0 => PropertyValue::Int(rng.random_range(0..4)),
                    1 => PropertyValue::Float([1.0, 2.5, 3.0, 0.1][rng.random_range(0..4)]),
                    2 => PropertyValue::Str(["a", "b", "false"][rng.random_range(0..3)].into()),
                    _ => PropertyValue::Bool(rng.random_bool(0.5)),
                };
                p.insert(k.into(), v);
            }
        }
        p
    };
    let n = rng.random_range(1..=8);
    let nodes = (0..n)
        .map(|i| graphdiff::Node {
            id: i as u64,
            label: schema.node_labels[rng.random_range(0..3)].clone(),
            properties: values(&mut rng, format!("u{i}")),
        })
        .collect();
    let m = rng.random_range(0..=12);
    let edges = (0..m)
        .map(|j| graphdiff::Edge {
            id: 100 + j as u64,
            label: schema.edge_labels[rng.random_range(0..2)].clone(),
            src: rng.random_range(0..n) as u64,
            dst: rng.random_range(0..n) as u64,
            properties: values(&mut rng, format!("e{j}")),
        })
        .collect();
    LabeledPropertyGraph { schema, nodes, edges }
}

/// Queries inside the evaluated subset, covering each construct at least once.
pub const SUBSET_CORPUS: &[(Dialect, &str)] = &[
    (Dialect::Cypher, "MATCH (n) RETURN n"),
    (Dialect::Cypher, "MATCH (n:nt0) RETURN n.name"),
    (Dialect::Cypher, "MATCH (n) RETURN count(n)"),
    (Dialect::Cypher, "MATCH (n) RETURN count(*)"),
    (Dialect::Cypher, "MATCH (n:nt1) RETURN count(n), avg(n.p0)"),
    (Dialect::Cypher, "MATCH (n) RETURN sum(n.p1), avg(n.p1)"),
    (Dialect::Cypher, "MATCH (n) RETURN n.p0, count(n)"),
    (Dialect::Cypher, "MATCH (n) RETURN DISTINCT n.p0"),
    (Dialect::Cypher, "MATCH (n) WHERE n.p0 > 1 RETURN n.name"),
    (Dialect::Cypher, "MATCH (n) WHERE n.p1 = 'false' RETURN n.name"),
    (Dialect::Cypher, "MATCH (n) WHERE n.p2 <> true RETURN n.name, n.p2"),
    (Dialect::Cypher, "MATCH (n) WHERE n.p0 >= 1 AND n.p0 <= 2.5 RETURN n.name"),
    (Dialect::Cypher, "MATCH (n) WHERE n.p0 < n.p1 RETURN n.name"),
    (Dialect::Cypher, "MATCH (n {p2: true}) RETURN n.name"),
    (Dialect::Cypher, "MATCH (n)-[r]->(m) RETURN n.name, r.name, m.name"),
    (Dialect::Cypher, "MATCH (n)<-[r:et1]-(m) RETURN n.name, m.name"),
    (Dialect::Cypher, "MATCH (n:nt0)-[r]-() RETURN n.name AS Name, sum(r.p0) AS Total"),
    (Dialect::Cypher, "MATCH (n)-[r {p1: 'a'}]-(m:nt2) RETURN r"),
    (Dialect::Cypher, "MATCH (a)-[:et0]->(b)-[:et1]->(c) RETURN a.name, c.name"),
    (Dialect::Cypher, "MATCH (a)-[r]->(a) RETURN a.name"),
    (Dialect::Cypher, "MATCH (n)-[:et0]->(), ()-[:et1]->(n) RETURN count(n)"),
    (Dialect::Cypher, "MATCH (n)-[r]->() UNWIND n.p0 AS v RETURN v"),
    (Dialect::Cypher, "UNWIND [1, 2, null] AS x RETURN x"),
    (Dialect::Cypher, "MATCH (n)-[r]->() WITH n.p2 AS v RETURN v"),
    (Dialect::Cypher, "MATCH (n:nt0) WITH collect(n) AS ns RETURN DISTINCT ns"),
    (Dialect::Cypher, "MATCH (n)-[:et0]->(m) RETURN n, collect(m)"),
    (Dialect::Cypher, "MATCH (n)-[r]->(m) RETURN collect(DISTINCT m.p2) AS vs"),
    (Dialect::Cypher, "MATCH (n)-[r]->(m) WITH n, count(m) AS c WHERE c > 1 RETURN n.name, c"),
    (Dialect::Cypher, "MATCH (n)-[r]->(m) WHERE n.p0 = m.p0 RETURN n.name, m.name"),
    (Dialect::Cypher, "MATCH (n), (m) WHERE n.p2 = m.p2 RETURN count(*)"),
    (Dialect::Gremlin, "g.V()"),
    (Dialect::Gremlin, "g.V().count()"),
    (Dialect::Gremlin, "g.E().hasLabel('et0').count()"),
    (Dialect::Gremlin, "g.V().hasLabel('nt0', 'nt2').valueMap()"),
    (Dialect::Gremlin, "g.V().has('p1')"),
    (Dialect::Gremlin, "g.E().has('p2', without('a')).count()"),
    (Dialect::Gremlin, "g.V().has('p2', neq('false')).valueMap()"),
    (Dialect::Gremlin, "g.V().has('p2', neq(false)).valueMap()"),
    (Dialect::Gremlin, "g.V().has('p0', gt(1)).valueMap()"),
    (Dialect::Gremlin, "g.V().has('p0', lte(2.5))"),
    (Dialect::Gremlin, "g.E().has('p1', within('a', 1, true)).valueMap()"),
    (Dialect::Gremlin, "g.V().has('p0', 1)"),
    (Dialect::Gremlin, "g.V(0, 2, 5).valueMap()"),
    (Dialect::Gremlin, "g.E().has('p0', eq(3.0)).count()"),
];
