use std::cmp::Ordering;

use super::{EngineError, Fault, FaultSet, Store};
use crate::ir::{EdgeEnd, GremlinQuery, Literal, Pred, Source, Step};
use crate::model::{Properties, PropertyValue};
use crate::value::{CanonicalValue as C, RecordSet};

#[derive(Debug, Clone)]
enum Trav {
    Node(u64),
    Edge(u64),
    V(C),
}

pub(super) fn execute(store: &mut Store, q: &GremlinQuery, faults: FaultSet) -> Result<RecordSet, EngineError> {
    let out = traverse(store, q, faults)?;
    let records = out
        .iter()
        .map(|t| {
            vec![match t {
                Trav::Node(id) => store.node_value(*id, true),
                Trav::Edge(id) => store.edge_value(*id, true),
                Trav::V(c) => c.clone(),
            }]
        })
        .collect();
    Ok(RecordSet::unordered(records))
}

fn ids(lits: &[Literal]) -> Result<Vec<u64>, EngineError> {
    lits.iter()
        .map(|l| match l {
            Literal::Int(i) if *i >= 0 => Ok(*i as u64),
            _ => Err(EngineError::Runtime(format!("not an element id: {l}"))),
        })
        .collect()
}

fn traverse(store: &mut Store, q: &GremlinQuery, faults: FaultSet) -> Result<Vec<Trav>, EngineError> {
    let mut cur: Vec<Trav> = match &q.source {
        Source::V(want) if want.is_empty() => store.nodes.keys().map(|id| Trav::Node(*id)).collect(),
        Source::V(want) => ids(want)?
            .into_iter()
            .filter(|id| store.nodes.contains_key(id))
            .map(Trav::Node)
            .collect(),
        Source::E(want) if want.is_empty() => store.edges.keys().map(|id| Trav::Edge(*id)).collect(),
        Source::E(want) => ids(want)?
            .into_iter()
            .filter(|id| store.edges.contains_key(id))
            .map(Trav::Edge)
            .collect(),
        Source::AddV(label) => vec![Trav::Node(store.add_node(label))],
    };
    for step in &q.steps {
        cur = apply(store, step, cur, faults)?;
    }
    Ok(cur)
}

fn element<'a>(store: &'a Store, t: &Trav) -> Option<(&'a str, &'a Properties)> {
    match t {
        Trav::Node(id) => store.nodes.get(id).map(|n| (n.label.as_str(), &n.props)),
        Trav::Edge(id) => store.edges.get(id).map(|e| (e.label.as_str(), &e.props)),
        Trav::V(_) => None,
    }
}

fn apply(store: &mut Store, step: &Step, cur: Vec<Trav>, faults: FaultSet) -> Result<Vec<Trav>, EngineError> {
    Ok(match step {
        Step::HasLabel(labels) => cur
            .into_iter()
            .filter(|t| element(store, t).is_some_and(|(l, _)| labels.iter().any(|x| x == l)))
            .collect(),
        Step::Has(key) => cur
            .into_iter()
            .filter(|t| element(store, t).is_some_and(|(_, p)| p.contains_key(key)))
            .collect(),
        Step::HasValue(key, pred) => cur
            .into_iter()
            .filter(|t| {
                element(store, t)
                    .and_then(|(_, p)| p.get(key))
                    .is_some_and(|v| test(v, pred, faults))
            })
            .collect(),
        Step::Count => vec![Trav::V(C::Int(cur.len() as i64))],
        Step::ValueMap => cur
            .iter()
            .map(|t| match t {
                Trav::Node(id) => Ok(Trav::V(store.node_value(*id, false))),
                Trav::Edge(id) => Ok(Trav::V(store.edge_value(*id, false))),
                Trav::V(_) => Err(EngineError::Runtime("valueMap() needs elements".into())),
            })
            .collect::<Result<_, _>>()?,
        Step::Property(key, lit) => {
            let value = lit
                .to_property()
                .ok_or_else(|| EngineError::Unsupported("null or list property value".into()))?;
            for t in &cur {
                match t {
                    Trav::Node(id) => store.set_node_prop(*id, key, value.clone(), faults),
                    Trav::Edge(id) => store.set_edge_prop(*id, key, value.clone(), faults),
                    Trav::V(_) => return Err(EngineError::Runtime("property() needs elements".into())),
                }
            }
            cur
        }
        Step::Drop => {
            for t in &cur {
                match t {
                    Trav::Node(id) => store.drop_node(*id),
                    Trav::Edge(id) => store.drop_edge(*id),
                    Trav::V(_) => {}
                }
            }
            Vec::new()
        }
        Step::AddE { label, end, other } => {
            let mut created = Vec::new();
            for t in &cur {
                let Trav::Node(here) = t else {
                    return Err(EngineError::Runtime("addE() needs vertices".into()));
                };
                for target in traverse(store, other, faults)? {
                    let Trav::Node(there) = target else {
                        return Err(EngineError::Runtime("addE() target is not a vertex".into()));
                    };
                    let (src, dst) = match end {
                        EdgeEnd::To => (*here, there),
                        EdgeEnd::From => (there, *here),
                    };
                    created.push(Trav::Edge(store.add_edge(label, src, dst)));
                }
            }
            created
        }
    })
}

fn literal(l: &Literal) -> C {
    match l {
        Literal::Null => C::Null,
        Literal::Bool(b) => C::Bool(*b),
        Literal::Int(i) => C::Int(*i),
        Literal::Float(x) => C::Float(*x),
        Literal::Str(s) => C::Str(s.clone()),
        Literal::List(items) => C::List(items.iter().map(literal).collect()),
    }
}

/// Literal side of an eq/neq test; F10 reads the string "false" as a boolean when the stored
/// value is one.
fn equality_operand(v: &C, l: &Literal, faults: FaultSet) -> C {
    match (v, l) {
        (C::Bool(_), Literal::Str(s)) if s == "false" && faults.has(Fault::F10) => C::Bool(false),
        _ => literal(l),
    }
}

fn order(a: &C, b: &C) -> Option<Ordering> {
    match (a, b) {
        (C::Int(_) | C::Float(_), C::Int(_) | C::Float(_)) => a.as_f64()?.partial_cmp(&b.as_f64()?),
        (C::Str(x), C::Str(y)) => Some(x.cmp(y)),
        (C::Bool(x), C::Bool(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

fn test(v: &PropertyValue, pred: &Pred, faults: FaultSet) -> bool {
    let v = C::from(v);
    match pred {
        Pred::Value(l) | Pred::Eq(l) => v == equality_operand(&v, l, faults),
        Pred::Neq(l) => v != equality_operand(&v, l, faults),
        Pred::Gt(l) => order(&v, &literal(l)) == Some(Ordering::Greater),
        Pred::Gte(l) => matches!(order(&v, &literal(l)), Some(Ordering::Greater | Ordering::Equal)),
        Pred::Lt(l) => order(&v, &literal(l)) == Some(Ordering::Less),
        Pred::Lte(l) => matches!(order(&v, &literal(l)), Some(Ordering::Less | Ordering::Equal)),
        Pred::Within(ls) => ls.iter().any(|l| v == literal(l)),
        Pred::Without(ls) => {
            if faults.has(Fault::F8) && !ls.is_empty() && ls.iter().all(|l| matches!(l, Literal::Str(_))) {
                return v == C::Bool(true);
            }
            ls.iter().all(|l| v != literal(l))
        }
    }
}
