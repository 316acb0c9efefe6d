//! Text rendering of the IR. Output reparses to an equal IR.

use std::fmt::{self, Display, Formatter, Write};

use super::{
    BoolExpr, CypherQuery, Direction, EdgeEnd, Expr, GremlinQuery, Literal, NodePat, PathPattern,
    Pred, Projection, QueryIr, RelPat, ReturnExpr, Source, Stage, Step,
};
use crate::model::{format_float, quote_single};

const RESERVED: &[&str] = &[
    "MATCH", "OPTIONAL", "WHERE", "WITH", "UNWIND", "CREATE", "RETURN", "AS", "AND", "OR", "NOT",
    "XOR", "IN", "IS", "DISTINCT", "TRUE", "FALSE", "NULL", "ORDER", "SKIP", "LIMIT", "UNION",
    "MERGE", "SET", "DELETE", "DETACH", "REMOVE", "FOREACH", "CALL", "LOAD", "DROP", "CASE",
    "CONTAINS", "STARTS", "ENDS",
];

fn name(f: &mut Formatter<'_>, s: &str) -> fmt::Result {
    let simple = s
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if simple && !RESERVED.iter().any(|k| k.eq_ignore_ascii_case(s)) {
        f.write_str(s)
    } else {
        write!(f, "`{s}`")
    }
}

impl Display for Literal {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Null => f.write_str("null"),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Float(x) => f.write_str(&format_float(*x)),
            Literal::Str(s) => f.write_str(&quote_single(s)),
            Literal::List(items) => {
                f.write_char('[')?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_char(']')
            }
        }
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(v) => name(f, v),
            Expr::Prop(v, k) => {
                name(f, v)?;
                f.write_char('.')?;
                name(f, k)
            }
            Expr::Lit(l) => write!(f, "{l}"),
        }
    }
}

fn prop_map(f: &mut Formatter<'_>, props: &[(String, Literal)]) -> fmt::Result {
    f.write_str(" {")?;
    for (i, (k, v)) in props.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        name(f, k)?;
        write!(f, ": {v}")?;
    }
    f.write_char('}')
}

impl Display for NodePat {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_char('(')?;
        if let Some(v) = &self.var {
            name(f, v)?;
        }
        if let Some(l) = &self.label {
            f.write_char(':')?;
            name(f, l)?;
        }
        if !self.props.is_empty() {
            prop_map(f, &self.props)?;
        }
        f.write_char(')')
    }
}

impl Display for RelPat {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(if self.direction == Direction::In { "<-" } else { "-" })?;
        if self.var.is_some() || self.rel_type.is_some() || !self.props.is_empty() {
            f.write_char('[')?;
            if let Some(v) = &self.var {
                name(f, v)?;
            }
            if let Some(t) = &self.rel_type {
                f.write_char(':')?;
                name(f, t)?;
            }
            if !self.props.is_empty() {
                prop_map(f, &self.props)?;
            }
            f.write_char(']')?;
        }
        f.write_str(if self.direction == Direction::Out { "->" } else { "-" })
    }
}

impl Display for PathPattern {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        for (r, n) in &self.hops {
            write!(f, "{r}{n}")?;
        }
        Ok(())
    }
}

fn patterns(f: &mut Formatter<'_>, ps: &[PathPattern]) -> fmt::Result {
    for (i, p) in ps.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{p}")?;
    }
    Ok(())
}

impl Display for BoolExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for (i, c) in self.conjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            write!(f, "{} {} {}", c.lhs, c.op.symbol(), c.rhs)?;
        }
        Ok(())
    }
}

impl Display for ReturnExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            ReturnExpr::Plain(e) => write!(f, "{e}"),
            ReturnExpr::Count(None) => f.write_str("count(*)"),
            ReturnExpr::Count(Some(e)) => write!(f, "count({e})"),
            ReturnExpr::Avg(e) => write!(f, "avg({e})"),
            ReturnExpr::Sum(e) => write!(f, "sum({e})"),
            ReturnExpr::Collect { expr, distinct } => {
                write!(f, "collect({}{expr})", if *distinct { "DISTINCT " } else { "" })
            }
        }
    }
}

impl Display for Projection {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.distinct {
            f.write_str("DISTINCT ")?;
        }
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", item.expr)?;
            if let Some(a) = &item.alias {
                f.write_str(" AS ")?;
                name(f, a)?;
            }
        }
        Ok(())
    }
}

impl Display for CypherQuery {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if !self.patterns.is_empty() {
            let mut s = format!("MATCH {}", Patterns(&self.patterns));
            if let Some(w) = &self.where_ {
                s.push_str(&format!(" WHERE {w}"));
            }
            parts.push(s);
        }
        for stage in &self.pipeline {
            parts.push(match stage {
                Stage::With { projection, where_ } => match where_ {
                    Some(w) => format!("WITH {projection} WHERE {w}"),
                    None => format!("WITH {projection}"),
                },
                Stage::Unwind { expr, alias } => format!("UNWIND {expr} AS {}", Name(alias)),
            });
        }
        if !self.creates.is_empty() {
            parts.push(format!("CREATE {}", Patterns(&self.creates)));
        }
        if let Some(r) = &self.returns {
            parts.push(format!("RETURN {r}"));
        }
        f.write_str(&parts.join(" "))
    }
}

struct Patterns<'a>(&'a [PathPattern]);

impl Display for Patterns<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        patterns(f, self.0)
    }
}

struct Name<'a>(&'a str);

impl Display for Name<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        name(f, self.0)
    }
}

fn literal_list(f: &mut Formatter<'_>, items: &[Literal]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

impl Display for Pred {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Pred::Value(v) => write!(f, "{v}"),
            Pred::Eq(v) | Pred::Neq(v) | Pred::Gt(v) | Pred::Gte(v) | Pred::Lt(v) | Pred::Lte(v) => {
                write!(f, "{}({v})", self.name().unwrap_or_default())
            }
            Pred::Within(vs) | Pred::Without(vs) => {
                write!(f, "{}(", self.name().unwrap_or_default())?;
                literal_list(f, vs)?;
                f.write_char(')')
            }
        }
    }
}

impl Display for Step {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Step::HasLabel(labels) => {
                f.write_str("hasLabel(")?;
                for (i, l) in labels.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str(&quote_single(l))?;
                }
                f.write_char(')')
            }
            Step::Has(k) => write!(f, "has({})", quote_single(k)),
            Step::HasValue(k, p) => write!(f, "has({}, {p})", quote_single(k)),
            Step::Count => f.write_str("count()"),
            Step::ValueMap => f.write_str("valueMap()"),
            Step::Property(k, v) => write!(f, "property({}, {v})", quote_single(k)),
            Step::Drop => f.write_str("drop()"),
            Step::AddE { label, end, other } => {
                let end = match end {
                    EdgeEnd::To => "to",
                    EdgeEnd::From => "from",
                };
                write!(f, "addE({}).{end}({other})", quote_single(label))
            }
        }
    }
}

impl Display for GremlinQuery {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(if self.anonymous { "__." } else { "g." })?;
        match &self.source {
            Source::V(ids) => {
                f.write_str("V(")?;
                literal_list(f, ids)?;
                f.write_char(')')?;
            }
            Source::E(ids) => {
                f.write_str("E(")?;
                literal_list(f, ids)?;
                f.write_char(')')?;
            }
            Source::AddV(label) => write!(f, "addV({})", quote_single(label))?,
        }
        for step in &self.steps {
            write!(f, ".{step}")?;
        }
        Ok(())
    }
}

impl Display for QueryIr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            QueryIr::Cypher(q) => write!(f, "{q}"),
            QueryIr::Gremlin(q) => write!(f, "{q}"),
        }
    }
}
