//! Query IR for the Cypher and Gremlin subsets the reference engine evaluates, the two
//! front ends that produce it, and lexical operator fingerprints.

mod cypher;
mod fingerprint;
mod gremlin;
pub mod lex;
mod print;

use std::collections::BTreeSet;

pub use cypher::parse_cypher_subset;
pub use fingerprint::{known_operators, operator_fingerprint, OperatorFingerprint};
pub use gremlin::parse_gremlin_subset;

use crate::model::{Dialect, PropertyValue};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    /// Valid in the full language but outside the supported subset.
    #[error("unsupported syntax `{token}` at offset {position}")]
    UnsupportedSyntax { token: String, position: usize },
    #[error("syntax error at offset {position}: {message}")]
    Syntax { message: String, position: usize },
    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),
}

impl ParseError {
    pub(crate) fn unsupported(token: impl Into<String>, position: usize) -> Self {
        ParseError::UnsupportedSyntax {
            token: token.into(),
            position,
        }
    }
}

pub fn parse(text: &str, dialect: Dialect) -> Result<QueryIr, ParseError> {
    match dialect {
        Dialect::Cypher => parse_cypher_subset(text),
        Dialect::Gremlin => parse_gremlin_subset(text),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryIr {
    Cypher(CypherQuery),
    Gremlin(GremlinQuery),
}

impl QueryIr {
    pub fn dialect(&self) -> Dialect {
        match self {
            QueryIr::Cypher(_) => Dialect::Cypher,
            QueryIr::Gremlin(_) => Dialect::Gremlin,
        }
    }

    pub fn is_mutating(&self) -> bool {
        match self {
            QueryIr::Cypher(q) => !q.creates.is_empty(),
            QueryIr::Gremlin(q) => q.is_mutating(),
        }
    }

    /// Operator tokens present in the IR, spelled as [`operator_fingerprint`] spells them.
    pub fn operators(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        match self {
            QueryIr::Cypher(q) => q.collect_operators(&mut out),
            QueryIr::Gremlin(q) => q.collect_operators(&mut out),
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<Literal>),
}

impl Literal {
    pub fn to_property(&self) -> Option<PropertyValue> {
        Some(match self {
            Literal::Bool(b) => PropertyValue::Bool(*b),
            Literal::Int(i) => PropertyValue::Int(*i),
            Literal::Float(x) => PropertyValue::Float(*x),
            Literal::Str(s) => PropertyValue::Str(s.clone()),
            Literal::Null | Literal::List(_) => return None,
        })
    }
}

// ---------------------------------------------------------------------------------------------
// Cypher

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CypherQuery {
    /// Comma-separated MATCH paths; they share variables.
    pub patterns: Vec<PathPattern>,
    pub where_: Option<BoolExpr>,
    pub pipeline: Vec<Stage>,
    pub creates: Vec<PathPattern>,
    pub returns: Option<Projection>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPattern {
    pub start: NodePat,
    pub hops: Vec<(RelPat, NodePat)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodePat {
    pub var: Option<String>,
    pub label: Option<String>,
    pub props: Vec<(String, Literal)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelPat {
    pub var: Option<String>,
    pub rel_type: Option<String>,
    pub direction: Direction,
    pub props: Vec<(String, Literal)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(String),
    Prop(String, String),
    Lit(Literal),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub lhs: Expr,
    pub op: CmpOp,
    pub rhs: Expr,
}

/// A conjunction of comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct BoolExpr {
    pub conjuncts: Vec<Comparison>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    With {
        projection: Projection,
        where_: Option<BoolExpr>,
    },
    Unwind {
        expr: Expr,
        alias: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub distinct: bool,
    pub items: Vec<ReturnItem>,
}

impl Projection {
    pub fn is_aggregating(&self) -> bool {
        self.items.iter().any(|i| !matches!(i.expr, ReturnExpr::Plain(_)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnItem {
    pub expr: ReturnExpr,
    pub alias: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReturnExpr {
    Plain(Expr),
    /// `count(*)` when the argument is `None`.
    Count(Option<Expr>),
    Avg(Expr),
    Sum(Expr),
    Collect { expr: Expr, distinct: bool },
}

impl ReturnItem {
    /// Name the item binds in a WITH pipeline.
    pub fn binding_name(&self) -> Option<&str> {
        match (&self.alias, &self.expr) {
            (Some(a), _) => Some(a),
            (None, ReturnExpr::Plain(Expr::Var(v))) => Some(v),
            _ => None,
        }
    }
}

impl CypherQuery {
    fn collect_operators(&self, out: &mut BTreeSet<String>) {
        let mut add = |s: &str| {
            out.insert(s.to_owned());
        };
        if !self.patterns.is_empty() {
            add("MATCH");
        }
        if self.where_.is_some() {
            add("WHERE");
        }
        let mut projections = Vec::new();
        for stage in &self.pipeline {
            match stage {
                Stage::With { projection, where_ } => {
                    add("WITH");
                    if where_.is_some() {
                        add("WHERE");
                    }
                    projections.push(projection);
                }
                Stage::Unwind { .. } => add("UNWIND"),
            }
        }
        if !self.creates.is_empty() {
            add("CREATE");
        }
        if let Some(r) = &self.returns {
            add("RETURN");
            projections.push(r);
        }
        for p in projections {
            if p.distinct {
                add("DISTINCT");
            }
            for item in &p.items {
                match &item.expr {
                    ReturnExpr::Plain(_) => {}
                    ReturnExpr::Count(_) => add("count"),
                    ReturnExpr::Avg(_) => add("avg"),
                    ReturnExpr::Sum(_) => add("sum"),
                    ReturnExpr::Collect { distinct, .. } => {
                        add("collect");
                        if *distinct {
                            add("DISTINCT");
                        }
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------------------------
// Gremlin

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    V(Vec<Literal>),
    E(Vec<Literal>),
    AddV(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GremlinQuery {
    pub source: Source,
    pub steps: Vec<Step>,
    /// `true` for anonymous `__.` traversals used as step arguments.
    pub anonymous: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeEnd {
    To,
    From,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    HasLabel(Vec<String>),
    Has(String),
    HasValue(String, Pred),
    Count,
    ValueMap,
    Property(String, Literal),
    Drop,
    AddE {
        label: String,
        end: EdgeEnd,
        other: Box<GremlinQuery>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pred {
    /// `has(key, value)`: equality without an explicit predicate step.
    Value(Literal),
    Eq(Literal),
    Neq(Literal),
    Gt(Literal),
    Gte(Literal),
    Lt(Literal),
    Lte(Literal),
    Within(Vec<Literal>),
    Without(Vec<Literal>),
}

impl Pred {
    pub fn name(&self) -> Option<&'static str> {
        Some(match self {
            Pred::Value(_) => return None,
            Pred::Eq(_) => "eq",
            Pred::Neq(_) => "neq",
            Pred::Gt(_) => "gt",
            Pred::Gte(_) => "gte",
            Pred::Lt(_) => "lt",
            Pred::Lte(_) => "lte",
            Pred::Within(_) => "within",
            Pred::Without(_) => "without",
        })
    }
}

impl GremlinQuery {
    pub fn is_mutating(&self) -> bool {
        matches!(self.source, Source::AddV(_))
            || self
                .steps
                .iter()
                .any(|s| matches!(s, Step::Property(..) | Step::Drop | Step::AddE { .. }))
    }

    fn collect_operators(&self, out: &mut BTreeSet<String>) {
        let source = match self.source {
            Source::V(_) => "V",
            Source::E(_) => "E",
            Source::AddV(_) => "addV",
        };
        out.insert(source.to_owned());
        for step in &self.steps {
            let name = match step {
                Step::HasLabel(_) => "hasLabel",
                Step::Has(_) => "has",
                Step::HasValue(_, pred) => {
                    if let Some(n) = pred.name() {
                        out.insert(n.to_owned());
                    }
                    "has"
                }
                Step::Count => "count",
                Step::ValueMap => "valueMap",
                Step::Property(..) => "property",
                Step::Drop => "drop",
                Step::AddE { end, other, .. } => {
                    other.collect_operators(out);
                    out.insert(
                        match end {
                            EdgeEnd::To => "to",
                            EdgeEnd::From => "from",
                        }
                        .to_owned(),
                    );
                    "addE"
                }
            };
            out.insert(name.to_owned());
        }
    }
}
