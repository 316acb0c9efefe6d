//! Recursive-descent parser for the supported Cypher subset.

use std::collections::HashSet;

use super::lex::{tokenize, Tok, Token};
use super::{
    BoolExpr, CmpOp, Comparison, CypherQuery, Direction, Expr, Literal, NodePat, ParseError,
    PathPattern, Projection, QueryIr, RelPat, ReturnExpr, ReturnItem, Stage,
};

/// Clause keywords that are valid Cypher but outside the subset.
const UNSUPPORTED_CLAUSES: &[&str] = &[
    "OPTIONAL", "ORDER", "SKIP", "LIMIT", "UNION", "MERGE", "SET", "DELETE", "DETACH", "REMOVE",
    "FOREACH", "CALL", "LOAD", "DROP", "OR", "XOR", "NOT", "IN", "IS", "CONTAINS", "STARTS",
    "ENDS", "CASE",
];

pub fn parse_cypher_subset(text: &str) -> Result<QueryIr, ParseError> {
    let tokens = tokenize(text).map_err(|e| ParseError::Syntax {
        message: e.message,
        position: e.pos,
    })?;
    let mut p = Parser {
        tokens,
        at: 0,
        end: text.len(),
    };
    let q = p.query()?;
    check_bindings(&q)?;
    Ok(QueryIr::Cypher(q))
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.at)
    }

    fn peek_at(&self, n: usize) -> Option<&Token> {
        self.tokens.get(self.at + n)
    }

    fn pos(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            message: message.into(),
            position: self.pos(),
        })
    }

    fn is_keyword(&self, kw: &str) -> bool {
        self.peek()
            .and_then(Token::ident)
            .is_some_and(|s| s.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.error(format!("expected {kw}"))
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.error(format!("expected `{p}`"))
        }
    }

    /// Fails with `UnsupportedSyntax` if the next token opens a construct outside the subset.
    fn reject_unsupported(&self) -> Result<(), ParseError> {
        if let Some(t) = self.peek() {
            if let Some(id) = t.ident() {
                let upper = id.to_ascii_uppercase();
                if UNSUPPORTED_CLAUSES.contains(&upper.as_str()) {
                    let token = match upper.as_str() {
                        "ORDER" => "ORDER BY".to_owned(),
                        "OPTIONAL" => "OPTIONAL MATCH".to_owned(),
                        _ => upper,
                    };
                    return Err(ParseError::unsupported(token, t.pos));
                }
            }
        }
        Ok(())
    }

    fn name(&mut self) -> Result<String, ParseError> {
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Ident(s)) | Some(Tok::Quoted(s)) => {
                let s = s.clone();
                self.at += 1;
                Ok(s)
            }
            _ => self.error("expected a name"),
        }
    }

    fn query(&mut self) -> Result<CypherQuery, ParseError> {
        let mut q = CypherQuery::default();
        self.reject_unsupported()?;
        if self.eat_keyword("MATCH") {
            q.patterns = self.patterns()?;
            if self.eat_keyword("WHERE") {
                q.where_ = Some(self.bool_expr()?);
            }
        }
        loop {
            self.reject_unsupported()?;
            if self.eat_keyword("WITH") {
                let projection = self.projection()?;
                let where_ = if self.eat_keyword("WHERE") {
                    Some(self.bool_expr()?)
                } else {
                    None
                };
                q.pipeline.push(Stage::With { projection, where_ });
            } else if self.eat_keyword("UNWIND") {
                let expr = self.expr()?;
                self.expect_keyword("AS")?;
                let alias = self.name()?;
                q.pipeline.push(Stage::Unwind { expr, alias });
            } else if self.is_keyword("MATCH") {
                return Err(ParseError::unsupported("MATCH", self.pos()));
            } else {
                break;
            }
        }
        if self.eat_keyword("CREATE") {
            q.creates = self.patterns()?;
        }
        self.reject_unsupported()?;
        if self.eat_keyword("RETURN") {
            q.returns = Some(self.projection()?);
        }
        self.reject_unsupported()?;
        while self.eat_punct(";") {}
        if let Some(t) = self.peek() {
            let token = t.tok.to_string();
            return Err(ParseError::unsupported(token, t.pos));
        }
        if q.returns.is_none() && q.creates.is_empty() {
            return self.error("query must end in RETURN or CREATE");
        }
        Ok(q)
    }

    fn patterns(&mut self) -> Result<Vec<PathPattern>, ParseError> {
        let mut out = vec![self.path()?];
        while self.eat_punct(",") {
            out.push(self.path()?);
        }
        Ok(out)
    }

    fn path(&mut self) -> Result<PathPattern, ParseError> {
        // `p = shortestPath(...)` and other named paths
        if self.peek().and_then(Token::ident).is_some() && self.peek_at(1).is_some_and(|t| t.is_punct("=")) {
            let pos = self.pos();
            if let Some(f) = self.peek_at(2).and_then(Token::ident) {
                return Err(ParseError::unsupported(f.to_owned(), self.peek_at(2).unwrap().pos));
            }
            return Err(ParseError::unsupported("path variable", pos));
        }
        if let Some(f) = self.peek().and_then(Token::ident) {
            return Err(ParseError::unsupported(f.to_owned(), self.pos()));
        }
        let start = self.node_pat()?;
        let mut hops = Vec::new();
        while self.is_punct("-") || self.is_punct("<") {
            let rel = self.rel_pat()?;
            let node = self.node_pat()?;
            hops.push((rel, node));
        }
        Ok(PathPattern { start, hops })
    }

    fn node_pat(&mut self) -> Result<NodePat, ParseError> {
        self.expect_punct("(")?;
        let mut pat = NodePat::default();
        if matches!(self.peek().map(|t| &t.tok), Some(Tok::Ident(_)) | Some(Tok::Quoted(_))) {
            pat.var = Some(self.name()?);
        }
        if self.eat_punct(":") {
            pat.label = Some(self.name()?);
            if self.is_punct(":") || self.is_punct("|") {
                return Err(ParseError::unsupported("multiple labels", self.pos()));
            }
        }
        if self.is_punct("{") {
            pat.props = self.prop_map()?;
        }
        self.expect_punct(")")?;
        Ok(pat)
    }

    fn rel_pat(&mut self) -> Result<RelPat, ParseError> {
        let incoming = self.eat_punct("<");
        self.expect_punct("-")?;
        let mut rel = RelPat {
            var: None,
            rel_type: None,
            direction: Direction::Both,
            props: Vec::new(),
        };
        if self.eat_punct("[") {
            if matches!(self.peek().map(|t| &t.tok), Some(Tok::Ident(_)) | Some(Tok::Quoted(_))) {
                rel.var = Some(self.name()?);
            }
            if self.eat_punct(":") {
                rel.rel_type = Some(self.name()?);
                if self.is_punct("|") {
                    return Err(ParseError::unsupported("|", self.pos()));
                }
            }
            if self.is_punct("*") {
                return Err(ParseError::unsupported("*", self.pos()));
            }
            if self.is_punct("{") {
                rel.props = self.prop_map()?;
            }
            self.expect_punct("]")?;
        }
        self.expect_punct("-")?;
        let outgoing = self.eat_punct(">");
        rel.direction = match (incoming, outgoing) {
            (true, false) => Direction::In,
            (false, true) => Direction::Out,
            (false, false) => Direction::Both,
            (true, true) => return self.error("relationship cannot point both ways"),
        };
        Ok(rel)
    }

    fn prop_map(&mut self) -> Result<Vec<(String, Literal)>, ParseError> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        if !self.is_punct("}") {
            loop {
                let key = self.name()?;
                self.expect_punct(":")?;
                out.push((key, self.literal()?));
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct("}")?;
        Ok(out)
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        let pos = self.pos();
        let negative = self.eat_punct("-");
        let t = self.bump().ok_or(ParseError::Syntax {
            message: "expected a literal".into(),
            position: pos,
        })?;
        let lit = match t.tok {
            Tok::Int(i) => Literal::Int(if negative { -i } else { i }),
            Tok::Float(x) => Literal::Float(if negative { -x } else { x }),
            _ if negative => {
                return Err(ParseError::Syntax {
                    message: "expected a number after `-`".into(),
                    position: t.pos,
                })
            }
            Tok::Str(s) => Literal::Str(s),
            Tok::Ident(ref s) if s.eq_ignore_ascii_case("true") => Literal::Bool(true),
            Tok::Ident(ref s) if s.eq_ignore_ascii_case("false") => Literal::Bool(false),
            Tok::Ident(ref s) if s.eq_ignore_ascii_case("null") => Literal::Null,
            Tok::Punct("[") => {
                let mut items = Vec::new();
                if !self.is_punct("]") {
                    loop {
                        items.push(self.literal()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                self.expect_punct("]")?;
                Literal::List(items)
            }
            Tok::Punct("$") => return Err(ParseError::unsupported("$parameter", t.pos)),
            _ => {
                return Err(ParseError::Syntax {
                    message: format!("expected a literal, found `{}`", t.tok),
                    position: t.pos,
                })
            }
        };
        Ok(lit)
    }

    fn is_literal_start(&self) -> bool {
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Int(_) | Tok::Float(_) | Tok::Str(_)) => true,
            Some(Tok::Punct("[") | Tok::Punct("-") | Tok::Punct("$")) => true,
            Some(Tok::Ident(s)) => {
                ["true", "false", "null"].iter().any(|k| s.eq_ignore_ascii_case(k))
            }
            _ => false,
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        if self.is_literal_start() {
            return Ok(Expr::Lit(self.literal()?));
        }
        let pos = self.pos();
        let var = self.name()?;
        if self.is_punct("(") {
            return Err(ParseError::unsupported(var, pos));
        }
        if self.eat_punct(".") {
            let key = self.name()?;
            if self.is_punct(".") || self.is_punct("[") {
                return Err(ParseError::unsupported("nested access", self.pos()));
            }
            return Ok(Expr::Prop(var, key));
        }
        if self.is_punct("[") || self.is_punct("{") {
            return Err(ParseError::unsupported("indexing", self.pos()));
        }
        Ok(Expr::Var(var))
    }

    fn bool_expr(&mut self) -> Result<BoolExpr, ParseError> {
        let mut conjuncts = vec![self.comparison()?];
        while self.eat_keyword("AND") {
            conjuncts.push(self.comparison()?);
        }
        self.reject_unsupported()?;
        Ok(BoolExpr { conjuncts })
    }

    fn comparison(&mut self) -> Result<Comparison, ParseError> {
        self.reject_unsupported()?;
        if self.is_punct("(") {
            return Err(ParseError::unsupported("(", self.pos()));
        }
        let lhs = self.expr()?;
        self.reject_unsupported()?;
        let op = match self.peek().map(|t| &t.tok) {
            Some(Tok::Punct("=")) => CmpOp::Eq,
            Some(Tok::Punct("<>")) | Some(Tok::Punct("!=")) => CmpOp::Ne,
            Some(Tok::Punct("<")) => CmpOp::Lt,
            Some(Tok::Punct("<=")) => CmpOp::Le,
            Some(Tok::Punct(">")) => CmpOp::Gt,
            Some(Tok::Punct(">=")) => CmpOp::Ge,
            Some(Tok::Punct(p)) => return Err(ParseError::unsupported(*p, self.pos())),
            _ => return self.error("expected a comparison operator"),
        };
        self.at += 1;
        let rhs = self.expr()?;
        Ok(Comparison { lhs, op, rhs })
    }

    fn projection(&mut self) -> Result<Projection, ParseError> {
        let distinct = self.eat_keyword("DISTINCT");
        if self.is_punct("*") {
            return Err(ParseError::unsupported("*", self.pos()));
        }
        let mut items = vec![self.return_item()?];
        while self.eat_punct(",") {
            items.push(self.return_item()?);
        }
        Ok(Projection { distinct, items })
    }

    fn return_item(&mut self) -> Result<ReturnItem, ParseError> {
        let expr = self.return_expr()?;
        let alias = if self.eat_keyword("AS") {
            Some(self.name()?)
        } else {
            None
        };
        Ok(ReturnItem { expr, alias })
    }

    fn return_expr(&mut self) -> Result<ReturnExpr, ParseError> {
        let is_call = self.peek().and_then(Token::ident).is_some()
            && self.peek_at(1).is_some_and(|t| t.is_punct("("));
        if !is_call {
            return Ok(ReturnExpr::Plain(self.expr()?));
        }
        let pos = self.pos();
        let func = self.name()?.to_ascii_lowercase();
        self.expect_punct("(")?;
        let distinct = self.eat_keyword("DISTINCT");
        let out = match func.as_str() {
            "count" if !distinct && self.eat_punct("*") => ReturnExpr::Count(None),
            "count" if !distinct => ReturnExpr::Count(Some(self.expr()?)),
            "avg" if !distinct => ReturnExpr::Avg(self.expr()?),
            "sum" if !distinct => ReturnExpr::Sum(self.expr()?),
            "collect" => ReturnExpr::Collect {
                expr: self.expr()?,
                distinct,
            },
            "count" | "avg" | "sum" => {
                return Err(ParseError::unsupported(format!("{func}(DISTINCT"), pos))
            }
            _ => return Err(ParseError::unsupported(func, pos)),
        };
        self.expect_punct(")")?;
        Ok(out)
    }
}

fn expr_vars(e: &Expr) -> Option<&str> {
    match e {
        Expr::Var(v) | Expr::Prop(v, _) => Some(v),
        Expr::Lit(_) => None,
    }
}

fn return_expr_vars(e: &ReturnExpr) -> Option<&str> {
    match e {
        ReturnExpr::Plain(x)
        | ReturnExpr::Avg(x)
        | ReturnExpr::Sum(x)
        | ReturnExpr::Count(Some(x))
        | ReturnExpr::Collect { expr: x, .. } => expr_vars(x),
        ReturnExpr::Count(None) => None,
    }
}

fn pattern_vars<'a>(p: &'a PathPattern, out: &mut HashSet<&'a str>) {
    out.extend(p.start.var.as_deref());
    for (r, n) in &p.hops {
        out.extend(r.var.as_deref());
        out.extend(n.var.as_deref());
    }
}

/// Every variable used downstream must be bound by MATCH, UNWIND or a WITH projection.
fn check_bindings(q: &CypherQuery) -> Result<(), ParseError> {
    let mut scope: HashSet<&str> = HashSet::new();
    for p in &q.patterns {
        pattern_vars(p, &mut scope);
    }
    let check = |scope: &HashSet<&str>, v: Option<&str>| match v {
        Some(v) if !scope.contains(v) => Err(ParseError::UnboundVariable(v.to_owned())),
        _ => Ok(()),
    };
    let check_where = |scope: &HashSet<&str>, w: &Option<BoolExpr>| -> Result<(), ParseError> {
        for c in w.iter().flat_map(|w| &w.conjuncts) {
            check(scope, expr_vars(&c.lhs))?;
            check(scope, expr_vars(&c.rhs))?;
        }
        Ok(())
    };
    check_where(&scope, &q.where_)?;
    for stage in &q.pipeline {
        match stage {
            Stage::Unwind { expr, alias } => {
                check(&scope, expr_vars(expr))?;
                scope.insert(alias);
            }
            Stage::With { projection, where_ } => {
                let mut next = HashSet::new();
                for item in &projection.items {
                    check(&scope, return_expr_vars(&item.expr))?;
                    match item.binding_name() {
                        Some(n) => {
                            next.insert(n);
                        }
                        None => {
                            return Err(ParseError::Syntax {
                                message: "WITH expressions must be aliased".into(),
                                position: 0,
                            })
                        }
                    }
                }
                scope = next;
                check_where(&scope, where_)?;
            }
        }
    }
    for p in &q.creates {
        pattern_vars(p, &mut scope);
    }
    if let Some(r) = &q.returns {
        for item in &r.items {
            check(&scope, return_expr_vars(&item.expr))?;
        }
    }
    Ok(())
}
