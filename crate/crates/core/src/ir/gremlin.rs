//! Parser for the supported Gremlin subset.

use super::lex::{tokenize, Tok, Token};
use super::{EdgeEnd, GremlinQuery, Literal, ParseError, Pred, QueryIr, Source, Step};

/// Terminal steps that only force evaluation; they carry no semantics here.
const TERMINALS: &[&str] = &["iterate", "toList", "next", "toSet"];

pub fn parse_gremlin_subset(text: &str) -> Result<QueryIr, ParseError> {
    let tokens = tokenize(text).map_err(|e| ParseError::Syntax {
        message: e.message,
        position: e.pos,
    })?;
    let mut p = Parser {
        tokens,
        at: 0,
        end: text.len(),
    };
    let q = p.traversal(false)?;
    while p.eat_punct(";") {}
    if let Some(t) = p.peek() {
        return Err(ParseError::Syntax {
            message: format!("unexpected `{}` after traversal", t.tok),
            position: t.pos,
        });
    }
    Ok(QueryIr::Gremlin(q))
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

    fn pos(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            message: message.into(),
            position: self.pos(),
        })
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

    fn ident(&mut self) -> Result<(String, usize), ParseError> {
        match self.peek() {
            Some(Token {
                tok: Tok::Ident(s),
                pos,
            }) => {
                let out = (s.clone(), *pos);
                self.at += 1;
                Ok(out)
            }
            _ => self.error("expected a step name"),
        }
    }

    /// `g.` or `__.` followed by a source step and a chain of steps.
    fn traversal(&mut self, anonymous: bool) -> Result<GremlinQuery, ParseError> {
        let (root, pos) = self.ident()?;
        let expected = if anonymous { "__" } else { "g" };
        if root != expected {
            return Err(ParseError::Syntax {
                message: format!("traversal must start with `{expected}.`"),
                position: pos,
            });
        }
        self.expect_punct(".")?;
        let (name, pos) = self.ident()?;
        let source = match name.as_str() {
            "V" => Source::V(self.literal_args()?),
            "E" => Source::E(self.literal_args()?),
            "addV" if !anonymous => {
                let args = self.string_args()?;
                match <[String; 1]>::try_from(args) {
                    Ok([label]) => Source::AddV(label),
                    Err(_) => return Err(ParseError::unsupported("addV", pos)),
                }
            }
            _ => return Err(ParseError::unsupported(name, pos)),
        };
        let mut steps = Vec::new();
        while self.is_punct(".") {
            let save = self.at;
            self.at += 1;
            let (name, pos) = self.ident()?;
            if TERMINALS.contains(&name.as_str()) && !anonymous {
                self.expect_punct("(")?;
                self.expect_punct(")")?;
                if self.is_punct(".") {
                    return Err(ParseError::unsupported(name, pos));
                }
                continue;
            }
            if anonymous && (name == "to" || name == "from") {
                // belongs to the enclosing addE
                self.at = save;
                break;
            }
            steps.push(self.step(name, pos)?);
        }
        Ok(GremlinQuery {
            source,
            steps,
            anonymous,
        })
    }

    fn step(&mut self, name: String, pos: usize) -> Result<Step, ParseError> {
        Ok(match name.as_str() {
            "hasLabel" => {
                let labels = self.string_args()?;
                if labels.is_empty() {
                    return self.error("hasLabel needs at least one label");
                }
                Step::HasLabel(labels)
            }
            "has" => self.has(pos)?,
            "count" => {
                self.empty_args(&name, pos)?;
                Step::Count
            }
            "valueMap" => {
                self.empty_args(&name, pos)?;
                Step::ValueMap
            }
            "drop" => {
                self.empty_args(&name, pos)?;
                Step::Drop
            }
            "property" => {
                self.expect_punct("(")?;
                if self.peek().is_some_and(|t| t.ident().is_some()) {
                    // cardinality or T tokens
                    return Err(ParseError::unsupported("property", pos));
                }
                let key = self.string()?;
                self.expect_punct(",")?;
                let value = self.literal()?;
                if matches!(value, Literal::Null | Literal::List(_)) {
                    return Err(ParseError::unsupported("property", pos));
                }
                self.expect_punct(")")?;
                Step::Property(key, value)
            }
            "addE" => {
                let label = match <[String; 1]>::try_from(self.string_args()?) {
                    Ok([l]) => l,
                    Err(_) => return Err(ParseError::unsupported("addE", pos)),
                };
                if !self.eat_punct(".") {
                    return Err(ParseError::unsupported("addE", pos));
                }
                let (end_name, end_pos) = self.ident()?;
                let end = match end_name.as_str() {
                    "to" => EdgeEnd::To,
                    "from" => EdgeEnd::From,
                    _ => return Err(ParseError::unsupported(end_name, end_pos)),
                };
                self.expect_punct("(")?;
                if !self.peek().is_some_and(|t| t.ident() == Some("__")) {
                    return Err(ParseError::unsupported(end_name, end_pos));
                }
                let other = self.traversal(true)?;
                self.expect_punct(")")?;
                Step::AddE {
                    label,
                    end,
                    other: Box::new(other),
                }
            }
            _ => return Err(ParseError::unsupported(name, pos)),
        })
    }

    fn has(&mut self, pos: usize) -> Result<Step, ParseError> {
        self.expect_punct("(")?;
        if !matches!(self.peek().map(|t| &t.tok), Some(Tok::Str(_))) {
            return Err(ParseError::unsupported("has", pos));
        }
        let key = self.string()?;
        if self.eat_punct(")") {
            return Ok(Step::Has(key));
        }
        self.expect_punct(",")?;
        let pred = if let Some((name, pred_pos)) = self.predicate_name() {
            self.expect_punct("(")?;
            let mut args = Vec::new();
            if !self.is_punct(")") {
                loop {
                    args.push(self.literal()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.expect_punct(")")?;
            let single = |args: Vec<Literal>| match <[Literal; 1]>::try_from(args) {
                Ok([a]) => Ok(a),
                Err(_) => Err(ParseError::Syntax {
                    message: format!("{name}() takes one argument"),
                    position: pred_pos,
                }),
            };
            let list = |args: Vec<Literal>| match args.as_slice() {
                [Literal::List(items)] => items.clone(),
                _ => args,
            };
            match name.as_str() {
                "eq" => Pred::Eq(single(args)?),
                "neq" => Pred::Neq(single(args)?),
                "gt" => Pred::Gt(single(args)?),
                "gte" => Pred::Gte(single(args)?),
                "lt" => Pred::Lt(single(args)?),
                "lte" => Pred::Lte(single(args)?),
                "within" => Pred::Within(list(args)),
                "without" => Pred::Without(list(args)),
                _ => return Err(ParseError::unsupported(name, pred_pos)),
            }
        } else {
            Pred::Value(self.literal()?)
        };
        if self.is_punct(",") {
            return Err(ParseError::unsupported("has", pos));
        }
        self.expect_punct(")")?;
        Ok(Step::HasValue(key, pred))
    }

    /// A predicate call such as `neq(` or `P.neq(`.
    fn predicate_name(&mut self) -> Option<(String, usize)> {
        let t = self.peek()?;
        let name = t.ident()?;
        if matches!(name, "true" | "false" | "null") {
            return None;
        }
        if name == "P" && self.tokens.get(self.at + 1).is_some_and(|t| t.is_punct(".")) {
            self.at += 2;
            return self.ident().ok();
        }
        if !self.tokens.get(self.at + 1).is_some_and(|t| t.is_punct("(")) {
            return None;
        }
        let out = (name.to_owned(), t.pos);
        self.at += 1;
        Some(out)
    }

    fn empty_args(&mut self, name: &str, pos: usize) -> Result<(), ParseError> {
        self.expect_punct("(")?;
        if self.peek().is_none() {
            return self.error("expected `)`");
        }
        if !self.eat_punct(")") {
            return Err(ParseError::unsupported(name, pos));
        }
        Ok(())
    }

    fn string(&mut self) -> Result<String, ParseError> {
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.at += 1;
                Ok(s)
            }
            _ => self.error("expected a string"),
        }
    }

    fn string_args(&mut self) -> Result<Vec<String>, ParseError> {
        self.expect_punct("(")?;
        let mut out = Vec::new();
        if !self.is_punct(")") {
            loop {
                out.push(self.string()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(out)
    }

    fn literal_args(&mut self) -> Result<Vec<Literal>, ParseError> {
        self.expect_punct("(")?;
        let mut out = Vec::new();
        if !self.is_punct(")") {
            loop {
                out.push(self.literal()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(out)
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        let negative = self.eat_punct("-");
        let pos = self.pos();
        let Some(t) = self.peek().cloned() else {
            return self.error("expected a literal");
        };
        self.at += 1;
        Ok(match t.tok {
            Tok::Int(i) => Literal::Int(if negative { -i } else { i }),
            Tok::Float(x) => Literal::Float(if negative { -x } else { x }),
            _ if negative => return self.error("expected a number after `-`"),
            Tok::Str(s) => Literal::Str(s),
            Tok::Ident(s) if s == "true" => Literal::Bool(true),
            Tok::Ident(s) if s == "false" => Literal::Bool(false),
            Tok::Ident(s) if s == "null" => Literal::Null,
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
            Tok::Ident(s) => return Err(ParseError::unsupported(s, pos)),
            other => {
                return Err(ParseError::Syntax {
                    message: format!("expected a literal, found `{other}`"),
                    position: pos,
                })
            }
        })
    }
}
