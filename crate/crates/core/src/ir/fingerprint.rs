//! Lexical operator fingerprints, used for diversity statistics and discrepancy dedup.

use std::collections::BTreeSet;

use super::lex::{tokenize, Tok, Token};
use crate::model::Dialect;

pub type OperatorFingerprint = BTreeSet<String>;

/// Cypher clause keywords, matched case-insensitively and reported upper-case.
pub const CYPHER_KEYWORDS: &[&str] = &[
    "MATCH", "OPTIONAL MATCH", "WHERE", "RETURN", "WITH", "UNWIND", "UNION", "UNION ALL",
    "ORDER BY", "SKIP", "LIMIT", "DISTINCT", "CREATE", "MERGE", "SET", "DELETE", "DETACH",
    "REMOVE", "FOREACH", "CALL", "CASE", "AND", "OR", "NOT", "XOR", "IN", "IS NULL",
    "IS NOT NULL", "STARTS WITH", "ENDS WITH", "CONTAINS", "EXISTS",
];

/// Cypher functions, matched case-insensitively when followed by `(`.
pub const CYPHER_FUNCTIONS: &[&str] = &[
    "count", "avg", "sum", "min", "max", "collect", "stDev", "stDevP", "percentileCont",
    "percentileDisc", "coalesce", "length", "type", "keys", "labels", "startNode", "endNode",
    "nodes", "relationships", "reduce", "shortestPath", "allShortestPaths", "size", "head",
    "last", "tail", "id", "properties", "toString", "toInteger", "toFloat", "toBoolean",
    "range", "abs", "round", "ceil", "floor", "sign", "sqrt", "rand", "timestamp", "any", "all",
    "none", "single", "split", "substring", "toLower", "toUpper", "trim", "ltrim", "rtrim",
    "replace", "left", "right", "reverse", "exists", "date", "datetime",
];

/// Gremlin steps and predicates, matched case-sensitively when followed by `(`.
pub const GREMLIN_STEPS: &[&str] = &[
    "V", "E", "addV", "addE", "to", "from", "hasLabel", "hasId", "has", "hasNot", "hasKey",
    "hasValue", "values", "label", "id", "key", "value", "properties", "valueMap", "elementMap",
    "propertyMap", "select", "dedup", "local", "order", "by", "where", "filter", "match", "eq",
    "neq", "gt", "gte", "lt", "lte", "inside", "outside", "between", "within", "without",
    "group", "groupCount", "in", "out", "inE", "outE", "inV", "outV", "otherV", "both", "bothE",
    "bothV", "path", "simplePath", "cyclicPath", "repeat", "until", "emit", "times", "sum", "max",
    "min", "mean", "count", "contains", "containing", "startingWith", "endingWith",
    "notContaining", "choose", "option", "union", "coalesce", "optional", "fold", "unfold",
    "limit", "range", "skip", "tail", "sample", "coin", "shuffle", "as", "is", "not", "and", "or",
    "project", "constant", "identity", "math", "store", "aggregate", "cap", "sideEffect",
    "barrier", "drop", "property", "mergeV", "mergeE", "inject", "iterate", "toList", "toSet",
    "next", "tryNext", "explain", "profile",
];

/// Every token [`operator_fingerprint`] can emit for `dialect`, excluding `UNKNOWN:` entries.
pub fn known_operators(dialect: Dialect) -> BTreeSet<String> {
    match dialect {
        Dialect::Cypher => CYPHER_KEYWORDS
            .iter()
            .chain(CYPHER_FUNCTIONS)
            .map(|s| (*s).to_owned())
            .collect(),
        Dialect::Gremlin => GREMLIN_STEPS.iter().map(|s| (*s).to_owned()).collect(),
    }
}

/// Tokens up to the first lexing error; an unterminated literal hides the rest of the text.
fn lenient_tokens(text: &str) -> Vec<Token> {
    match tokenize(text) {
        Ok(t) => t,
        Err(e) => tokenize(&text[..e.pos]).unwrap_or_default(),
    }
}

pub fn operator_fingerprint(text: &str, dialect: Dialect) -> OperatorFingerprint {
    let tokens = lenient_tokens(text);
    match dialect {
        Dialect::Cypher => cypher(&tokens),
        Dialect::Gremlin => gremlin(&tokens),
    }
}

fn ident_at(tokens: &[Token], i: usize) -> Option<&str> {
    tokens.get(i).and_then(Token::ident)
}

fn upper_at(tokens: &[Token], i: usize) -> Option<String> {
    ident_at(tokens, i).map(|s| s.to_ascii_uppercase())
}

fn cypher(tokens: &[Token]) -> OperatorFingerprint {
    let mut out = OperatorFingerprint::new();
    let mut i = 0;
    while i < tokens.len() {
        let Some(word) = ident_at(tokens, i) else {
            i += 1;
            continue;
        };
        let after_dot_or_colon = i > 0 && (tokens[i - 1].is_punct(".") || tokens[i - 1].is_punct(":"));
        let next_is = |p: &str| tokens.get(i + 1).is_some_and(|t| t.is_punct(p));
        if after_dot_or_colon || next_is(":") {
            i += 1;
            continue;
        }
        let upper = word.to_ascii_uppercase();
        let second = upper_at(tokens, i + 1);
        let third = upper_at(tokens, i + 2);
        let (entry, width) = match (upper.as_str(), second.as_deref(), third.as_deref()) {
            ("OPTIONAL", Some("MATCH"), _) => ("OPTIONAL MATCH".to_owned(), 2),
            ("UNION", Some("ALL"), _) => ("UNION ALL".to_owned(), 2),
            ("ORDER", Some("BY"), _) => ("ORDER BY".to_owned(), 2),
            ("STARTS", Some("WITH"), _) => ("STARTS WITH".to_owned(), 2),
            ("ENDS", Some("WITH"), _) => ("ENDS WITH".to_owned(), 2),
            ("IS", Some("NOT"), Some("NULL")) => ("IS NOT NULL".to_owned(), 3),
            ("IS", Some("NULL"), _) => ("IS NULL".to_owned(), 2),
            _ if next_is("(") => {
                if let Some(f) = CYPHER_FUNCTIONS.iter().find(|f| f.eq_ignore_ascii_case(word)) {
                    ((*f).to_owned(), 1)
                } else if CYPHER_KEYWORDS.contains(&upper.as_str()) {
                    (upper, 1)
                } else {
                    (format!("UNKNOWN:{word}"), 1)
                }
            }
            _ if CYPHER_KEYWORDS.contains(&upper.as_str()) => (upper, 1),
            _ => {
                i += 1;
                continue;
            }
        };
        out.insert(entry);
        i += width;
    }
    out
}

fn gremlin(tokens: &[Token]) -> OperatorFingerprint {
    let mut out = OperatorFingerprint::new();
    for (i, t) in tokens.iter().enumerate() {
        let Tok::Ident(word) = &t.tok else { continue };
        if !tokens.get(i + 1).is_some_and(|t| t.is_punct("(")) {
            continue;
        }
        if GREMLIN_STEPS.contains(&word.as_str()) {
            out.insert(word.clone());
        } else {
            out.insert(format!("UNKNOWN:{word}"));
        }
    }
    out
}
