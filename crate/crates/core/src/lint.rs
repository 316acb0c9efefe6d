//! Rejects queries whose results are legitimately nondeterministic or that would change the
//! shared graph.

use serde::{Deserialize, Serialize};

use crate::ir::lex::{tokenize, Token};
use crate::model::Dialect;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "detail", rename_all = "snake_case")]
pub enum LintVerdict {
    Pass,
    NonDeterministic(String),
    Mutating(String),
    Unparseable(String),
}

impl LintVerdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, LintVerdict::Pass)
    }

    pub fn tag(&self) -> &'static str {
        match self {
            LintVerdict::Pass => "pass",
            LintVerdict::NonDeterministic(_) => "non_deterministic",
            LintVerdict::Mutating(_) => "mutating",
            LintVerdict::Unparseable(_) => "unparseable",
        }
    }
}

/// Deny-lists. Gremlin entries ending in `(` only match a step call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LintConfig {
    pub cypher_nondeterministic: Vec<String>,
    pub cypher_mutating: Vec<String>,
    pub gremlin_nondeterministic: Vec<String>,
    pub gremlin_mutating: Vec<String>,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| (*s).to_owned()).collect()
}

impl Default for LintConfig {
    fn default() -> Self {
        LintConfig {
            cypher_nondeterministic: strings(&["SKIP", "LIMIT", "rand"]),
            cypher_mutating: strings(&[
                "CREATE", "MERGE", "SET", "DELETE", "DETACH", "REMOVE", "DROP", "LOAD", "FOREACH",
            ]),
            gremlin_nondeterministic: strings(&["sample(", "coin(", "shuffle"]),
            gremlin_mutating: strings(&[
                "addV(", "addE(", "property(", "drop(", "mergeV(", "mergeE(",
            ]),
        }
    }
}

#[derive(Clone, Copy)]
enum Kind {
    NonDeterministic,
    Mutating,
}

pub fn lint_query(text: &str, dialect: Dialect, config: &LintConfig) -> LintVerdict {
    if text.trim().is_empty() {
        return LintVerdict::Unparseable("empty query".into());
    }
    let tokens = match tokenize(text) {
        Ok(t) => t,
        Err(e) => return LintVerdict::Unparseable(e.to_string()),
    };
    let hit = match dialect {
        Dialect::Cypher => scan_cypher(&tokens, config),
        Dialect::Gremlin => scan_gremlin(&tokens, config),
    };
    match hit {
        None => LintVerdict::Pass,
        Some((Kind::NonDeterministic, t)) => LintVerdict::NonDeterministic(t),
        Some((Kind::Mutating, t)) => LintVerdict::Mutating(t),
    }
}

fn scan_cypher(tokens: &[Token], config: &LintConfig) -> Option<(Kind, String)> {
    for (i, t) in tokens.iter().enumerate() {
        let Some(word) = t.ident() else { continue };
        // property keys and labels
        if i > 0 && (tokens[i - 1].is_punct(".") || tokens[i - 1].is_punct(":")) {
            continue;
        }
        let lists = [
            (Kind::NonDeterministic, &config.cypher_nondeterministic),
            (Kind::Mutating, &config.cypher_mutating),
        ];
        for (kind, list) in lists {
            if let Some(hit) = list.iter().find(|d| d.eq_ignore_ascii_case(word)) {
                return Some((kind, hit.clone()));
            }
        }
    }
    None
}

fn scan_gremlin(tokens: &[Token], config: &LintConfig) -> Option<(Kind, String)> {
    for (i, t) in tokens.iter().enumerate() {
        let Some(word) = t.ident() else { continue };
        let called = tokens.get(i + 1).is_some_and(|n| n.is_punct("("));
        let lists = [
            (Kind::NonDeterministic, &config.gremlin_nondeterministic),
            (Kind::Mutating, &config.gremlin_mutating),
        ];
        for (kind, list) in lists {
            for entry in list {
                let (name, needs_call) = match entry.strip_suffix('(') {
                    Some(n) => (n, true),
                    None => (entry.as_str(), false),
                };
                if name == word && (called || !needs_call) {
                    return Some((kind, name.to_owned()));
                }
            }
        }
    }
    None
}
