//! Query batches from a chat-completion service or from recorded fixtures, and the parser
//! that splits a response into single-statement queries.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ir::{operator_fingerprint, OperatorFingerprint};
use crate::lint::LintVerdict;
use crate::model::Dialect;

#[derive(Debug, thiserror::Error)]
pub enum GenerationError {
    #[error("round {round}: transport failure: {message}")]
    Transport { round: u32, message: String },
    #[error("no fixture for round {0}")]
    ReplayMiss(u32),
    #[error("fixture for round {round} was recorded for a different prompt")]
    PromptMismatch { round: u32 },
    #[error("credential environment variable {0} is not set")]
    CredentialMissing(String),
    #[error("fixture file {path}: {message}")]
    Fixture { path: PathBuf, message: String },
    #[error("remote generation is not available in this build")]
    RemoteUnavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub round: u32,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseSource {
    Remote,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub raw: String,
    pub source: ResponseSource,
    pub latency_ms: u64,
}

/// One line of a fixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub round: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_sha256: Option<String>,
    pub response: String,
}

pub fn prompt_sha256(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

pub trait QueryGenerator {
    fn generate(&mut self, request: &GenerationRequest) -> Result<GenerationResponse, GenerationError>;
}

pub struct ReplayGenerator {
    entries: BTreeMap<u32, FixtureEntry>,
}

impl ReplayGenerator {
    pub fn from_entries(entries: impl IntoIterator<Item = FixtureEntry>) -> Self {
        ReplayGenerator {
            entries: entries.into_iter().map(|e| (e.round, e)).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, GenerationError> {
        Ok(Self::from_entries(read_fixtures(path)?))
    }

    pub fn rounds(&self) -> usize {
        self.entries.len()
    }
}

impl QueryGenerator for ReplayGenerator {
    fn generate(&mut self, request: &GenerationRequest) -> Result<GenerationResponse, GenerationError> {
        let entry = self
            .entries
            .get(&request.round)
            .ok_or(GenerationError::ReplayMiss(request.round))?;
        if let Some(hash) = &entry.prompt_sha256 {
            if *hash != prompt_sha256(&request.prompt) {
                return Err(GenerationError::PromptMismatch {
                    round: request.round,
                });
            }
        }
        Ok(GenerationResponse {
            raw: entry.response.clone(),
            source: ResponseSource::Replay,
            latency_ms: 0,
        })
    }
}

pub fn read_fixtures(path: &Path) -> Result<Vec<FixtureEntry>, GenerationError> {
    let err = |message: String| GenerationError::Fixture {
        path: path.to_owned(),
        message,
    };
    let file = File::open(path).map_err(|e| err(e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: FixtureEntry =
            serde_json::from_str(&line).map_err(|e| err(format!("line {}: {e}", i + 1)))?;
        out.push(entry);
    }
    Ok(out)
}

pub fn append_fixture(path: &Path, entry: &FixtureEntry) -> std::io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let line = serde_json::to_string(entry).map_err(std::io::Error::other)?;
    writeln!(f, "{line}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteSettings {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Name of the environment variable holding the bearer token; never the token itself.
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
    /// Every response is appended here so the run can be replayed.
    pub record_to: Option<PathBuf>,
}

impl Default for RemoteSettings {
    fn default() -> Self {
        RemoteSettings {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-3.5-turbo-16k-0613".into(),
            temperature: 1.0,
            max_tokens: 4096,
            api_key_env: Some("OPENAI_API_KEY".into()),
            timeout_secs: 120,
            record_to: None,
        }
    }
}

pub struct RemoteGenerator {
    settings: RemoteSettings,
    api_key: Option<String>,
}

impl RemoteGenerator {
    pub fn new(settings: RemoteSettings) -> Result<Self, GenerationError> {
        let api_key = match &settings.api_key_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| GenerationError::CredentialMissing(var.clone()))?,
            ),
            None => None,
        };
        Ok(RemoteGenerator { settings, api_key })
    }

    pub fn request_body(&self, request: &GenerationRequest) -> serde_json::Value {
        serde_json::json!({
            "model": request.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        })
    }

    #[cfg(feature = "net")]
    fn post(&self, body: &serde_json::Value) -> Result<serde_json::Value, String> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(std::time::Duration::from_secs(self.settings.timeout_secs)))
            .build()
            .into();
        let mut req = agent.post(&self.settings.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        resp.body_mut()
            .read_json::<serde_json::Value>()
            .map_err(|e| e.to_string())
    }

    #[cfg(not(feature = "net"))]
    fn post(&self, _body: &serde_json::Value) -> Result<serde_json::Value, String> {
        let _ = &self.api_key;
        Err(GenerationError::RemoteUnavailable.to_string())
    }
}

impl QueryGenerator for RemoteGenerator {
    fn generate(&mut self, request: &GenerationRequest) -> Result<GenerationResponse, GenerationError> {
        let started = Instant::now();
        let transport = |message: String| GenerationError::Transport {
            round: request.round,
            message,
        };
        let reply = self.post(&self.request_body(request)).map_err(transport)?;
        let raw = reply
            .pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .ok_or_else(|| transport("reply has no choices[0].message.content".into()))?
            .to_owned();
        if let Some(path) = &self.settings.record_to {
            let entry = FixtureEntry {
                round: request.round,
                prompt_sha256: Some(prompt_sha256(&request.prompt)),
                response: raw.clone(),
            };
            append_fixture(path, &entry).map_err(|e| GenerationError::Fixture {
                path: path.clone(),
                message: e.to_string(),
            })?;
        }
        Ok(GenerationResponse {
            raw,
            source: ResponseSource::Remote,
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}

/// A query flowing through the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub dialect: Dialect,
    pub text: String,
    pub round: u32,
    pub index: usize,
    pub fingerprint: OperatorFingerprint,
    pub lint: Option<LintVerdict>,
}

fn looks_like_query(s: &str, dialect: Dialect) -> bool {
    match dialect {
        Dialect::Gremlin => s.starts_with("g."),
        Dialect::Cypher => {
            const STARTS: &[&str] = &[
                "MATCH", "OPTIONAL", "WITH", "UNWIND", "RETURN", "CALL", "CREATE", "MERGE",
                "FOREACH", "LOAD", "DETACH", "DELETE", "SET", "REMOVE", "DROP",
            ];
            let first = s
                .split(|c: char| !c.is_ascii_alphabetic())
                .next()
                .unwrap_or_default();
            STARTS.iter().any(|k| k.eq_ignore_ascii_case(first))
        }
    }
}

/// Strips a leading `1.` / `1)` / `-` / `*` list marker.
fn strip_marker(line: &str) -> (&str, bool) {
    let t = line.trim_start();
    let digits = t.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &t[digits..];
        if let Some(r) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
            return (r.trim_start(), true);
        }
    }
    for m in ["- ", "* "] {
        if let Some(r) = t.strip_prefix(m) {
            return (r.trim_start(), true);
        }
    }
    (t, false)
}

/// Splits on `;` outside string literals.
fn split_statements(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for c in text.chars() {
        match quote {
            Some(q) => {
                cur.push(c);
                if escaped {
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == q {
                    quote = None;
                }
            }
            None if c == ';' => out.push(std::mem::take(&mut cur)),
            None => {
                if c == '\'' || c == '"' {
                    quote = Some(c);
                }
                cur.push(c);
            }
        }
    }
    out.push(cur);
    out.into_iter()
        .map(|s| s.trim().to_owned())
        .filter(|s| !s.is_empty())
        .collect()
}

fn clean(candidate: &str) -> String {
    let mut s = candidate.trim();
    loop {
        let before = s;
        s = s.trim_end_matches(';').trim();
        for (open, close) in [("`", "`"), ("\"", "\""), ("'", "'")] {
            if s.len() >= 2 && s.starts_with(open) && s.ends_with(close) {
                let inner = &s[1..s.len() - 1];
                // only unwrap when the quote is not part of the query itself
                if !inner.contains(open) {
                    s = inner.trim();
                }
            }
        }
        if s == before {
            break;
        }
    }
    s.to_owned()
}

fn push_candidates(text: &str, dialect: Dialect, out: &mut Vec<String>) {
    for stmt in split_statements(&clean(text)) {
        let q = clean(&stmt);
        if !q.is_empty() && looks_like_query(&q, dialect) {
            out.push(q);
        }
    }
}

fn has_return(text: &str) -> bool {
    text.split(|c: char| !c.is_ascii_alphanumeric() && c != '_')
        .any(|w| w.eq_ignore_ascii_case("RETURN"))
}

/// Joins the lines of a fenced block into statements; a blank line also ends a statement.
fn fenced_statements(lines: &[&str], dialect: Dialect) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut Vec<String>| {
        if !cur.trim().is_empty() {
            push_candidates(cur, dialect, out);
        }
        cur.clear();
    };
    for raw in lines {
        let (line, marked) = strip_marker(raw);
        let line = line.trim();
        if line.is_empty() || line.starts_with("//") {
            flush(&mut cur, &mut out);
            continue;
        }
        let continues = match dialect {
            Dialect::Gremlin => line.starts_with('.'),
            // a clause line continues the statement until that statement has returned
            Dialect::Cypher => !looks_like_query(line, dialect) || !has_return(&cur),
        };
        if (marked || !continues) && !cur.is_empty() {
            flush(&mut cur, &mut out);
        }
        if !cur.is_empty() {
            cur.push(' ');
        }
        cur.push_str(line);
        if line.ends_with(';') {
            flush(&mut cur, &mut out);
        }
    }
    flush(&mut cur, &mut out);
    out
}

pub fn parse_generation_response(raw: &str, dialect: Dialect, round: u32) -> Vec<Query> {
    let lines: Vec<&str> = raw.lines().collect();
    let mut texts = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i].trim();
        if line.starts_with("```") {
            let start = i + 1;
            let mut end = start;
            while end < lines.len() && !lines[end].trim().starts_with("```") {
                end += 1;
            }
            texts.extend(fenced_statements(&lines[start..end], dialect));
            i = end + 1;
            continue;
        }
        let (body, marked) = strip_marker(line);
        let body = clean(body);
        let bare = match dialect {
            Dialect::Cypher => line.ends_with(';') && looks_like_query(&body, dialect),
            Dialect::Gremlin => body.starts_with("g."),
        };
        if marked || bare {
            // a numbered item may wrap onto following indented lines
            let mut joined = strip_marker(line).0.to_owned();
            while i + 1 < lines.len() {
                let next = lines[i + 1];
                let nt = next.trim();
                let wraps = !nt.is_empty()
                    && next.starts_with(char::is_whitespace)
                    && !strip_marker(nt).1
                    && !nt.starts_with("```")
                    && (dialect == Dialect::Cypher || nt.starts_with('.'));
                if !wraps {
                    break;
                }
                joined.push(' ');
                joined.push_str(nt);
                i += 1;
            }
            push_candidates(&joined, dialect, &mut texts);
        }
        i += 1;
    }
    if texts.is_empty() && !raw.trim().is_empty() {
        log::debug!("round {round}: no queries found in response");
    }
    texts
        .into_iter()
        .enumerate()
        .map(|(index, text)| Query {
            dialect,
            fingerprint: operator_fingerprint(&text, dialect),
            text,
            round,
            index,
            lint: None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(raw: &str, dialect: Dialect) -> Vec<String> {
        parse_generation_response(raw, dialect, 1)
            .into_iter()
            .map(|q| q.text)
            .collect()
    }

    #[test]
    fn numbered_lines() {
        assert_eq!(
            texts("1. MATCH (n:nt0) RETURN n;\n2. MATCH (n) RETURN count(n);", Dialect::Cypher),
            vec!["MATCH (n:nt0) RETURN n", "MATCH (n) RETURN count(n)"]
        );
    }

    #[test]
    fn fenced_gremlin() {
        assert_eq!(
            texts("Here you go:\n```groovy\ng.V().hasLabel('nt0')\n```", Dialect::Gremlin),
            vec!["g.V().hasLabel('nt0')"]
        );
        assert_eq!(
            texts("```\ng.V()\n  .hasLabel('nt0')\n  .count()\ng.E().count()\n```", Dialect::Gremlin),
            vec!["g.V() .hasLabel('nt0') .count()", "g.E().count()"]
        );
    }

    #[test]
    fn prose_only() {
        assert!(texts("Sure! Here are the queries:", Dialect::Cypher).is_empty());
        assert!(texts("", Dialect::Gremlin).is_empty());
    }

    #[test]
    fn fenced_cypher_multiline() {
        let raw = "```cypher\nMATCH (n:nt0)\nWHERE n.p1 > 3\nRETURN n;\n\nMATCH (m) RETURN m;\n```";
        assert_eq!(
            texts(raw, Dialect::Cypher),
            vec!["MATCH (n:nt0) WHERE n.p1 > 3 RETURN n", "MATCH (m) RETURN m"]
        );
    }

    #[test]
    fn quotes_backticks_and_wrapping() {
        let raw = "1. `MATCH (n) WHERE n.name = 'a;b' RETURN n;`\n2. \"g.V().count()\"";
        assert_eq!(texts(raw, Dialect::Cypher), vec!["MATCH (n) WHERE n.name = 'a;b' RETURN n"]);
        assert_eq!(texts(raw, Dialect::Gremlin), vec!["g.V().count()"]);
        let raw = "1. MATCH (n)\n   RETURN n;\n2. Explanation: finds nodes.";
        assert_eq!(texts(raw, Dialect::Cypher), vec!["MATCH (n) RETURN n"]);
    }

    #[test]
    fn bare_lines_and_split() {
        let raw = "MATCH (n) RETURN n; MATCH (m) RETURN m;\nThis line is prose.\ng.V().count()";
        assert_eq!(texts(raw, Dialect::Cypher), vec!["MATCH (n) RETURN n", "MATCH (m) RETURN m"]);
        assert_eq!(texts(raw, Dialect::Gremlin), vec!["g.V().count()"]);
    }

    #[test]
    fn no_newlines_and_fingerprints() {
        let qs = parse_generation_response("```\nMATCH (n)\nRETURN n\n```", Dialect::Cypher, 3);
        assert_eq!(qs.len(), 1);
        assert!(!qs[0].text.contains('\n'));
        assert_eq!(qs[0].round, 3);
        assert!(qs[0].fingerprint.contains("MATCH"));
    }

    #[test]
    fn replay_hits_misses_and_hash_guard() {
        let prompt = "p";
        let mut gen = ReplayGenerator::from_entries([FixtureEntry {
            round: 1,
            prompt_sha256: Some(prompt_sha256(prompt)),
            response: "1. MATCH (n) RETURN n;".into(),
        }]);
        let mut req = GenerationRequest {
            prompt: prompt.into(),
            round: 1,
            model: "m".into(),
            temperature: 1.0,
            max_tokens: 10,
        };
        assert_eq!(gen.generate(&req).unwrap().raw, "1. MATCH (n) RETURN n;");
        req.round = 999;
        assert!(matches!(gen.generate(&req), Err(GenerationError::ReplayMiss(999))));
        req.round = 1;
        req.prompt = "other".into();
        assert!(matches!(gen.generate(&req), Err(GenerationError::PromptMismatch { round: 1 })));
    }

    #[test]
    fn missing_credential() {
        let settings = RemoteSettings {
            api_key_env: Some("GRAPHDIFF_TEST_SURELY_UNSET_VAR".into()),
            ..RemoteSettings::default()
        };
        assert!(matches!(
            RemoteGenerator::new(settings),
            Err(GenerationError::CredentialMissing(_))
        ));
    }

    #[test]
    fn fixture_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.jsonl");
        let e = FixtureEntry {
            round: 2,
            prompt_sha256: None,
            response: "x\ny".into(),
        };
        append_fixture(&path, &e).unwrap();
        append_fixture(&path, &e).unwrap();
        assert_eq!(read_fixtures(&path).unwrap(), vec![e.clone(), e]);
    }
}
