//! Rounds of graph, prompt, generation, lint, execution, normalization and comparison, plus
//! statistics, discrepancy clustering and reports.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adapter::{BridgeAdapter, EngineAdapter, HttpTransport, LineTransport, RawResult, ReferenceAdapter};
use crate::compare::{classify_pair, is_ordered_query, DiscrepancyKind, EngineOutcome, Tolerance, Verdict};
use crate::engine::FaultSet;
use crate::gen::{generate_graph, generate_schema, GenParams};
use crate::ir::OperatorFingerprint;
use crate::lint::{lint_query, LintConfig, LintVerdict};
use crate::model::{Dialect, LabeledPropertyGraph};
use crate::normalize::{normalize_cypher, normalize_gremlin, Style};
use crate::prompt::{build_prompt, DialectProfile, DEFAULT_MAX_PROMPT_CHARS};
use crate::querygen::{
    parse_generation_response, GenerationError, GenerationRequest, QueryGenerator, RemoteGenerator,
    RemoteSettings, ReplayGenerator,
};

pub const SCHEMA_VERSION: u32 = 1;

/// The default configuration with every key written out and explained.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("default_config.toml");

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("adapter-unreachable: {engine}: {message}")]
    AdapterUnreachable { engine: String, message: String },
    #[error("fixture-miss: no recorded response for round {0}")]
    FixtureMiss(u32),
    #[error(transparent)]
    Generation(GenerationError),
    #[error("fatal-io: {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl From<GenerationError> for CampaignError {
    fn from(e: GenerationError) -> Self {
        match e {
            GenerationError::ReplayMiss(round) => CampaignError::FixtureMiss(round),
            other => CampaignError::Generation(other),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CampaignError + '_ {
    move |e| CampaignError::Io {
        path: path.to_owned(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineKind {
    Reference,
    BridgeStdio,
    BridgeHttp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub name: String,
    pub kind: EngineKind,
    /// Faults switched on in a reference engine.
    #[serde(default)]
    pub faults: FaultSet,
    /// Program and arguments of a stdio bridge.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub command: Vec<String>,
    /// Base address of an HTTP bridge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default = "default_style")]
    pub style: Style,
}

fn default_style() -> Style {
    Style::CanonicalJson
}

impl EngineConfig {
    pub fn reference(name: &str, faults: FaultSet) -> Self {
        EngineConfig {
            name: name.to_owned(),
            kind: EngineKind::Reference,
            faults,
            command: Vec::new(),
            url: None,
            style: Style::CanonicalJson,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Remote,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    /// Recorded responses (JSON lines) read by the replay generator.
    pub fixtures: Option<PathBuf>,
    pub remote: RemoteSettings,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            kind: GeneratorKind::Replay,
            fixtures: Some(PathBuf::from("fixtures.jsonl")),
            remote: RemoteSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaConfig {
    pub node_labels: usize,
    pub edge_labels: usize,
    /// Including `name`.
    pub property_keys: usize,
}

impl Default for SchemaConfig {
    fn default() -> Self {
        SchemaConfig {
            node_labels: 4,
            edge_labels: 4,
            property_keys: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub report_json: Option<PathBuf>,
    pub report_md: Option<PathBuf>,
    /// Per-round progress (JSON lines); an interrupted campaign resumes from it.
    pub progress: Option<PathBuf>,
    /// Write timing fields into the JSON report.
    pub include_timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub dialect: Dialect,
    pub rounds: u32,
    pub queries_per_round: usize,
    /// Replaces the dialect's default operator list in the prompt.
    pub operators: Option<Vec<String>>,
    /// Prompts longer than this are rejected rather than truncated.
    pub max_prompt_chars: usize,
    /// Use this graph file instead of generating one.
    pub graph_file: Option<PathBuf>,
    /// Generate a fresh graph (seed + round - 1) for every round.
    pub regenerate_graph: bool,
    pub schema: SchemaConfig,
    pub graph: GenParams,
    pub generator: GeneratorConfig,
    pub engine_a: EngineConfig,
    pub engine_b: EngineConfig,
    pub lint: LintConfig,
    pub tolerance: Tolerance,
    pub timeout_secs: u64,
    pub output: OutputConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            dialect: Dialect::Cypher,
            rounds: 200,
            queries_per_round: 20,
            operators: None,
            max_prompt_chars: DEFAULT_MAX_PROMPT_CHARS,
            graph_file: None,
            regenerate_graph: false,
            schema: SchemaConfig::default(),
            graph: GenParams::default(),
            generator: GeneratorConfig::default(),
            engine_a: EngineConfig::reference("reference", FaultSet::none()),
            engine_b: EngineConfig::reference("reference-faulty", FaultSet::all()),
            lint: LintConfig::default(),
            tolerance: Tolerance::default(),
            timeout_secs: 10,
            output: OutputConfig {
                report_json: Some(PathBuf::from("report.json")),
                report_md: Some(PathBuf::from("report.md")),
                progress: Some(PathBuf::from("progress.jsonl")),
                include_timing: true,
            },
        }
    }
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self, CampaignError> {
        let config: CampaignConfig = toml::from_str(text).map_err(|e| CampaignError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CampaignError> {
        Self::from_toml(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        let bad = |m: String| Err(CampaignError::Config(m));
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if self.queries_per_round == 0 {
            return bad("queries_per_round must be at least 1".into());
        }
        if self.timeout_secs == 0 {
            return bad("timeout_secs must be at least 1".into());
        }
        if !(self.tolerance.float_rel_tol >= 0.0 && self.tolerance.float_abs_tol >= 0.0) {
            return bad("tolerances must be non-negative".into());
        }
        for e in [&self.engine_a, &self.engine_b] {
            match e.kind {
                EngineKind::BridgeStdio if e.command.is_empty() => {
                    return bad(format!("engine `{}` needs a bridge command", e.name))
                }
                EngineKind::BridgeHttp if e.url.is_none() => {
                    return bad(format!("engine `{}` needs a bridge url", e.name))
                }
                _ => {}
            }
        }
        if self.engine_a.name == self.engine_b.name {
            return bad("the two engines need different names".into());
        }
        if self.generator.kind == GeneratorKind::Replay && self.generator.fixtures.is_none() {
            return bad("the replay generator needs a fixtures file".into());
        }
        self.profile().validate().map_err(|e| CampaignError::Config(e.to_string()))?;
        self.graph.validate().map_err(|e| CampaignError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn profile(&self) -> DialectProfile {
        let mut p = DialectProfile::default_for(self.dialect);
        p.queries_per_round = self.queries_per_round;
        p.max_prompt_chars = self.max_prompt_chars;
        if let Some(ops) = &self.operators {
            p.operators = ops.clone();
        }
        p
    }

    /// The graph used in `round` (1-based).
    pub fn graph_for_round(&self, round: u32) -> Result<LabeledPropertyGraph, CampaignError> {
        if let Some(path) = &self.graph_file {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            return LabeledPropertyGraph::from_json(&text).map_err(|e| CampaignError::Config(e.to_string()));
        }
        let mut params = self.graph.clone();
        if self.regenerate_graph {
            params.seed = params.seed.wrapping_add(u64::from(round) - 1);
        }
        let s = &self.schema;
        let schema = generate_schema(s.node_labels, s.edge_labels, s.property_keys, params.seed)
            .map_err(|e| CampaignError::Config(e.to_string()))?;
        generate_graph(&schema, &params).map_err(|e| CampaignError::Config(e.to_string()))
    }

    /// Hash of everything that influences results; progress files from another configuration
    /// are refused.
    fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        hex::encode(Sha256::digest(serde_json::to_vec(&c).expect("config serializes")))
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }
}

pub fn build_adapter(
    config: &EngineConfig,
    dialect: Dialect,
    timeout: Duration,
) -> Result<Box<dyn EngineAdapter>, CampaignError> {
    let unreachable = |message: String| CampaignError::AdapterUnreachable {
        engine: config.name.clone(),
        message,
    };
    Ok(match config.kind {
        EngineKind::Reference => Box::new(ReferenceAdapter::new(&config.name, dialect, config.faults)),
        EngineKind::BridgeStdio => {
            let (program, args) = config.command.split_first().ok_or_else(|| unreachable("no command".into()))?;
            let t = LineTransport::spawn(program, args).map_err(|e| unreachable(e.to_string()))?;
            Box::new(BridgeAdapter::new(&config.name, dialect, Box::new(t)).with_timeout(timeout))
        }
        EngineKind::BridgeHttp => {
            let url = config.url.as_deref().ok_or_else(|| unreachable("no url".into()))?;
            Box::new(BridgeAdapter::new(&config.name, dialect, Box::new(HttpTransport::new(url))).with_timeout(timeout))
        }
    })
}

pub fn build_generator(config: &CampaignConfig) -> Result<Box<dyn QueryGenerator>, CampaignError> {
    Ok(match config.generator.kind {
        GeneratorKind::Replay => {
            let path = config
                .generator
                .fixtures
                .as_ref()
                .ok_or_else(|| CampaignError::Config("no fixtures file".into()))?;
            Box::new(ReplayGenerator::load(path)?)
        }
        GeneratorKind::Remote => Box::new(RemoteGenerator::new(config.generator.remote.clone())?),
    })
}

/// One engine's execution of one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineRun {
    pub engine: String,
    pub raw: RawResult,
    pub outcome: EngineOutcome,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub round: u32,
    pub index: usize,
    pub text: String,
    pub fingerprint: OperatorFingerprint,
    pub lint: LintVerdict,
    /// Absent when the query did not pass lint.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<EngineRun>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

/// Runs `query` on one engine and normalizes the result.
pub fn run_on(adapter: &mut dyn EngineAdapter, style: Style, query: &str) -> EngineRun {
    let started = Instant::now();
    let raw = adapter.execute(query);
    let elapsed_ms = started.elapsed().as_millis() as u64;
    let outcome = match &raw {
        RawResult::Rows { .. } => {
            let normalized = match style {
                Style::GremlinText => normalize_gremlin(&raw, &mut |q| adapter.execute(q)),
                other => normalize_cypher(&raw, other),
            };
            match normalized {
                Ok(mut records) => {
                    records.ordered = is_ordered_query(query, adapter.dialect());
                    EngineOutcome::Rows { records }
                }
                Err(e) => EngineOutcome::NormalizationFailure { message: e.to_string() },
            }
        }
        RawResult::EngineError { class, message } => EngineOutcome::Error {
            class: class.clone(),
            message: message.clone(),
        },
        RawResult::Timeout => EngineOutcome::Timeout,
    };
    EngineRun {
        engine: adapter.name().to_owned(),
        raw,
        outcome,
        elapsed_ms,
    }
}

/// Runs `query` on both engines and compares.
pub fn evaluate_query(
    query: &str,
    dialect: Dialect,
    a: (&mut dyn EngineAdapter, Style),
    b: (&mut dyn EngineAdapter, Style),
    tol: &Tolerance,
) -> (Vec<EngineRun>, Verdict) {
    let ra = run_on(a.0, a.1, query);
    let rb = run_on(b.0, b.1, query);
    let verdict = classify_pair(query, dialect, &ra.outcome, &rb.outcome, tol).verdict;
    (vec![ra, rb], verdict)
}

/// Share of lint-passing queries whose first-engine result has at least one record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub non_empty: usize,
    pub total: usize,
}

impl Ratio {
    pub fn value(&self) -> Option<f64> {
        (self.total > 0).then(|| self.non_empty as f64 / self.total as f64)
    }
}

/// `0.7906` as `79.06%`.
pub fn format_percent(x: f64) -> String {
    format!("{:.2}%", x * 100.0)
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(x) => f.write_str(&format_percent(x)),
            None => f.write_str("N/A"),
        }
    }
}

pub fn compute_non_empty_ratio(records: &[QueryRecord]) -> Ratio {
    let passed: Vec<&QueryRecord> = records.iter().filter(|r| r.lint.is_pass()).collect();
    let non_empty = passed
        .iter()
        .filter(|r| {
            r.runs
                .first()
                .and_then(|run| run.outcome.records())
                .is_some_and(|rs| rs.non_empty)
        })
        .count();
    Ratio {
        non_empty,
        total: passed.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub total: usize,
    pub passed_lint: usize,
    pub lint_rejected: BTreeMap<String, usize>,
    pub non_empty_ratio: Ratio,
    pub equivalent: usize,
    pub discrepancies: usize,
    pub incomparable: usize,
    pub discrepancies_by_kind: BTreeMap<String, usize>,
    pub incomparable_by_reason: BTreeMap<String, usize>,
}

pub fn aggregate(records: &[QueryRecord]) -> Aggregates {
    let mut a = Aggregates {
        total: records.len(),
        passed_lint: 0,
        lint_rejected: BTreeMap::new(),
        non_empty_ratio: compute_non_empty_ratio(records),
        equivalent: 0,
        discrepancies: 0,
        incomparable: 0,
        discrepancies_by_kind: BTreeMap::new(),
        incomparable_by_reason: BTreeMap::new(),
    };
    for r in records {
        if r.lint.is_pass() {
            a.passed_lint += 1;
        } else {
            *a.lint_rejected.entry(r.lint.tag().to_owned()).or_default() += 1;
        }
        match &r.verdict {
            None => {}
            Some(Verdict::Equivalent) => a.equivalent += 1,
            Some(Verdict::Discrepancy { kind, .. }) => {
                a.discrepancies += 1;
                *a.discrepancies_by_kind.entry(kind.to_string()).or_default() += 1;
            }
            Some(Verdict::Incomparable { reason, .. }) => {
                a.incomparable += 1;
                *a.incomparable_by_reason.entry(reason.to_string()).or_default() += 1;
            }
        }
    }
    a
}

/// A discrepancy to be clustered.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyItem {
    pub fingerprint: OperatorFingerprint,
    pub kind: DiscrepancyKind,
    pub round: u32,
    pub index: usize,
    pub text: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub fingerprint: OperatorFingerprint,
    pub kind: DiscrepancyKind,
    pub size: usize,
    pub representative: String,
    pub detail: String,
    /// `(round, index)` of every member.
    pub members: Vec<(u32, usize)>,
}

pub fn dedup_discrepancies(items: &[DiscrepancyItem]) -> Vec<Cluster> {
    let mut clusters: Vec<Cluster> = Vec::new();
    for it in items {
        match clusters
            .iter_mut()
            .find(|c| c.fingerprint == it.fingerprint && c.kind == it.kind)
        {
            Some(c) => {
                c.size += 1;
                c.members.push((it.round, it.index));
            }
            None => clusters.push(Cluster {
                fingerprint: it.fingerprint.clone(),
                kind: it.kind,
                size: 1,
                representative: it.text.clone(),
                detail: it.detail.clone(),
                members: vec![(it.round, it.index)],
            }),
        }
    }
    // stable: equal sizes keep first-seen order
    clusters.sort_by(|a, b| b.size.cmp(&a.size));
    clusters
}

pub fn discrepancy_items(records: &[QueryRecord]) -> Vec<DiscrepancyItem> {
    records
        .iter()
        .filter_map(|r| match &r.verdict {
            Some(Verdict::Discrepancy { kind, detail }) => Some(DiscrepancyItem {
                fingerprint: r.fingerprint.clone(),
                kind: *kind,
                round: r.round,
                index: r.index,
                text: r.text.clone(),
                detail: detail.clone(),
            }),
            _ => None,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSummary {
    pub name: String,
    pub kind: EngineKind,
    pub faults: FaultSet,
    pub style: Style,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_before: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_after: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub schema_version: u32,
    pub dialect: Dialect,
    pub rounds: u32,
    pub graph_nodes: usize,
    pub graph_edges: usize,
    pub engines: Vec<EngineSummary>,
    pub aggregates: Aggregates,
    pub clusters: Vec<Cluster>,
    pub records: Vec<QueryRecord>,
    pub wall_ms: u64,
}

impl CampaignReport {
    pub fn assemble(
        config: &CampaignConfig,
        graph: &LabeledPropertyGraph,
        engines: Vec<EngineSummary>,
        records: Vec<QueryRecord>,
        wall_ms: u64,
    ) -> Self {
        CampaignReport {
            schema_version: SCHEMA_VERSION,
            dialect: config.dialect,
            rounds: config.rounds,
            graph_nodes: graph.nodes.len(),
            graph_edges: graph.edges.len(),
            engines,
            aggregates: aggregate(&records),
            clusters: dedup_discrepancies(&discrepancy_items(&records)),
            records,
            wall_ms,
        }
    }

    /// True when the stored aggregates and clusters match a recomputation from the records.
    pub fn is_self_consistent(&self) -> bool {
        self.aggregates == aggregate(&self.records)
            && self.clusters == dedup_discrepancies(&discrepancy_items(&self.records))
    }

    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.wall_ms = 0;
        for rec in &mut r.records {
            for run in &mut rec.runs {
                run.elapsed_ms = 0;
            }
        }
        r
    }

    pub fn to_json(&self, include_timing: bool) -> String {
        let r = if include_timing { self.clone() } else { self.without_timing() };
        let mut s = serde_json::to_string_pretty(&r).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let r: CampaignReport = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "report schema_version {} is not supported (expected {SCHEMA_VERSION})",
                r.schema_version
            ));
        }
        Ok(r)
    }

    pub fn to_markdown(&self) -> String {
        let a = &self.aggregates;
        let mut md = String::new();
        let _ = writeln!(md, "# Differential campaign ({})\n", self.dialect);
        let names: Vec<String> = self
            .engines
            .iter()
            .map(|e| {
                if e.faults.is_empty() {
                    format!("`{}`", e.name)
                } else {
                    format!("`{}` (faults {})", e.name, e.faults)
                }
            })
            .collect();
        let _ = writeln!(md, "Engines: {}", names.join(" vs "));
        let _ = writeln!(
            md,
            "Graph: {} nodes, {} edges. Rounds: {}.\n",
            self.graph_nodes, self.graph_edges, self.rounds
        );
        let _ = writeln!(md, "| metric | value |\n|---|---|");
        let _ = writeln!(md, "| queries | {} |", a.total);
        let _ = writeln!(md, "| passed lint | {} |", a.passed_lint);
        for (tag, n) in &a.lint_rejected {
            let _ = writeln!(md, "| lint: {tag} | {n} |");
        }
        let _ = writeln!(
            md,
            "| non-empty-result ratio | {} ({}/{}) |",
            a.non_empty_ratio, a.non_empty_ratio.non_empty, a.non_empty_ratio.total
        );
        let _ = writeln!(md, "| equivalent | {} |", a.equivalent);
        let _ = writeln!(md, "| discrepancies | {} |", a.discrepancies);
        let _ = writeln!(md, "| incomparable | {} |", a.incomparable);
        for (reason, n) in &a.incomparable_by_reason {
            let _ = writeln!(md, "| incomparable: {reason} | {n} |");
        }
        if self.clusters.is_empty() {
            let _ = writeln!(md, "\nNo discrepancies.");
            return md;
        }
        let _ = writeln!(md, "\n## Discrepancy clusters\n");
        for (i, c) in self.clusters.iter().enumerate() {
            let ops: Vec<&str> = c.fingerprint.iter().map(String::as_str).collect();
            let _ = writeln!(md, "### {}. {} x{} [{}]\n", i + 1, c.kind, c.size, ops.join(", "));
            let lang = match self.dialect {
                Dialect::Cypher => "cypher",
                Dialect::Gremlin => "groovy",
            };
            let _ = writeln!(md, "```{lang}\n{}\n```\n", c.representative);
            let _ = writeln!(md, "{}\n", c.detail);
            if let Some(rec) = self.records.iter().find(|r| r.text == c.representative) {
                for run in &rec.runs {
                    let shown = match &run.outcome {
                        EngineOutcome::Rows { records } => records.to_string(),
                        other => format!("{other:?}"),
                    };
                    let _ = writeln!(md, "- {}: `{}`", run.engine, truncate(&shown, 300));
                }
                md.push('\n');
            }
        }
        md
    }
}

fn truncate(s: &str, max: usize) -> String {
    if s.chars().count() <= max {
        return s.to_owned();
    }
    let mut t: String = s.chars().take(max).collect();
    t.push_str("...");
    t
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ProgressLine {
    Header { schema_version: u32, config: String },
    Round { round: u32, records: Vec<QueryRecord> },
}

/// Rounds already completed by an earlier run with the same configuration.
fn read_progress(path: &Path, fingerprint: &str) -> Result<BTreeMap<u32, Vec<QueryRecord>>, CampaignError> {
    let mut done = BTreeMap::new();
    if !path.exists() {
        return Ok(done);
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let corrupt = |m: String| CampaignError::Io {
        path: path.to_owned(),
        message: m,
    };
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ProgressLine = match serde_json::from_str(line) {
            Ok(p) => p,
            // a torn final line from an interrupted write
            Err(_) if n + 1 == text.lines().count() => break,
            Err(e) => return Err(corrupt(format!("line {}: {e}", n + 1))),
        };
        match parsed {
            ProgressLine::Header { config, .. } if config != fingerprint => {
                return Err(CampaignError::Config(format!(
                    "{} belongs to a different configuration; remove it to start over",
                    path.display()
                )))
            }
            ProgressLine::Header { .. } => {}
            ProgressLine::Round { round, records } => {
                done.insert(round, records);
            }
        }
    }
    Ok(done)
}

fn append_line(path: &Path, line: &ProgressLine) -> Result<(), CampaignError> {
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    let mut s = serde_json::to_string(line).expect("progress serializes");
    s.push('\n');
    f.write_all(s.as_bytes()).map_err(io_err(path))
}

fn summary(config: &EngineConfig) -> EngineSummary {
    EngineSummary {
        name: config.name.clone(),
        kind: config.kind,
        faults: config.faults,
        style: config.style,
        state_before: None,
        state_after: None,
    }
}

/// Runs a campaign with adapters and generator built from `config`.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignReport, CampaignError> {
    config.validate()?;
    let mut generator = build_generator(config)?;
    let mut a = build_adapter(&config.engine_a, config.dialect, config.timeout())?;
    let mut b = build_adapter(&config.engine_b, config.dialect, config.timeout())?;
    let report = run_campaign_with(config, generator.as_mut(), a.as_mut(), b.as_mut())?;
    write_reports(config, &report)?;
    Ok(report)
}

pub fn write_reports(config: &CampaignConfig, report: &CampaignReport) -> Result<(), CampaignError> {
    if let Some(path) = &config.output.report_json {
        fs::write(path, report.to_json(config.output.include_timing)).map_err(io_err(path))?;
    }
    if let Some(path) = &config.output.report_md {
        fs::write(path, report.to_markdown()).map_err(io_err(path))?;
    }
    Ok(())
}

/// Runs a campaign over caller-supplied adapters and generator.
pub fn run_campaign_with<'e>(
    config: &CampaignConfig,
    generator: &mut dyn QueryGenerator,
    a: &'e mut dyn EngineAdapter,
    b: &'e mut dyn EngineAdapter,
) -> Result<CampaignReport, CampaignError> {
    config.validate()?;
    let started = Instant::now();
    for adapter in [&mut *a, &mut *b] {
        if adapter.dialect() != config.dialect {
            return Err(CampaignError::Config(format!(
                "engine `{}` speaks {}, the campaign is {}",
                adapter.name(),
                adapter.dialect(),
                config.dialect
            )));
        }
        adapter.ping().map_err(|e| CampaignError::AdapterUnreachable {
            engine: adapter.name().to_owned(),
            message: e.to_string(),
        })?;
    }
    let fingerprint = config.fingerprint();
    let mut done = match &config.output.progress {
        Some(path) => {
            let done = read_progress(path, &fingerprint)?;
            if done.is_empty() {
                let _ = fs::remove_file(path);
                append_line(
                    path,
                    &ProgressLine::Header {
                        schema_version: SCHEMA_VERSION,
                        config: fingerprint.clone(),
                    },
                )?;
            }
            done
        }
        None => BTreeMap::new(),
    };

    let profile = config.profile();
    let mut engines = vec![summary(&config.engine_a), summary(&config.engine_b)];
    let mut first_graph = None;
    let mut loaded_seed = None;
    let mut records = Vec::new();
    for round in 1..=config.rounds {
        let graph_key = if config.regenerate_graph { round } else { 1 };
        let graph = config.graph_for_round(round)?;
        if loaded_seed != Some(graph_key) {
            for adapter in [&mut *a, &mut *b] {
                let load = adapter.reset().and_then(|_| adapter.load(&graph));
                load.map_err(|e| CampaignError::AdapterUnreachable {
                    engine: adapter.name().to_owned(),
                    message: e.to_string(),
                })?;
            }
            loaded_seed = Some(graph_key);
            if first_graph.is_none() {
                engines[0].state_before = a.state_digest();
                engines[1].state_before = b.state_digest();
            }
        }
        if first_graph.is_none() {
            first_graph = Some(graph.clone());
        }
        if let Some(prev) = done.remove(&round) {
            log::info!("round {round}: resumed from progress file");
            records.extend(prev);
            continue;
        }
        let prompt = build_prompt(&graph, &profile).map_err(|e| CampaignError::Config(e.to_string()))?;
        let remote = &config.generator.remote;
        let request = GenerationRequest {
            prompt: prompt.text(),
            round,
            model: remote.model.clone(),
            temperature: remote.temperature,
            max_tokens: remote.max_tokens,
        };
        let response = generator.generate(&request)?;
        let queries = parse_generation_response(&response.raw, config.dialect, round);
        log::info!("round {round}: {} queries", queries.len());
        let mut round_records = Vec::new();
        for q in queries {
            let lint = lint_query(&q.text, config.dialect, &config.lint);
            let (runs, verdict) = if lint.is_pass() {
                let (runs, v) = evaluate_query(
                    &q.text,
                    config.dialect,
                    (&mut *a, config.engine_a.style),
                    (&mut *b, config.engine_b.style),
                    &config.tolerance,
                );
                (runs, Some(v))
            } else {
                (Vec::new(), None)
            };
            round_records.push(QueryRecord {
                round,
                index: q.index,
                text: q.text,
                fingerprint: q.fingerprint,
                lint,
                runs,
                verdict,
            });
        }
        if let Some(path) = &config.output.progress {
            append_line(
                path,
                &ProgressLine::Round {
                    round,
                    records: round_records.clone(),
                },
            )?;
        }
        records.extend(round_records);
    }
    engines[0].state_after = a.state_digest();
    engines[1].state_after = b.state_digest();
    let graph = first_graph.expect("at least one round");
    Ok(CampaignReport::assemble(
        config,
        &graph,
        engines,
        records,
        started.elapsed().as_millis() as u64,
    ))
}
