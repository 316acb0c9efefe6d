//! Browser bindings: generate a graph, run a query on a clean and a faulty engine, and compare
//! two pasted engine transcripts.

use serde_json::{json, Value as Json};
use wasm_bindgen::prelude::*;

use graphdiff::adapter::{EngineAdapter, RawResult, ReferenceAdapter};
use graphdiff::compare::{classify_pair, EngineOutcome, Tolerance};
use graphdiff::engine::Fault;
use graphdiff::gen::{generate_graph as gen_graph, generate_schema, GenParams};
use graphdiff::lint::{lint_query, LintConfig};
use graphdiff::model::fixture_g0;
use graphdiff::normalize::{normalize_cypher, normalize_transcript, Style};
use graphdiff::prompt::{build_prompt, DialectProfile};
use graphdiff::{Dialect, FaultSet, LabeledPropertyGraph};

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Graph JSON plus the generation prompt for `dialect`.
pub fn generate(nodes: usize, edges: usize, seed: u64, dialect: &str) -> Result<String, String> {
    let dialect: Dialect = dialect.parse()?;
    let schema = generate_schema(4, 4, 11, seed).map_err(|e| e.to_string())?;
    let params = GenParams {
        nodes,
        edges,
        seed,
        ..GenParams::default()
    };
    let graph = gen_graph(&schema, &params).map_err(|e| e.to_string())?;
    let prompt = build_prompt(&graph, &DialectProfile::default_for(dialect)).map_err(|e| e.to_string())?;
    Ok(json!({ "graph": graph, "prompt": prompt.text() }).to_string())
}

/// The four-node fixture graph.
pub fn small_graph() -> String {
    fixture_g0().to_json()
}

fn outcome(raw: &RawResult) -> EngineOutcome {
    match raw {
        RawResult::Rows { .. } => match normalize_cypher(raw, Style::CanonicalJson) {
            Ok(records) => EngineOutcome::Rows { records },
            Err(e) => EngineOutcome::NormalizationFailure { message: e.to_string() },
        },
        RawResult::EngineError { class, message } => EngineOutcome::Error {
            class: class.clone(),
            message: message.clone(),
        },
        RawResult::Timeout => EngineOutcome::Timeout,
    }
}

fn shown(o: &EngineOutcome) -> Json {
    match o {
        EngineOutcome::Rows { records } => json!({ "rows": records.to_string() }),
        EngineOutcome::Error { class, message } => json!({ "error": format!("{class}: {message}") }),
        EngineOutcome::Timeout => json!({ "error": "timeout" }),
        EngineOutcome::NormalizationFailure { message } => json!({ "error": message }),
    }
}

/// Runs `query` on a clean engine and on one with the faults in `fault_mask` (bit k-1 is Fk).
pub fn run(graph_json: &str, dialect: &str, query: &str, fault_mask: u16) -> Result<String, String> {
    let dialect: Dialect = dialect.parse()?;
    let graph = LabeledPropertyGraph::from_json(graph_json).map_err(|e| e.to_string())?;
    let faults = FaultSet::from_mask(fault_mask);
    let lint = lint_query(query, dialect, &LintConfig::default());
    let mut clean = ReferenceAdapter::new("clean", dialect, FaultSet::none());
    let mut faulty = ReferenceAdapter::new("faulty", dialect, faults);
    let mut outcomes = Vec::new();
    for e in [&mut clean, &mut faulty] {
        e.load(&graph).map_err(|e| e.to_string())?;
        outcomes.push(outcome(&e.execute(query)));
    }
    let verdict = classify_pair(query, dialect, &outcomes[0], &outcomes[1], &Tolerance::default()).verdict;
    Ok(json!({
        "lint": lint.tag(),
        "faults": faults.to_string(),
        "clean": shown(&outcomes[0]),
        "faulty": shown(&outcomes[1]),
        "verdict": verdict.to_string(),
    })
    .to_string())
}

/// Normalizes two transcripts in their engine styles and compares them.
pub fn compare(query: &str, dialect: &str, a: &str, style_a: &str, b: &str, style_b: &str) -> Result<String, String> {
    let dialect: Dialect = dialect.parse()?;
    let side = |text: &str, style: &str| -> Result<EngineOutcome, String> {
        let style: Style = style.parse()?;
        Ok(match normalize_transcript(text, style) {
            Ok(records) => EngineOutcome::Rows { records },
            Err(e) => EngineOutcome::NormalizationFailure { message: e.to_string() },
        })
    };
    let (oa, ob) = (side(a, style_a)?, side(b, style_b)?);
    let verdict = classify_pair(query, dialect, &oa, &ob, &Tolerance::default()).verdict;
    Ok(json!({ "a": shown(&oa), "b": shown(&ob), "verdict": verdict.to_string() }).to_string())
}

/// `[{"id": "F1", "description": ...}, ...]`
pub fn faults() -> String {
    let list: Vec<Json> = Fault::ALL
        .iter()
        .map(|f| json!({ "id": f.to_string(), "description": f.description() }))
        .collect();
    Json::Array(list).to_string()
}

#[wasm_bindgen(js_name = generateGraph)]
pub fn generate_graph_js(nodes: usize, edges: usize, seed: u64, dialect: &str) -> Result<String, JsValue> {
    js(generate(nodes, edges, seed, dialect))
}

#[wasm_bindgen(js_name = smallGraph)]
pub fn small_graph_js() -> String {
    small_graph()
}

#[wasm_bindgen(js_name = runQuery)]
pub fn run_query_js(graph_json: &str, dialect: &str, query: &str, fault_mask: u16) -> Result<String, JsValue> {
    js(run(graph_json, dialect, query, fault_mask))
}

#[wasm_bindgen(js_name = compareTranscripts)]
pub fn compare_transcripts_js(
    query: &str,
    dialect: &str,
    a: &str,
    style_a: &str,
    b: &str,
    style_b: &str,
) -> Result<String, JsValue> {
    js(compare(query, dialect, a, style_a, b, style_b))
}

#[wasm_bindgen(js_name = faultCatalog)]
pub fn faults_js() -> String {
    faults()
}
