#![allow(dead_code)]

pub mod lint_cases;
pub mod oracle;
pub mod transcripts;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use graphdiff::adapter::RawResult;
use graphdiff::campaign::{
    compute_non_empty_ratio, run_campaign, CampaignConfig, EngineConfig, EngineRun, GeneratorKind, QueryRecord,
};
use graphdiff::compare::{EngineOutcome, Tolerance, Verdict};
use graphdiff::gen::{generate_graph, generate_schema, GenParams};
use graphdiff::inject::{run_injection, trigger_operator, ReferencePairs};
use graphdiff::lint::{lint_query, LintConfig, LintVerdict};
use graphdiff::normalize::normalize_gremlin;
use graphdiff::prompt::{build_prompt, DialectProfile};
use graphdiff::{CanonicalValue as C, Dialect, FaultSet, RecordSet, Store};

pub type Check = Result<String, String>;

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------------------------

pub const PAIR_DISTRIBUTION: [f64; 4] = [0.8, 0.1, 0.05, 0.05];

/// Share of nodes carrying 1, 2, 3 and 4 properties besides `name`, tallied from the graph.
pub fn extra_pair_histogram(nodes: usize, seed: u64) -> ([f64; 4], Duration) {
    let schema = generate_schema(4, 4, 11, seed).unwrap();
    let params = GenParams { nodes, edges: 0, seed, pair_distribution: PAIR_DISTRIBUTION, ..GenParams::default() };
    let (g, elapsed) = timed(|| generate_graph(&schema, &params).unwrap());
    let mut counts = [0usize; 4];
    for n in &g.nodes {
        let extra = n.properties.keys().filter(|k| *k != "name").count();
        counts[extra - 1] += 1;
    }
    (counts.map(|c| c as f64 / nodes as f64), elapsed)
}

pub fn check_generation_distribution() -> Check {
    let (hist, elapsed) = extra_pair_histogram(10_000, 42);
    for (got, want) in hist.iter().zip(PAIR_DISTRIBUTION) {
        ensure((got - want).abs() <= 0.02, || format!("histogram {hist:?} is off {PAIR_DISTRIBUTION:?}"))?;
    }
    ensure(elapsed < Duration::from_secs(5), || format!("generation took {elapsed:?}"))?;
    Ok(format!("histogram {:?} in {elapsed:.2?}", hist.map(|x| (x * 1e4).round() / 1e4)))
}

// ---------------------------------------------------------------------------------------------

pub fn check_default_parameters() -> Check {
    let c = CampaignConfig::default();
    let g = c.graph_for_round(1).map_err(|e| e.to_string())?;
    let node_labels: std::collections::BTreeSet<_> = g.schema.node_labels.iter().collect();
    let edge_labels: std::collections::BTreeSet<_> = g.schema.edge_labels.iter().collect();
    let got = (
        g.nodes.len(),
        g.edges.len(),
        node_labels.len(),
        edge_labels.len(),
        g.schema.property_keys.len(),
        c.queries_per_round,
        c.rounds,
    );
    ensure(got == (100, 200, 4, 4, 11, 20, 200), || format!("defaults are {got:?}"))?;
    ensure(g.nodes.iter().all(|n| node_labels.contains(&n.label)), || "node label outside schema".into())?;
    ensure(g.edges.iter().all(|e| edge_labels.contains(&e.label)), || "edge label outside schema".into())?;
    let slots = c.queries_per_round * c.rounds as usize;
    ensure(slots == 4000, || format!("{slots} fixture slots"))?;
    Ok(format!("100 nodes, 200 edges, 4/4 labels, 11 keys, {} x {} = {slots} slots", c.queries_per_round, c.rounds))
}

// ---------------------------------------------------------------------------------------------

/// The default prompt with the edge lines collapsed to one placeholder line.
pub fn prompt_with_placeholder(dialect: Dialect) -> String {
    let c = CampaignConfig::default();
    let g = c.graph_for_round(1).unwrap();
    let mut p = build_prompt(&g, &DialectProfile::default_for(dialect)).unwrap();
    let header = p.data.lines().next().unwrap().to_owned();
    p.data = format!("{header}\n<graph data>");
    p.text()
}

pub fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn check_prompt_goldens() -> Check {
    for (dialect, file) in [(Dialect::Cypher, "cypher_prompt.txt"), (Dialect::Gremlin, "gremlin_prompt.txt")] {
        let built = prompt_with_placeholder(dialect);
        let want = golden(file);
        if built != want {
            let line = built.lines().zip(want.lines()).position(|(a, b)| a != b);
            return Err(format!("{file} differs at line {:?}", line.map(|l| l + 1)));
        }
    }
    Ok("cypher and gremlin prompts match byte for byte".into())
}

// ---------------------------------------------------------------------------------------------

pub fn lint_outcomes() -> Vec<(&'static str, &'static str, LintVerdict)> {
    lint_cases::LINT_CASES
        .iter()
        .map(|(d, q, want)| (*q, *want, lint_query(q, *d, &LintConfig::default())))
        .collect()
}

pub fn check_lint_fixture() -> Check {
    let outcomes = lint_outcomes();
    let mut fp = Vec::new();
    let mut fn_ = Vec::new();
    for (q, want, got) in &outcomes {
        if got.tag() == *want {
            continue;
        }
        if *want == "pass" {
            fp.push(format!("{q} -> {}", got.tag()));
        } else {
            fn_.push(format!("{q} -> {} (want {want})", got.tag()));
        }
    }
    ensure(fp.is_empty() && fn_.is_empty(), || format!("false positives {fp:?}, false negatives {fn_:?}"))?;
    Ok(format!("{} queries, 0 false positives, 0 false negatives", outcomes.len()))
}

// ---------------------------------------------------------------------------------------------

pub fn node(label: Option<&str>, pairs: &[(&str, C)]) -> C {
    C::Node {
        label: label.map(str::to_owned),
        props: pairs.iter().map(|(k, v)| ((*k).to_owned(), v.clone())).collect(),
    }
}

pub fn s(x: &str) -> C {
    C::Str(x.to_owned())
}

/// A stub engine answering `valueMap(true)` lookups from a fixed id table.
pub fn stub_executor(table: &'static [(i64, &'static str)]) -> impl FnMut(&str) -> RawResult {
    move |q: &str| {
        let inner = q.trim_start_matches("g.V(").split(')').next().unwrap_or_default();
        let maps: Vec<String> = inner
            .split(',')
            .filter_map(|id| id.trim().parse::<i64>().ok())
            .filter_map(|id| table.iter().find(|(i, _)| *i == id))
            .map(|(id, body)| format!("{{<T.id: 1>: {id}, <T.label: 4>: 'nt0', {body}}}"))
            .collect();
        RawResult::rows(vec![serde_json::Value::String(format!("[{}]", maps.join(", ")))])
    }
}

pub const JANUS_IDS: &[(i64, &str)] = &[
    (16416, "'name': ['u16'], 'p9': [41.96], 'p4': [False], 'p7': [True]"),
    (24608, "'name': ['u25'], 'p5': ['UR']"),
    (32800, "'name': ['u1'], 'p5': ['IF']"),
];

pub const TINKER_IDS: &[(i64, &str)] = &[
    (3, "'p5': ['IF'], 'name': ['u1']"),
    (9, "'p4': [True], 'p6': ['9'], 'name': ['u3']"),
    (278, "'name': ['u25'], 'p5': ['UR']"),
];

/// Element references from both Gremlin engines, resolved through their own stubs.
pub fn dereferenced() -> (RecordSet, RecordSet) {
    let janus = RawResult::rows(vec![serde_json::json!("[v[16416], v[24608], v[32800]]")]);
    let tinker = RawResult::rows(vec![serde_json::json!("[v[3], v[9], v[278]]")]);
    (
        normalize_gremlin(&janus, &mut stub_executor(JANUS_IDS)).unwrap(),
        normalize_gremlin(&tinker, &mut stub_executor(TINKER_IDS)).unwrap(),
    )
}

fn rows(p: &transcripts::Side) -> Vec<Vec<C>> {
    transcripts::normalized(p).records
}

/// Expected canonical records for the first and second side of every bug pair.
pub fn bug_pair_values() -> BTreeMap<&'static str, (Vec<Vec<C>>, Vec<Vec<C>>)> {
    use C::{Bool, Float, Int, List, Null};
    let names = |xs: &[&str]| xs.iter().map(|x| vec![s(x)]).collect::<Vec<_>>();
    let sums = |first: C| {
        vec![
            vec![s("u5"), first],
            vec![s("u6"), Float(17.01)],
            vec![s("u7"), Float(17.02)],
            vec![s("u22"), Float(84.84)],
        ]
    };
    let flags = |xs: &[(bool, &str)]| {
        xs.iter()
            .map(|(b, n)| vec![node(None, &[("p2", Bool(*b)), ("name", s(n))])])
            .collect::<Vec<_>>()
    };
    let u4 = node(Some("nt3"), &[("p5", s("Ce")), ("name", s("u4"))]);
    BTreeMap::from([
        ("count-beside-avg", (vec![vec![Int(3), Float(25.78666666666667)]], vec![vec![Int(24), Float(25.786666666666665)]])),
        ("empty-sum", (sums(Int(0)), sums(Null))),
        ("unwind-property", (vec![], names(&["Lm", "GOvy", "5Yz", "Rk"]))),
        (
            "collect-nodes",
            (
                vec![vec![u4.clone(), List(vec![node(None, &[]), node(None, &[])])]],
                vec![vec![
                    u4,
                    List(vec![
                        node(Some("nt1"), &[("name", s("u85")), ("p3", Bool(true))]),
                        node(Some("nt2"), &[("name", s("u84")), ("p9", Float(44.79))]),
                    ]),
                ]],
            ),
        ),
        ("bool-above-int", (names(&["u19", "u56", "u96", "u33", "u44", "u47", "u86", "u17", "u37", "u91"]), vec![])),
        ("comma-patterns", (vec![vec![Int(2695)]], vec![vec![Int(28)]])),
        ("distinct-null", (vec![vec![List(vec![Bool(false), Null])]], vec![vec![Bool(false)]])),
        ("without-strings", (vec![vec![Int(9)]], vec![vec![Int(23)]])),
        (
            "sticky-types",
            (
                vec![vec![node(None, &[("p9", Float(13.0)), ("test3", s("25.6"))])]],
                vec![vec![node(None, &[("p9", Int(13)), ("test3", Float(25.6))])]],
            ),
        ),
        (
            "neq-string-false",
            (flags(&[(true, "u96"), (true, "u19"), (true, "u47")]), flags(&[(false, "u91"), (true, "u96"), (true, "u47")])),
        ),
    ])
}

/// Tags a value with its variant so that `Int(13)` and `Float(13.0)` are told apart.
pub fn typed(c: &C) -> String {
    match c {
        C::Null => "null".into(),
        C::Bool(b) => format!("bool {b}"),
        C::Int(i) => format!("int {i}"),
        C::Float(x) => format!("float {x:?}"),
        C::Str(x) => format!("str {x:?}"),
        C::Node { label, props } | C::Edge { label, props } => {
            let kind = if matches!(c, C::Node { .. }) { "node" } else { "edge" };
            let inner: Vec<String> = props.iter().map(|(k, v)| format!("{k}: {}", typed(v))).collect();
            format!("{kind} {label:?} {{{}}}", inner.join(", "))
        }
        C::List(items) => format!("[{}]", items.iter().map(typed).collect::<Vec<_>>().join(", ")),
    }
}

fn typed_rows(r: &[Vec<C>]) -> Vec<Vec<String>> {
    r.iter().map(|row| row.iter().map(typed).collect()).collect()
}

pub fn check_normalization_corpus() -> Check {
    let pairs = transcripts::agreeing_pairs();
    let collected = pairs.iter().find(|p| p.id == "collected-nodes").unwrap();
    let (a, b) = (transcripts::normalized(&collected.a), transcripts::normalized(&collected.b));
    ensure(a.records == b.records && !a.is_empty(), || format!("collected nodes differ: {a:?} vs {b:?}"))?;

    let (janus, tinker) = dereferenced();
    let names = |rs: &RecordSet| -> Vec<String> {
        rs.records
            .iter()
            .map(|r| match &r[0] {
                C::Node { props, .. } => props.get("name").map(typed).unwrap_or_default(),
                other => format!("not a node: {other:?}"),
            })
            .collect()
    };
    ensure(names(&janus) == ["str \"u16\"", "str \"u25\"", "str \"u1\""], || format!("janus refs: {:?}", names(&janus)))?;
    ensure(names(&tinker) == ["str \"u1\"", "str \"u3\"", "str \"u25\""], || format!("tinker refs: {:?}", names(&tinker)))?;

    let mut checked = 0;
    let values = bug_pair_values();
    for p in transcripts::bug_pairs() {
        let (want_a, want_b) = &values[p.id];
        for (side, want) in [(&p.a, want_a), (&p.b, want_b)] {
            let got = rows(side);
            ensure(typed_rows(&got) == typed_rows(want), || {
                format!("{} {}: got {:?}, want {:?}", p.id, side.engine, typed_rows(&got), typed_rows(want))
            })?;
            checked += 1;
        }
    }
    Ok(format!("collected nodes equal, 3+3 references resolved, {checked} transcripts at stated values"))
}

// ---------------------------------------------------------------------------------------------

pub fn check_comparator_corpus() -> Check {
    let tol = Tolerance::default();
    let mut bugs = 0;
    for p in transcripts::bug_pairs() {
        let v = transcripts::verdict(&p, &tol);
        ensure(v.is_discrepancy(), || format!("{}: {v}", p.id))?;
        bugs += 1;
    }
    let mut agree = 0;
    for p in transcripts::agreeing_pairs() {
        let v = transcripts::verdict(&p, &tol);
        ensure(v == Verdict::Equivalent, || format!("{}: {v}", p.id))?;
        agree += 1;
    }
    let exact = Tolerance { float_rel_tol: 1e-9, float_abs_tol: 0.0 };
    ensure(exact.floats_equal(25.78666666666667, 25.786666666666665), || "avg floats differ at 1e-9".into())?;
    Ok(format!("{bugs}/10 bug pairs discrepant, {agree}/{agree} agreeing pairs equivalent, avg floats equal at 1e-9"))
}

// ---------------------------------------------------------------------------------------------

pub const ORACLE_GRAPHS: u64 = 200;

/// Mismatches between the reference engine and the brute-force evaluator.
pub fn oracle_mismatches(graphs: u64) -> Vec<String> {
    let mut bad = Vec::new();
    for seed in 0..graphs {
        let g = oracle::random_graph(seed);
        let mut store = Store::from_graph(&g);
        for (dialect, q) in oracle::SUBSET_CORPUS {
            let ir = graphdiff::ir::parse(q, *dialect).unwrap();
            let engine = store.execute(&ir, FaultSet::none()).map(|r| r.records);
            let want = oracle::evaluate(&g, q, *dialect);
            match engine {
                Ok(got) if oracle::multiset(&got) == oracle::multiset(&want) => {}
                Ok(got) => bad.push(format!("graph {seed}: `{q}`: engine {got:?}, oracle {want:?}")),
                Err(e) => bad.push(format!("graph {seed}: `{q}`: {e}")),
            }
        }
    }
    bad
}

pub fn check_oracle() -> Check {
    let (bad, elapsed) = timed(|| oracle_mismatches(ORACLE_GRAPHS));
    ensure(bad.is_empty(), || format!("{} mismatches, first: {}", bad.len(), bad[0]))?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    let n = oracle::SUBSET_CORPUS.len();
    Ok(format!("{ORACLE_GRAPHS} graphs x {n} queries agree in {elapsed:.2?}"))
}

// ---------------------------------------------------------------------------------------------

pub fn check_injection() -> Check {
    let (report, elapsed) = timed(|| run_injection(&mut ReferencePairs));
    let report = report?;
    for r in &report.faults {
        let f = r.fault.ok_or("fault row without a fault")?;
        let trigger = trigger_operator(f);
        let hit = r.discrepancies > 0 && r.clusters.iter().any(|c| c.fingerprint.contains(trigger));
        ensure(hit, || format!("{f}: {} discrepancies, no cluster with `{trigger}`", r.discrepancies))?;
    }
    ensure(report.clean.discrepancies == 0, || format!("{} discrepancies with faults off", report.clean.discrepancies))?;
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("{}/10 faults detected, 0 clean discrepancies in {elapsed:.2?}", report.detected()))
}

// ---------------------------------------------------------------------------------------------

pub const REPLAY_FIXTURES: &str = r#"{"round":1,"response":"1. MATCH (n:nt0) RETURN count(n), avg(n.p1)\n2. MATCH (n) WHERE n.p2 > 50 RETURN n.name\n3. MATCH (n) RETURN n.name LIMIT 3\n4. MATCH (n)-[:et0]->(), ()-[:et1]->(n) RETURN count(n)"}
{"round":2,"response":"1. MATCH (n)-[r]->(m) RETURN n.name, m.name\n2. MATCH (n1)-[r]->(n2) RETURN collect(DISTINCT n2.p3)\n3. MATCH (n)-[r]->() UNWIND n.p4 AS v RETURN v"}
"#;

pub fn replay_report(dir: &Path) -> Result<String, String> {
    let fixtures = dir.join("fixtures.jsonl");
    std::fs::write(&fixtures, REPLAY_FIXTURES).map_err(|e| e.to_string())?;
    let mut c = CampaignConfig::default();
    c.rounds = 2;
    c.queries_per_round = 4;
    c.graph.nodes = 15;
    c.graph.edges = 30;
    c.generator.kind = GeneratorKind::Replay;
    c.generator.fixtures = Some(fixtures);
    c.engine_b = EngineConfig::reference("faulty", FaultSet::all());
    c.output.report_json = None;
    c.output.report_md = None;
    c.output.progress = None;
    c.output.include_timing = false;
    let report = run_campaign(&c).map_err(|e| e.to_string())?;
    Ok(report.to_json(false))
}

pub fn check_replay_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = replay_report(dir.path())?;
    let second = replay_report(dir.path())?;
    ensure(first == second, || "report JSON differs between runs".into())?;
    ensure(first.contains("\"discrepancy\""), || "replayed campaign found no discrepancy".into())?;
    Ok(format!("two replays produced the same {} bytes", first.len()))
}

// ---------------------------------------------------------------------------------------------

/// A lint-passing record whose first engine returned `rows` records.
pub fn synthetic_record(index: usize, rows: usize, lint: LintVerdict) -> QueryRecord {
    let records = RecordSet::unordered((0..rows).map(|i| vec![C::Int(i as i64)]).collect());
    let run = |name: &str| EngineRun {
        engine: name.into(),
        raw: RawResult::rows(vec![]),
        outcome: EngineOutcome::Rows { records: records.clone() },
        elapsed_ms: 0,
    };
    let passed = lint.is_pass();
    QueryRecord {
        round: 1,
        index,
        text: format!("q{index}"),
        fingerprint: Default::default(),
        lint,
        runs: if passed { vec![run("a"), run("b")] } else { vec![] },
        verdict: passed.then_some(Verdict::Equivalent),
    }
}

/// `non_empty` of `total` lint-passing records have results; `rejected` more fail lint.
pub fn synthetic_records(non_empty: usize, total: usize, rejected: usize) -> Vec<QueryRecord> {
    let mut out: Vec<QueryRecord> = (0..total)
        .map(|i| synthetic_record(i, if i < non_empty { 1 + i % 3 } else { 0 }, LintVerdict::Pass))
        .collect();
    out.extend((0..rejected).map(|i| synthetic_record(total + i, 0, LintVerdict::NonDeterministic("LIMIT".into()))));
    out
}

pub fn check_ratio_and_summary() -> Check {
    for (non_empty, total, shown) in [(151, 191, "79.06%"), (49, 61, "80.33%")] {
        let ratio = compute_non_empty_ratio(&synthetic_records(non_empty, total, 7));
        ensure(ratio.non_empty == non_empty && ratio.total == total, || format!("ratio counted {ratio:?}"))?;
        ensure(ratio.to_string() == shown, || format!("{non_empty}/{total} shown as {ratio}"))?;
    }
    let none = compute_non_empty_ratio(&synthetic_records(0, 0, 3));
    ensure(none.to_string() == "N/A", || format!("empty ratio shown as {none}"))?;

    let report = run_injection(&mut ReferencePairs)?;
    let bugs: Vec<(String, usize)> = report.by_family().into_iter().map(|r| (r.engine, r.bugs)).collect();
    let want = [("Neo4j", 2), ("AgensGraph", 5), ("JanusGraph", 3), ("TinkerGraph", 0)];
    ensure(bugs.iter().map(|(e, n)| (e.as_str(), *n)).eq(want), || format!("family rows {bugs:?}"))?;
    let text = report.to_string();
    for (engine, n) in want {
        let line = text.lines().find(|l| l.starts_with(engine)).ok_or(format!("no `{engine}` row"))?;
        ensure(line.split_whitespace().nth(1) == Some(&n.to_string()), || format!("row `{line}`"))?;
    }
    Ok("79.06% and 80.33% from synthetic records, family table 2/5/3/0".into())
}

// ---------------------------------------------------------------------------------------------

pub fn all_checks() -> Vec<(&'static str, fn() -> Check)> {
    vec![
        ("generation distribution", check_generation_distribution),
        ("default parameters", check_default_parameters),
        ("prompt goldens", check_prompt_goldens),
        ("lint fixture", check_lint_fixture),
        ("normalization corpus", check_normalization_corpus),
        ("comparator corpus", check_comparator_corpus),
        ("oracle equivalence", check_oracle),
        ("fault injection", check_injection),
        ("replay determinism", check_replay_determinism),
        ("ratio and bug summary", check_ratio_and_summary),
    ]
}
