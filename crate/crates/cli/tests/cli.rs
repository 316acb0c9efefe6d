use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn graphdiff(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphdiff"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const FIXTURES: &str = r#"{"round":1,"response":"1. MATCH (n:nt0) RETURN count(n)\n2. MATCH (n) WHERE n.p1 > 50 RETURN n.name\n3. MATCH (n) RETURN n.name LIMIT 3"}
{"round":2,"response":"1. MATCH (n)-[r]->(m) RETURN n.name, m.name\n2. MATCH (n:nt1) RETURN count(n), avg(n.p3)"}
"#;

fn campaign_dir(faults_b: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("fixtures.jsonl"), FIXTURES).unwrap();
    let config = format!(
        "rounds = 2\nqueries_per_round = 3\n[graph]\nnodes = 12\nedges = 20\nseed = 7\n\
         [engine_b]\nname = \"b\"\nkind = \"reference\"\nfaults = [{faults_b}]\n"
    );
    fs::write(dir.path().join("c.toml"), config).unwrap();
    dir
}

#[test]
fn inject_detects_every_fault() {
    let dir = tempfile::tempdir().unwrap();
    let o = graphdiff(&["inject"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("10/10 faults detected"));
    let o = graphdiff(&["inject", "--via-bridge", "--json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["detected"], 10);
    assert_eq!(v["clean_discrepancies"], 0);
}

#[test]
fn missing_fixture_file_is_an_operational_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = graphdiff(&["replay", "--fixtures", "absent.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(graphdiff(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(graphdiff(&["run"], dir.path()).status.code(), Some(2));
    assert_eq!(graphdiff(&["-j", "inject"], dir.path()).status.code(), Some(2));
}

#[test]
fn identical_engines_pass_with_fail_on_discrepancy() {
    let dir = campaign_dir("");
    let o = graphdiff(&["run", "--config", "c.toml", "--fail-on-discrepancy"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("report.json").exists());
    assert!(dir.path().join("report.md").exists());
    assert!(stdout(&o).contains("0 discrepancies"));
}

#[test]
fn faulty_engine_fails_with_fail_on_discrepancy() {
    let dir = campaign_dir("\"F1\"");
    let o = graphdiff(&["run", "--config", "c.toml", "--fail-on-discrepancy"], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let o = graphdiff(&["report", "--input", "report.json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("Discrepancy clusters"));
}

#[test]
fn replay_is_byte_identical() {
    let dir = campaign_dir("\"F1\", \"F5\"");
    let args = |out| ["replay", "--config", "c.toml", "--fixtures", "fixtures.jsonl", "--out", out];
    assert_eq!(graphdiff(&args("r1.json"), dir.path()).status.code(), Some(0));
    assert_eq!(graphdiff(&args("r2.json"), dir.path()).status.code(), Some(0));
    let r1 = fs::read(dir.path().join("r1.json")).unwrap();
    let r2 = fs::read(dir.path().join("r2.json")).unwrap();
    assert!(!r1.is_empty());
    assert_eq!(r1, r2);
}

#[test]
fn print_config_parses() {
    let dir = tempfile::tempdir().unwrap();
    let o = graphdiff(&["--print-config"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    fs::write(dir.path().join("d.toml"), &o.stdout).unwrap();
    let o = graphdiff(&["gen-graph", "--config", "d.toml", "--out", "g.json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let g: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("g.json")).unwrap()).unwrap();
    assert_eq!(g["nodes"].as_array().unwrap().len(), 100);
    assert_eq!(g["edges"].as_array().unwrap().len(), 200);
}

#[test]
fn gen_graph_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = graphdiff(&["gen-graph", "--seed", "3", "--nodes", "10", "--edges", "15"], dir.path());
    let b = graphdiff(&["gen-graph", "--seed", "3", "--nodes", "10", "--edges", "15"], dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = graphdiff(&["gen-graph", "--seed", "4", "--nodes", "10", "--edges", "15"], dir.path());
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn lint_annotates_queries() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("q.txt"),
        "MATCH (n) RETURN n.name\nMATCH (n) SET n.p1 = 1 RETURN n\nMATCH (n) RETURN n LIMIT 2\nMATCH (n) RETURN 'CREATE'\n",
    )
    .unwrap();
    let o = graphdiff(&["lint", "--dialect", "cypher", "--input", "q.txt"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let tags: Vec<String> = stdout(&o)
        .lines()
        .map(|l| l.split('\t').next().unwrap().to_owned())
        .collect();
    assert_eq!(tags, vec!["pass", "mutating", "non_deterministic", "pass"]);
}

#[test]
fn gen_queries_records_replayable_fixtures() {
    let dir = campaign_dir("");
    let o = graphdiff(
        &["gen-queries", "--config", "c.toml", "--out", "recorded.jsonl", "--prompts-dir", "prompts"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("prompts/round-1.txt").exists());
    let recorded = fs::read_to_string(dir.path().join("recorded.jsonl")).unwrap();
    assert_eq!(recorded.lines().count(), 2);
    assert!(recorded.contains("prompt_sha256"));
    let o = graphdiff(&["replay", "--config", "c.toml", "--fixtures", "recorded.jsonl", "--out", "r.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn serve_bridge_answers_requests() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_graphdiff"))
        .args(["serve-bridge", "--dialect", "gremlin", "--faults", "F8"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    writeln!(stdin, r#"{{"id":1,"action":"ping"}}"#).unwrap();
    writeln!(stdin, r#"{{"id":2,"action":"execute","payload":{{"query":"g.V().count()"}}}}"#).unwrap();
    writeln!(stdin, "not json").unwrap();
    drop(stdin);
    let out = child.wait_with_output().unwrap();
    let lines: Vec<serde_json::Value> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["ok"], true);
    assert_eq!(lines[1]["rows"], serde_json::json!([[0]]));
    assert_eq!(lines[2]["error"]["class"], "protocol-error");
}
