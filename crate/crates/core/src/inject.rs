//! Built-in fault-injection suite: a fixed corpus run on a clean engine against the same engine
//! with one fault switched on, once per fault, plus a clean-vs-clean run that must stay quiet.

use std::fmt::{self, Write as _};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adapter::{EngineAdapter, RawResult, ReferenceAdapter};
use crate::campaign::{dedup_discrepancies, evaluate_query, Cluster, DiscrepancyItem, EngineRun};
use crate::compare::{Tolerance, Verdict};
use crate::engine::{Fault, FaultSet};
use crate::ir::operator_fingerprint;
use crate::model::{fixture_g0, Dialect};
use crate::normalize::Style;

/// One corpus query, with statements run on both engines beforehand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionCase {
    pub dialect: Dialect,
    pub setup: Vec<String>,
    pub query: String,
}

impl InjectionCase {
    fn new(dialect: Dialect, query: &str) -> Self {
        InjectionCase {
            dialect,
            setup: Vec::new(),
            query: query.to_owned(),
        }
    }
}

/// The operator a fault's discrepancy cluster must mention.
pub fn trigger_operator(f: Fault) -> &'static str {
    match f {
        Fault::F1 => "count",
        Fault::F2 => "sum",
        Fault::F3 => "UNWIND",
        Fault::F4 => "collect",
        Fault::F5 => "WHERE",
        Fault::F6 => "MATCH",
        Fault::F7 => "DISTINCT",
        Fault::F8 => "without",
        Fault::F9 => "property",
        Fault::F10 => "neq",
    }
}

/// Which engine family a fault models, for the per-engine summary.
pub fn engine_family(f: Fault) -> &'static str {
    match f {
        Fault::F1 | Fault::F2 => "Neo4j",
        Fault::F3 | Fault::F4 | Fault::F5 | Fault::F6 | Fault::F7 => "AgensGraph",
        Fault::F8 | Fault::F9 | Fault::F10 => "JanusGraph",
    }
}

pub const ENGINE_FAMILIES: [&str; 4] = ["Neo4j", "AgensGraph", "JanusGraph", "TinkerGraph"];

/// The fixed corpus, run over the small fixture graph.
pub fn corpus() -> Vec<InjectionCase> {
    let c = |q| InjectionCase::new(Dialect::Cypher, q);
    let g = |q| InjectionCase::new(Dialect::Gremlin, q);
    vec![
        c("MATCH (n:nt1) RETURN count(n), avg(n.p8)"),
        c("MATCH (n:nt1) RETURN count(n)"),
        c("MATCH (n:nt0)-[r]-() RETURN n.name AS Name, sum(r.p8) AS TotalP8"),
        c("MATCH (n)-[r]->() UNWIND n.p2 AS values RETURN values"),
        c("MATCH (n)-[r]->() RETURN n.p2"),
        c("MATCH (n)-[r]->() WITH n.p2 AS values RETURN values"),
        c("MATCH (n:nt0 {p2: true})-[:et0]->(m) RETURN n, collect(m)"),
        c("MATCH (n:nt0 {p2: true})-[:et0]->(m) RETURN n, m"),
        c("MATCH (n) WHERE n.p2 > 50 RETURN n.name"),
        c("MATCH (n) RETURN n.name, n.p2"),
        c("MATCH (n)-[:et0]->(), ()-[:et1]->(n) RETURN count(n)"),
        c("MATCH (n)-[:et0]->() RETURN count(n)"),
        c("MATCH ()-[:et1]->(n) RETURN count(n)"),
        c("MATCH (n1)-[r]->(n2) RETURN collect(DISTINCT n2.p2) AS distinct_values"),
        g("g.E().has('p2', without('GhR')).count()"),
        g("g.E().has('p2').count()"),
        g("g.E().has('p2', without('GhR')).valueMap()"),
        InjectionCase {
            dialect: Dialect::Gremlin,
            setup: vec![
                "g.V().drop().iterate()".into(),
                "g.addV('nt5').property('p9', 13.85).property('test3', 'pvifo')".into(),
                "g.V().drop().iterate()".into(),
            ],
            query: "g.addV('nt5').property('p9', 13).property('test3', 25.6).valueMap()".into(),
        },
        g("g.V().has('p2', neq('false')).valueMap()"),
        g("g.V().has('p2', neq(false)).valueMap()"),
    ]
}

/// Builds the engine pair for one run: a clean engine and one with `faults` switched on.
pub trait PairFactory {
    fn pair(
        &mut self,
        dialect: Dialect,
        faults: FaultSet,
    ) -> Result<(Box<dyn EngineAdapter>, Box<dyn EngineAdapter>), String>;
}

/// Two embedded engines.
pub struct ReferencePairs;

impl PairFactory for ReferencePairs {
    fn pair(
        &mut self,
        dialect: Dialect,
        faults: FaultSet,
    ) -> Result<(Box<dyn EngineAdapter>, Box<dyn EngineAdapter>), String> {
        Ok((
            Box::new(ReferenceAdapter::new("clean", dialect, FaultSet::none())),
            Box::new(ReferenceAdapter::new("faulty", dialect, faults)),
        ))
    }
}

impl<F> PairFactory for F
where
    F: FnMut(Dialect, FaultSet) -> Result<(Box<dyn EngineAdapter>, Box<dyn EngineAdapter>), String>,
{
    fn pair(
        &mut self,
        dialect: Dialect,
        faults: FaultSet,
    ) -> Result<(Box<dyn EngineAdapter>, Box<dyn EngineAdapter>), String> {
        self(dialect, faults)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub query: String,
    pub verdict: Verdict,
    pub runs: Vec<EngineRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultResult {
    /// `None` for the clean-vs-clean run.
    pub fault: Option<Fault>,
    pub trigger: Option<String>,
    pub discrepancies: usize,
    pub clusters: Vec<Cluster>,
    /// Some cluster's fingerprint contains the trigger operator.
    pub detected: bool,
    pub cases: Vec<CaseResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionReport {
    pub faults: Vec<FaultResult>,
    pub clean: FaultResult,
    pub wall_ms: u64,
}

/// Runs the corpus once for `faults` on a fresh engine pair per case.
pub fn run_fault(
    factory: &mut dyn PairFactory,
    faults: FaultSet,
    cases: &[InjectionCase],
) -> Result<FaultResult, String> {
    let graph = fixture_g0();
    let tol = Tolerance::default();
    let mut results = Vec::new();
    let mut items = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let (mut a, mut b) = factory.pair(case.dialect, faults)?;
        for e in [&mut a, &mut b] {
            e.load(&graph).map_err(|err| format!("{}: {err}", e.name()))?;
            for stmt in &case.setup {
                match e.execute(stmt) {
                    RawResult::Rows { .. } => {}
                    other => return Err(format!("{}: setup `{stmt}` failed: {other:?}", e.name())),
                }
            }
        }
        let (runs, verdict) = evaluate_query(
            &case.query,
            case.dialect,
            (a.as_mut(), Style::CanonicalJson),
            (b.as_mut(), Style::CanonicalJson),
            &tol,
        );
        if let Verdict::Discrepancy { kind, detail } = &verdict {
            items.push(DiscrepancyItem {
                fingerprint: operator_fingerprint(&case.query, case.dialect),
                kind: *kind,
                round: 1,
                index: i,
                text: case.query.clone(),
                detail: detail.clone(),
            });
        }
        results.push(CaseResult {
            query: case.query.clone(),
            verdict,
            runs,
        });
    }
    let clusters = dedup_discrepancies(&items);
    let single = (faults.iter().count() == 1).then(|| faults.iter().next()).flatten();
    let trigger = single.map(trigger_operator);
    let detected = trigger.is_some_and(|t| clusters.iter().any(|c| c.fingerprint.contains(t)));
    Ok(FaultResult {
        fault: single,
        trigger: trigger.map(str::to_owned),
        discrepancies: items.len(),
        clusters,
        detected,
        cases: results,
    })
}

/// Every fault in turn, then the clean run.
pub fn run_injection(factory: &mut dyn PairFactory) -> Result<InjectionReport, String> {
    let started = Instant::now();
    let cases = corpus();
    let faults = Fault::ALL
        .iter()
        .map(|f| run_fault(factory, FaultSet::only(*f), &cases))
        .collect::<Result<Vec<_>, _>>()?;
    let clean = run_fault(factory, FaultSet::none(), &cases)?;
    Ok(InjectionReport {
        faults,
        clean,
        wall_ms: started.elapsed().as_millis() as u64,
    })
}

/// Per-engine-family row of the summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub engine: String,
    pub bugs: usize,
    pub faults: Vec<Fault>,
}

impl InjectionReport {
    pub fn detected(&self) -> usize {
        self.faults.iter().filter(|f| f.detected).count()
    }

    /// Every fault detected and the clean run quiet.
    pub fn passed(&self) -> bool {
        self.detected() == self.faults.len() && self.clean.discrepancies == 0
    }

    /// Detected faults grouped by the engine family they model.
    pub fn by_family(&self) -> Vec<FamilyRow> {
        ENGINE_FAMILIES
            .iter()
            .map(|fam| {
                let faults: Vec<Fault> = self
                    .faults
                    .iter()
                    .filter(|r| r.detected)
                    .filter_map(|r| r.fault)
                    .filter(|f| engine_family(*f) == *fam)
                    .collect();
                FamilyRow {
                    engine: (*fam).to_owned(),
                    bugs: faults.len(),
                    faults,
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let summary = serde_json::json!({
            "detected": self.detected(),
            "total": self.faults.len(),
            "clean_discrepancies": self.clean.discrepancies,
            "passed": self.passed(),
            "by_engine": self.by_family(),
            "faults": self.faults,
            "clean": self.clean,
        });
        serde_json::to_string_pretty(&summary).expect("report serializes") + "\n"
    }
}

impl fmt::Display for InjectionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(out, "fault  trigger   found  clusters  result  description");
        for r in &self.faults {
            let fault = r.fault.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{:<6} {:<9} {:>5}  {:>8}  {:<6}  {}",
                fault,
                r.trigger.as_deref().unwrap_or("-"),
                r.discrepancies,
                r.clusters.len(),
                if r.detected { "PASS" } else { "FAIL" },
                r.fault.map(Fault::description).unwrap_or_default(),
            );
        }
        let _ = writeln!(
            out,
            "clean  -         {:>5}  {:>8}  {:<6}  all faults off",
            self.clean.discrepancies,
            self.clean.clusters.len(),
            if self.clean.discrepancies == 0 { "PASS" } else { "FAIL" },
        );
        let _ = writeln!(out, "\nengine        bugs  faults");
        for row in self.by_family() {
            let ids: Vec<String> = row.faults.iter().map(Fault::to_string).collect();
            let _ = writeln!(out, "{:<13} {:>4}  {}", row.engine, row.bugs, ids.join(" "));
        }
        let _ = writeln!(out, "\n{}/{} faults detected", self.detected(), self.faults.len());
        f.write_str(&out)
    }
}
