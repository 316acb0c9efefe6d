mod common;

use common::oracle::{random_graph, SUBSET_CORPUS};
use graphdiff::compare::{compare_results, Tolerance};
use graphdiff::engine::{Fault, FaultSet, Store};
use graphdiff::inject::{corpus, trigger_operator, InjectionCase};
use graphdiff::ir::{operator_fingerprint, parse};
use graphdiff::model::fixture_g0;
use graphdiff::RecordSet;

fn run_case(case: &InjectionCase, faults: FaultSet) -> RecordSet {
    let mut store = Store::from_graph(&fixture_g0());
    for stmt in &case.setup {
        store.execute(&parse(stmt, case.dialect).unwrap(), faults).unwrap();
    }
    store.execute(&parse(&case.query, case.dialect).unwrap(), faults).unwrap()
}

#[test]
fn each_fault_only_moves_queries_using_its_operator() {
    let tol = Tolerance::default();
    for f in Fault::ALL {
        let mut moved = 0;
        for case in corpus() {
            let v = compare_results(&run_case(&case, FaultSet::none()), &run_case(&case, FaultSet::only(f)), false, &tol);
            if v.is_discrepancy() {
                moved += 1;
                let fp = operator_fingerprint(&case.query, case.dialect);
                let setup_uses = case.setup.iter().any(|s| operator_fingerprint(s, case.dialect).contains(trigger_operator(f)));
                assert!(fp.contains(trigger_operator(f)) || setup_uses, "{f} moved `{}`", case.query);
            }
        }
        assert!(moved > 0, "{f} changes nothing on the corpus");
    }
}

#[test]
fn untouched_queries_survive_every_fault_at_once() {
    let tol = Tolerance::default();
    for case in corpus() {
        let clean = run_case(&case, FaultSet::none());
        let untouched = Fault::ALL
            .into_iter()
            .all(|f| !compare_results(&clean, &run_case(&case, FaultSet::only(f)), false, &tol).is_discrepancy());
        if untouched {
            let all = run_case(&case, FaultSet::all());
            assert!(!compare_results(&clean, &all, false, &tol).is_discrepancy(), "`{}`", case.query);
        }
    }
}

#[test]
fn execution_is_deterministic() {
    let g = random_graph(11);
    for (dialect, q) in SUBSET_CORPUS {
        let ir = parse(q, *dialect).unwrap();
        let first = Store::from_graph(&g).execute(&ir, FaultSet::all()).unwrap();
        for _ in 0..100 {
            assert_eq!(Store::from_graph(&g).execute(&ir, FaultSet::all()).unwrap(), first, "{q}");
        }
    }
}

#[test]
fn reads_leave_the_store_untouched() {
    for seed in 0..20 {
        let mut store = Store::from_graph(&random_graph(seed));
        let before = store.digest();
        for (dialect, q) in SUBSET_CORPUS {
            store.execute(&parse(q, *dialect).unwrap(), FaultSet::all()).unwrap();
            assert_eq!(store.digest(), before, "seed {seed}: {q}");
        }
    }
}
