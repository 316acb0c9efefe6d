//! Engine transcripts of known queries, as printed by the Python drivers.

use graphdiff::compare::{classify_pair, EngineOutcome, Tolerance, Verdict};
use graphdiff::normalize::{normalize_transcript, Style};
use graphdiff::value::RecordSet;
use graphdiff::Dialect;

pub struct Side {
    pub engine: &'static str,
    pub style: Style,
    pub text: &'static str,
}

pub struct Pair {
    pub id: &'static str,
    pub dialect: Dialect,
    pub query: &'static str,
    pub a: Side,
    pub b: Side,
    pub discrepancy: bool,
}

const fn neo4j(text: &'static str) -> Side {
    Side { engine: "neo4j", style: Style::Neo4jIsh, text }
}

const fn agens(text: &'static str) -> Side {
    Side { engine: "agensgraph", style: Style::AgensIsh, text }
}

const fn janus(text: &'static str) -> Side {
    Side { engine: "janusgraph", style: Style::GremlinText, text }
}

const fn tinker(text: &'static str) -> Side {
    Side { engine: "tinkergraph", style: Style::GremlinText, text }
}

const fn cypher(id: &'static str, query: &'static str, a: Side, b: Side, discrepancy: bool) -> Pair {
    Pair { id, dialect: Dialect::Cypher, query, a, b, discrepancy }
}

const fn gremlin(id: &'static str, query: &'static str, a: Side, b: Side, discrepancy: bool) -> Pair {
    Pair { id, dialect: Dialect::Gremlin, query, a, b, discrepancy }
}

/// One wrong-result pair per bug; the first side is the faulty one where that is known.
pub fn bug_pairs() -> Vec<Pair> {
    vec![
        cypher(
            "count-beside-avg",
            "MATCH (n:nt3) RETURN count(n), avg(n.p8)",
            neo4j("[3, 25.78666666666667]"),
            agens("(24, 25.786666666666665)"),
            true,
        ),
        cypher(
            "empty-sum",
            "MATCH (n:nt1)-[r]-() RETURN n.name AS Name, sum(r.p8) AS TotalP8",
            neo4j("[['u5', 0], ['u6', 17.01], ['u7', 17.02], ['u22', 84.84]]"),
            agens("[('u5', None), ('u6', 17.01), ('u7', 17.02), ('u22', 84.84)]"),
            true,
        ),
        cypher(
            "unwind-property",
            "MATCH (n)-[r]->() UNWIND n.p6 AS values RETURN values",
            agens("[]"),
            neo4j("[['Lm'], ['GOvy'], ['5Yz'], ['Rk']]"),
            true,
        ),
        cypher(
            "collect-nodes",
            "MATCH (n:nt3 {p5: 'Ce'})-[:et3]->(m) RETURN n, COLLECT(m)",
            agens(
                r#"[('nt3[3.2]{"p5": "Ce", "name": "u4"}', [{'id': '5.20', 'tid': None, 'properties': None}, {'id': '6.24', 'tid': None, 'properties': None}])]"#,
            ),
            neo4j("[Node('nt3', name='u4', p5='Ce'), [Node('nt1',name = 'u85', p3=True), Node('nt2', name='u84', p9=44.79)]]"),
            true,
        ),
        cypher(
            "bool-above-int",
            "MATCH (n) WHERE n.p2 > 50 RETURN n.name",
            agens("[('u19',), ('u56',), ('u96',), ('u33',), ('u44',), ('u47',), ('u86',), ('u17',), ('u37',), ('u91',)]"),
            neo4j("[]"),
            true,
        ),
        cypher(
            "comma-patterns",
            "MATCH (n)-[:et0]->(), ()-[:et3]->(n) RETURN count(n)",
            agens("(2695,)"),
            neo4j("[28]"),
            true,
        ),
        cypher(
            "distinct-null",
            "MATCH (n1)-[r]->(n2:nt0) WHERE n1.name = 'u9' RETURN COLLECT(DISTINCT n2.p2) AS distinct_values",
            agens("([False, None],)"),
            neo4j("[[False]]"),
            true,
        ),
        gremlin(
            "without-strings",
            "g.E().has('p2', without('GhR')).count()",
            janus("[9]"),
            tinker("[23]"),
            true,
        ),
        gremlin(
            "sticky-types",
            "g.V().valueMap()",
            janus("[{'p9': [13.0], 'test3': ['25.6']}]"),
            tinker("[{'test3': [{'@type': 'gx:BigDecimal', '@value': 25.6}], 'p9': [13]}]"),
            true,
        ),
        gremlin(
            "neq-string-false",
            "g.V().has('p2', neq('false')).valueMap()",
            janus("[{'p2': [True], 'name': ['u96']}, {'p2': [True], 'name': ['u19']}, {'p2': [True], 'name': ['u47']}]"),
            tinker("[{'p2': [False], 'name': ['u91']}, {'p2': [True], 'name': ['u96']}, {'p2': [True], 'name': ['u47']}]"),
            true,
        ),
    ]
}

/// Further wrong-result pairs that accompany the bug pairs.
pub fn extra_discrepancy_pairs() -> Vec<Pair> {
    vec![gremlin(
        "without-strings-maps",
        "g.E().has('p2', without('GhR')).valueMap()",
        janus("[{'name': 'e16', 'p2': True}, {'p2': True, 'name': 'e13', 'p9': 55.07}, {'name': 'e180', 'p2': True}]"),
        tinker(
            "[{'p2': False, 'name': 'e5'}, {'p1': '5k', 'p2': False, 'p4': False, 'name': 'e9'}, {'p2': True, 'name': 'e16'}, {'p2': True, 'name': 'e13', 'p9': 55.07}]",
        ),
        true,
    )]
}

/// Pairs where both engines are right and print the same records differently.
pub fn agreeing_pairs() -> Vec<Pair> {
    vec![
        cypher(
            "node-by-name",
            "MATCH (n) WHERE n.name = 'u16' RETURN n",
            neo4j("[Node('nt0', name='u16', p4=False, p7=True, p9=41.96)]"),
            agens(r#"('nt0[4.4]{"p4": false, "p7": true, "p9": 41.96, "name": "u16"}',)"#),
            false,
        ),
        cypher(
            "collected-nodes",
            "MATCH (n:nt0) WITH collect(n) as n RETURN DISTINCT n",
            neo4j("[Node('nt0', name='u1', p5='IF'), Node('nt0', name='u3', p4=True, p6='9')]"),
            agens(
                "[{'id': '4.1', 'tid': '(0,1)', 'properties': {'p5': 'IF', 'name': 'u1'}}, {'id': '4.2', 'tid': '(0,2)', 'properties': {'p4': True, 'p6': '9', 'name': 'u3'}}]",
            ),
            false,
        ),
        cypher("count-alone", "MATCH (n:nt3) RETURN count(n)", neo4j("[26]"), agens("(26,)"), false),
        cypher(
            "property-rows",
            "MATCH (n)-[r]->() RETURN n.p6",
            neo4j("[[None], ['Lm'], ['GOvy'], [None], ['Rk']]"),
            agens("[(None,), ('Lm',), ('GOvy',), (None,), ('Rk',)]"),
            false,
        ),
        cypher(
            "property-via-with",
            "MATCH (n)-[r]->() WITH n.p6 AS values RETURN values",
            neo4j("[[None], ['Lm'], ['GOvy'], [None], ['Rk']]"),
            agens("[(None,), ('Lm',), ('GOvy',), (None,), ('Rk',)]"),
            false,
        ),
        cypher(
            "node-pairs",
            "MATCH (n:nt3 {p5: 'Ce'})-[:et3]->(m) RETURN n, m",
            neo4j(
                "[Node('nt3', name='u4', p5='Ce'), Node('nt1', name = 'u85', p3=True)], [Node('nt3', name='u4', p5='Ce'), Node('nt2', name='u84', p9=44.79)]",
            ),
            agens(
                r#"('nt3[3.2]{"p5": "Ce", "name": "u4"}', 'nt2[5.20]{"p9": 44.79, "name": "u84"}'), ('nt3[3.2]{"p5": "Ce", "name": "u4"}', 'nt1[6.24]{"p3": true, "name": "u85"}')"#,
            ),
            false,
        ),
        cypher(
            "names-and-flags",
            "MATCH (n) RETURN n.name, n.p2",
            neo4j("[['u17', False], ['u19', True], ['u99', None]]"),
            agens("[('u17', False), ('u19', True), ('u99', None)]"),
            false,
        ),
        cypher("outgoing-count", "MATCH (n)-[:et0]->() RETURN count(n)", neo4j("[55]"), agens("(55,)"), false),
        cypher("incoming-count", "MATCH ()-[:et3]->(n) RETURN count(n)", neo4j("[49]"), agens("(49,)"), false),
        gremlin(
            "neq-bool-false",
            "g.V().has('p2', neq(false)).valueMap()",
            janus("[{'p2': [True], 'name': ['u96']}, {'p2': [True], 'name': ['u19']}, {'p2': [True], 'name': ['u47']}]"),
            tinker("[{'p2': [True], 'name': ['u96']}, {'p2': [True], 'name': ['u19']}, {'p2': [True], 'name': ['u47']}]"),
            false,
        ),
    ]
}

/// Agreeing pairs beyond the required set.
pub fn extra_agreeing_pairs() -> Vec<Pair> {
    vec![
        gremlin("edges-with-key", "g.E().has('p2').count()", janus("[23]"), tinker("[23]"), false),
        gremlin(
            "decimal-rendering",
            "g.V().valueMap()",
            janus("[{'p9': [13.85], 'test3': ['pvifo']}]"),
            tinker("[{'test3': ['pvifo'], 'p9': [{'@type': 'gx:BigDecimal', '@value': 13.85}]}]"),
            false,
        ),
    ]
}

pub fn normalized(side: &Side) -> RecordSet {
    normalize_transcript(side.text, side.style)
        .unwrap_or_else(|e| panic!("{} transcript `{}` does not normalize: {e}", side.engine, side.text))
}

pub fn verdict(p: &Pair, tol: &Tolerance) -> Verdict {
    let outcome = |s: &Side| EngineOutcome::Rows { records: normalized(s) };
    classify_pair(p.query, p.dialect, &outcome(&p.a), &outcome(&p.b), tol).verdict
}
