use graphdiff::Dialect::{self, Cypher, Gremlin};

/// Forty queries with the lint tag each must receive. Every deny token appears once outside
/// string literals; the passing queries carry the same words inside literals or as parts of
/// longer identifiers.
pub const LINT_CASES: &[(Dialect, &str, &str)] = &[
    (Cypher, "MATCH (n) RETURN n.name SKIP 3", "non_deterministic"),
    (Cypher, "MATCH (n) RETURN n.name LIMIT 5", "non_deterministic"),
    (Cypher, "MATCH (n) RETURN n.name, rand() AS r", "non_deterministic"),
    (Cypher, "CREATE (n:nt0 {name: 'u1000'})", "mutating"),
    (Cypher, "MERGE (n:nt0 {name: 'u1'}) RETURN n", "mutating"),
    (Cypher, "MATCH (n {name: 'u1'}) SET n.p2 = 1", "mutating"),
    (Cypher, "MATCH (n {name: 'u1'}) DELETE n", "mutating"),
    (Cypher, "MATCH (n {name: 'u1'}) DETACH DELETE n", "mutating"),
    (Cypher, "MATCH (n {name: 'u1'}) REMOVE n.p2", "mutating"),
    (Cypher, "DROP INDEX idx_name", "mutating"),
    (Cypher, "LOAD CSV FROM 'file:///x.csv' AS line RETURN line", "mutating"),
    (Cypher, "MATCH (n) FOREACH (x IN [1] | SET n.p2 = x)", "mutating"),
    (Cypher, "match (n) return n.name limit 1", "non_deterministic"),
    (Cypher, "match (n:nt0) set n.p1 = 'x'", "mutating"),
    (Gremlin, "g.V().sample(3)", "non_deterministic"),
    (Gremlin, "g.V().coin(0.5).count()", "non_deterministic"),
    (Gremlin, "g.V().order().by(shuffle)", "non_deterministic"),
    (Gremlin, "g.addV('nt0').property('name', 'u1000')", "mutating"),
    (Gremlin, "g.V(1).addE('et0').to(__.V(2))", "mutating"),
    (Gremlin, "g.V().has('name', 'u1').property('p2', 1)", "mutating"),
    (Gremlin, "g.V().has('name', 'u1').drop()", "mutating"),
    (Gremlin, "g.mergeV([name: 'u1'])", "mutating"),
    (Gremlin, "g.mergeE([label: 'et0'])", "mutating"),
    (Cypher, "MATCH (n) WHERE n.p1 = 'unlimited' RETURN n.name", "pass"),
    (Cypher, "MATCH (n) WHERE n.name = 'LIMIT 5' RETURN n", "pass"),
    (Cypher, "MATCH (n) WHERE n.p5 = \"CREATE (m)\" RETURN n.name", "pass"),
    (Cypher, "MATCH (n) WHERE n.p3 = 'skip' OR n.p3 = 'SET' RETURN count(n)", "pass"),
    (Cypher, "MATCH (n) RETURN n.name AS randomized", "pass"),
    (Cypher, "MATCH (n) RETURN n.created, n.deleted, n.settings", "pass"),
    (Cypher, "MATCH (n) WHERE n.p1 = 'DETACH DELETE n' RETURN n", "pass"),
    (Cypher, "MATCH (n)-[r:et0]->(m) RETURN n.name, m.name", "pass"),
    (Cypher, "MATCH (n:nt0) WITH collect(n) AS ns RETURN DISTINCT ns", "pass"),
    (Cypher, "MATCH (n) WHERE n.p9 = 'MERGE REMOVE DROP LOAD FOREACH' RETURN n", "pass"),
    (Gremlin, "g.V().has('name', 'addV(')", "pass"),
    (Gremlin, "g.V().values('property')", "pass"),
    (Gremlin, "g.V().has('p5', 'drop()').count()", "pass"),
    (Gremlin, "g.V().has('p1', within('sample(', 'coin(', 'shuffle')).valueMap()", "pass"),
    (Gremlin, "g.E().has('p2', without('addE(', 'mergeV(', 'mergeE(')).count()", "pass"),
    (Gremlin, "g.V().hasLabel('nt0').valueMap()", "pass"),
    (Gremlin, "g.V().properties('p2').count()", "pass"),
];
