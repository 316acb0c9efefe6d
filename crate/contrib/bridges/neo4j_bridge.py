"""Neo4j bridge. Rows come out as Python reprs of each record's values (style "neo4j-ish").

    pip install neo4j
    NEO4J_URI=bolt://localhost:7687 NEO4J_USER=neo4j NEO4J_PASSWORD=... python3 neo4j_bridge.py
"""

import os

from neo4j import GraphDatabase
from neo4j.exceptions import CypherSyntaxError

from bridge import EngineError, load_statements, serve


class Neo4j:
    def __init__(self):
        self.driver = GraphDatabase.driver(
            os.environ.get("NEO4J_URI", "bolt://localhost:7687"),
            auth=(os.environ.get("NEO4J_USER", "neo4j"), os.environ.get("NEO4J_PASSWORD", "neo4j")),
        )

    def ping(self):
        self.driver.verify_connectivity()

    def reset(self):
        with self.driver.session() as s:
            s.run("MATCH (n) DETACH DELETE n").consume()

    def load(self, graph):
        with self.driver.session() as s:
            for stmt in load_statements(graph, "cypher"):
                s.run(stmt).consume()

    def execute(self, query):
        try:
            with self.driver.session() as s:
                return [repr(list(r.values())) for r in s.run(query)]
        except CypherSyntaxError as e:
            raise EngineError("syntax", str(e))


if __name__ == "__main__":
    serve(Neo4j())
