"""AgensGraph bridge over psycopg2. Rows come out as Python reprs of result tuples
(style "agens-ish").

    pip install psycopg2-binary
    AGENS_DSN="dbname=agens user=agens host=localhost" AGENS_GRAPH=g python3 agens_bridge.py
"""

import os

import psycopg2

from bridge import EngineError, load_statements, serve


class Agens:
    def __init__(self):
        self.conn = psycopg2.connect(os.environ.get("AGENS_DSN", "dbname=agens"))
        self.conn.autocommit = True
        self.graph = os.environ.get("AGENS_GRAPH", "graphdiff")

    def ping(self):
        with self.conn.cursor() as c:
            c.execute("SELECT 1")

    def reset(self):
        with self.conn.cursor() as c:
            c.execute(f"DROP GRAPH IF EXISTS {self.graph} CASCADE")
            c.execute(f"CREATE GRAPH {self.graph}")
            c.execute(f"SET graph_path = {self.graph}")

    def load(self, graph):
        with self.conn.cursor() as c:
            c.execute(f"SET graph_path = {self.graph}")
            for stmt in load_statements(graph, "cypher"):
                c.execute(stmt)

    def execute(self, query):
        try:
            with self.conn.cursor() as c:
                c.execute(query)
                return [repr(tuple(r)) for r in c.fetchall()]
        except psycopg2.errors.SyntaxError as e:
            raise EngineError("syntax", str(e))


if __name__ == "__main__":
    serve(Agens())
