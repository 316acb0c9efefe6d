"""Gremlin Server bridge (JanusGraph, TinkerGraph). Each result is the printed toList() of the
traversal (style "gremlin-text"); element references such as v[3] are dereferenced by the
normalizer with follow-up valueMap(true) queries.

    pip install gremlinpython
    GREMLIN_URL=ws://localhost:8182/gremlin python3 gremlin_bridge.py
"""

import os

from gremlin_python.driver import client
from gremlin_python.driver.protocol import GremlinServerError

from bridge import EngineError, load_statements, serve


class Gremlin:
    def __init__(self):
        self.client = client.Client(os.environ.get("GREMLIN_URL", "ws://localhost:8182/gremlin"), "g")

    def submit(self, q):
        return self.client.submit(q).all().result()

    def ping(self):
        self.submit("g.V().limit(1).count()")

    def reset(self):
        self.submit("g.V().drop().iterate()")

    def load(self, graph):
        for stmt in load_statements(graph, "gremlin"):
            self.submit(stmt + ".iterate()")

    def execute(self, query):
        try:
            return [str(self.submit(query))]
        except GremlinServerError as e:
            raise EngineError("syntax" if "MissingPropertyException" in str(e) else "runtime", str(e))


if __name__ == "__main__":
    serve(Gremlin())
