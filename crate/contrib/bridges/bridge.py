"""Line protocol shared by the bridges.

One JSON request per line on stdin, one JSON reply per line on stdout:

    {"id": 7, "action": "execute", "payload": {"query": "...", "dialect": "cypher"}}
    {"id": 7, "ok": true, "rows": ["[3, 25.78]"]}
    {"id": 7, "ok": false, "error": {"class": "syntax", "message": "..."}}

Actions: ping, reset, load (payload is the graph JSON), execute.
"""

import json
import sys


class EngineError(Exception):
    def __init__(self, cls, message):
        super().__init__(message)
        self.cls = cls


def _literal(prop, quote):
    t, v = prop["t"], prop["v"]
    if t == "bool":
        return "true" if v else "false"
    if t == "str":
        return quote + v.replace("\\", "\\\\").replace(quote, "\\" + quote) + quote
    if t == "float":
        return repr(float(v))
    return str(v)


def _ordered(props):
    # name first, the rest in file order
    keys = ["name"] if "name" in props else []
    return keys + [k for k in props if k != "name"]


def load_statements(graph, dialect):
    """Statements that create `graph`, matching elements by their `name` property."""
    names = {n["id"]: n["properties"]["name"]["v"] for n in graph["nodes"]}
    labels = {n["id"]: n["label"] for n in graph["nodes"]}
    out = []
    if dialect == "cypher":
        def pmap(props):
            return "{" + ", ".join(f"{k}: {_literal(props[k], chr(34))}" for k in _ordered(props)) + "}"
        for n in graph["nodes"]:
            out.append(f"CREATE (:{n['label']} {pmap(n['properties'])})")
        for e in graph["edges"]:
            a, b = e["src"], e["dst"]
            out.append(
                f"MATCH (a:{labels[a]} {{name: \"{names[a]}\"}}), (b:{labels[b]} {{name: \"{names[b]}\"}}) "
                f"CREATE (a)-[:{e['label']} {pmap(e['properties'])}]->(b)"
            )
    else:
        def props(p):
            return "".join(f".property('{k}', {_literal(p[k], chr(39))})" for k in _ordered(p))
        for n in graph["nodes"]:
            out.append(f"g.addV('{n['label']}'){props(n['properties'])}")
        for e in graph["edges"]:
            out.append(
                f"g.V().has('name', '{names[e['src']]}').addE('{e['label']}')"
                f".to(__.V().has('name', '{names[e['dst']]}')){props(e['properties'])}"
            )
    return out


def serve(engine):
    """Runs the protocol loop. `engine` has ping(), reset(), load(graph) and execute(query) -> rows."""
    for line in sys.stdin:
        if not line.strip():
            continue
        req = None
        try:
            req = json.loads(line)
            rid, action = req["id"], req["action"]
        except (ValueError, KeyError, TypeError) as e:
            rid = req.get("id", 0) if isinstance(req, dict) else 0
            reply = {"id": rid, "ok": False, "error": {"class": "protocol-error", "message": str(e)}}
        else:
            payload = req.get("payload")
            try:
                if action == "ping":
                    engine.ping()
                    reply = {"id": rid, "ok": True}
                elif action == "reset":
                    engine.reset()
                    reply = {"id": rid, "ok": True}
                elif action == "load":
                    engine.load(payload)
                    reply = {"id": rid, "ok": True}
                elif action == "execute":
                    reply = {"id": rid, "ok": True, "rows": engine.execute(payload["query"])}
                else:
                    raise EngineError("protocol-error", f"unknown action {action!r}")
            except EngineError as e:
                reply = {"id": rid, "ok": False, "error": {"class": e.cls, "message": str(e)}}
            except Exception as e:  # driver failures surface as engine errors
                reply = {"id": rid, "ok": False, "error": {"class": type(e).__name__, "message": str(e)}}
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()
