"""Checks a bridge command against the line protocol.

    python3 conformance.py -- python3 neo4j_bridge.py
    python3 conformance.py -- graphdiff serve-bridge --dialect cypher

Loads a two-node graph, runs a count query and checks the shape of every reply. Engine-specific
row text is printed, not judged; pick the matching normalizer style from it.
"""

import json
import subprocess
import sys

GRAPH = {
    "schema": {"node_labels": ["nt0"], "edge_labels": ["et0"], "property_keys": ["name", "p0"]},
    "nodes": [
        {"id": 0, "label": "nt0", "properties": {"name": {"t": "str", "v": "u0"}, "p0": {"t": "int", "v": 1}}},
        {"id": 1, "label": "nt0", "properties": {"name": {"t": "str", "v": "u1"}}},
    ],
    "edges": [
        {"id": 0, "label": "et0", "src": 0, "dst": 1, "properties": {"name": {"t": "str", "v": "e0"}}},
    ],
}

CHECKS = []


def check(name, ok, detail=""):
    CHECKS.append(ok)
    print(f"{'PASS' if ok else 'FAIL'}  {name}{'  ' + detail if detail and not ok else ''}")


def main(argv):
    if "--" in argv:
        argv = argv[argv.index("--") + 1 :]
    dialect = "gremlin" if any("gremlin" in a for a in argv) else "cypher"
    proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True)

    def ask(line):
        proc.stdin.write(line + "\n")
        proc.stdin.flush()
        return json.loads(proc.stdout.readline())

    def req(rid, action, payload=None):
        return ask(json.dumps({"id": rid, "action": action, "payload": payload}))

    r = req(1, "ping")
    check("ping replies ok with the request id", r.get("ok") is True and r.get("id") == 1, str(r))
    r = req(2, "reset")
    check("reset replies ok", r.get("ok") is True and r.get("id") == 2, str(r))
    r = req(3, "load", GRAPH)
    check("load accepts the graph JSON", r.get("ok") is True and r.get("id") == 3, str(r))
    q = "MATCH (n) RETURN count(n)" if dialect == "cypher" else "g.V().count()"
    r = req(4, "execute", {"query": q, "dialect": dialect})
    rows = r.get("rows")
    check("execute returns a rows list", r.get("ok") is True and isinstance(rows, list), str(r))
    print(f"      rows for `{q}`: {rows}")
    bad = "MATCH (n RETURN" if dialect == "cypher" else "g.V(.count("
    r = req(5, "execute", {"query": bad, "dialect": dialect})
    err = r.get("error") or {}
    check("a bad query gives ok=false with an error class", r.get("ok") is False and isinstance(err.get("class"), str), str(r))
    r = ask("this is not json")
    check("an unparseable line gives a protocol-error", (r.get("error") or {}).get("class") == "protocol-error", str(r))
    r = req(6, "ping")
    check("the bridge keeps serving after errors", r.get("id") == 6 and r.get("ok") is True, str(r))
    proc.stdin.close()
    proc.wait(timeout=10)
    print(f"{sum(CHECKS)}/{len(CHECKS)} checks passed")
    return 0 if all(CHECKS) else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
