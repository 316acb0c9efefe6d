import init, { generateGraph, smallGraph, runQuery, compareTranscripts, faultCatalog } from "./pkg/graphdiff_web.js";

const $ = (id) => document.getElementById(id);
const STYLES = ["neo4j-ish", "agens-ish", "canonical-json", "gremlin-text"];

let graph = "";

function show(out, f) {
  try {
    out.textContent = f();
  } catch (e) {
    out.textContent = "error: " + e;
  }
}

function useGraph(json, prompt) {
  graph = json;
  const g = JSON.parse(json);
  $("graph-info").textContent = `${g.nodes.length} nodes, ${g.edges.length} edges loaded`;
  $("prompt").textContent = prompt || "";
}

function faultMask() {
  let mask = 0;
  document.querySelectorAll("#faults input:checked").forEach((cb) => { mask |= 1 << Number(cb.value); });
  return mask;
}

await init();

for (const [i, f] of JSON.parse(faultCatalog()).entries()) {
  const label = document.createElement("label");
  label.title = f.description;
  label.innerHTML = `<input type="checkbox" value="${i}"> ${f.id}`;
  $("faults").appendChild(label);
}
for (const [id, pick] of [["style-a", "neo4j-ish"], ["style-b", "agens-ish"]]) {
  for (const s of STYLES) $(id).add(new Option(s, s, false, s === pick));
}

useGraph(smallGraph());

$("generate").onclick = () => show($("graph-info"), () => {
  const r = JSON.parse(generateGraph(+$("nodes").value, +$("edges").value, BigInt($("seed").value), $("gen-dialect").value));
  useGraph(JSON.stringify(r.graph), r.prompt);
  return $("graph-info").textContent;
});

$("small").onclick = () => useGraph(smallGraph());

$("run").onclick = () => show($("run-out"), () => {
  const r = JSON.parse(runQuery(graph, $("run-dialect").value, $("query").value, faultMask()));
  const side = (s) => s.rows ?? s.error;
  return `lint:    ${r.lint}\nclean:   ${side(r.clean)}\n${r.faults.padEnd(8)} ${side(r.faulty)}\nverdict: ${r.verdict}`;
});

$("compare").onclick = () => show($("cmp-out"), () => {
  const r = JSON.parse(compareTranscripts(
    $("cmp-query").value, $("cmp-dialect").value,
    $("text-a").value, $("style-a").value,
    $("text-b").value, $("style-b").value,
  ));
  const side = (s) => s.rows ?? s.error;
  return `a:       ${side(r.a)}\nb:       ${side(r.b)}\nverdict: ${r.verdict}`;
});
