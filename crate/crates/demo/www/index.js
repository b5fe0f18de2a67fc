// Glue is generated into ./pkg by wasm-bindgen --target web (see README).
import init, { sample_inputs, check, queue_curve, partition_view } from "./pkg/polcheck_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value) >>> 0;

function fail(el, err) {
  el.innerHTML = "";
  const span = document.createElement("span");
  span.className = "bad";
  span.textContent = String(err);
  el.appendChild(span);
}

function runCheck() {
  const out = $("check-out");
  try {
    const r = JSON.parse(check($("tax").value, $("content").value, $("consent").value));
    const verdict = r.compliant ? "compliant" : `non-compliant (${r.reason})`;
    const oracle = r.oracle === null ? "too large to enumerate" : r.oracle ? "compliant" : "non-compliant";
    out.innerHTML = "";
    const v = document.createElement("span");
    v.className = r.compliant ? "ok" : "bad";
    v.textContent = verdict;
    out.append(v, `\nmatched basic: ${r.matchedBasic ?? "none"}\noracle: ${oracle}`);
  } catch (e) {
    fail(out, e);
  }
}

function plot(series) {
  const svg = $("queue-plot");
  svg.innerHTML = "";
  if (series.length === 0) return;
  const w = 600, h = 240, pad = 24;
  const maxX = series[series.length - 1].window_end;
  const maxY = Math.max(...series.map((r) => r.p95_ms), 1e-3);
  const line = (key, colour) => {
    const pts = series
      .map((r) => `${pad + ((w - 2 * pad) * r.window_end) / maxX},${h - pad - ((h - 2 * pad) * r[key]) / maxY}`)
      .join(" ");
    const el = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
    el.setAttribute("points", pts);
    el.setAttribute("fill", "none");
    el.setAttribute("stroke", colour);
    el.setAttribute("stroke-width", "2");
    svg.appendChild(el);
  };
  line("p50_ms", "#4a7fb5");
  line("p75_ms", "#c9a227");
  line("p95_ms", "#b5484a");
  const label = document.createElementNS("http://www.w3.org/2000/svg", "text");
  label.setAttribute("x", pad);
  label.setAttribute("y", 16);
  label.setAttribute("font-size", "12");
  label.textContent = `p50 blue, p75 gold, p95 red; top = ${maxY.toFixed(2)} ms`;
  svg.appendChild(label);
}

function runQueue() {
  const out = $("queue-out");
  try {
    const r = JSON.parse(
      queue_curve(num("q-users"), num("q-rate"), num("q-secs"), num("q-svc"), num("q-checkers"), num("q-window")),
    );
    const cap = r.capacityEps === null ? "unbounded" : `${r.capacityEps.toFixed(1)} ev/s`;
    out.textContent =
      `${r.events} events, offered ${r.offeredEps.toFixed(1)} ev/s, capacity ${cap}\n` +
      `median ${r.medianMs} ms, p95 ${r.p95Ms} ms`;
    plot(r.series);
  } catch (e) {
    fail(out, e);
  }
}

function runAssign() {
  const out = $("assign-out");
  try {
    const r = JSON.parse(partition_view($("keys").value, num("p-parts"), num("p-cons")));
    const table = document.createElement("table");
    table.innerHTML = "<tr><th>partition</th><th>owner</th><th>keys</th></tr>";
    for (const p of r.partitions) {
      const tr = document.createElement("tr");
      for (const cell of [p.partition, p.owner ?? "(unowned)", p.keys.join(" ")]) {
        const td = document.createElement("td");
        td.textContent = cell;
        tr.appendChild(td);
      }
      table.appendChild(tr);
    }
    out.innerHTML = "";
    out.append(table, r.idle.length ? `idle: ${r.idle.join(", ")}` : "no idle consumers");
  } catch (e) {
    fail(out, e);
  }
}

await init();
const s = JSON.parse(sample_inputs());
$("tax").value = s.taxonomy;
$("content").value = s.content;
$("consent").value = s.consent;
$("check").onclick = runCheck;
$("queue").onclick = runQueue;
$("assign").onclick = runAssign;
$("status").textContent = "Ready.";
