import init, { presets, preset, simulate_toml, law_curves, swarm } from "./pkg/smc_web.js";

const COLORS = ["#1f5fbf", "#c0392b", "#2e8b57", "#8e44ad"];

// Minimal line plot. series: [{label, x, y}], opts: {logY}
function plot(canvas, series, opts = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, L = 60, R = 10, T = 10, B = 25;
  ctx.clearRect(0, 0, W, H);
  const tf = (v) => (opts.logY ? Math.log10(Math.max(v, 1e-300)) : v);
  let xmin = Infinity, xmax = -Infinity, ymin = Infinity, ymax = -Infinity;
  for (const s of series) {
    for (let i = 0; i < s.x.length; i++) {
      const y = tf(s.y[i]);
      if (!Number.isFinite(y)) continue;
      xmin = Math.min(xmin, s.x[i]); xmax = Math.max(xmax, s.x[i]);
      ymin = Math.min(ymin, y); ymax = Math.max(ymax, y);
    }
  }
  if (!(xmax > xmin)) { xmax = xmin + 1; }
  if (!(ymax > ymin)) { ymin -= 1; ymax += 1; }
  const pad = 0.05 * (ymax - ymin); ymin -= pad; ymax += pad;
  const px = (x) => L + (x - xmin) / (xmax - xmin) * (W - L - R);
  const py = (y) => T + (1 - (tf(y) - ymin) / (ymax - ymin)) * (H - T - B);

  ctx.strokeStyle = "#999"; ctx.fillStyle = "#555"; ctx.font = "11px sans-serif";
  ctx.strokeRect(L, T, W - L - R, H - T - B);
  for (let k = 0; k <= 4; k++) {
    const yv = ymin + k * (ymax - ymin) / 4;
    const yp = T + (1 - k / 4) * (H - T - B);
    ctx.fillText(opts.logY ? `1e${yv.toFixed(1)}` : yv.toPrecision(3), 4, yp + 4);
    const xv = xmin + k * (xmax - xmin) / 4;
    ctx.fillText(xv.toPrecision(3), px(xv) - 10, H - 8);
  }
  series.forEach((s, j) => {
    ctx.strokeStyle = COLORS[j % COLORS.length];
    ctx.beginPath();
    let started = false;
    for (let i = 0; i < s.x.length; i++) {
      if (!Number.isFinite(tf(s.y[i]))) { started = false; continue; }
      const X = px(s.x[i]), Y = py(s.y[i]);
      if (started) ctx.lineTo(X, Y); else { ctx.moveTo(X, Y); started = true; }
    }
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(s.label, W - R - 120, T + 14 + 14 * j);
  });
}

const fmt = (v) => (v === null || v === undefined ? "undefined" : Number(v).toPrecision(4));

function metricsTable(out) {
  const keys = ["rise_time", "settling_time", "peak_overshoot", "ise", "chattering_index", "steady_state_error"];
  const rows = out.comparison ? out.comparison.rows.map((r) => [r.label, r.metrics, r.abort])
                              : [[out.name, out.metrics, out.abort]];
  let html = "<table><tr><th>run</th>" + keys.map((k) => `<th>${k}</th>`).join("") + "<th>abort</th></tr>";
  for (const [label, m, abort] of rows) {
    html += `<tr><td>${label}</td>` + keys.map((k) => `<td>${fmt(m[k])}</td>`).join("") + `<td>${abort ?? ""}</td></tr>`;
  }
  html += "</table>";
  if (out.comparison) {
    for (const o of out.comparison.orderings) {
      html += `<div>${o.metric}: ${o.order.join(" &lt; ")} ${o.error ? "FAILED (" + o.error + ")" : "holds"}</div>`;
    }
  }
  return html;
}

function runScenario() {
  const err = document.getElementById("run-err");
  err.textContent = "";
  let out;
  try {
    out = JSON.parse(simulate_toml(document.getElementById("toml").value));
  } catch (e) {
    err.textContent = String(e);
    return;
  }
  if (out.abort) err.textContent = "aborted: " + out.abort;
  plot(document.getElementById("plot-y"), [
    { label: "output", x: out.t, y: out.y },
    { label: "reference", x: out.t, y: out.r },
  ]);
  plot(document.getElementById("plot-u"), [{ label: "u", x: out.t, y: out.u }]);
  document.getElementById("metrics").innerHTML = metricsTable(out);
}

function drawLaws() {
  const v = (id) => {
    const el = document.getElementById(id);
    el.nextElementSibling.textContent = el.value;
    return Number(el.value);
  };
  const k = v("k"), ksc = v("ksc"), alpha = v("alpha"), delta = v("delta");
  const span = Math.max(4 * delta, 0.5);
  const out = JSON.parse(law_curves(k, ksc, alpha, delta, span));
  plot(document.getElementById("plot-law"), [
    { label: "PRE, sat", x: out.s, y: out.pre_sat },
    { label: "PRE, sign", x: out.s, y: out.pre_sign },
    { label: "exponential", x: out.s, y: out.exponential },
  ]);
}

function race() {
  const n = (id) => Number(document.getElementById(id).value);
  const note = document.getElementById("race-note");
  let out;
  try {
    out = JSON.parse(swarm(n("seed"), n("iters"), n("parts")));
  } catch (e) {
    note.textContent = String(e);
    return;
  }
  const it = out.modified.map((_, i) => i);
  plot(document.getElementById("plot-race"), [
    { label: "modified", x: it, y: out.modified },
    { label: "standard", x: it, y: out.standard },
  ], { logY: true });
  note.textContent = `final best: modified ${fmt(out.modified.at(-1))}, standard ${fmt(out.standard.at(-1))}`;
}

async function main() {
  await init();
  const sel = document.getElementById("preset");
  for (const name of JSON.parse(presets())) {
    const o = document.createElement("option");
    o.value = o.textContent = name;
    sel.appendChild(o);
  }
  const load = () => { document.getElementById("toml").value = preset(sel.value); runScenario(); };
  sel.addEventListener("change", load);
  document.getElementById("run").addEventListener("click", runScenario);
  for (const id of ["k", "ksc", "alpha", "delta"]) document.getElementById(id).addEventListener("input", drawLaws);
  document.getElementById("race").addEventListener("click", race);
  load();
  drawLaws();
  race();
}

main();
