import init, { tlaDynamics, currentHeatmap, unravelings } from "./pkg/unravel_web.js";

const $ = (id) => document.getElementById(id);
const status = (msg) => { $("status").textContent = msg; };

function params() {
  return [Number($("gamma0").value), Number($("delta").value), Number($("modes").value), Number($("tmax").value)];
}

function call(f, ...args) {
  status("");
  try {
    return JSON.parse(f(...args));
  } catch (e) {
    status(String(e.message || e));
    return null;
  }
}

function extent(series) {
  let lo = Infinity, hi = -Infinity;
  for (const s of series) for (const v of s.y) if (v !== null && isFinite(v)) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  if (lo === hi) { lo -= 1; hi += 1; }
  const pad = 0.05 * (hi - lo);
  return [lo - pad, hi + pad];
}

// series: [{y, color, dots}]
function linePlot(canvas, t, series, label) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, L = 50, B = 24;
  ctx.clearRect(0, 0, W, H);
  const [lo, hi] = extent(series);
  const x = (v) => L + (W - L - 10) * (v - t[0]) / (t[t.length - 1] - t[0]);
  const y = (v) => (H - B) - (H - B - 10) * (v - lo) / (hi - lo);
  ctx.strokeStyle = "#999"; ctx.fillStyle = "#444"; ctx.font = "11px sans-serif";
  ctx.strokeRect(L, 10, W - L - 10, H - B - 10);
  if (lo < 0 && hi > 0) { ctx.beginPath(); ctx.moveTo(L, y(0)); ctx.lineTo(W - 10, y(0)); ctx.stroke(); }
  ctx.fillText(hi.toFixed(2), 4, 18); ctx.fillText(lo.toFixed(2), 4, H - B);
  ctx.fillText(label, L + 6, 24);
  ctx.fillText("t = " + t[t.length - 1].toFixed(1), W - 70, H - 6);
  for (const s of series) {
    ctx.strokeStyle = s.color; ctx.fillStyle = s.color;
    if (s.dots) {
      for (let i = 0; i < t.length; i += 8) if (s.y[i] !== null) ctx.fillRect(x(t[i]) - 1.5, y(s.y[i]) - 1.5, 3, 3);
      continue;
    }
    ctx.beginPath();
    let pen = false;
    for (let i = 0; i < t.length; i++) {
      if (s.y[i] === null) { pen = false; continue; }
      pen ? ctx.lineTo(x(t[i]), y(s.y[i])) : ctx.moveTo(x(t[i]), y(s.y[i]));
      pen = true;
    }
    ctx.stroke();
  }
}

function legend(el, items) {
  el.innerHTML = items.map(([c, name]) => `<span style="color:${c}">&#9632; ${name}</span>`).join("");
}

function drawHeatmap(canvas, h) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, L = 50, B = 24;
  ctx.clearRect(0, 0, W, H);
  const rows = h.t.length, cols = h.offsets.length;
  let m = 0;
  for (const v of h.values) m = Math.max(m, Math.abs(v));
  const img = ctx.createImageData(cols, rows);
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      const v = m > 0 ? h.values[r * cols + c] / m : 0;
      const a = Math.sqrt(Math.abs(v));
      const i = 4 * ((rows - 1 - r) * cols + c);
      img.data[i] = v > 0 ? 255 : 255 * (1 - a);
      img.data[i + 1] = 255 * (1 - a);
      img.data[i + 2] = v < 0 ? 255 : 255 * (1 - a);
      img.data[i + 3] = 255;
    }
  }
  const off = document.createElement("canvas");
  off.width = cols; off.height = rows;
  off.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, L, 10, W - L - 10, H - B - 10);
  ctx.fillStyle = "#444"; ctx.font = "11px sans-serif";
  ctx.fillText("t=" + h.t[rows - 1].toFixed(1), 4, 18);
  ctx.fillText("t=0", 4, H - B);
  ctx.fillText(h.offsets[0].toFixed(0), L, H - 6);
  ctx.fillText("mode detuning from bath centre", W / 2 - 80, H - 6);
  ctx.fillText(h.offsets[cols - 1].toFixed(0), W - 30, H - 6);
}

function runDynamics() {
  const c = call(tlaDynamics, ...params());
  if (!c) return;
  legend($("legendDynamics"), [["#c33", "discrete bath"], ["#36c", "continuum"], ["#2a2", "second-order TCL"]]);
  linePlot($("population"), c.t, [
    { y: c.population, color: "#c33" },
    { y: c.population_exact, color: "#36c", dots: true },
  ], "excited population");
  linePlot($("decay"), c.t, [
    { y: c.decay, color: "#c33" },
    { y: c.decay_exact, color: "#36c", dots: true },
    { y: c.decay_tcl2, color: "#2a2" },
  ], "decay rate");
}

function runHeatmap() {
  const h = call(currentHeatmap, ...params());
  if (h) drawHeatmap($("heatmap"), h);
}

function runEnsembles() {
  const e = call(unravelings, ...params(), Number($("members").value), Number($("seed").value));
  if (!e) return;
  legend($("legendEnsembles"), [
    ["#222", "exact"],
    ["#c33", `property-state jumps (${e.reverse_jumps_gaw} reverse)`],
    ["#36c", `reduced-space jumps (${e.reverse_jumps_nmqj} reverse)`],
  ]);
  linePlot($("ensembles"), e.t, [
    { y: e.exact, color: "#222" },
    { y: e.gaw, color: "#c33" },
    { y: e.nmqj, color: "#36c" },
  ], "excited population");
}

function preset(g, d) {
  $("gamma0").value = g; $("delta").value = d;
  runDynamics(); runHeatmap();
}

await init();
$("runDynamics").onclick = runDynamics;
$("runHeatmap").onclick = runHeatmap;
$("runEnsembles").onclick = runEnsembles;
$("presetWeak").onclick = () => preset(0.8, 3);
$("presetStrong").onclick = () => preset(4, -4);
runDynamics();
runHeatmap();
