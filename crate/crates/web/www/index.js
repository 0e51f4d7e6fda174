import init, { likelihoodGrid, reciprocityCurve, trackDesk } from "./pkg/geocsi_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const status = (msg) => { $("status").textContent = msg; };

function run(label, fn) {
  status(`${label}...`);
  // Let the status paint before the synchronous wasm call blocks the page.
  setTimeout(() => {
    const t0 = performance.now();
    try {
      fn();
      status(`${label}: ${((performance.now() - t0) / 1000).toFixed(2)} s`);
    } catch (e) {
      status(`${label} failed: ${e.message ?? e}`);
    }
  }, 10);
}

function axes(ctx, w, h) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#ddd";
  ctx.strokeRect(0.5, 0.5, w - 1, h - 1);
}

function scaler(lo, hi, a, b) {
  const span = hi - lo || 1;
  return (v) => a + ((v - lo) / span) * (b - a);
}

function drawGrid() {
  const n = 61;
  const g = likelihoodGrid(num("ll-snr"), num("ll-seed"), n, 0.5, num("ll-shift"));
  const c = $("ll-canvas");
  const ctx = c.getContext("2d");
  const finite = Array.from(g).filter(Number.isFinite);
  const hi = Math.max(...finite);
  // Show the top 60 nats; the rest is dark.
  const lo = hi - 60;
  const cell = c.width / n;
  for (let iy = 0; iy < n; iy++) {
    for (let ix = 0; ix < n; ix++) {
      const v = g[iy * n + ix];
      const t = Number.isFinite(v) ? Math.max(0, (v - lo) / (hi - lo)) : 0;
      ctx.fillStyle = `hsl(${240 - 200 * t}, 80%, ${10 + 50 * t}%)`;
      ctx.fillRect(ix * cell, (n - 1 - iy) * cell, cell + 1, cell + 1);
    }
  }
  ctx.strokeStyle = "#fff";
  ctx.beginPath();
  ctx.moveTo(c.width / 2 - 8, c.height / 2); ctx.lineTo(c.width / 2 + 8, c.height / 2);
  ctx.moveTo(c.width / 2, c.height / 2 - 8); ctx.lineTo(c.width / 2, c.height / 2 + 8);
  ctx.stroke();
}

function drawReciprocity() {
  const snr = [];
  for (let s = -15; s <= 15; s += 1.5) snr.push(s);
  const r = reciprocityCurve(num("rc-m"), new Float64Array(snr), num("rc-draws"), 7);
  const sim = r.slice(0, snr.length);
  const law = r.slice(snr.length);
  const c = $("rc-canvas");
  const ctx = c.getContext("2d");
  axes(ctx, c.width, c.height);
  const x = scaler(-15, 15, 30, c.width - 10);
  const y = scaler(Math.min(...sim, ...law), 0, c.height - 20, 10);
  ctx.strokeStyle = "#888";
  ctx.beginPath();
  law.forEach((v, i) => (i ? ctx.lineTo(x(snr[i]), y(v)) : ctx.moveTo(x(snr[i]), y(v))));
  ctx.stroke();
  ctx.fillStyle = "#1f5fbf";
  sim.forEach((v, i) => { ctx.beginPath(); ctx.arc(x(snr[i]), y(v), 3, 0, 2 * Math.PI); ctx.fill(); });
  ctx.fillStyle = "#444";
  ctx.fillText("-15 dB", 30, c.height - 5);
  ctx.fillText("+15 dB", c.width - 50, c.height - 5);
  ctx.fillText(`${Math.min(...sim, ...law).toFixed(1)} dB`, 2, c.height - 20);
}

function polyline(ctx, xs, ys, color) {
  ctx.strokeStyle = color;
  ctx.beginPath();
  xs.forEach((v, i) => (i ? ctx.lineTo(v, ys[i]) : ctx.moveTo(v, ys[i])));
  ctx.stroke();
}

function drawTrack() {
  const cols = 7;
  const r = trackDesk(num("tr-snr"), num("tr-seed"), num("tr-steps"), num("tr-np"));
  const n = r.length / cols;
  const col = (k) => Array.from({ length: n }, (_, i) => r[i * cols + k]);
  const [tx, ty, ex, ey, meas, pred, fused] = [0, 1, 2, 3, 4, 5, 6].map(col);

  const c = $("tr-canvas");
  const ctx = c.getContext("2d");
  axes(ctx, c.width, c.height);
  const xs = [...tx, ...ex], ys = [...ty, ...ey];
  const sx = scaler(Math.min(...xs) - 0.2, Math.max(...xs) + 0.2, 10, c.width - 10);
  const sy = scaler(Math.min(...ys) - 0.5, Math.max(...ys) + 0.5, c.height - 10, 10);
  polyline(ctx, tx.map(sx), ty.map(sy), "#aaa");
  polyline(ctx, ex.map(sx), ey.map(sy), "#1f5fbf");

  const g = $("tr-gain");
  const gx = g.getContext("2d");
  axes(gx, g.width, g.height);
  const all = [...meas, ...pred, ...fused].filter(Number.isFinite);
  const step = scaler(0, Math.max(n - 1, 1), 10, g.width - 10);
  const gy = scaler(Math.min(...all, -10), 0, g.height - 10, 10);
  const idx = meas.map((_, i) => step(i));
  polyline(gx, idx, meas.map(gy), "#aaa");
  polyline(gx, idx, pred.map(gy), "#1f5fbf");
  polyline(gx, idx, fused.map(gy), "#e07b00");
}

await init();
$("ll-run").onclick = () => run("likelihood", drawGrid);
$("rc-run").onclick = () => run("reciprocity", drawReciprocity);
$("tr-run").onclick = () => run("tracking", drawTrack);
status("ready");
