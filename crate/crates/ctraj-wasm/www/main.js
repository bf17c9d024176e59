// Plain-canvas front end for the wasm demo. Build the module next to this
// file first:
//
//   wasm-pack build crates/ctraj-wasm --target web --out-dir www/pkg
//
// then serve crates/ctraj-wasm/www/ from any static file server.

import init, { interpolate_demo, velocity_profiles, fit_demo } from "./pkg/ctraj_wasm.js";

const FRAME_DT = 0.1;
const RADIUS = 1.0;
let seed = 1n;

const el = (id) => document.getElementById(id);
const params = () => ({
  thetaTransl: parseFloat(el("theta-transl").value),
  thetaRot: parseFloat(el("theta-rot").value),
  nFrames: parseInt(el("n-frames").value, 10),
  noise: parseFloat(el("noise").value),
  window: parseInt(el("window").value, 10),
});

function fitView(points, pad) {
  let minX = Infinity, maxX = -Infinity, minY = Infinity, maxY = -Infinity;
  for (const [x, y] of points) {
    minX = Math.min(minX, x); maxX = Math.max(maxX, x);
    minY = Math.min(minY, y); maxY = Math.max(maxY, y);
  }
  const span = Math.max(maxX - minX, maxY - minY, 1e-6);
  return { minX, minY, maxX, maxY, span: span * (1 + pad) };
}

function planeMapper(canvas, view) {
  const cx = (view.minX + view.maxX) / 2, cy = (view.minY + view.maxY) / 2;
  const s = Math.min(canvas.width, canvas.height) / view.span;
  return ([x, y]) => [canvas.width / 2 + (x - cx) * s, canvas.height / 2 - (y - cy) * s];
}

function polyline(ctx, pts, color, width = 1.6) {
  if (pts.length < 2) return;
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  ctx.moveTo(pts[0][0], pts[0][1]);
  for (const p of pts.slice(1)) ctx.lineTo(p[0], p[1]);
  ctx.stroke();
}

function drawCurve(p) {
  const data = JSON.parse(interpolate_demo(p.thetaTransl, p.thetaRot, RADIUS, p.nFrames, FRAME_DT, 400));
  const canvas = el("canvas-curve");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const all = [...data.truth, ...data.curve, ...data.control_points].map(q => [q.x, q.y]);
  const map = planeMapper(canvas, fitView(all, 0.25));

  polyline(ctx, data.truth.map(q => map([q.x, q.y])), "#bbbbbb", 2.5);
  polyline(ctx, data.curve.map(q => map([q.x, q.y])), "#d62728", 1.6);
  ctx.fillStyle = "#1f77b4";
  ctx.strokeStyle = "#1f77b4";
  for (const q of data.control_points) {
    const [x, y] = map([q.x, q.y]);
    ctx.beginPath(); ctx.arc(x, y, 3, 0, 2 * Math.PI); ctx.fill();
    // heading tick
    ctx.beginPath();
    ctx.moveTo(x, y);
    ctx.lineTo(x + 10 * Math.cos(-q.heading), y + 10 * Math.sin(-q.heading));
    ctx.stroke();
  }
}

function profilePlot(canvas, rows, pick, colors) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const t0 = rows[0].t, t1 = rows[rows.length - 1].t;
  let top = 0;
  for (const r of rows) for (const k of Object.keys(pick)) top = Math.max(top, r[pick[k]]);
  top *= 1.15;
  const mx = (t) => 40 + (canvas.width - 50) * (t - t0) / (t1 - t0);
  const my = (v) => canvas.height - 22 - (canvas.height - 34) * v / (top || 1);

  ctx.strokeStyle = "#888"; ctx.lineWidth = 1;
  ctx.strokeRect(40, 12, canvas.width - 50, canvas.height - 34);
  ctx.fillStyle = "#555"; ctx.font = "11px sans-serif";
  ctx.fillText(top.toPrecision(3), 2, 18);
  ctx.fillText("0", 28, canvas.height - 20);
  ctx.fillText("t (s)", canvas.width - 32, canvas.height - 6);

  for (const key of Object.keys(pick)) {
    polyline(ctx, rows.map(r => [mx(r.t), my(r[pick[key]])]), colors[key], key === "truth" ? 2.5 : 1.4);
  }
}

function drawProfiles(p) {
  const rows = JSON.parse(velocity_profiles(p.thetaTransl, p.thetaRot, RADIUS, p.nFrames, FRAME_DT, 12));
  if (!rows.length) return;
  const colors = { truth: "#bbbbbb", ct: "#d62728", coupled: "#1f77b4", decoupled: "#2ca02c" };
  profilePlot(el("canvas-linvel"), rows,
    { truth: "truth_v", ct: "ct_v", coupled: "coupled_v", decoupled: "decoupled_v" }, colors);
  profilePlot(el("canvas-angvel"), rows,
    { truth: "truth_w", ct: "ct_w", coupled: "coupled_w", decoupled: "decoupled_w" }, colors);
}

function drawFit(p) {
  const data = JSON.parse(fit_demo(p.thetaTransl, p.thetaRot, RADIUS, p.nFrames, FRAME_DT,
    p.noise, 30, p.window, seed));
  if (data.error) { el("fit-stats").textContent = "solver error: " + data.error; return; }
  const canvas = el("canvas-fit");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const all = [...data.truth, ...data.estimate].map(q => [q.x, q.y]).concat(data.observations_xy);
  const map = planeMapper(canvas, fitView(all, 0.25));

  ctx.fillStyle = "#dddddd";
  for (const o of data.observations_xy) {
    const [x, y] = map(o);
    ctx.fillRect(x - 1, y - 1, 2, 2);
  }
  polyline(ctx, data.truth.map(q => map([q.x, q.y])), "#bbbbbb", 2.5);
  polyline(ctx, data.estimate.map(q => map([q.x, q.y])), "#9467bd", 1.6);
  el("fit-stats").textContent =
    `ATE after alignment: ${data.ate_m.toExponential(2)} m · ` +
    `residual RMS: ${data.residual_rms.toExponential(2)} m · ` +
    `${data.n_frames} frames, noise σ = ${p.noise} m, window ${p.window}`;
}

function redraw() {
  const p = params();
  for (const id of ["theta-transl", "theta-rot", "n-frames", "noise", "window"]) {
    document.querySelector(`output[for="${id}"]`).value = el(id).value;
  }
  drawCurve(p);
  drawProfiles(p);
  drawFit(p);
}

await init();
for (const id of ["theta-transl", "theta-rot", "n-frames", "noise", "window"]) {
  el(id).addEventListener("input", redraw);
}
el("reseed").addEventListener("click", () => { seed += 1n; redraw(); });
redraw();
