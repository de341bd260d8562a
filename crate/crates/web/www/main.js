// Expects the wasm-bindgen `--target web` output in ./pkg (see README).
import init, { fringe, scaling, loop_geometry } from "./pkg/switchmet_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function frame(canvas, xr, yr, opts = {}) {
  const ctx = canvas.getContext("2d");
  const pad = 48;
  const w = canvas.width - 2 * pad;
  const h = canvas.height - 2 * pad;
  const ly = (v) => (opts.logy ? Math.log10(v) : v);
  const [y0, y1] = [ly(yr[0]), ly(yr[1])];
  const lx = (v) => (opts.logx ? Math.log10(v) : v);
  const [x0, x1] = [lx(xr[0]), lx(xr[1])];
  const sx = (x) => pad + ((lx(x) - x0) / (x1 - x0)) * w;
  const sy = (y) => pad + h - ((ly(y) - y0) / (y1 - y0)) * h;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w, h);
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.fillText(opts.xlabel || "", pad + w / 2 - 10, canvas.height - 12);
  ctx.fillText(opts.ylabel || "", 6, pad - 12);
  ctx.fillText(String(xr[0]), pad - 4, pad + h + 16);
  ctx.fillText(String(xr[1]), pad + w - 8, pad + h + 16);
  ctx.fillText(yr[1].toPrecision(2), 4, pad + 4);
  ctx.fillText(yr[0].toPrecision(2), 4, pad + h);
  return { ctx, sx, sy };
}

function polyline(ctx, pts, color, width = 1.5) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
  ctx.stroke();
}

function dots(ctx, pts, color, r = 3.5) {
  ctx.fillStyle = color;
  for (const [x, y] of pts) {
    ctx.beginPath();
    ctx.arc(x, y, r, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function guard(outId, f) {
  try {
    f();
    if (outId) $(outId).classList.remove("err");
  } catch (e) {
    if (outId) {
      $(outId).textContent = String(e);
      $(outId).classList.add("err");
    } else {
      $("status").textContent = String(e);
    }
  }
}

function runFringe() {
  guard(null, () => {
    const nmax = num("f-nmax");
    const r = JSON.parse(fringe(num("f-area"), num("f-phi0"), num("f-nu"), num("f-trials"), nmax, num("f-seed")));
    const { ctx, sx, sy } = frame($("f-plot"), [0, nmax], [0, 1], { xlabel: "N", ylabel: "P-" });
    polyline(ctx, r.curve.map(([x, y]) => [sx(x), sy(y)]), "#36c");
    for (const p of r.points) {
      polyline(ctx, [[sx(p.n), sy(p.simulated - 4 * p.sigma)], [sx(p.n), sy(p.simulated + 4 * p.sigma)]], "#c33", 1);
    }
    dots(ctx, r.points.map((p) => [sx(p.n), sy(p.simulated)]), "#c33");
  });
}

function runScaling() {
  guard("s-out", () => {
    const nmax = num("s-nmax");
    const r = JSON.parse(scaling(num("s-nu"), num("s-reps"), nmax, num("s-seed")));
    const all = r.rows.flatMap((row) => [row.switch_rmse, row.baseline_rmse, row.crb_switch, row.crb_fixed_order]);
    const yr = [Math.min(...all) / 1.5, Math.max(...all) * 1.5];
    const { ctx, sx, sy } = frame($("s-plot"), [1, Math.max(nmax, 2)], yr, {
      logx: true, logy: true, xlabel: "N", ylabel: "RMSE of A",
    });
    const line = (key, color) => polyline(ctx, r.rows.map((row) => [sx(row.n), sy(row[key])]), color);
    line("crb_switch", "#36c");
    line("crb_fixed_order", "#999");
    dots(ctx, r.rows.map((row) => [sx(row.n), sy(row.switch_rmse)]), "#36c");
    dots(ctx, r.rows.map((row) => [sx(row.n), sy(row.baseline_rmse)]), "#c33");
    const fmt = (v) => (v == null ? "n/a" : v.toFixed(3));
    $("s-out").textContent =
      `blue: SWITCH (bound 1/(sqrt(nu) N^2)), red: fixed order\n` +
      `fitted exponents: SWITCH ${fmt(r.switch_exponent)}, fixed order ${fmt(r.baseline_exponent)}`;
  });
}

function parseGroup(text) {
  return Float64Array.from(
    text.trim().split(/\n+/).flatMap((line) => {
      const parts = line.trim().split(/[\s,]+/).map(Number);
      if (parts.length !== 2 || parts.some(Number.isNaN)) throw new Error(`bad line: ${line}`);
      return parts;
    }),
  );
}

function runLoop() {
  guard("g-out", () => {
    const r = JSON.parse(loop_geometry(parseGroup($("g-a").value), parseGroup($("g-b").value)));
    const pts = r.path_ab.concat(r.path_ba);
    const span = Math.max(...pts.flatMap(([x, y]) => [Math.abs(x), Math.abs(y)]), 0.1) * 1.1;
    const { ctx, sx, sy } = frame($("g-plot"), [-span, span], [-span, span], { xlabel: "Re", ylabel: "Im" });
    polyline(ctx, [[sx(-span), sy(0)], [sx(span), sy(0)]], "#ddd", 1);
    polyline(ctx, [[sx(0), sy(-span)], [sx(0), sy(span)]], "#ddd", 1);
    polyline(ctx, r.path_ab.map(([x, y]) => [sx(x), sy(y)]), "#36c", 2);
    polyline(ctx, r.path_ba.map(([x, y]) => [sx(x), sy(y)]), "#c33", 2);
    dots(ctx, [[sx(0), sy(0)]], "#222");
    $("g-out").textContent =
      `blue: A then B, red: B then A\n` +
      `enclosed area   ${r.enclosed_area.toFixed(6)}\n` +
      `per N^2         ${r.regularized_area.toFixed(6)}\n` +
      `loop phase      ${r.loop_phase.toFixed(6)} rad (fold: ${r.fold_phase.toFixed(6)})`;
  });
}

await init();
$("status").textContent = "";
$("f-run").onclick = runFringe;
$("s-run").onclick = runScaling;
$("g-run").onclick = runLoop;
runFringe();
runScaling();
runLoop();
