import init, {
  benchmark_names,
  convergence_curve,
  equilibrium_profile,
  lq_explorer,
} from "./pkg/aggsolve_demo.js";

const $ = (id) => document.getElementById(id);

function show(id, text, isError) {
  const el = $(id);
  el.textContent = text;
  el.className = isError ? "out err" : "out";
}

function frame(canvas, xs, ys, logScale) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const f = logScale ? Math.log10 : (v) => v;
  const fx = xs.map(f);
  const fy = ys.filter((v) => v > 0 || !logScale).map(f);
  const [x0, x1] = [Math.min(...fx), Math.max(...fx)];
  let [y0, y1] = [Math.min(...fy), Math.max(...fy)];
  if (y0 === y1) { y0 -= 1; y1 += 1; }
  const pad = 40;
  const sx = (v) => pad + ((f(v) - x0) / (x1 - x0 || 1)) * (canvas.width - 2 * pad);
  const sy = (v) => canvas.height - pad - ((f(v) - y0) / (y1 - y0)) * (canvas.height - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, canvas.width - 2 * pad, canvas.height - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.fillText(logScale ? `1e${y1.toFixed(1)}` : y1.toFixed(3), 2, pad);
  ctx.fillText(logScale ? `1e${y0.toFixed(1)}` : y0.toFixed(3), 2, canvas.height - pad);
  return { ctx, sx, sy };
}

function line(ctx, pts, color) {
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  pts.forEach(([x, y], k) => (k ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
  ctx.stroke();
}

function runCurve() {
  try {
    const pts = JSON.parse(convergence_curve($("curve-name").value, $("curve-mode").value));
    const nus = pts.map((p) => p.nu);
    const errs = pts.map((p) => p.err_agg_sq);
    const bounds = pts.map((p) => p.bound_agg);
    const { ctx, sx, sy } = frame($("curve-plot"), nus, errs.concat(bounds), true);
    const valid = (v) => v > 0 && Number.isFinite(v);
    line(ctx, pts.filter((p) => valid(p.err_agg_sq)).map((p) => [sx(p.nu), sy(p.err_agg_sq)]), "#1f77b4");
    line(ctx, pts.filter((p) => valid(p.bound_agg)).map((p) => [sx(p.nu), sy(p.bound_agg)]), "#d62728");
    const rows = pts.map((p) =>
      `nu=${String(p.nu).padStart(3)}  err_agg_sq=${p.err_agg_sq.toExponential(3)}  bound_agg=${p.bound_agg.toExponential(3)}  gate=${p.gate_ok}`);
    show("curve-out", "blue: measured, red: bound\n" + rows.join("\n"));
  } catch (e) {
    show("curve-out", String(e), true);
  }
}

function runProfile() {
  try {
    const nu = parseInt($("prof-nu").value, 10);
    const p = JSON.parse(equilibrium_profile($("prof-name").value, nu, $("prof-mode").value));
    const ys = p.step.concat(p.oracle);
    const { ctx, sx, sy } = frame($("prof-plot"), [0, 1], ys, false);
    line(ctx, p.theta.map((t, k) => [sx(t), sy(p.oracle[k])]), "#d62728");
    const steps = [];
    p.step.forEach((v, k) => {
      steps.push([sx(p.edges[k]), sy(v)], [sx(p.edges[k + 1]), sy(v)]);
    });
    line(ctx, steps, "#1f77b4");
    show("prof-out",
      `blue: finite equilibrium density, red: Wardrop profile\n` +
      `aggregate ${p.aggregate.map((v) => v.toFixed(6))} vs ${p.oracle_aggregate.map((v) => v.toFixed(6))}, residual ${p.residual.toExponential(2)}`);
  } catch (e) {
    show("prof-out", String(e), true);
  }
}

function runExplorer() {
  try {
    const v = JSON.parse(lq_explorer(
      parseFloat($("ex-slope").value),
      parseFloat($("ex-a").value),
      parseFloat($("ex-b").value),
      parseInt($("ex-nu").value, 10),
      $("ex-mode").value,
    ));
    show("ex-out",
      `finite aggregate  ${v.aggregate.toFixed(8)}\nWardrop aggregate ${v.oracle_aggregate.toFixed(8)}\n` +
      `|difference|      ${v.err_agg.toExponential(3)}  (${v.iters} iterations)`);
  } catch (e) {
    show("ex-out", String(e), true);
  }
}

await init();
for (const id of ["curve-name", "prof-name"]) {
  for (const name of JSON.parse(benchmark_names())) {
    $(id).add(new Option(name, name));
  }
}
$("prof-name").value = "LQ-hetero";
$("curve-run").onclick = runCurve;
$("prof-run").onclick = runProfile;
for (const id of ["ex-slope", "ex-a", "ex-b", "ex-nu", "ex-mode"]) {
  $(id).oninput = runExplorer;
}
runExplorer();
