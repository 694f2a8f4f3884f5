/** Log-log convergence figure: EX (and EH when present) against h, the
 * fitted slope annotated, with reference triangles for orders 1, 2 and 3. */

import { column, parseCsv, Table } from "./csv";
import { axes, DEFAULT_BOX, document, formatTick, logScale, polyline, text } from "./svg";

const CURVE_COLORS = ["#1f77b4", "#d62728"];

function leastSquaresSlope(h: number[], e: number[]): number {
  const x = h.map(Math.log);
  const y = e.map(Math.log);
  const n = x.length;
  const mx = x.reduce((a, b) => a + b, 0) / n;
  const my = y.reduce((a, b) => a + b, 0) / n;
  let num = 0;
  let den = 0;
  for (let i = 0; i < n; i++) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

export function plotConvergence(csvText: string): string {
  const table: Table = parseCsv(csvText);
  const h = column(table, "h");
  if (h.length < 2) {
    throw new Error("need at least 2 refinement levels to plot convergence");
  }
  const ex = column(table, "EX_final");

  const series: Array<{ name: string; values: number[]; slope: number }> = [];
  let lastSlope = NaN;
  if (table.header.includes("slope_so_far")) {
    const slopeSoFar = column(table, "slope_so_far");
    lastSlope = slopeSoFar[slopeSoFar.length - 1];
  }
  series.push({
    name: "EX",
    values: ex,
    slope: Number.isFinite(lastSlope) ? lastSlope : leastSquaresSlope(h, ex),
  });
  if (table.header.includes("EH_final")) {
    const eh = column(table, "EH_final").map(Math.abs);
    if (eh.every((v) => Number.isFinite(v) && v > 0)) {
      series.push({ name: "|EH|", values: eh, slope: leastSquaresSlope(h, eh) });
    }
  }

  const box = DEFAULT_BOX;
  const all = series.flatMap((s) => s.values).concat(h);
  const pos = all.filter((v) => v > 0);
  if (pos.length !== all.length) {
    throw new Error("non-positive values cannot be drawn on log axes");
  }
  const hLo = Math.min(...h) / 1.3;
  const hHi = Math.max(...h) * 1.3;
  const eVals = series.flatMap((s) => s.values);
  const eLo = Math.min(...eVals) / 3;
  const eHi = Math.max(...eVals) * 3;
  const sx = logScale(hLo, hHi, box.left, box.width - box.right);
  const sy = logScale(eLo, eHi, box.height - box.bottom, box.top);

  const body: string[] = [axes(box)];
  for (const t of sx.ticks) {
    body.push(text(sx(t), box.height - box.bottom + 16, formatTick(t), "middle", 10));
  }
  for (const t of sy.ticks) {
    body.push(text(box.left - 6, sy(t) + 3, formatTick(t), "end", 10));
  }
  body.push(text((box.left + box.width - box.right) / 2, box.height - 12, "h", "middle"));
  body.push(text(16, box.top - 10, "error"));

  series.forEach((s, k) => {
    const pts = h.map((hv, i) => [sx(hv), sy(s.values[i])] as [number, number]);
    body.push(polyline(pts, CURVE_COLORS[k % CURVE_COLORS.length], "curve"));
    for (const [x, y] of pts) {
      body.push(`<circle cx="${x.toFixed(2)}" cy="${y.toFixed(2)}" r="2.6" fill="${CURVE_COLORS[k]}"/>`);
    }
    const lx = sx(h[h.length - 1]);
    const ly = sy(s.values[s.values.length - 1]);
    body.push(text(lx + 6, ly + 4 + 14 * k, `${s.name}: slope ${s.slope.toFixed(2)}`, "start", 11));
  });

  // reference slope triangles for orders 1, 2, 3 anchored near the middle
  const hA = h[h.length - 1];
  const hB = h[h.length - 2];
  for (const order of [1, 2, 3]) {
    const base = eLo * Math.pow(3, order);
    const eA = base;
    const eB = base * Math.pow(hB / hA, order);
    const path = [
      `M ${sx(hA).toFixed(1)} ${sy(eA).toFixed(1)}`,
      `L ${sx(hB).toFixed(1)} ${sy(eA).toFixed(1)}`,
      `L ${sx(hB).toFixed(1)} ${sy(eB).toFixed(1)}`,
      "Z",
    ].join(" ");
    body.push(`<path class="ref" d="${path}" fill="none" stroke="#888" stroke-width="1"/>`);
    body.push(text(sx(hB) + 4, (sy(eA) + sy(eB)) / 2, String(order), "start", 10));
  }

  return document(body, box, "Convergence under mesh refinement");
}
