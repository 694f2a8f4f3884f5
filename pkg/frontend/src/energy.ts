/** Stacked energy-evolution figure: potential, kinetic, Hamiltonian,
 * boundary-returned, damped and total energy over time; the total should
 * plot flat. */

import { column, parseCsv, Table } from "./csv";
import { axes, DEFAULT_BOX, document, formatTick, linearScale, polyline, text } from "./svg";

const SERIES: Array<{ name: string; color: string }> = [
  { name: "EPot", color: "#1f77b4" },
  { name: "EKin", color: "#ff7f0e" },
  { name: "H", color: "#2ca02c" },
  { name: "S", color: "#9467bd" },
  { name: "Dmp", color: "#8c564b" },
  { name: "E", color: "#d62728" },
];

export function plotEnergy(csvText: string): string {
  const table: Table = parseCsv(csvText);
  const t = column(table, "t");
  if (t.length < 2) {
    throw new Error("need at least 2 time samples to plot energies");
  }
  const data = SERIES.map((s) => ({ ...s, values: column(table, s.name) }));

  const box = DEFAULT_BOX;
  const allValues = data.flatMap((d) => d.values);
  const lo = Math.min(...allValues);
  const hi = Math.max(...allValues);
  const pad = 0.05 * (hi - lo || 1);
  const sx = linearScale(t[0], t[t.length - 1], box.left, box.width - box.right);
  const sy = linearScale(lo - pad, hi + pad, box.height - box.bottom, box.top);

  const body: string[] = [axes(box)];
  for (const tick of sx.ticks) {
    body.push(text(sx(tick), box.height - box.bottom + 16, formatTick(tick), "middle", 10));
  }
  for (const tick of sy.ticks) {
    body.push(text(box.left - 6, sy(tick) + 3, formatTick(tick), "end", 10));
  }
  body.push(text((box.left + box.width - box.right) / 2, box.height - 12, "t", "middle"));

  data.forEach((d, k) => {
    const pts = t.map((tv, i) => [sx(tv), sy(d.values[i])] as [number, number]);
    body.push(polyline(pts, d.color, "curve"));
    body.push(text(box.left + 8 + 86 * k, box.top + 6, d.name, "start", 11));
    body.push(
      `<rect x="${box.left + 86 * k - 4}" y="${box.top - 2}" width="8" height="8" fill="${d.color}"/>`,
    );
  });

  return document(body, box, "Time evolution of the energies");
}
