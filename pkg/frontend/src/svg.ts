/** Small helpers to emit standalone SVG without a DOM. */

export interface Box {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export const DEFAULT_BOX: Box = {
  width: 640,
  height: 440,
  left: 70,
  right: 20,
  top: 36,
  bottom: 48,
};

export interface Scale {
  (v: number): number;
  ticks: number[];
}

export function linearScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const span = hi - lo || 1;
  const f = ((v: number) => outLo + ((v - lo) / span) * (outHi - outLo)) as Scale;
  const step = niceStep(span / 5);
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step) {
    ticks.push(t);
  }
  f.ticks = ticks;
  return f;
}

export function logScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const a = Math.log10(lo);
  const b = Math.log10(hi);
  const span = b - a || 1;
  const f = ((v: number) => outLo + ((Math.log10(v) - a) / span) * (outHi - outLo)) as Scale;
  const ticks: number[] = [];
  for (let e = Math.ceil(a - 1e-9); e <= b + 1e-9; e += 1) {
    ticks.push(Math.pow(10, e));
  }
  f.ticks = ticks;
  return f;
}

function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(Math.abs(raw) || 1)));
  const r = raw / mag;
  if (r < 1.5) return mag;
  if (r < 3.5) return 2 * mag;
  if (r < 7.5) return 5 * mag;
  return 10 * mag;
}

export function polyline(points: Array<[number, number]>, stroke: string, cls: string): string {
  const pts = points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
  return `<polyline class="${cls}" fill="none" stroke="${stroke}" stroke-width="1.8" points="${pts}"/>`;
}

export function text(x: number, y: number, s: string, anchor = "start", size = 12): string {
  return `<text x="${x.toFixed(1)}" y="${y.toFixed(1)}" text-anchor="${anchor}" font-size="${size}" font-family="sans-serif">${s}</text>`;
}

export function document(body: string[], box: Box, title: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${box.width}" height="${box.height}" viewBox="0 0 ${box.width} ${box.height}">`,
    `<rect width="${box.width}" height="${box.height}" fill="white"/>`,
    text(box.width / 2, 20, title, "middle", 14),
    ...body,
    "</svg>",
  ].join("\n");
}

export function axes(box: Box): string {
  const x0 = box.left;
  const x1 = box.width - box.right;
  const y0 = box.height - box.bottom;
  const y1 = box.top;
  return `<path d="M ${x0} ${y1} L ${x0} ${y0} L ${x1} ${y0}" fill="none" stroke="black" stroke-width="1"/>`;
}

export function formatTick(v: number): string {
  if (v === 0) return "0";
  const e = Math.floor(Math.log10(Math.abs(v)));
  if (e >= -2 && e <= 3) {
    return Number(v.toPrecision(3)).toString();
  }
  return v.toExponential(0);
}
