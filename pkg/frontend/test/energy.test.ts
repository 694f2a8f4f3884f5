import { readFileSync } from "fs";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { plotEnergy } from "../src/energy";

const fixture = readFileSync(join(__dirname, "fixtures", "energy.csv"), "utf8");

function count(haystack: string, needle: string): number {
  return haystack.split(needle).length - 1;
}

describe("plotEnergy", () => {
  it("renders a non-empty SVG with six energy curves", () => {
    const svg = plotEnergy(fixture);
    expect(svg.length).toBeGreaterThan(500);
    expect(count(svg, 'class="curve"')).toBe(6);
    for (const label of ["EPot", "EKin", "H", "S", "Dmp", "E"]) {
      expect(svg).toContain(`>${label}</text>`);
    }
  });

  it("rejects an empty CSV", () => {
    expect(() => plotEnergy("")).toThrow(/empty CSV/);
    expect(() => plotEnergy("t,H,S,Dmp,E,EPot,EKin\n")).toThrow(/at least 2/);
  });

  it("rejects missing columns", () => {
    const noDmp = fixture
      .split("\n")
      .map((l) => l.split(",").slice(0, 3).join(","))
      .join("\n");
    expect(() => plotEnergy(noDmp)).toThrow(/missing column/);
  });

  it("keeps the total energy visibly flat on a conservative run", () => {
    // synthetic closed-system ledger: H exchanges with nothing, E constant
    const rows = ["t,H,S,Dmp,E,EPot,EKin"];
    for (let i = 0; i <= 10; i++) {
      const t = i / 10;
      const pot = 0.5 + 0.3 * Math.sin(t);
      const kin = 1.5 - 0.3 * Math.sin(t);
      rows.push(`${t},${pot + kin},0,0,${pot + kin},${pot},${kin}`);
    }
    const svg = plotEnergy(rows.join("\n"));
    const eCurve = svg.match(/class="curve"[^/]*points="([^"]+)"/g);
    expect(eCurve).not.toBeNull();
    // the E polyline (last series) has constant y
    const last = eCurve![eCurve!.length - 1];
    const ys = [...last.matchAll(/[\d.]+,([\d.]+)/g)].map((m) => Number(m[1]));
    expect(Math.max(...ys) - Math.min(...ys)).toBeLessThan(1e-9);
  });
});
