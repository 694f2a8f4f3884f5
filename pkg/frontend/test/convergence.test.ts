import { readFileSync } from "fs";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { plotConvergence } from "../src/convergence";

const fixture = readFileSync(join(__dirname, "fixtures", "convergence.csv"), "utf8");

function count(haystack: string, needle: string): number {
  return haystack.split(needle).length - 1;
}

describe("plotConvergence", () => {
  it("renders a non-empty SVG from the golden fixture", () => {
    const svg = plotConvergence(fixture);
    expect(svg.length).toBeGreaterThan(500);
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg.endsWith("</svg>")).toBe(true);
  });

  it("draws the EX and EH curves plus three reference triangles", () => {
    const svg = plotConvergence(fixture);
    expect(count(svg, 'class="curve"')).toBe(2);
    expect(count(svg, 'class="ref"')).toBe(3);
  });

  it("annotates the fitted slope from the CSV", () => {
    const svg = plotConvergence(fixture);
    // last slope_so_far of the golden sweep is ~0.96
    expect(svg).toContain("EX: slope 0.9");
    expect(svg).toContain("|EH|: slope");
  });

  it("rejects a single-level input", () => {
    const lines = fixture.trim().split("\n");
    expect(() => plotConvergence(lines.slice(0, 2).join("\n"))).toThrow(
      /at least 2/,
    );
  });

  it("rejects missing columns", () => {
    const broken = fixture.replace("EX_final", "EX_renamed");
    expect(() => plotConvergence(broken)).toThrow(/missing column 'EX_final'/);
  });

  it("handles an EX-only table", () => {
    const lines = fixture.trim().split("\n");
    const slim = lines
      .map((l) => l.split(",").slice(0, 5).join(","))
      .join("\n");
    const svg = plotConvergence(slim + "\n");
    expect(count(svg, 'class="curve"')).toBe(1);
  });
});
