/** Minimal CSV reader for the simulator's comma-separated output. */

export interface Table {
  header: string[];
  rows: number[][];
}

export function parseCsv(text: string): Table {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new Error("empty CSV");
  }
  const header = lines[0].split(",").map((s) => s.trim());
  const rows = lines.slice(1).map((line) => {
    const cells = line.split(",");
    return header.map((_, i) => {
      const cell = (cells[i] ?? "").trim();
      return cell === "" ? NaN : Number(cell);
    });
  });
  return { header, rows };
}

export function column(table: Table, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new Error(`missing column '${name}' (have: ${table.header.join(", ")})`);
  }
  return table.rows.map((r) => r[idx]);
}
