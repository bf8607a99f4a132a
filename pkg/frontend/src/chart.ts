/** Series parsing and plain SVG line charts for the run CSV. */

export interface Series {
  name: string;
  points: Array<[number, number]>; // [tick, value]
}

export interface ParsedCsv {
  columns: string[];
  rows: Record<string, number>[];
}

export function parseCsv(text: string): ParsedCsv {
  const lines = text.trim().split("\n");
  if (lines.length === 0 || !lines[0]) return { columns: [], rows: [] };
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((line) => {
    const values = line.split(",");
    const row: Record<string, number> = {};
    columns.forEach((c, i) => {
      row[c] = Number(values[i]);
    });
    return row;
  });
  return { columns, rows };
}

export function seriesFromCsv(parsed: ParsedCsv, names: string[]): Series[] {
  return names.map((name) => ({
    name,
    points: parsed.rows.map((row) => [row.tick, row[name]] as [number, number]),
  }));
}

const PALETTE = ["#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed", "#0891b2"];

/** A fixed-size line chart; every coordinate derives from the data points. */
export function lineChart(series: Series[], width = 640, height = 240): string {
  const all = series.flatMap((s) => s.points);
  if (all.length === 0) {
    return `<svg class="chart" width="${width}" height="${height}"></svg>`;
  }
  const xs = all.map((p) => p[0]);
  const ys = all.map((p) => p[1]);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys, 0);
  const yMax = Math.max(...ys);
  const xSpan = xMax - xMin || 1;
  const ySpan = yMax - yMin || 1;
  const pad = 8;
  const sx = (x: number) => pad + ((x - xMin) / xSpan) * (width - 2 * pad);
  const sy = (y: number) => height - pad - ((y - yMin) / ySpan) * (height - 2 * pad);

  const lines = series.map((s, i) => {
    const points = s.points.map(([x, y]) => `${sx(x).toFixed(1)},${sy(y).toFixed(1)}`).join(" ");
    const color = PALETTE[i % PALETTE.length];
    return `<polyline fill="none" stroke="${color}" stroke-width="1.5" data-series="${s.name}" points="${points}"/>`;
  });
  const legend = series.map((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    return `<tspan fill="${color}">▬ ${s.name}</tspan>`;
  });
  return (
    `<svg class="chart" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">` +
    `<text x="${pad}" y="${pad + 4}" font-size="10">${legend.join("  ")}</text>` +
    lines.join("") +
    `</svg>`
  );
}
