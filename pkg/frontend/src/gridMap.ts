/** Grid map view: land-use occupancy and protection straight from the snapshot. */

import type { GridPayload } from "./types.ts";

const AFT_COLORS = ["#b45309", "#ca8a04", "#65a30d", "#047857", "#6d28d9", "#be185d"];

export function aftColor(aftId: number): string {
  return AFT_COLORS[aftId % AFT_COLORS.length];
}

export function renderGridMap(
  grid: GridPayload,
  aftNames: Record<string, string>,
  cellSize = 14,
): string {
  const width = grid.width * cellSize;
  const height = grid.height * cellSize;
  const rects = grid.cells.map((cell, i) => {
    const x = (i % grid.width) * cellSize;
    const y = Math.floor(i / grid.width) * cellSize;
    const stroke = cell.protected ? ' stroke="#0f172a" stroke-width="1.5"' : "";
    const title = `${aftNames[String(cell.aft)] ?? cell.aft}${cell.protected ? " (protected)" : ""}`;
    return (
      `<rect x="${x}" y="${y}" width="${cellSize - 1}" height="${cellSize - 1}"` +
      ` fill="${aftColor(cell.aft)}"${stroke} data-aft="${cell.aft}"` +
      ` data-protected="${cell.protected}"><title>${title}</title></rect>`
    );
  });
  const legend = Object.entries(aftNames)
    .map(
      ([id, name]) =>
        `<span class="legend-item"><span class="swatch" style="background:${aftColor(Number(id))}"></span>${name}</span>`,
    )
    .join(" ");
  return (
    `<div class="grid-map"><svg width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">` +
    rects.join("") +
    `</svg><div class="legend">${legend} <span class="legend-item"><span class="swatch swatch-protected"></span>protected</span></div></div>`
  );
}

/** Per-capital heatmap (grey scale); capital values come from the snapshot. */
export function renderCapitalHeatmap(grid: GridPayload, capitalIndex: number, cellSize = 14): string {
  const width = grid.width * cellSize;
  const height = grid.height * cellSize;
  const rects = grid.cells.map((cell, i) => {
    const x = (i % grid.width) * cellSize;
    const y = Math.floor(i / grid.width) * cellSize;
    const v = cell.capitals[capitalIndex] ?? 0;
    const shade = Math.round(235 - v * 180);
    return `<rect x="${x}" y="${y}" width="${cellSize - 1}" height="${cellSize - 1}" fill="rgb(${shade},${shade},${shade})"/>`;
  });
  return `<svg class="heatmap" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">${rects.join("")}</svg>`;
}
