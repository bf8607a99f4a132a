/** Tiny HTML helpers for the string renderers. */

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function attr(name: string, on: boolean): string {
  return on ? ` ${name}` : "";
}

export function fixed(value: number, digits = 6): string {
  return value.toFixed(digits);
}
