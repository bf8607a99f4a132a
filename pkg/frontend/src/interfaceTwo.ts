/** Interface II: the human's working surface, in four tabs.
 *
 * Data Exploration (drag-to-focus columns, series chart, grid map),
 * AI Assistant (conversational analysis), Submit Decision (editable draft,
 * server-confirmed submission), and Timeline (the storyline of the run).
 */

import { lineChart, parseCsv, seriesFromCsv } from "./chart.ts";
import { renderCapitalHeatmap, renderGridMap } from "./gridMap.ts";
import { attr, escapeHtml } from "./html.ts";
import { timelineFromSnapshot, type SessionView } from "./state.ts";

export const TAB_LABELS = ["Data Exploration", "AI Assistant", "Submit Decision", "Timeline"] as const;
export type TabLabel = (typeof TAB_LABELS)[number];

export function renderDataExploration(view: SessionView, seriesCsv: string): string {
  const snap = view.snapshot;
  const chips = snap.columns
    .map(
      (c) =>
        `<span class="column-chip${view.focus.has(c) ? " focused" : ""}" draggable="true" data-column="${c}">${c}</span>`,
    )
    .join("");
  const parsed = parseCsv(seriesCsv);
  const focused = [...view.focus].filter((c) => parsed.columns.includes(c));
  const chart = focused.length
    ? lineChart(seriesFromCsv(parsed, focused))
    : `<p class="empty">Drop a column tag here to plot and analyse it.</p>`;
  const analysis = view.analysis
    ? `<pre class="analysis">${escapeHtml(view.analysis)}</pre>`
    : "";
  return `<section class="tab" data-tab="Data Exploration">
<div class="chips">${chips}</div>
<div id="drop-zone" class="drop-zone">${chart}</div>
${analysis}
<h3>Land map</h3>
${renderGridMap(snap.grid, snap.aft_names)}
<h3>Capital endowments</h3>
<div class="heatmaps">${renderCapitalHeatmap(snap.grid, 0)}${renderCapitalHeatmap(snap.grid, 1)}</div>
</section>`;
}

export function renderAssistantTab(view: SessionView): string {
  const log = view.assistantLog.length
    ? view.assistantLog
        .map(
          (line) =>
            `<div class="chat-line ${line.speaker}"><strong>${line.speaker}:</strong> ${escapeHtml(line.text)}</div>`,
        )
        .join("")
    : `<p class="empty">Ask the assistant about the data, or request a report.</p>`;
  return `<section class="tab" data-tab="AI Assistant">
<div id="assistant-log" class="chat-log">${log}</div>
<form id="assistant-form"><input name="message" placeholder="Ask about the data…"><button type="submit">Send</button></form>
<button id="generate-report">Generate report into the decision draft</button>
</section>`;
}

export function renderSubmitDecision(view: SessionView): string {
  const snap = view.snapshot;
  const canSubmit = snap.status === "awaiting_human";
  const hint = canSubmit
    ? `Speaking as <strong>${snap.awaiting}</strong> at tick ${snap.tick}.`
    : "Submission opens when the run pauses on your turn.";
  return `<section class="tab" data-tab="Submit Decision">
<p class="hint">${hint}</p>
<textarea id="decision-draft" rows="10">${escapeHtml(view.decisionDraft)}</textarea>
<button id="submit-decision"${attr("disabled", !canSubmit)}>Submit</button>
</section>`;
}

export function renderTimelineTab(view: SessionView): string {
  const entries = timelineFromSnapshot(view.snapshot);
  const items = entries.length
    ? entries
        .map(
          (e) =>
            `<li data-tick="${e.tick}" data-agent="${e.agent}"><span class="when">phase ${e.phase} · tick ${e.tick}</span> <strong>${e.agent}</strong>: ${escapeHtml(e.excerpt)}</li>`,
        )
        .join("")
    : `<li class="empty">Nothing has happened yet.</li>`;
  return `<section class="tab" data-tab="Timeline"><ol class="timeline">${items}</ol></section>`;
}

export function renderInterfaceTwo(
  view: SessionView,
  seriesCsv: string,
  activeTab: TabLabel = "Data Exploration",
): string {
  const tabs = TAB_LABELS.map(
    (label) =>
      `<button class="tab-button${label === activeTab ? " active" : ""}" data-tab="${label}">${label}</button>`,
  ).join("");
  return `<section id="interface-two">
<h2>Interface II · exploration &amp; decision</h2>
<nav class="tab-bar">${tabs}</nav>
${renderDataExploration(view, seriesCsv)}
${renderAssistantTab(view)}
${renderSubmitDecision(view)}
${renderTimelineTab(view)}
</section>`;
}
