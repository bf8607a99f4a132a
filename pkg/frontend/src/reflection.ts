/** Reflection panel: companion chat plus protocol phase controls.
 *
 * The side panel shows the protocol position, roles, connection state and
 * token usage; advance buttons enable exactly on the legal protocol edges.
 */

import { attr, escapeHtml } from "./html.ts";
import type { SessionView } from "./state.ts";

export interface AdvanceControls {
  begin: boolean;
  simulationEnded: boolean;
  completeReflection: boolean;
  completeIntegration: boolean;
  exportAvailable: boolean;
}

export function advanceControls(view: SessionView): AdvanceControls {
  const { phase } = view.snapshot.protocol;
  const runDone = view.snapshot.status === "completed";
  return {
    begin: phase === "contextualization" || phase === "transition",
    simulationEnded: phase === "perspective_taking" && runDone,
    completeReflection: phase === "reflection",
    completeIntegration: phase === "integration",
    exportAvailable: phase === "completion",
  };
}

export function renderSidePanel(view: SessionView, connected: boolean): string {
  const snap = view.snapshot;
  const usage = Object.entries(snap.usage)
    .map(
      ([tag, slot]) =>
        `<tr><td>${tag}</td><td>${slot.calls}</td><td>${slot.prompt_tokens}</td><td>${slot.completion_tokens}</td></tr>`,
    )
    .join("");
  const roles = snap.protocol.roles_played.length
    ? snap.protocol.roles_played.join(", ")
    : "none";
  return `<aside id="side-panel">
<dl>
<dt>Protocol phase</dt><dd id="protocol-phase">${snap.protocol.phase}</dd>
<dt>Current role</dt><dd>${snap.protocol.current_role || "none"}</dd>
<dt>Roles played</dt><dd>${roles}</dd>
<dt>Connection</dt><dd id="connection">${connected ? "connected" : "disconnected"}</dd>
</dl>
<h4>Token usage</h4>
<table class="usage"><thead><tr><th>caller</th><th>calls</th><th>prompt</th><th>completion</th></tr></thead>
<tbody>${usage || "<tr><td colspan=4>none</td></tr>"}</tbody></table>
</aside>`;
}

export function renderReflectionPanel(view: SessionView, connected = true): string {
  const controls = advanceControls(view);
  const log = view.reflectionLog.length
    ? view.reflectionLog
        .map(
          (line) =>
            `<div class="chat-line ${line.speaker}"><strong>${line.speaker}:</strong> ${escapeHtml(line.text)}</div>`,
        )
        .join("")
    : `<p class="empty">The companion will pick up the conversation here.</p>`;
  const newRoleOptions = view.snapshot.messages
    .map((g) => `<option value="${g.agent}">${g.agent}</option>`)
    .join("");
  return `<section id="reflection-panel">
${renderSidePanel(view, connected)}
<div class="main">
<div id="reflection-log" class="chat-log">${log}</div>
<form id="reflection-form"><input name="message" placeholder="Reflect…"><button type="submit">Send</button></form>
<div class="advance-controls">
<button id="advance-begin"${attr("disabled", !controls.begin)}>Begin simulation</button>
<button id="advance-simulation-ended"${attr("disabled", !controls.simulationEnded)}>End simulation &amp; reflect</button>
<button id="advance-replay"${attr("disabled", !controls.completeReflection)}>Complete reflection · replay same role</button>
<select id="new-role-choice"${attr("disabled", !controls.completeReflection)}>${newRoleOptions}</select>
<button id="advance-new-role"${attr("disabled", !controls.completeReflection)}>Complete reflection · new role</button>
<button id="advance-integrate"${attr("disabled", !controls.completeReflection)}>Complete reflection · integrate</button>
<button id="advance-complete-integration"${attr("disabled", !controls.completeIntegration)}>Complete integration</button>
<a id="export-link"${attr("hidden", !controls.exportAvailable)} href="#" download="reflections.md">Download reflection export</a>
</div>
</div>
</section>`;
}
