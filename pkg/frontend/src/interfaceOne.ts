/** Interface I: scenario setup and grouped agent outputs.
 *
 * Each agent gets a collapsible panel; panels whose agent is not visible to
 * the human's role render collapsed, mirroring the imperfect-information
 * design of the network.
 */

import { attr, escapeHtml } from "./html.ts";
import type { SessionView } from "./state.ts";

export interface SetupForm {
  role: string;
  phases: number;
  lag: number;
  seed: number;
}

export const DEFAULT_SETUP: SetupForm = { role: "observer", phases: 5, lag: 15, seed: 0 };

export const ROLE_CHOICES = [
  "observer",
  "research_supplier",
  "env_ngo",
  "land_user_assoc",
  "law_consultant",
  "agri_institution",
  "env_institution",
  "high_level",
];

export function setupErrors(form: SetupForm): string[] {
  const errors: string[] = [];
  if (!Number.isInteger(form.lag) || form.lag < 1) {
    errors.push("policy time lag must be a whole number of ticks, at least 1");
  }
  if (!Number.isInteger(form.phases) || form.phases < 1) {
    errors.push("phases must be a whole number, at least 1");
  }
  if (!ROLE_CHOICES.includes(form.role)) {
    errors.push(`unknown role ${form.role}`);
  }
  return errors;
}

export function renderSetupForm(form: SetupForm): string {
  const errors = setupErrors(form);
  const options = ROLE_CHOICES.map(
    (r) => `<option value="${r}"${attr("selected", r === form.role)}>${r}</option>`,
  ).join("");
  const errorList = errors.length
    ? `<ul class="form-errors">${errors.map((e) => `<li>${escapeHtml(e)}</li>`).join("")}</ul>`
    : "";
  return `<form id="setup-form" class="setup">
  <label>Your role <select name="role">${options}</select></label>
  <label>Phases <input name="phases" type="number" value="${form.phases}"></label>
  <label>Policy time lag (ticks per phase) <input name="lag" type="number" value="${form.lag}"></label>
  <label>Seed <input name="seed" type="number" value="${form.seed}"></label>
  ${errorList}
  <button id="confirm" type="submit"${attr("disabled", errors.length > 0)}>Confirm</button>
</form>`;
}

export function renderAgentPanels(view: SessionView): string {
  const panels = view.snapshot.messages.map((group) => {
    const body = group.messages.length
      ? group.messages
          .map(
            (m) =>
              `<article class="message${m.authored_by_human ? " human" : ""}">` +
              `<header>phase ${m.phase}, tick ${m.tick}${m.authored_by_human ? " · you" : ""}</header>` +
              `<p>${escapeHtml(m.text)}</p></article>`,
          )
          .join("")
      : `<p class="empty">No statements yet.</p>`;
    return (
      `<details class="agent-panel" data-agent="${group.agent}"` +
      `${attr("open", group.visible_to_human)} data-visible="${group.visible_to_human}">` +
      `<summary>${group.role_name}${group.visible_to_human ? "" : " · hidden from your role"}</summary>` +
      body +
      `</details>`
    );
  });
  return `<section id="agent-panels">${panels.join("")}</section>`;
}

export function renderInterfaceOne(view: SessionView, form: SetupForm): string {
  const snap = view.snapshot;
  return `<section id="interface-one">
<h2>Interface I · setup &amp; institutional outputs</h2>
<p class="status-line">session ${snap.id} · episode ${snap.episode} · tick ${snap.tick}/${snap.total_ticks} · status ${snap.status}</p>
${renderSetupForm(form)}
${renderAgentPanels(view)}
</section>`;
}
