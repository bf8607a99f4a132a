/** Single-page bootstrap: wires the rendered interfaces to the API client.
 *
 * One event-stream subscription per open session; decision submission is
 * never optimistic, the view re-renders only from server responses.
 */

import { ApiClient } from "./api.ts";
import { DEFAULT_SETUP, renderInterfaceOne, setupErrors, type SetupForm } from "./interfaceOne.ts";
import { renderInterfaceTwo, type TabLabel } from "./interfaceTwo.ts";
import { renderReflectionPanel } from "./reflection.ts";
import { refreshSnapshot, viewFromSnapshot, type SessionView } from "./state.ts";

interface AppState {
  sessionId: string | null;
  view: SessionView | null;
  form: SetupForm;
  activeTab: TabLabel;
  seriesCsv: string;
  connected: boolean;
}

export function startApp(root: HTMLElement, baseUrl = ""): void {
  const api = new ApiClient(baseUrl);
  const state: AppState = {
    sessionId: null,
    view: null,
    form: { ...DEFAULT_SETUP },
    activeTab: "Data Exploration",
    seriesCsv: "",
    connected: false,
  };

  async function refresh(): Promise<void> {
    if (!state.sessionId) return;
    const snapshot = await api.snapshot(state.sessionId);
    state.view = state.view
      ? refreshSnapshot(state.view, snapshot)
      : viewFromSnapshot(snapshot);
    if (snapshot.episode > 0) {
      try {
        state.seriesCsv = await api.seriesCsv(state.sessionId);
      } catch {
        state.seriesCsv = "";
      }
    }
    render();
  }

  function subscribe(): void {
    if (!state.sessionId) return;
    state.connected = true;
    api
      .streamEvents(state.sessionId, 0, () => {
        /* per-event UI nudges are cosmetic; state comes from snapshots */
      })
      .catch(() => undefined)
      .finally(() => {
        state.connected = false;
        void refresh();
      });
  }

  function render(): void {
    if (!state.view) {
      root.innerHTML = renderInterfaceOne(
        { snapshot: emptySnapshot(), focus: new Set(), decisionDraft: "", assistantLog: [], reflectionLog: [], analysis: "" },
        state.form,
      );
    } else {
      root.innerHTML =
        renderInterfaceOne(state.view, state.form) +
        renderInterfaceTwo(state.view, state.seriesCsv, state.activeTab) +
        renderReflectionPanel(state.view, state.connected);
      for (const section of root.querySelectorAll<HTMLElement>(".tab")) {
        section.hidden = section.dataset.tab !== state.activeTab;
      }
    }
    wire();
  }

  function wire(): void {
    const form = root.querySelector<HTMLFormElement>("#setup-form");
    form?.addEventListener("submit", (ev) => {
      ev.preventDefault();
      const data = new FormData(form);
      state.form = {
        role: String(data.get("role") ?? "observer"),
        phases: Number(data.get("phases")),
        lag: Number(data.get("lag")),
        seed: Number(data.get("seed")),
      };
      if (setupErrors(state.form).length) {
        render();
        return;
      }
      void confirmSetup();
    });

    for (const button of root.querySelectorAll<HTMLButtonElement>(".tab-button")) {
      button.addEventListener("click", () => {
        state.activeTab = button.dataset.tab as TabLabel;
        render();
      });
    }

    for (const chip of root.querySelectorAll<HTMLElement>(".column-chip")) {
      chip.addEventListener("dragstart", (ev) => {
        (ev as DragEvent).dataTransfer?.setData("text/column", chip.dataset.column ?? "");
      });
      chip.addEventListener("click", () => void toggleFocus(chip.dataset.column ?? ""));
    }
    const drop = root.querySelector<HTMLElement>("#drop-zone");
    drop?.addEventListener("dragover", (ev) => ev.preventDefault());
    drop?.addEventListener("drop", (ev) => {
      ev.preventDefault();
      const column = (ev as DragEvent).dataTransfer?.getData("text/column");
      if (column) void toggleFocus(column, true);
    });

    root.querySelector("#assistant-form")?.addEventListener("submit", (ev) => {
      ev.preventDefault();
      const input = root.querySelector<HTMLInputElement>("#assistant-form input");
      if (input?.value) void askAssistant(input.value);
    });
    root.querySelector("#generate-report")?.addEventListener("click", () => void report());
    root.querySelector("#submit-decision")?.addEventListener("click", () => void submit());
    root.querySelector("#reflection-form")?.addEventListener("submit", (ev) => {
      ev.preventDefault();
      const input = root.querySelector<HTMLInputElement>("#reflection-form input");
      if (input?.value) void reflect(input.value);
    });

    wireAdvance("#advance-begin", () => api.begin(state.sessionId!, state.form.role).then(() => api.run(state.sessionId!)));
    wireAdvance("#advance-simulation-ended", () => api.simulationEnded(state.sessionId!));
    wireAdvance("#advance-replay", () => api.completeReflection(state.sessionId!, "replay"));
    wireAdvance("#advance-new-role", () => {
      const choice = root.querySelector<HTMLSelectElement>("#new-role-choice")?.value ?? "observer";
      return api.completeReflection(state.sessionId!, "new_role", choice);
    });
    wireAdvance("#advance-integrate", () => api.completeReflection(state.sessionId!, "integrate"));
    wireAdvance("#advance-complete-integration", () => api.completeIntegration(state.sessionId!));
    root.querySelector("#export-link")?.addEventListener("click", (ev) => {
      ev.preventDefault();
      void downloadExport();
    });
  }

  function wireAdvance(selector: string, action: () => Promise<unknown>): void {
    root.querySelector<HTMLButtonElement>(selector)?.addEventListener("click", () => {
      if (!state.sessionId) return;
      action()
        .then(refresh)
        .catch((err) => showError(String(err)));
    });
  }

  async function confirmSetup(): Promise<void> {
    const created = await api.createSession({
      seed: state.form.seed,
      phases: state.form.phases,
      lag: state.form.lag,
      human_role: state.form.role === "observer" ? null : state.form.role,
    });
    state.sessionId = created.id;
    await api.begin(created.id, state.form.role);
    subscribe();
    await api.run(created.id).catch((err) => showError(String(err)));
    await refresh();
  }

  async function toggleFocus(column: string, forceOn = false): Promise<void> {
    if (!state.sessionId || !state.view) return;
    const focus = new Set(state.view.focus);
    if (focus.has(column) && !forceOn) focus.delete(column);
    else focus.add(column);
    const result = await api.setFocus(state.sessionId, [...focus]);
    state.view.focus = focus;
    state.view.analysis = result.analysis;
    render();
  }

  async function askAssistant(text: string): Promise<void> {
    if (!state.sessionId || !state.view) return;
    state.view.assistantLog.push({ speaker: "you", text });
    const result = await api.assistantMessage(state.sessionId, text);
    state.view.assistantLog.push({ speaker: "assistant", text: result.reply });
    render();
  }

  async function report(): Promise<void> {
    if (!state.sessionId || !state.view) return;
    const result = await api.generateReport(state.sessionId);
    state.view.decisionDraft = result.draft;
    render();
  }

  async function submit(): Promise<void> {
    if (!state.sessionId) return;
    const text = root.querySelector<HTMLTextAreaElement>("#decision-draft")?.value ?? "";
    await api.submitDecision(state.sessionId, text).catch((err) => showError(String(err)));
    await refresh();
  }

  async function reflect(text: string): Promise<void> {
    if (!state.sessionId || !state.view) return;
    state.view.reflectionLog.push({ speaker: "you", text });
    const result = await api.reflect(state.sessionId, text);
    state.view.reflectionLog.push({ speaker: "companion", text: result.reply });
    render();
  }

  async function downloadExport(): Promise<void> {
    if (!state.sessionId) return;
    const markdown = await api.exportMarkdown(state.sessionId);
    const blob = new Blob([markdown], { type: "text/markdown" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = "reflections.md";
    link.click();
  }

  function showError(message: string): void {
    const banner = document.createElement("p");
    banner.className = "error-banner";
    banner.textContent = message;
    root.prepend(banner);
    setTimeout(() => banner.remove(), 6000);
  }

  render();
}

function emptySnapshot() {
  return {
    id: "(not created)",
    episode: 0,
    episode_role: null,
    aft_names: {},
    grid: { width: 0, height: 0, cells: [] },
    tick: 0,
    phase: 0,
    total_ticks: 0,
    status: "awaiting_reflection",
    failure_reason: null,
    awaiting: null,
    protocol: { phase: "contextualization", current_role: "", roles_played: [], pending_role: null },
    decision: { share_agri: 0.5, share_env: 0.5, adj_meat: 0, adj_pa: 0 },
    decision_draft: "",
    messages: [],
    focus: [],
    columns: [],
    series_tail: [],
    usage: {},
    human_role: null,
    config: { phases: 5, lag: 15, seed: 0, backend: "stub" },
  };
}
