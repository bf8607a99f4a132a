import { describe, expect, it } from "vitest";

import { advanceControls, renderReflectionPanel } from "../src/reflection.ts";
import { viewFromSnapshot } from "../src/state.ts";
import {
  snapshotCompleted,
  snapshotCompletion,
  snapshotCreated,
  snapshotIntegration,
  snapshotReflection,
} from "./fixtures.ts";

function enabled(html: string, id: string): boolean {
  const match = html.match(new RegExp(`<button id="${id}"[^>]*>`));
  expect(match, id).not.toBeNull();
  return !match![0].includes("disabled");
}

describe("reflection panel", () => {
  it("contextualization enables begin only", () => {
    const controls = advanceControls(viewFromSnapshot(snapshotCreated()));
    expect(controls).toEqual({
      begin: true,
      simulationEnded: false,
      completeReflection: false,
      completeIntegration: false,
      exportAvailable: false,
    });
  });

  it("completed perspective-taking enables simulation-ended only", () => {
    const controls = advanceControls(viewFromSnapshot(snapshotCompleted()));
    expect(controls.simulationEnded).toBe(true);
    expect(controls.begin).toBe(false);
    expect(controls.completeReflection).toBe(false);
  });

  it("reflection enables the three completion choices", () => {
    const html = renderReflectionPanel(viewFromSnapshot(snapshotReflection()));
    expect(enabled(html, "advance-replay")).toBe(true);
    expect(enabled(html, "advance-new-role")).toBe(true);
    expect(enabled(html, "advance-integrate")).toBe(true);
    expect(enabled(html, "advance-begin")).toBe(false);
    expect(enabled(html, "advance-simulation-ended")).toBe(false);
    expect(enabled(html, "advance-complete-integration")).toBe(false);
  });

  it("integration enables complete-integration only", () => {
    const html = renderReflectionPanel(viewFromSnapshot(snapshotIntegration()));
    expect(enabled(html, "advance-complete-integration")).toBe(true);
    expect(enabled(html, "advance-integrate")).toBe(false);
    expect(enabled(html, "advance-begin")).toBe(false);
  });

  it("completion reveals the export download", () => {
    const html = renderReflectionPanel(viewFromSnapshot(snapshotCompletion()));
    expect(html).toContain('<a id="export-link" href="#"');
    const reflection = renderReflectionPanel(viewFromSnapshot(snapshotReflection()));
    expect(reflection).toContain('<a id="export-link" hidden');
  });

  it("side panel shows phase, roles, connection and token usage", () => {
    const snapshot = snapshotReflection();
    const html = renderReflectionPanel(viewFromSnapshot(snapshot), true);
    expect(html).toContain('<dd id="protocol-phase">reflection</dd>');
    expect(html).toContain("observer");
    expect(html).toContain('<dd id="connection">connected</dd>');
    const usage = snapshot.usage.high_level;
    expect(html).toContain(
      `<tr><td>high_level</td><td>${usage.calls}</td><td>${usage.prompt_tokens}</td><td>${usage.completion_tokens}</td></tr>`,
    );
  });
});
