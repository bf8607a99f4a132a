/** Recorded API fixtures (see record_fixtures.py for regeneration). */

import { readFileSync } from "node:fs";
import type { SessionEvent, Snapshot } from "../src/types.ts";

function load<T>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

export const snapshotCreated = (): Snapshot => load<Snapshot>("snapshot_created.json");
export const snapshotCompleted = (): Snapshot => load<Snapshot>("snapshot_completed.json");
export const snapshotAwaitingHuman = (): Snapshot => load<Snapshot>("snapshot_awaiting_human.json");
export const snapshotReflection = (): Snapshot => load<Snapshot>("snapshot_reflection.json");
export const snapshotIntegration = (): Snapshot => load<Snapshot>("snapshot_integration.json");
export const snapshotCompletion = (): Snapshot => load<Snapshot>("snapshot_completion.json");
export const eventsCompleted = (): SessionEvent[] => load<SessionEvent[]>("events_completed.json");

export function seriesCompletedCsv(): string {
  const url = new URL("./fixtures/series_completed.csv", import.meta.url);
  return readFileSync(url, "utf-8");
}
