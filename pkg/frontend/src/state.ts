/** Client-side session view: snapshot mirror plus focus set and decision draft.
 *
 * The view renders only what the service reported; nothing is simulated
 * locally.  A reduced stream state folds SSE events so that a client that
 * consumed the backlog agrees with one that fetched a fresh snapshot.
 */

import type { DecisionPayload, SessionEvent, Snapshot, TimelineEntry } from "./types.ts";

export interface ChatLine {
  speaker: string;
  text: string;
}

export interface SessionView {
  snapshot: Snapshot;
  focus: Set<string>;
  decisionDraft: string;
  assistantLog: ChatLine[];
  reflectionLog: ChatLine[];
  analysis: string;
}

export function viewFromSnapshot(snapshot: Snapshot): SessionView {
  return {
    snapshot,
    focus: new Set(snapshot.focus),
    decisionDraft: snapshot.decision_draft,
    assistantLog: [],
    reflectionLog: [],
    analysis: "",
  };
}

export function refreshSnapshot(view: SessionView, snapshot: Snapshot): SessionView {
  return {
    ...view,
    snapshot,
    focus: new Set(snapshot.focus),
    decisionDraft: snapshot.decision_draft || view.decisionDraft,
  };
}

/** The fields an event stream can reconstruct without refetching. */
export interface StreamState {
  tick: number;
  phase: number;
  status: string;
  messageCounts: Record<string, number>;
  decision: DecisionPayload;
  decisionsApplied: number;
  lastSeq: number;
}

export function streamStateFromSnapshot(snapshot: Snapshot): StreamState {
  const counts: Record<string, number> = {};
  for (const group of snapshot.messages) counts[group.agent] = group.messages.length;
  return {
    tick: snapshot.tick,
    phase: snapshot.phase,
    status: snapshot.status,
    messageCounts: counts,
    decision: snapshot.decision,
    decisionsApplied: -1, // unknowable from a snapshot alone
    lastSeq: -1,
  };
}

export function emptyStreamState(snapshot: Snapshot): StreamState {
  const counts: Record<string, number> = {};
  for (const group of snapshot.messages) counts[group.agent] = 0;
  return {
    tick: 0,
    phase: 0,
    status: snapshot.status,
    messageCounts: counts,
    decision: { share_agri: 0.5, share_env: 0.5, adj_meat: 0, adj_pa: 0 },
    decisionsApplied: 0,
    lastSeq: 0,
  };
}

export function foldEvent(state: StreamState, event: SessionEvent): StreamState {
  const next = {
    ...state,
    messageCounts: { ...state.messageCounts },
    lastSeq: event.seq,
  };
  switch (event.kind) {
    case "tick_advanced":
      next.tick = event.payload.tick as number;
      next.phase = event.payload.phase as number;
      break;
    case "message_emitted": {
      const agent = event.payload.agent as string;
      next.messageCounts[agent] = (next.messageCounts[agent] ?? 0) + 1;
      break;
    }
    case "decision_applied":
      next.decision = event.payload.decision as unknown as DecisionPayload;
      next.decisionsApplied += 1;
      break;
    case "status_changed":
      next.status = event.payload.status as string;
      break;
  }
  return next;
}

export function foldBacklog(state: StreamState, events: SessionEvent[]): StreamState {
  return events.reduce(foldEvent, state);
}

/** True when the backlog-built state agrees with a freshly fetched snapshot. */
export function consistentWithSnapshot(state: StreamState, snapshot: Snapshot): boolean {
  const fresh = streamStateFromSnapshot(snapshot);
  if (state.tick !== fresh.tick || state.status !== fresh.status) return false;
  if (JSON.stringify(state.decision) !== JSON.stringify(fresh.decision)) return false;
  for (const [agent, count] of Object.entries(fresh.messageCounts)) {
    if ((state.messageCounts[agent] ?? 0) !== count) return false;
  }
  return true;
}

/** Transcript entries in temporal order: a time-dependent storyline. */
export function timelineFromSnapshot(snapshot: Snapshot, excerptLength = 140): TimelineEntry[] {
  const order = new Map(snapshot.messages.map((g, i) => [g.agent, i]));
  const entries = snapshot.messages.flatMap((group) =>
    group.messages.map((m) => ({
      tick: m.tick,
      phase: m.phase,
      agent: m.agent,
      excerpt: m.text.length > excerptLength ? m.text.slice(0, excerptLength - 1) + "…" : m.text,
    })),
  );
  entries.sort(
    (a, b) => a.tick - b.tick || (order.get(a.agent) ?? 0) - (order.get(b.agent) ?? 0),
  );
  return entries;
}
