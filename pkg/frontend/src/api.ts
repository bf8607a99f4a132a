/** HTTP client for the session service; the UI talks to nothing else. */

import type { Snapshot, SessionEvent, ToolCallPayload } from "./types.ts";

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(`API ${status}: ${detail}`);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(resp.status, detail);
  }
  return resp.json() as Promise<T>;
}

export class ApiClient {
  constructor(public baseUrl: string) {}

  private async post<T>(path: string, body?: unknown): Promise<T> {
    const resp = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body ?? {}),
    });
    return asJson<T>(resp);
  }

  createSession(config: Record<string, unknown>): Promise<{ id: string; status: string }> {
    return this.post("/sessions", config);
  }

  async snapshot(id: string): Promise<Snapshot> {
    return asJson<Snapshot>(await fetch(`${this.baseUrl}/sessions/${id}`));
  }

  begin(id: string, role?: string): Promise<{ status: string; role: string }> {
    return this.post(`/sessions/${id}/events/begin`, role ? { role } : {});
  }

  simulationEnded(id: string): Promise<{ status: string }> {
    return this.post(`/sessions/${id}/events/simulation-ended`);
  }

  completeReflection(id: string, choice: string, newRole?: string): Promise<{ status: string }> {
    return this.post(`/sessions/${id}/events/complete-reflection`, {
      choice,
      new_role: newRole ?? null,
    });
  }

  completeIntegration(id: string): Promise<{ status: string }> {
    return this.post(`/sessions/${id}/events/complete-integration`);
  }

  run(id: string): Promise<{ status: string; awaiting: string | null }> {
    return this.post(`/sessions/${id}/run`);
  }

  submitDecision(id: string, text: string): Promise<{ status: string }> {
    return this.post(`/sessions/${id}/decision`, { text });
  }

  reflect(id: string, text: string): Promise<{ reply: string }> {
    return this.post(`/sessions/${id}/reflection/message`, { text });
  }

  setFocus(id: string, columns: string[]): Promise<{ analysis: string }> {
    return this.post(`/sessions/${id}/focus`, { columns });
  }

  assistantMessage(
    id: string,
    text: string,
  ): Promise<{ reply: string; tool_calls: ToolCallPayload[] }> {
    return this.post(`/sessions/${id}/assistant/message`, { text });
  }

  generateReport(id: string): Promise<{ draft: string }> {
    return this.post(`/sessions/${id}/assistant/report`);
  }

  async seriesCsv(id: string): Promise<string> {
    const resp = await fetch(`${this.baseUrl}/sessions/${id}/series.csv`);
    if (!resp.ok) throw new ApiError(resp.status, "series unavailable");
    return resp.text();
  }

  async exportMarkdown(id: string): Promise<string> {
    const resp = await fetch(`${this.baseUrl}/sessions/${id}/export.md`);
    if (!resp.ok) throw new ApiError(resp.status, "export unavailable");
    return resp.text();
  }

  /** Consume the SSE stream; resolves once the service closes it. */
  async streamEvents(
    id: string,
    cursor: number,
    onEvent: (event: SessionEvent) => void,
  ): Promise<void> {
    const resp = await fetch(`${this.baseUrl}/sessions/${id}/stream?cursor=${cursor}`);
    if (!resp.ok || !resp.body) throw new ApiError(resp.status, "stream unavailable");
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { value, done } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let sep;
      while ((sep = buffer.indexOf("\n\n")) >= 0) {
        const block = buffer.slice(0, sep);
        buffer = buffer.slice(sep + 2);
        const event = parseSseBlock(block);
        if (event === null) continue;
        if (event.kind === "close") return;
        onEvent(event);
      }
    }
  }
}

export function parseSseBlock(block: string): SessionEvent | null {
  let seq = 0;
  let kind = "";
  let payload: Record<string, unknown> = {};
  for (const line of block.split("\n")) {
    if (line.startsWith("id: ")) seq = Number(line.slice(4));
    else if (line.startsWith("event: ")) kind = line.slice(7);
    else if (line.startsWith("data: ")) payload = JSON.parse(line.slice(6));
  }
  return kind ? { seq, kind, payload } : null;
}
