// Typed client for the session-service endpoints. Every UI feature goes
// through this module; no component touches fetch directly.

import type {
  EventKind,
  EventsPage,
  FilesPayload,
  GraphPayload,
  SessionSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function expectJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export interface EventQuery {
  after?: number;
  agent?: string;
  kind?: EventKind;
  waitS?: number;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private url(path: string, params?: Record<string, string | number | undefined>): string {
    const search = new URLSearchParams();
    for (const [key, value] of Object.entries(params ?? {})) {
      if (value !== undefined && value !== "") search.set(key, String(value));
    }
    const query = search.toString();
    return `${this.base}${path}${query ? `?${query}` : ""}`;
  }

  createSession(task: string, paused = false): Promise<SessionSummary> {
    return fetch(this.url("/sessions"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ task, paused }),
    }).then((r) => expectJson<SessionSummary>(r));
  }

  listSessions(): Promise<SessionSummary[]> {
    return fetch(this.url("/sessions")).then((r) => expectJson<SessionSummary[]>(r));
  }

  session(id: string): Promise<SessionSummary & { result?: unknown }> {
    return fetch(this.url(`/sessions/${id}`)).then((r) => expectJson(r));
  }

  postMessage(id: string, agent: string, text: string): Promise<{ queued: boolean }> {
    return fetch(this.url(`/sessions/${id}/message`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ agent, text }),
    }).then((r) => expectJson(r));
  }

  events(id: string, query: EventQuery = {}): Promise<EventsPage> {
    return fetch(
      this.url(`/sessions/${id}/events`, {
        after: query.after,
        agent: query.agent,
        kind: query.kind,
        wait_s: query.waitS,
      }),
    ).then((r) => expectJson<EventsPage>(r));
  }

  pause(id: string): Promise<{ state: string }> {
    return fetch(this.url(`/sessions/${id}/pause`), { method: "POST" }).then((r) =>
      expectJson(r),
    );
  }

  resume(id: string): Promise<{ state: string }> {
    return fetch(this.url(`/sessions/${id}/resume`), { method: "POST" }).then((r) =>
      expectJson(r),
    );
  }

  addBreakpoint(id: string, agent: string, kind: EventKind): Promise<{ breakpoints: unknown }> {
    return fetch(this.url(`/sessions/${id}/breakpoints`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ agent, kind }),
    }).then((r) => expectJson(r));
  }

  clearBreakpoints(id: string): Promise<{ breakpoints: unknown }> {
    return fetch(this.url(`/sessions/${id}/breakpoints`), { method: "DELETE" }).then((r) =>
      expectJson(r),
    );
  }

  graph(id: string): Promise<GraphPayload> {
    return fetch(this.url(`/sessions/${id}/graph`)).then((r) => expectJson<GraphPayload>(r));
  }

  files(id: string, path = "."): Promise<FilesPayload> {
    return fetch(this.url(`/sessions/${id}/files`, { path })).then((r) =>
      expectJson<FilesPayload>(r),
    );
  }

  notebookUrl(id: string): string {
    return this.url(`/sessions/${id}/export/notebook`);
  }

  async fetchNotebook(id: string): Promise<{ document: unknown; disposition: string }> {
    const response = await fetch(this.notebookUrl(id));
    if (!response.ok) throw new ApiError(response.status, response.statusText);
    return {
      document: await response.json(),
      disposition: response.headers.get("content-disposition") ?? "",
    };
  }
}
