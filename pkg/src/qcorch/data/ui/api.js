// Typed client for the session-service endpoints. Every UI feature goes
// through this module; no component touches fetch directly.
export class ApiError extends Error {
    status;
    detail;
    constructor(status, detail) {
        super(`HTTP ${status}: ${detail}`);
        this.status = status;
        this.detail = detail;
    }
}
async function expectJson(response) {
    if (!response.ok) {
        let detail = response.statusText;
        try {
            const body = (await response.json());
            if (body.detail)
                detail = body.detail;
        }
        catch {
            // non-JSON error body; keep the status text
        }
        throw new ApiError(response.status, detail);
    }
    return (await response.json());
}
export class ApiClient {
    base;
    constructor(base = "") {
        this.base = base;
    }
    url(path, params) {
        const search = new URLSearchParams();
        for (const [key, value] of Object.entries(params ?? {})) {
            if (value !== undefined && value !== "")
                search.set(key, String(value));
        }
        const query = search.toString();
        return `${this.base}${path}${query ? `?${query}` : ""}`;
    }
    createSession(task, paused = false) {
        return fetch(this.url("/sessions"), {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ task, paused }),
        }).then((r) => expectJson(r));
    }
    listSessions() {
        return fetch(this.url("/sessions")).then((r) => expectJson(r));
    }
    session(id) {
        return fetch(this.url(`/sessions/${id}`)).then((r) => expectJson(r));
    }
    postMessage(id, agent, text) {
        return fetch(this.url(`/sessions/${id}/message`), {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ agent, text }),
        }).then((r) => expectJson(r));
    }
    events(id, query = {}) {
        return fetch(this.url(`/sessions/${id}/events`, {
            after: query.after,
            agent: query.agent,
            kind: query.kind,
            wait_s: query.waitS,
        })).then((r) => expectJson(r));
    }
    pause(id) {
        return fetch(this.url(`/sessions/${id}/pause`), { method: "POST" }).then((r) => expectJson(r));
    }
    resume(id) {
        return fetch(this.url(`/sessions/${id}/resume`), { method: "POST" }).then((r) => expectJson(r));
    }
    addBreakpoint(id, agent, kind) {
        return fetch(this.url(`/sessions/${id}/breakpoints`), {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ agent, kind }),
        }).then((r) => expectJson(r));
    }
    clearBreakpoints(id) {
        return fetch(this.url(`/sessions/${id}/breakpoints`), { method: "DELETE" }).then((r) => expectJson(r));
    }
    graph(id) {
        return fetch(this.url(`/sessions/${id}/graph`)).then((r) => expectJson(r));
    }
    files(id, path = ".") {
        return fetch(this.url(`/sessions/${id}/files`, { path })).then((r) => expectJson(r));
    }
    notebookUrl(id) {
        return this.url(`/sessions/${id}/export/notebook`);
    }
    async fetchNotebook(id) {
        const response = await fetch(this.notebookUrl(id));
        if (!response.ok)
            throw new ApiError(response.status, response.statusText);
        return {
            document: await response.json(),
            disposition: response.headers.get("content-disposition") ?? "",
        };
    }
}
