import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function mockFetch(status: number, body: unknown) {
  const fn = vi.fn(async () => ({
    ok: status >= 200 && status < 300,
    status,
    statusText: `status ${status}`,
    json: async () => body,
    headers: new Headers(),
  }));
  vi.stubGlobal("fetch", fn);
  return fn;
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ApiClient", () => {
  it("builds the events query from the cursor and filters", async () => {
    const fn = mockFetch(200, { events: [], cursor: 5, head: 5, state: "running" });
    const api = new ApiClient("http://host:1");
    await api.events("abc", { after: 5, agent: "dft_agent", waitS: 2 });
    const url = fn.mock.calls[0][0] as string;
    expect(url).toContain("/sessions/abc/events?");
    expect(url).toContain("after=5");
    expect(url).toContain("agent=dft_agent");
    expect(url).toContain("wait_s=2");
  });

  it("omits empty query params", async () => {
    const fn = mockFetch(200, { events: [], cursor: 0, head: 0, state: "running" });
    await new ApiClient().events("abc");
    expect(fn.mock.calls[0][0]).toBe("/sessions/abc/events");
  });

  it("posts messages as JSON", async () => {
    const fn = mockFetch(200, { queued: true });
    await new ApiClient().postMessage("abc", "dft_agent", "hello");
    const [, init] = fn.mock.calls[0] as [string, RequestInit];
    expect(init.method).toBe("POST");
    expect(JSON.parse(init.body as string)).toEqual({ agent: "dft_agent", text: "hello" });
  });

  it("surfaces server error details", async () => {
    mockFetch(404, { detail: "unknown session 'abc'" });
    await expect(new ApiClient().session("abc")).rejects.toThrowError(ApiError);
    await expect(new ApiClient().session("abc")).rejects.toThrow(/unknown session/);
  });

  it("exposes the notebook download URL", () => {
    expect(new ApiClient("http://h").notebookUrl("s9")).toBe(
      "http://h/sessions/s9/export/notebook",
    );
  });
});
