import { describe, expect, it } from "vitest";

import { EventStream, orderedAfter } from "../src/events.js";
import type { ApiClient } from "../src/api.js";
import type { EventsPage, TraceEvent } from "../src/types.js";

function event(seq: number, kind = "system"): TraceEvent {
  return {
    seq,
    ts: 1000 + seq,
    agent: "a",
    kind: kind as TraceEvent["kind"],
    title: `t${seq}`,
    summary: `s${seq}`,
    payload_ref: null,
  };
}

describe("orderedAfter", () => {
  it("keeps only events past the cursor, sorted", () => {
    const { kept, cursor } = orderedAfter([event(3), event(1), event(2)], 1);
    expect(kept.map((e) => e.seq)).toEqual([2, 3]);
    expect(cursor).toBe(3);
  });

  it("drops duplicates", () => {
    const { kept } = orderedAfter([event(2), event(2), event(3)], 0);
    expect(kept.map((e) => e.seq)).toEqual([2, 3]);
  });

  it("empty input keeps the cursor", () => {
    const { kept, cursor } = orderedAfter([], 7);
    expect(kept).toEqual([]);
    expect(cursor).toBe(7);
  });
});

function fakeApi(pages: EventsPage[]): ApiClient {
  let call = 0;
  return {
    events: async () => pages[Math.min(call++, pages.length - 1)],
  } as unknown as ApiClient;
}

describe("EventStream", () => {
  it("delivers events exactly once, in seq order, across pages", async () => {
    const pages: EventsPage[] = [
      { events: [event(1), event(2)], cursor: 2, head: 2, state: "running" },
      { events: [event(2), event(4), event(3)], cursor: 4, head: 4, state: "running" },
      { events: [], cursor: 4, head: 4, state: "done" },
      { events: [], cursor: 4, head: 4, state: "done" },
    ];
    const stream = new EventStream(fakeApi(pages), "s1", 0);
    const seen: number[] = [];
    stream.subscribe((events) => seen.push(...events.map((e) => e.seq)));
    await stream.run();
    expect(seen).toEqual([1, 2, 3, 4]);
    expect(stream.position()).toBe(4);
  });

  it("stops after the terminal state is drained", async () => {
    const pages: EventsPage[] = [
      { events: [event(1)], cursor: 1, head: 1, state: "done" },
      { events: [], cursor: 1, head: 1, state: "done" },
    ];
    const stream = new EventStream(fakeApi(pages), "s1", 0);
    let calls = 0;
    stream.subscribe(() => {
      calls += 1;
    });
    await stream.run();
    expect(calls).toBeGreaterThan(0);
    expect(stream.lastState).toBe("done");
  });
});
