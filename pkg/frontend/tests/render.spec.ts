import { describe, expect, it } from "vitest";

import {
  isActiveNode,
  kindBadge,
  parentOf,
  renderAtomTable,
  renderEvents,
  renderGraph,
  renderListing,
} from "../src/render.js";
import { parseXyz } from "../src/xyz.js";
import type { GraphPayload, TraceEvent } from "../src/types.js";

const EVENTS: TraceEvent[] = [
  {
    seq: 1,
    ts: 0,
    agent: "computational_chemist",
    kind: "commanding",
    title: "root -> dft_agent",
    summary: "optimize everything",
    payload_ref: null,
  },
  {
    seq: 2,
    ts: 1,
    agent: "dft_agent",
    kind: "acting",
    title: "submit_and_recover(...)",
    summary: "5/5 done",
    payload_ref: "payloads/evt_000002.txt",
  },
];

describe("event rendering", () => {
  it("renders one row per event with kind badges in order", () => {
    const html = renderEvents(EVENTS);
    expect(html.indexOf('data-seq="1"')).toBeLessThan(html.indexOf('data-seq="2"'));
    expect(html).toContain("badge-commanding");
    expect(html).toContain("badge-acting");
  });

  it("escapes markup in summaries", () => {
    const hostile = { ...EVENTS[0], summary: "<script>alert(1)</script>" };
    expect(renderEvents([hostile])).not.toContain("<script>");
  });

  it("badge carries the kind class", () => {
    expect(kindBadge("reporting")).toContain("badge-reporting");
  });
});

const GRAPH: GraphPayload = {
  root: "computational_chemist",
  state: "running",
  nodes: [
    {
      id: "computational_chemist",
      depth: 0,
      forgetful: false,
      tools: ["update_global_memory"],
      last_event: { kind: "commanding", ts: 5, seq: 9 },
    },
    {
      id: "dft_agent",
      depth: 1,
      forgetful: false,
      tools: [],
      last_event: { kind: "acting", ts: 6, seq: 10 },
    },
    { id: "file_io_agent", depth: 1, forgetful: true, tools: [], last_event: null },
  ],
  edges: [
    { from: "computational_chemist", to: "dft_agent" },
    { from: "computational_chemist", to: "file_io_agent" },
  ],
};

describe("graph rendering", () => {
  it("renders every node and edge", () => {
    const svg = renderGraph(GRAPH, 10);
    expect(svg.match(/<g transform/g)).toHaveLength(3);
    expect(svg.match(/<line/g)).toHaveLength(2);
  });

  it("highlights recently active nodes only", () => {
    expect(isActiveNode(GRAPH.nodes[1], 10)).toBe(true);
    expect(isActiveNode(GRAPH.nodes[2], 10)).toBe(false);
    expect(isActiveNode(GRAPH.nodes[0], 50)).toBe(false);
    const svg = renderGraph(GRAPH, 10);
    expect(svg).toContain('class="node active" data-agent="dft_agent"');
    expect(svg).toContain('class="node" data-agent="file_io_agent"');
  });
});

describe("file browser rendering", () => {
  it("lists entries with navigation targets", () => {
    const html = renderListing(".", [
      { name: "work", kind: "dir", size: 0 },
      { name: "a.xyz", kind: "file", size: 120 },
    ]);
    expect(html).toContain('data-path="work"');
    expect(html).toContain('data-path="a.xyz"');
    expect(html).toContain("120");
  });

  it("adds a parent link below the root", () => {
    const html = renderListing("work/jobs", [{ name: "x", kind: "file", size: 1 }]);
    expect(html).toContain('data-path="work"');
    expect(parentOf("work")).toBe(".");
  });

  it("renders an atom table for xyz content", () => {
    const parsed = parseXyz("2\ndiatomic\nC 0 0 0\nO 1.2 0 0\n");
    const html = renderAtomTable(parsed);
    expect(html).toContain("2 atoms");
    expect((html.match(/<tr>/g) ?? []).length).toBe(3); // header + 2 atoms
    expect(html).toContain("1.2000");
  });
});
