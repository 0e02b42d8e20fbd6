// Payload shapes of the session-service API (the UI's only data source).

export type SessionState = "running" | "paused" | "done" | "failed" | "budget_exceeded";

export type EventKind = "commanding" | "reporting" | "acting" | "user" | "system";

export interface SessionSummary {
  id: string;
  state: SessionState;
  created: number;
  task: string;
  workdir: string;
  breakpoints: [string, string][];
  counters: { commanding: number; reporting: number; acting: number };
}

export interface TraceEvent {
  seq: number;
  ts: number;
  agent: string;
  kind: EventKind;
  title: string;
  summary: string;
  payload_ref: string | null;
}

export interface EventsPage {
  events: TraceEvent[];
  cursor: number;
  head: number;
  state: SessionState;
}

export interface GraphNode {
  id: string;
  depth: number;
  forgetful: boolean;
  tools: string[];
  last_event: { kind: EventKind; ts: number; seq: number } | null;
}

export interface GraphPayload {
  root: string;
  nodes: GraphNode[];
  edges: { from: string; to: string }[];
  state: SessionState;
}

export interface DirEntry {
  name: string;
  kind: "dir" | "file";
  size: number;
}

export type FilesPayload =
  | { kind: "dir"; path: string; entries: DirEntry[] }
  | { kind: "file"; path: string; content: string };
