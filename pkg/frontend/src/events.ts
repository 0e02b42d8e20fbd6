// One event-source client hides the polling transport: subscribers receive
// server events strictly in seq order, exactly once, regardless of how the
// pages arrive.

import type { ApiClient } from "./api.js";
import type { SessionState, TraceEvent } from "./types.js";

export type EventListener = (events: TraceEvent[], state: SessionState) => void;

const TERMINAL: SessionState[] = ["done", "failed", "budget_exceeded"];

/** Drop anything out of order or already delivered; returns the kept events
 * and the advanced cursor. Exported for tests. */
export function orderedAfter(
  events: TraceEvent[],
  cursor: number,
): { kept: TraceEvent[]; cursor: number } {
  const kept: TraceEvent[] = [];
  let last = cursor;
  for (const event of [...events].sort((a, b) => a.seq - b.seq)) {
    if (event.seq <= last) continue;
    kept.push(event);
    last = event.seq;
  }
  return { kept, cursor: last };
}

export class EventStream {
  private cursor = 0;
  private running = false;
  private listeners: EventListener[] = [];
  lastState: SessionState = "running";

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
    private readonly pollWaitS = 3,
  ) {}

  subscribe(listener: EventListener): void {
    this.listeners.push(listener);
  }

  /** Current cursor (highest delivered seq); reconnects resume from here. */
  position(): number {
    return this.cursor;
  }

  stop(): void {
    this.running = false;
  }

  async pump(): Promise<void> {
    const page = await this.api.events(this.sessionId, {
      after: this.cursor,
      waitS: this.pollWaitS,
    });
    const { kept, cursor } = orderedAfter(page.events, this.cursor);
    this.cursor = cursor;
    this.lastState = page.state;
    if (kept.length > 0 || TERMINAL.includes(page.state)) {
      for (const listener of this.listeners) listener(kept, page.state);
    }
  }

  async run(): Promise<void> {
    this.running = true;
    while (this.running) {
      await this.pump();
      if (TERMINAL.includes(this.lastState) && this.cursor > 0) {
        // drain once more in case events landed while the state flipped
        await this.pump();
        this.running = false;
      }
    }
  }
}
