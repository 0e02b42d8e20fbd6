// One event-source client hides the polling transport: subscribers receive
// server events strictly in seq order, exactly once, regardless of how the
// pages arrive.
const TERMINAL = ["done", "failed", "budget_exceeded"];
/** Drop anything out of order or already delivered; returns the kept events
 * and the advanced cursor. Exported for tests. */
export function orderedAfter(events, cursor) {
    const kept = [];
    let last = cursor;
    for (const event of [...events].sort((a, b) => a.seq - b.seq)) {
        if (event.seq <= last)
            continue;
        kept.push(event);
        last = event.seq;
    }
    return { kept, cursor: last };
}
export class EventStream {
    api;
    sessionId;
    pollWaitS;
    cursor = 0;
    running = false;
    listeners = [];
    lastState = "running";
    constructor(api, sessionId, pollWaitS = 3) {
        this.api = api;
        this.sessionId = sessionId;
        this.pollWaitS = pollWaitS;
    }
    subscribe(listener) {
        this.listeners.push(listener);
    }
    /** Current cursor (highest delivered seq); reconnects resume from here. */
    position() {
        return this.cursor;
    }
    stop() {
        this.running = false;
    }
    async pump() {
        const page = await this.api.events(this.sessionId, {
            after: this.cursor,
            waitS: this.pollWaitS,
        });
        const { kept, cursor } = orderedAfter(page.events, this.cursor);
        this.cursor = cursor;
        this.lastState = page.state;
        if (kept.length > 0 || TERMINAL.includes(page.state)) {
            for (const listener of this.listeners)
                listener(kept, page.state);
        }
    }
    async run() {
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
