// NDJSON event-stream decoding and staleness tracking.
//
// The service emits one JSON record per line and a blank line every couple
// of seconds as a heartbeat. The console treats its data as stale when
// neither arrives within STALE_AFTER_MS.

import type { StationEvent } from "./types.js";

export const STALE_AFTER_MS = 5000;

export type StreamItem = { kind: "event"; event: StationEvent } | { kind: "heartbeat" };

/** Incremental line splitter; safe against records split across chunks. */
export class NdjsonDecoder {
    private buffer = "";

    push(chunk: string): StreamItem[] {
        this.buffer += chunk;
        const items: StreamItem[] = [];
        let nl: number;
        while ((nl = this.buffer.indexOf("\n")) >= 0) {
            const line = this.buffer.slice(0, nl).trim();
            this.buffer = this.buffer.slice(nl + 1);
            if (line === "") {
                items.push({ kind: "heartbeat" });
                continue;
            }
            try {
                items.push({ kind: "event", event: JSON.parse(line) as StationEvent });
            } catch {
                // a torn or corrupt line is dropped; the seq cursor lets the
                // client re-request anything it missed on reconnect
            }
        }
        return items;
    }
}

/** Tracks when the view should show the stale-data indicator. */
export class StalenessTracker {
    private lastTrafficMs: number | null = null;

    seenTraffic(nowMs: number): void {
        this.lastTrafficMs = nowMs;
    }

    isStale(nowMs: number): boolean {
        return this.lastTrafficMs === null || nowMs - this.lastTrafficMs > STALE_AFTER_MS;
    }
}
