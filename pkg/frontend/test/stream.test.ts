import { describe, expect, it } from "vitest";

import { NdjsonDecoder, StalenessTracker, STALE_AFTER_MS } from "../src/stream.js";

const REC = '{"seq": 1, "ts": "2019-07-22T19:00:00", "kind": "log", "payload": {}}';

describe("ndjson decoding", () => {
    it("yields one event per line and heartbeats for blank lines", () => {
        const d = new NdjsonDecoder();
        const items = d.push(`${REC}\n\n${REC.replace('"seq": 1', '"seq": 2')}\n`);
        expect(items.map((i) => i.kind)).toEqual(["event", "heartbeat", "event"]);
        expect(items[0].kind === "event" && items[0].event.seq).toBe(1);
    });

    it("reassembles records split across chunks", () => {
        const d = new NdjsonDecoder();
        const mid = Math.floor(REC.length / 2);
        expect(d.push(REC.slice(0, mid))).toEqual([]);
        const items = d.push(REC.slice(mid) + "\n");
        expect(items).toHaveLength(1);
        expect(items[0].kind === "event" && items[0].event.kind).toBe("log");
    });

    it("drops a corrupt line without losing the next one", () => {
        const d = new NdjsonDecoder();
        const items = d.push(`{"seq": 1, "broke\n${REC}\n`);
        expect(items).toHaveLength(1);
        expect(items[0].kind).toBe("event");
    });
});

describe("staleness tracking", () => {
    it("is stale before any traffic and after the window lapses", () => {
        const t = new StalenessTracker();
        expect(t.isStale(0)).toBe(true);
        t.seenTraffic(1000);
        expect(t.isStale(1000 + STALE_AFTER_MS)).toBe(false);
        expect(t.isStale(1001 + STALE_AFTER_MS)).toBe(true);
    });
});
