// Thin wrappers around the station service endpoints.

import type { EnergyPoint, Snapshot } from "./types.js";

export interface CommandOutcome {
    ok: boolean;
    reason?: string;
}

export class StationApi {
    constructor(private readonly base: string = "") {}

    async snapshot(): Promise<Snapshot> {
        const r = await fetch(`${this.base}/api/snapshot`);
        if (!r.ok) throw new Error(`snapshot failed: ${r.status}`);
        return (await r.json()) as Snapshot;
    }

    async command(body: string): Promise<CommandOutcome> {
        const r = await fetch(`${this.base}/api/command`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify({ body }),
        });
        const doc = (await r.json()) as { ok: boolean; reason?: string };
        return { ok: r.ok && doc.ok, reason: doc.reason };
    }

    async energy(windowHours: number): Promise<EnergyPoint[]> {
        const r = await fetch(`${this.base}/api/energy?window=${windowHours}`);
        if (!r.ok) throw new Error(`energy failed: ${r.status}`);
        return (await r.json()) as EnergyPoint[];
    }

    eventStreamUrl(since: number): string {
        return `${this.base}/api/events/stream?since=${since}`;
    }
}
