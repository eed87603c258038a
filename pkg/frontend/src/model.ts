// Console view-model: a pure reducer over snapshot + event-stream input.
//
// Render-only by design: nothing in here mutates station state. All writes
// go through POST /api/command, and the UI reflects a change only after the
// corresponding event arrives back on the stream (no optimistic updates).

import type { Mode, Relay, Snapshot, StationEvent } from "./types.js";

export interface LaneTile {
    laneId: number;
    lampCount: number;
    relay: Relay;
    forced: Relay | null; // non-null renders as ForcedOn/ForcedOff
}

export interface SmsLogEntry {
    seq: number;
    ts: string;
    direction: "in" | "out";
    peer: string;
    body: string;
}

export interface FaultBanner {
    body: string;
    ts: string;
    acknowledged: boolean;
}

export interface ConsoleState {
    connected: boolean;
    stale: boolean;
    clock: string;
    mode: Mode;
    deviceOn: boolean;
    lanes: LaneTile[];
    times: Snapshot["times"];
    powerWatts: number | null;
    totalKwh: number;
    banner: FaultBanner | null;
    smsLog: SmsLogEntry[];
    lastSeq: number;
}

export const SMS_LOG_LIMIT = 200;

export type ConsoleAction =
    | { type: "snapshot"; snapshot: Snapshot }
    | { type: "event"; event: StationEvent }
    | { type: "heartbeat" }
    | { type: "disconnected" }
    | { type: "stale" }
    | { type: "acknowledge_fault" };

export function initialState(): ConsoleState {
    return {
        connected: false,
        stale: true,
        clock: "",
        mode: "auto",
        deviceOn: true,
        lanes: [],
        times: { on: "18:00", off: "06:00", sleep: null, provenance: "preset" },
        powerWatts: null,
        totalKwh: 0,
        banner: null,
        smsLog: [],
        lastSeq: 0,
    };
}

export function reduce(state: ConsoleState, action: ConsoleAction): ConsoleState {
    switch (action.type) {
        case "snapshot":
            return applySnapshot(state, action.snapshot);
        case "event":
            return applyEvent(state, action.event);
        case "heartbeat":
            return { ...state, connected: true, stale: false };
        case "disconnected":
            return { ...state, connected: false, stale: true };
        case "stale":
            return { ...state, stale: true };
        case "acknowledge_fault":
            return state.banner
                ? { ...state, banner: { ...state.banner, acknowledged: true } }
                : state;
    }
}

function applySnapshot(state: ConsoleState, snap: Snapshot): ConsoleState {
    return {
        ...state,
        connected: true,
        stale: false,
        clock: snap.clock,
        mode: snap.mode,
        deviceOn: snap.device_on,
        lanes: snap.lanes.map((l) => ({
            laneId: l.lane_id,
            lampCount: l.lamp_count,
            relay: l.relay,
            forced: l.override ? l.override.forced : null,
        })),
        times: snap.times,
        powerWatts: snap.power ? snap.power.p_watts : null,
        totalKwh: snap.total_kwh,
        lastSeq: Math.max(state.lastSeq, snap.seq),
    };
}

function applyEvent(state: ConsoleState, ev: StationEvent): ConsoleState {
    if (ev.seq <= state.lastSeq) {
        return state; // replays and reconnect overlap are idempotent
    }
    const next: ConsoleState = {
        ...state,
        connected: true,
        stale: false,
        clock: ev.ts,
        lastSeq: ev.seq,
    };
    switch (ev.kind) {
        case "relay_change": {
            const laneId = ev.payload["lane_id"] as number;
            const relay = ev.payload["state"] as Relay;
            const reason = ev.payload["reason"] as string;
            next.lanes = state.lanes.map((l) =>
                l.laneId === laneId
                    ? { ...l, relay, forced: reason === "override" ? relay : null }
                    : l,
            );
            return next;
        }
        case "alert": {
            next.banner = {
                body: ev.payload["body"] as string,
                ts: ev.ts,
                acknowledged: false,
            };
            return next;
        }
        case "sms_in":
        case "sms_out": {
            const entry: SmsLogEntry = {
                seq: ev.seq,
                ts: ev.ts,
                direction: ev.kind === "sms_in" ? "in" : "out",
                peer: (ev.payload[ev.kind === "sms_in" ? "from" : "to"] as string) ?? "",
                body: (ev.payload["body"] as string) ?? "",
            };
            next.smsLog = [...state.smsLog, entry].slice(-SMS_LOG_LIMIT);
            return next;
        }
        case "mode_change":
            next.mode = ev.payload["mode"] as Mode;
            return next;
        case "fetch":
        case "log":
            return next;
    }
}

// -- derived fields ----------------------------------------------------------

function parseHm(hm: string): number {
    const [h, m] = hm.split(":").map(Number);
    return h * 60 + m;
}

/** Minutes until the next scheduled on or off boundary, from an ISO clock. */
export function minutesToNextSwitch(state: ConsoleState): {
    event: "on" | "off";
    minutes: number;
} | null {
    if (!state.clock) return null;
    const t = new Date(state.clock);
    const now = t.getHours() * 60 + t.getMinutes();
    const onM = parseHm(state.times.on);
    const offM = parseHm(state.times.off);
    const untilOn = (onM - now + 1440) % 1440;
    const untilOff = (offM - now + 1440) % 1440;
    return untilOn <= untilOff
        ? { event: "on", minutes: untilOn }
        : { event: "off", minutes: untilOff };
}

/**
 * Energy saved so far versus the conventional regime, which ran the same
 * zone 120 extra minutes per night (lit 30 min before dark, off 90 min
 * after dawn).
 */
export function savingsToDateKwh(zoneWatts: number, nightsElapsed: number): number {
    const extraKwhPerNight = (zoneWatts * 120) / 60 / 1000;
    return nightsElapsed * extraKwhPerNight;
}
