// Wire types mirroring the station service's JSON responses.

export type Relay = "on" | "off";
export type Mode = "manual" | "semi" | "auto";

export interface LaneSnapshot {
    lane_id: number;
    lamp_count: number;
    relay: Relay;
    override: { forced: Relay } | null;
}

export interface EffectiveTimes {
    on: string;
    off: string;
    sleep: [string, string] | null;
    provenance: "solar" | "preset";
}

export interface Snapshot {
    clock: string;
    mode: Mode;
    device_on: boolean;
    lanes: LaneSnapshot[];
    times: EffectiveTimes;
    power: { v_rms: number; i_rms: number; p_watts: number } | null;
    fault: { active: boolean; below_streak: number };
    seq: number;
    total_kwh: number;
}

export interface StationEvent {
    seq: number;
    ts: string;
    kind:
        | "relay_change"
        | "alert"
        | "sms_in"
        | "sms_out"
        | "mode_change"
        | "fetch"
        | "log";
    payload: Record<string, unknown>;
}

export interface EnergyPoint {
    ts: string;
    watts: number;
}
