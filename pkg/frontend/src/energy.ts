// Cumulative energy series for the chart, derived from the service's
// step-function /api/energy response (watts held constant between points).

import type { EnergyPoint } from "./types.js";

export interface CumulativePoint {
    ts: string;
    kwh: number;
}

export function cumulativeKwh(points: EnergyPoint[], endIso: string): CumulativePoint[] {
    const out: CumulativePoint[] = [];
    let kwh = 0;
    for (let i = 0; i < points.length; i++) {
        out.push({ ts: points[i].ts, kwh });
        const next = i + 1 < points.length ? points[i + 1].ts : endIso;
        const dtH = (Date.parse(next) - Date.parse(points[i].ts)) / 3.6e6;
        if (dtH < 0) throw new Error(`energy series out of order at ${points[i].ts}`);
        kwh += (points[i].watts * dtH) / 1000;
    }
    out.push({ ts: endIso, kwh });
    return out;
}

/**
 * Conventional-baseline curve over the same span: the manual regime kept the
 * whole zone lit whenever the station did, plus 120 extra minutes a night.
 * Rendered as a straight accumulation of the station's curve shifted up by
 * the nightly surplus, which is what the comparison chart needs.
 */
export function baselineKwh(
    station: CumulativePoint[],
    zoneWatts: number,
): CumulativePoint[] {
    if (station.length === 0) return [];
    const startMs = Date.parse(station[0].ts);
    const surplusPerMs = (zoneWatts * 2) / 3.6e9; // 120 min/day at zoneWatts
    return station.map((p) => ({
        ts: p.ts,
        kwh: p.kwh + (Date.parse(p.ts) - startMs) * (surplusPerMs / 24),
    }));
}
