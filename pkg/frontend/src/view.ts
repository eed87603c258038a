// HTML fragments for each dashboard region. Pure string builders so the
// render logic stays testable without a browser.

import type { ConsoleState, LaneTile, SmsLogEntry } from "./model.js";
import { minutesToNextSwitch } from "./model.js";

function esc(s: string): string {
    return s.replace(/[&<>"]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;" })[c]!);
}

export function laneTileHtml(lane: LaneTile): string {
    const status = lane.forced
        ? lane.forced === "on"
            ? "ForcedOn"
            : "ForcedOff"
        : lane.relay === "on"
          ? "On"
          : "Off";
    const cls = `tile lane-${lane.relay}${lane.forced ? " forced" : ""}`;
    const flip = lane.relay === "on" ? "OFF" : "ON";
    return (
        `<div class="${cls}" data-lane="${lane.laneId}">` +
        `<h3>Lane ${lane.laneId}</h3>` +
        `<p class="status">${status}</p>` +
        `<p class="lamps">${lane.lampCount} lamps</p>` +
        `<button data-command="LANE ${lane.laneId} ${flip}">Turn ${flip.toLowerCase()}</button>` +
        `</div>`
    );
}

export function bannerHtml(state: ConsoleState): string {
    if (!state.banner || state.banner.acknowledged) return "";
    return (
        `<div class="fault-banner" role="alert">` +
        `<strong>${esc(state.banner.body)}</strong>` +
        `<span class="ts">${esc(state.banner.ts)}</span>` +
        `<button data-action="ack-fault">Acknowledge</button>` +
        `</div>`
    );
}

export function headerHtml(state: ConsoleState): string {
    const next = minutesToNextSwitch(state);
    const countdown = next ? `${next.event} in ${next.minutes} min` : "–";
    const sleep = state.times.sleep ? ` sleep ${state.times.sleep[0]}–${state.times.sleep[1]}` : "";
    return (
        `<span class="clock">${esc(state.clock)}</span>` +
        `<span class="mode">mode ${state.mode}</span>` +
        `<span class="device">${state.deviceOn ? "device on" : "DEVICE OFF"}</span>` +
        `<span class="times">tonight ${state.times.on}–${state.times.off}${sleep}` +
        ` (${state.times.provenance})</span>` +
        `<span class="next">${countdown}</span>` +
        (state.stale ? `<span class="stale">STALE DATA</span>` : "")
    );
}

export function smsLogHtml(log: SmsLogEntry[]): string {
    // newest last; seq order is the stream order and must be preserved
    return log
        .map(
            (e) =>
                `<li class="sms-${e.direction}">` +
                `<span class="seq">#${e.seq}</span> ` +
                `<span class="dir">${e.direction === "in" ? "←" : "→"}</span> ` +
                `<span class="peer">${esc(e.peer)}</span> ` +
                `<span class="body">${esc(e.body)}</span></li>`,
        )
        .join("");
}
