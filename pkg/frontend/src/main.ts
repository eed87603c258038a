// DOM glue: wires the reducer, the event stream, and the API together.
// State changes render only after the server's events arrive (the reducer
// ignores nothing the server says and invents nothing it does not).

import { StationApi } from "./api.js";
import { baselineKwh, cumulativeKwh } from "./energy.js";
import { initialState, reduce, savingsToDateKwh, type ConsoleState } from "./model.js";
import { buildSettime } from "./settime.js";
import { NdjsonDecoder, STALE_AFTER_MS, StalenessTracker } from "./stream.js";

const api = new StationApi();
let state: ConsoleState = initialState();
const staleness = new StalenessTracker();

function $(id: string): HTMLElement {
    const el = document.getElementById(id);
    if (!el) throw new Error(`missing #${id}`);
    return el;
}

async function render(): Promise<void> {
    const view = await import("./view.js");
    $("header").innerHTML = view.headerHtml(state);
    $("banner").innerHTML = view.bannerHtml(state);
    $("lanes").innerHTML = state.lanes.map(view.laneTileHtml).join("");
    $("sms-log").innerHTML = view.smsLogHtml(state.smsLog);
    $("energy-total").textContent =
        `${state.totalKwh.toFixed(1)} kWh (saved ≈ ` +
        `${savingsToDateKwh(zoneWatts(), nightsElapsed()).toFixed(1)} kWh vs manual)`;
}

function zoneWatts(): number {
    return state.lanes.reduce((w, l) => w + l.lampCount * 25, 0);
}

function nightsElapsed(): number {
    // lit hours so far over a nominal 11 h night
    const litHours = state.totalKwh / Math.max(zoneWatts() / 1000, 1e-9);
    return Math.floor(litHours / 11);
}

function dispatch(action: Parameters<typeof reduce>[1]): void {
    state = reduce(state, action);
    void render();
}

async function drawChart(): Promise<void> {
    const canvas = $("energy-chart") as HTMLCanvasElement;
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    const points = await api.energy(24);
    if (points.length === 0) return;
    const live = cumulativeKwh(points, state.clock || points[points.length - 1].ts);
    const base = baselineKwh(live, zoneWatts());
    const t0 = Date.parse(live[0].ts);
    const t1 = Date.parse(live[live.length - 1].ts) || t0 + 1;
    const maxKwh = Math.max(base[base.length - 1].kwh, 0.001);
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const trace = (series: typeof live, style: string) => {
        ctx.strokeStyle = style;
        ctx.beginPath();
        series.forEach((p, i) => {
            const x = ((Date.parse(p.ts) - t0) / (t1 - t0)) * canvas.width;
            const y = canvas.height - (p.kwh / maxKwh) * canvas.height;
            i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
        });
        ctx.stroke();
    };
    trace(base, "#999");
    trace(live, "#2a7");
}

async function submitCommand(body: string): Promise<void> {
    const outcome = await api.command(body);
    if (!outcome.ok) {
        $("command-error").textContent = outcome.reason ?? "rejected";
    } else {
        $("command-error").textContent = "";
    }
}

function wireForms(): void {
    $("lanes").addEventListener("click", (ev) => {
        const btn = (ev.target as HTMLElement).closest("[data-command]");
        if (btn) void submitCommand(btn.getAttribute("data-command")!);
    });
    $("banner").addEventListener("click", (ev) => {
        const btn = (ev.target as HTMLElement).closest("[data-action='ack-fault']");
        if (btn) dispatch({ type: "acknowledge_fault" });
    });
    ($("mode-select") as HTMLSelectElement).addEventListener("change", (ev) => {
        const mode = (ev.target as HTMLSelectElement).value.toUpperCase();
        void submitCommand(`MODE ${mode}`);
    });
    $("schedule-form").addEventListener("submit", (ev) => {
        ev.preventDefault();
        const get = (id: string) => ($(id) as HTMLInputElement).value.trim();
        const result = buildSettime({
            on: get("sched-on"),
            off: get("sched-off"),
            sleepStart: get("sched-sleep-start") || undefined,
            sleepEnd: get("sched-sleep-end") || undefined,
        });
        if (!result.ok) {
            $("schedule-error").textContent = result.message;
            return;
        }
        $("schedule-error").textContent = "";
        void submitCommand(result.command);
    });
}

async function consumeStream(): Promise<void> {
    for (;;) {
        try {
            const resp = await fetch(api.eventStreamUrl(state.lastSeq));
            const reader = resp.body!.getReader();
            const decoder = new NdjsonDecoder();
            const text = new TextDecoder();
            for (;;) {
                const { value, done } = await reader.read();
                if (done) break;
                staleness.seenTraffic(Date.now());
                for (const item of decoder.push(text.decode(value, { stream: true }))) {
                    dispatch(item.kind === "event" ? { type: "event", event: item.event } : { type: "heartbeat" });
                }
            }
        } catch {
            // fall through to reconnect
        }
        dispatch({ type: "disconnected" });
        await new Promise((r) => setTimeout(r, 1000));
    }
}

async function boot(): Promise<void> {
    wireForms();
    dispatch({ type: "snapshot", snapshot: await api.snapshot() });
    setInterval(() => {
        if (staleness.isStale(Date.now()) && !state.stale) dispatch({ type: "stale" });
    }, STALE_AFTER_MS / 2);
    setInterval(() => void drawChart(), 10_000);
    void drawChart();
    void consumeStream();
}

void boot();
