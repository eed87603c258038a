"""Operational shell: live station runtime, HTTP API, event log persistence.

One writer (the tick loop) and many readers. Snapshots and event reads are
taken under the runtime lock at tick boundaries; commands queue and apply on
the next tick, in arrival order.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Iterator, Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, StreamingResponse

from .commands import DeviceOn, InboundCommand, Mode, Relay
from .config import ZoneConfig, load_zone_config, zone_config_to_dict
from .controller import (
    Ack,
    AlertSms,
    ControllerState,
    LaneState,
    LogEffect,
    Rejection,
    RelayChange,
    TickInputs,
    control_tick,
)
from .fakemodem import FakeModem
from .gsm import ParseRejection, parse_command_text
from .link import StationLink
from .power import PowerReading
from .sim import EnergyLedger, synthesize_reading
from .solar import EffectiveTimes, MissingTimes, SolarTimes, TimesProvenance, effective_times
from .sim import _acquire_solar  # daily pair acquisition with polar fallback

API_SENDER = "api"


@dataclass
class EventRecord:
    seq: int
    ts: str
    kind: str  # relay_change | sms_in | sms_out | alert | mode_change | fetch | log
    payload: dict

    def to_json(self) -> str:
        return json.dumps(
            {"seq": self.seq, "ts": self.ts, "kind": self.kind, "payload": self.payload},
            sort_keys=True,
        )


class EventLog:
    """Append-only NDJSON event history, replayable after restart."""

    def __init__(self, path: Optional[Path] = None):
        self.path = path
        self.records: list[EventRecord] = []
        self._next_seq = 1
        if path is not None and path.exists():
            self._load(path)
        self._fh = path.open("a") if path is not None else None

    def _load(self, path: Path) -> None:
        good_bytes = 0
        with path.open("r") as fh:
            for line in fh:
                if not line.endswith("\n"):
                    break  # truncated trailing record
                try:
                    doc = json.loads(line)
                    rec = EventRecord(doc["seq"], doc["ts"], doc["kind"], doc["payload"])
                except (ValueError, KeyError):
                    break
                self.records.append(rec)
                good_bytes += len(line.encode("utf-8"))
        raw_len = path.stat().st_size
        if good_bytes < raw_len:
            import logging

            logging.getLogger(__name__).warning(
                "event log %s: truncating %d corrupt trailing bytes", path, raw_len - good_bytes
            )
            with path.open("r+b") as fh:
                fh.truncate(good_bytes)
        if self.records:
            self._next_seq = self.records[-1].seq + 1

    def append(self, ts: datetime, kind: str, payload: dict) -> EventRecord:
        rec = EventRecord(self._next_seq, ts.isoformat(), kind, payload)
        self._next_seq += 1
        self.records.append(rec)
        if self._fh is not None:
            self._fh.write(rec.to_json() + "\n")
            self._fh.flush()
        return rec

    def since(self, seq: int) -> list[EventRecord]:
        return [r for r in self.records if r.seq > seq]


def replay_relays(records: list[EventRecord]) -> dict[int, str]:
    """Final relay state per lane from a relay-change history."""
    out: dict[int, str] = {}
    for rec in records:
        if rec.kind == "relay_change":
            out[rec.payload["lane_id"]] = rec.payload["state"]
    return out


class StationRuntime:
    """The live station: controller plus modem plus clock plus ledger."""

    def __init__(
        self,
        config: ZoneConfig,
        state_dir: Optional[Path] = None,
        start: Optional[datetime] = None,
    ):
        self.config = config
        self.lock = threading.Lock()
        self.clock = start or datetime.now().replace(microsecond=0)
        self.state = ControllerState(
            mode=Mode.FULL_AUTO,
            lanes=[LaneState(l.lane_id, l.lamp_count) for l in config.lanes],
            schedule=config.schedule,
            fault_policy=config.fault_policy,
            lamp_watts=config.lamp_watts,
            clock=self.clock,
        )
        self.modem = FakeModem()
        self.link = StationLink(self.modem, config.whitelist, config.authority_number)
        self.state_dir = state_dir
        if state_dir is not None:
            state_dir.mkdir(parents=True, exist_ok=True)
            if not self._writable(state_dir):
                raise StateDirUnwritable(str(state_dir))
        self.events = EventLog(state_dir / "events.log" if state_dir else None)
        self.ledger = EnergyLedger(self.clock)
        self._ledger_fh = (state_dir / "ledger.csv").open("a") if state_dir else None
        self.failed_lamps = 0  # operator-injectable fault, for demos/tests
        self.solar_cache: Optional[SolarTimes] = None
        self.latest_reading: Optional[PowerReading] = None
        self.pending: list[InboundCommand] = []
        self.event_cv = threading.Condition(self.lock)
        self._fetch_offset = timedelta(minutes=config.schedule.fetch_time.minutes)
        self._refresh_solar()
        if state_dir is not None:
            from .config import save_zone_config

            save_zone_config(config, state_dir / "config.json")

    @staticmethod
    def _writable(d: Path) -> bool:
        probe = d / ".probe"
        try:
            probe.write_text("")
            probe.unlink()
            return True
        except OSError:
            return False

    # -- tick machinery ----------------------------------------------------

    def _op_day(self) -> date:
        return (self.clock - self._fetch_offset).date()

    def _refresh_solar(self) -> None:
        day = self._op_day()
        if self.solar_cache is None or self.solar_cache.day != day:
            fresh = _acquire_solar(self.config, day)
            if fresh is not None:
                self.solar_cache = fresh
                self.events.append(
                    self.clock,
                    "fetch",
                    {
                        "day": day.isoformat(),
                        "sunset": str(fresh.sunset),
                        "sunrise": str(fresh.sunrise_next),
                        "source": fresh.source.value,
                    },
                )

    def _effective(self) -> EffectiveTimes:
        try:
            return effective_times(
                self.state.mode, self.config.schedule, self.solar_cache, self._op_day()
            )
        except MissingTimes:
            sched = self.config.schedule
            return EffectiveTimes(
                sched.preset_on, sched.preset_off, sched.sleep_window, TimesProvenance.PRESET
            )

    def submit(self, command: InboundCommand) -> None:
        with self.lock:
            self.pending.append(command)

    def tick(self, dt_seconds: Optional[int] = None) -> list:
        """Advance one control tick; returns the tick's effects."""
        with self.lock:
            self.clock += timedelta(seconds=dt_seconds or self.config.tick_seconds)
            self._refresh_solar()
            commands = self.link.pump() + self.pending
            self.pending = []
            lit = sum(l.lamp_count for l in self.state.lanes if l.relay is Relay.ON)
            watts = max(lit - min(self.failed_lamps, lit), 0) * self.config.lamp_watts
            reading = synthesize_reading(watts, self.config.line_v_rms, self.clock)
            self.latest_reading = reading
            for ic in commands:
                if ic.source not in (API_SENDER, "cli"):
                    self.events.append(
                        self.clock, "sms_in", {"from": ic.source, "body": ic.command.render()}
                    )
            mode_before = self.state.mode
            effects = control_tick(
                self.state, TickInputs(self.clock, self._effective(), commands, reading)
            )
            lit_post = sum(l.lamp_count for l in self.state.lanes if l.relay is Relay.ON)
            watts_post = max(lit_post - min(self.failed_lamps, lit_post), 0) * self.config.lamp_watts
            self.ledger.record(self.clock, watts_post)
            if self._ledger_fh is not None:
                self._ledger_fh.write(f"{self.clock.isoformat()},{watts_post:.1f}\n")
            self._record_effects(effects, mode_before)
            self.link.pump()
            self.event_cv.notify_all()
            return effects

    def _record_effects(self, effects: list, mode_before: Mode) -> None:
        for eff in effects:
            if isinstance(eff, RelayChange):
                self.events.append(
                    self.clock,
                    "relay_change",
                    {
                        "lane_id": eff.lane_id,
                        "state": eff.relay.value,
                        "reason": eff.reason.value,
                    },
                )
            elif isinstance(eff, AlertSms):
                self.events.append(self.clock, "alert", {"body": eff.alert.body()})
                self.link.send_alert(eff.alert)
                self.events.append(
                    self.clock,
                    "sms_out",
                    {"to": self.config.authority_number, "body": eff.alert.body()},
                )
            elif isinstance(eff, Ack):
                payload = {"source": eff.source, "command": eff.command_text, "ok": True}
                if eff.detail:
                    payload["detail"] = eff.detail
                self.events.append(self.clock, "log", payload)
                if eff.source.startswith("+"):
                    body = f"ACK {eff.command_text}"
                    self.link.send_sms(eff.source, body)
                    self.events.append(self.clock, "sms_out", {"to": eff.source, "body": body})
            elif isinstance(eff, Rejection):
                self.events.append(
                    self.clock,
                    "log",
                    {"source": eff.source, "command": eff.command_text, "ok": False,
                     "reason": eff.reason},
                )
            elif isinstance(eff, LogEffect):
                self.events.append(self.clock, "log", {"message": eff.message})
        if self.state.mode is not mode_before:
            self.events.append(self.clock, "mode_change", {"mode": self.state.mode.value})

    # -- views ----------------------------------------------------------------

    def snapshot(self) -> dict:
        with self.lock:
            eff = self._effective()
            reading = self.latest_reading
            return {
                "clock": self.clock.isoformat(),
                "mode": self.state.mode.value,
                "device_on": self.state.device_on,
                "lanes": [
                    {
                        "lane_id": l.lane_id,
                        "lamp_count": l.lamp_count,
                        "relay": l.relay.value,
                        "override": (
                            {"forced": l.override.forced.value} if l.override else None
                        ),
                    }
                    for l in self.state.lanes
                ],
                "times": {
                    "on": str(eff.on_time),
                    "off": str(eff.off_time),
                    "sleep": (
                        [str(eff.sleep_window[0]), str(eff.sleep_window[1])]
                        if eff.sleep_window
                        else None
                    ),
                    "provenance": eff.provenance.value,
                },
                "power": (
                    {
                        "v_rms": round(reading.v_rms, 2),
                        "i_rms": round(reading.i_rms, 3),
                        "p_watts": round(reading.p_watts, 1),
                    }
                    if reading
                    else None
                ),
                "fault": {
                    "active": self.state.fault_episode.active,
                    "below_streak": self.state.fault_episode.below_streak,
                },
                "seq": self.events.records[-1].seq if self.events.records else 0,
                "total_kwh": round(self.ledger.total_kwh, 6),
            }

    def energy_window(self, hours: float) -> list[dict]:
        with self.lock:
            cutoff = self.clock - timedelta(hours=hours)
            return [
                {"ts": t.isoformat(), "watts": w}
                for t, w in self.ledger.series
                if t >= cutoff
            ]


class StateDirUnwritable(Exception):
    pass


# --- HTTP app ------------------------------------------------------------------


def create_app(runtime: StationRuntime) -> FastAPI:
    app = FastAPI(title="streetlight switching station")
    app.state.runtime = runtime

    @app.get("/api/snapshot")
    def snapshot() -> JSONResponse:
        return JSONResponse(runtime.snapshot())

    @app.post("/api/command")
    async def command(request: Request) -> JSONResponse:
        raw = await request.body()
        try:
            doc = json.loads(raw)
            text = doc["body"] if isinstance(doc, dict) else str(doc)
        except ValueError:
            text = raw.decode("utf-8", "replace")
        try:
            cmd = parse_command_text(text)
        except ParseRejection as rej:
            return JSONResponse(
                {"ok": False, "reason": str(rej), "position": rej.position}, status_code=400
            )
        if not runtime.state.device_on and not isinstance(cmd, DeviceOn):
            return JSONResponse(
                {"ok": False, "reason": "device is off; send DEVICE ON first"}, status_code=409
            )
        runtime.submit(InboundCommand(cmd, API_SENDER))
        return JSONResponse({"ok": True, "command": cmd.render()})

    @app.post("/api/sms")
    async def inject_sms(request: Request) -> JSONResponse:
        doc = json.loads(await request.body())
        runtime.modem.inject_sms(doc["from"], doc["body"])
        return JSONResponse({"ok": True})

    @app.get("/api/events")
    def events(since: int = 0) -> JSONResponse:
        with runtime.lock:
            recs = runtime.events.since(since)
            return JSONResponse(
                [
                    {"seq": r.seq, "ts": r.ts, "kind": r.kind, "payload": r.payload}
                    for r in recs
                ]
            )

    @app.get("/api/events/stream")
    def stream(since: int = 0) -> StreamingResponse:
        def gen() -> Iterator[str]:
            cursor = since
            while True:
                with runtime.event_cv:
                    recs = runtime.events.since(cursor)
                    if not recs:
                        runtime.event_cv.wait(timeout=2.0)
                        recs = runtime.events.since(cursor)
                for r in recs:
                    cursor = r.seq
                    yield r.to_json() + "\n"
                if not recs:
                    yield "\n"  # heartbeat keeps the client's staleness check honest

        return StreamingResponse(gen(), media_type="application/x-ndjson")

    @app.get("/api/energy")
    def energy(window: float = 24.0) -> JSONResponse:
        return JSONResponse(runtime.energy_window(window))

    @app.exception_handler(404)
    async def not_found(request: Request, exc) -> JSONResponse:
        return JSONResponse({"ok": False, "reason": "unknown route"}, status_code=404)

    return app


def serve(
    config_path: str,
    port: int,
    realtime_factor: float = 60.0,
    state_dir: Optional[str] = None,
) -> None:
    """Run the station against wall time, sim clock at realtime_factor speed."""
    import uvicorn

    config = load_zone_config(config_path)
    runtime = StationRuntime(config, Path(state_dir) if state_dir else None)
    app = create_app(runtime)
    stop = threading.Event()

    def loop() -> None:
        period = config.tick_seconds / realtime_factor
        while not stop.is_set():
            runtime.tick()
            stop.wait(period)

    thread = threading.Thread(target=loop, daemon=True)
    thread.start()
    try:
        uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
    finally:
        stop.set()
