"""Deterministic zone simulation: the virtual Mirpur switching station.

One run drives a virtual clock at tick resolution over the scenario's days,
feeding the controller synthetic CT/PT readings and a fake modem, and keeps a
tick-exact energy ledger. Identical (config, scenario, seed) inputs produce a
byte-identical report.
"""

from __future__ import annotations

import io
import json
import math
import random
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from typing import Optional

from .commands import InboundCommand, Mode, Relay
from .config import ConfigError, FaultEvent, OperatorLag, Scenario, ZoneConfig
from .controller import (
    Ack,
    AlertSms,
    ControllerState,
    LaneState,
    Rejection,
    RelayChange,
    TickInputs,
    control_tick,
    format_effect,
)
from .fakemodem import FakeModem
from .gsm import LinkState
from .link import StationLink

_NO_COMMANDS: list[InboundCommand] = []  # shared, never mutated
from .power import (
    DEFAULT_SAMPLE_RATE_HZ,
    DEFAULT_WINDOW_CYCLES,
    LINE_FREQ_HZ,
    PowerReading,
    PowerSample,
    SensorRatios,
    compute_power,
)
from .solar import (
    EffectiveTimes,
    MissingTimes,
    NoSolarEvent,
    SolarTimes,
    TimesProvenance,
    compute_solar_times,
    effective_times,
)
from .times import TimeOfDay


class UnorderedSeries(Exception):
    pass


class EnergyLedger:
    """Step-function record of zone power, integrated incrementally.

    The series stores one point per power change; between points the zone
    draws a constant wattage, so the incremental sum is exact at tick
    resolution.
    """

    def __init__(self, start: datetime):
        self.start = start
        self.series: list[tuple[datetime, float]] = []
        self.end: Optional[datetime] = None
        self.total_kwh = 0.0
        self._last_t = start
        self._last_w: Optional[float] = None
        self._elapsed_s = 0.0
        self._hourly_ws: dict[int, float] = {}

    def record(self, t: datetime, watts: float, dt_s: Optional[float] = None) -> None:
        """Power from t onward; dt_s, when given, skips the datetime math.

        Ticks never straddle an hour boundary (tick_seconds divides 60), so a
        known dt_s may be attributed to a single hourly bucket.
        """
        if self._last_w is None:
            self._elapsed_s = (t - self.start).total_seconds()
        else:
            self._accumulate(t, dt_s)
            self._elapsed_s += (
                dt_s if dt_s is not None else (t - self._last_t).total_seconds()
            )
        if self._last_w != watts:
            self.series.append((t, watts))
        self._last_w = watts
        self._last_t = t

    def close(self, t_end: datetime) -> None:
        if self._last_w is not None:
            self._accumulate(t_end, None)
        self.end = t_end

    def _accumulate(self, t: datetime, dt_s: Optional[float]) -> None:
        w = self._last_w or 0.0
        if dt_s is not None:
            self.total_kwh += w * dt_s / 3.6e6
            bucket = int(self._elapsed_s) // 3600
            self._hourly_ws[bucket] = self._hourly_ws.get(bucket, 0.0) + w * dt_s
            return
        dt_s = (t - self._last_t).total_seconds()
        if dt_s < 0:
            raise UnorderedSeries(f"{t} precedes {self._last_t}")
        if dt_s == 0:
            return
        self.total_kwh += w * dt_s / 3.6e6
        # split watt-seconds across hour buckets for the hourly curve
        t0 = self._last_t
        while t0 < t:
            bucket = int((t0 - self.start).total_seconds() // 3600)
            bucket_end = self.start + timedelta(hours=bucket + 1)
            seg_end = min(t, bucket_end)
            self._hourly_ws[bucket] = self._hourly_ws.get(bucket, 0.0) + w * (
                seg_end - t0
            ).total_seconds()
            t0 = seg_end

    def hourly_curve(self) -> list[tuple[str, float]]:
        """(hour start ISO, average watts) over the run."""
        out = []
        for bucket in sorted(self._hourly_ws):
            ts = self.start + timedelta(hours=bucket)
            out.append((ts.isoformat(), self._hourly_ws[bucket] / 3600.0))
        return out


def energy_integrate(
    series: list[tuple[datetime, float]], end: datetime
) -> float:
    """Left-rectangle integral of a (timestamp, watts) step series, in kWh.

    Independent of the ledger's incremental accumulation; used to cross-check
    it.
    """
    total_ws = 0.0
    prev_t: Optional[datetime] = None
    prev_w = 0.0
    for t, w in series:
        if prev_t is not None:
            dt_s = (t - prev_t).total_seconds()
            if dt_s < 0:
                raise UnorderedSeries(f"{t} precedes {prev_t}")
            total_ws += prev_w * dt_s
        prev_t, prev_w = t, w
    if prev_t is not None:
        dt_s = (end - prev_t).total_seconds()
        if dt_s < 0:
            raise UnorderedSeries("end precedes last sample")
        total_ws += prev_w * dt_s
    return total_ws / 3.6e6


# --- conventional operator ------------------------------------------------------


def conventional_operator_model(
    seed: int,
    lag: OperatorLag,
    solar_days: list[SolarTimes],
) -> list[tuple[int, int]]:
    """Per-day actual switch times under the roaming human operator.

    Returns, for each day, minutes-of-day for the evening on-switch and the
    next morning's off-switch: on at sunset - early (+jitter), off at sunrise
    + late (+jitter). Jitter is uniform in [-j, +j], drawn from the run seed.
    """
    rng = random.Random(seed)
    out = []
    for st in solar_days:
        j_on = rng.uniform(-lag.jitter_minutes, lag.jitter_minutes) if lag.jitter_minutes else 0.0
        j_off = rng.uniform(-lag.jitter_minutes, lag.jitter_minutes) if lag.jitter_minutes else 0.0
        on_m = st.sunset.minutes - lag.early_on_minutes + j_on
        off_m = st.sunrise_next.minutes + lag.late_off_minutes + j_off
        out.append((int(round(on_m)) % 1440, int(round(off_m)) % 1440))
    return out


# --- synthetic waveforms -----------------------------------------------------------


def synthesize_reading(
    zone_watts: float,
    line_v_rms: float,
    window_end: datetime,
    rng: Optional[random.Random] = None,
    noise_sigma: float = 0.0,
) -> PowerReading:
    """CT/PT path exercised end to end: sample ideal sines, then recover power."""
    ratios = SensorRatios()
    n = int(DEFAULT_SAMPLE_RATE_HZ / LINE_FREQ_HZ * DEFAULT_WINDOW_CYCLES)
    v_amp_sec = line_v_rms * math.sqrt(2) / ratios.pt_ratio
    i_amp_sec = (zone_watts / line_v_rms if line_v_rms else 0.0) * math.sqrt(2) / ratios.ct_ratio
    w = 2.0 * math.pi * LINE_FREQ_HZ / DEFAULT_SAMPLE_RATE_HZ
    v = [v_amp_sec * math.sin(w * k) for k in range(n)]
    i = [i_amp_sec * math.sin(w * k) for k in range(n)]
    if noise_sigma > 0.0 and rng is not None:
        v = [x + rng.gauss(0.0, noise_sigma) for x in v]
        i = [x + rng.gauss(0.0, noise_sigma) for x in i]
    sample = PowerSample(v, i)
    return compute_power(sample, ratios, window_end=window_end)


# --- report -------------------------------------------------------------------------


@dataclass
class ScenarioResult:
    name: str
    start_date: str
    duration_days: int
    total_kwh: float
    per_lane_kwh: dict[str, float]
    hourly_watts: list[tuple[str, float]]
    alert_log: list[str]
    relay_log: list[str]
    sms_sent: list[dict]


@dataclass
class SimReport:
    scenarios: list[ScenarioResult]
    savings_percent: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "scenarios": [
                {
                    "name": s.name,
                    "start_date": s.start_date,
                    "duration_days": s.duration_days,
                    "total_kwh": round(s.total_kwh, 6),
                    "per_lane_kwh": {k: round(v, 6) for k, v in sorted(s.per_lane_kwh.items())},
                    "hourly_watts": [[t, round(w, 3)] for t, w in s.hourly_watts],
                    "alert_log": s.alert_log,
                    "relay_log": s.relay_log,
                    "sms_sent": s.sms_sent,
                }
                for s in self.scenarios
            ],
            "savings_percent": (
                round(self.savings_percent, 4) if self.savings_percent is not None else None
            ),
        }


class UnknownFormat(Exception):
    pass


def emit_report(report: SimReport, fmt: str) -> str:
    """Render the run: json for machines, csv for plotting, table for eyes."""
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("scenario,hour,avg_watts\n")
        for s in report.scenarios:
            for t, w in s.hourly_watts:
                buf.write(f"{s.name},{t},{w:.3f}\n")
        return buf.getvalue()
    if fmt == "table":
        lines = ["scenario        days   total kWh   alerts"]
        for s in report.scenarios:
            lines.append(
                f"{s.name:<14} {s.duration_days:>5} {s.total_kwh:>11.3f} {len(s.alert_log):>8}"
            )
        if report.savings_percent is not None:
            lines.append(f"savings: {report.savings_percent:.2f} %")
        return "\n".join(lines) + "\n"
    raise UnknownFormat(fmt)


# --- the simulation loop -----------------------------------------------------------


def _failed_lamps_at(script: list[FaultEvent], t: datetime) -> int:
    failed = 0
    for ev in script:
        if ev.at <= t:
            failed = ev.lamps_failed
    return failed


def _acquire_solar(cfg: ZoneConfig, day: date) -> Optional[SolarTimes]:
    try:
        return compute_solar_times(cfg.location, day)
    except (NoSolarEvent, ValueError):
        return None


def run_scenario(
    config: ZoneConfig,
    scenario: Scenario,
    inject_sms: Optional[list[tuple[datetime, str, str]]] = None,
) -> ScenarioResult:
    """Run one scenario to completion and summarize it.

    inject_sms is a test hook: (when, sender, body) triples delivered through
    the fake modem at the given sim times.
    """
    if scenario.kind == "conventional":
        return _run_conventional(config, scenario)
    return _run_controlled(config, scenario, inject_sms or [])


def _run_conventional(cfg: ZoneConfig, sc: Scenario) -> ScenarioResult:
    """Manual regime: a human switches the whole zone, sun be damned."""
    days = [
        compute_solar_times(cfg.location, sc.start_date + timedelta(days=k - 1))
        for k in range(sc.duration_days + 1)
    ]
    # index 0 covers the night that began the evening before start
    switches = conventional_operator_model(cfg.rng_seed, sc.operator_lag, days)
    start = datetime.combine(sc.start_date, datetime.min.time())
    end = start + timedelta(days=sc.duration_days)
    ledger = EnergyLedger(start)
    tick = timedelta(seconds=cfg.tick_seconds)
    total_lamps = cfg.total_lamps
    lane_on_s = {l.lane_id: 0.0 for l in cfg.lanes}
    relay_log: list[str] = []
    was_on = False

    n_ticks = int((end - start) / tick)
    for k in range(n_ticks):
        t = start + k * tick
        day_idx = (t.date() - sc.start_date).days
        tod = t.hour * 60 + t.minute
        on_m, _ = switches[day_idx + 1]
        _, off_m = switches[day_idx]
        # evening switch-on belongs to today's operator round; the morning
        # switch-off closes the previous night's round
        lit = tod >= on_m or tod < off_m
        failed = _failed_lamps_at(sc.fault_script, t)
        watts = max(total_lamps - failed, 0) * cfg.lamp_watts if lit else 0.0
        ledger.record(t, watts)
        if lit:
            for l in cfg.lanes:
                lane_on_s[l.lane_id] += cfg.tick_seconds
        if lit != was_on:
            for l in cfg.lanes:
                relay_log.append(
                    f"{t.isoformat()} relay lane={l.lane_id} "
                    f"state={'on' if lit else 'off'} reason=manual"
                )
            was_on = lit
    ledger.close(end)
    return ScenarioResult(
        name="conventional",
        start_date=sc.start_date.isoformat(),
        duration_days=sc.duration_days,
        total_kwh=ledger.total_kwh,
        per_lane_kwh={
            str(l.lane_id): lane_on_s[l.lane_id] * l.lamp_count * cfg.lamp_watts / 3.6e6
            for l in cfg.lanes
        },
        hourly_watts=ledger.hourly_curve(),
        alert_log=[],
        relay_log=relay_log,
        sms_sent=[],
    )


def _run_controlled(
    cfg: ZoneConfig, sc: Scenario, inject_sms: list[tuple[datetime, str, str]]
) -> ScenarioResult:
    start = datetime.combine(sc.start_date, datetime.min.time())
    end = start + timedelta(days=sc.duration_days)
    tick = timedelta(seconds=cfg.tick_seconds)
    rng = random.Random(cfg.rng_seed)

    state = ControllerState(
        mode=sc.initial_mode if sc.kind == "custom" else Mode.FULL_AUTO,
        lanes=[LaneState(l.lane_id, l.lamp_count) for l in cfg.lanes],
        schedule=cfg.schedule,
        fault_policy=cfg.fault_policy,
        lamp_watts=cfg.lamp_watts,
        clock=start,
    )
    modem = FakeModem()
    link = StationLink(modem, cfg.whitelist, cfg.authority_number)
    ledger = EnergyLedger(start)
    lane_on_s = {l.lane_id: 0.0 for l in cfg.lanes}
    relay_log: list[str] = []
    alert_log: list[str] = []

    fetch_offset = timedelta(minutes=cfg.schedule.fetch_time.minutes)
    solar_cache: Optional[SolarTimes] = _acquire_solar(cfg, (start - fetch_offset).date())
    pending_sms = sorted(inject_sms, key=lambda x: x[0])
    sms_i = 0

    n_ticks = int((end - start) / tick)
    preset_fallback = EffectiveTimes(
        cfg.schedule.preset_on,
        cfg.schedule.preset_off,
        cfg.schedule.sleep_window,
        TimesProvenance.PRESET,
    )
    times_cache: Optional[EffectiveTimes] = None
    times_cache_key = None
    # noiseless synthetic readings depend only on load; reuse per watt level
    reading_cache: dict[float, PowerReading] = {}

    tick_s = cfg.tick_seconds
    ticks_per_day = 86400 // tick_s
    fetch_s = cfg.schedule.fetch_time.minutes * 60
    op_day_idx: Optional[int] = None
    op_day = (start - fetch_offset).date()
    session = link.session

    for k in range(n_ticks):
        t = start + k * tick
        sec_of_day = (k % ticks_per_day) * tick_s
        idx = k // ticks_per_day - (1 if sec_of_day < fetch_s else 0)
        if idx != op_day_idx:
            op_day_idx = idx
            op_day = sc.start_date + timedelta(days=idx)
            if solar_cache is None or solar_cache.day != op_day:
                fresh = _acquire_solar(cfg, op_day)
                if fresh is not None:
                    solar_cache = fresh
                    times_cache_key = None

        # deliver scripted SMS due this tick
        while sms_i < len(pending_sms) and pending_sms[sms_i][0] <= t:
            _, sender, body = pending_sms[sms_i]
            modem.inject_sms(sender, body)
            sms_i += 1
        if modem._tx or session.outbox or session.state is not LinkState.IDLE:
            commands = link.pump()
        else:
            commands = _NO_COMMANDS

        key = (state.mode, id(solar_cache), op_day)
        if times_cache is None or key != times_cache_key:
            try:
                times_cache = effective_times(state.mode, cfg.schedule, solar_cache, op_day)
            except MissingTimes:
                times_cache = preset_fallback
            times_cache_key = key

        lit = sum(l.lamp_count for l in state.lanes if l.relay is Relay.ON)
        failed = _failed_lamps_at(sc.fault_script, t)
        measured_watts = max(lit - min(failed, lit), 0) * cfg.lamp_watts
        if cfg.synthesize_waveforms:
            if cfg.waveform_noise > 0.0:
                reading = synthesize_reading(
                    measured_watts, cfg.line_v_rms, t, rng, cfg.waveform_noise
                )
            else:
                cached = reading_cache.get(measured_watts)
                if cached is None:
                    cached = synthesize_reading(measured_watts, cfg.line_v_rms, t)
                    reading_cache[measured_watts] = cached
                reading = PowerReading(cached.v_rms, cached.i_rms, cached.p_watts, t)
        else:
            reading = PowerReading(
                v_rms=cfg.line_v_rms,
                i_rms=measured_watts / cfg.line_v_rms,
                p_watts=measured_watts,
                window_end=t,
            )

        effects = control_tick(state, TickInputs(t, times_cache, commands, reading))

        # relay switches take effect for the tick interval just opened
        lit_post = sum(l.lamp_count for l in state.lanes if l.relay is Relay.ON)
        actual_watts = max(lit_post - min(failed, lit_post), 0) * cfg.lamp_watts
        ledger.record(t, actual_watts, dt_s=tick_s)
        for l in state.lanes:
            if l.relay is Relay.ON:
                lane_on_s[l.lane_id] += cfg.tick_seconds

        for eff in effects:
            if isinstance(eff, RelayChange):
                relay_log.append(format_effect(t, eff))
            elif isinstance(eff, AlertSms):
                alert_log.append(format_effect(t, eff))
                link.send_alert(eff.alert)
            elif isinstance(eff, Ack) and eff.source.startswith("+"):
                body = f"ACK {eff.command_text}"
                if eff.detail:
                    body = f"{body} {eff.detail}"[:160]
                link.send_sms(eff.source, body)
            elif isinstance(eff, Rejection) and eff.source.startswith("+"):
                link.send_sms(eff.source, f"REJECT {eff.reason}"[:160])
        if effects:
            link.pump()
    link.pump()
    ledger.close(end)

    return ScenarioResult(
        name=sc.kind,
        start_date=sc.start_date.isoformat(),
        duration_days=sc.duration_days,
        total_kwh=ledger.total_kwh,
        per_lane_kwh={
            str(l.lane_id): lane_on_s[l.lane_id] * l.lamp_count * cfg.lamp_watts / 3.6e6
            for l in state.lanes
        },
        hourly_watts=ledger.hourly_curve(),
        alert_log=alert_log,
        relay_log=relay_log,
        sms_sent=[{"to": s.recipient, "body": s.body} for s in modem.sent],
    )


def compare_scenarios(config: ZoneConfig, scenario_days: int, start: date) -> SimReport:
    """Both regimes over the same dates; savings relative to the manual regime."""
    conv = run_scenario(config, Scenario("conventional", start, scenario_days))
    prop = run_scenario(config, Scenario("proposed", start, scenario_days))
    savings = None
    if conv.total_kwh > 0:
        savings = (conv.total_kwh - prop.total_kwh) / conv.total_kwh * 100.0
    return SimReport([conv, prop], savings_percent=savings)
