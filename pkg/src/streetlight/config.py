"""Zone and scenario configuration, with JSON round-trip for files on disk."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Optional

from .commands import Mode
from .power import FaultPolicy
from .solar import GeoLocation, ScheduleTable
from .times import TimeOfDay


class ConfigError(Exception):
    pass


@dataclass
class LaneSpec:
    lane_id: int
    lamp_count: int


@dataclass
class ZoneConfig:
    """Identity of one deployed switching station."""

    location: GeoLocation
    lanes: list[LaneSpec]
    schedule: ScheduleTable
    fault_policy: FaultPolicy = field(default_factory=FaultPolicy)
    lamp_watts: float = 25.0
    line_v_rms: float = 230.0
    whitelist: set[str] = field(default_factory=set)
    authority_number: str = "+8801700000000"
    tick_seconds: int = 30
    rng_seed: int = 0
    synthesize_waveforms: bool = True
    waveform_noise: float = 0.0  # gaussian sigma on secondary-side samples

    def __post_init__(self) -> None:
        if not self.lanes or sum(l.lamp_count for l in self.lanes) <= 0:
            raise ConfigError("zone must contain at least one lamp")
        if self.tick_seconds <= 0 or 60 % self.tick_seconds != 0:
            raise ConfigError("tick_seconds must divide 60")

    @property
    def total_lamps(self) -> int:
        return sum(l.lamp_count for l in self.lanes)


@dataclass
class OperatorLag:
    """How late the human operator runs relative to the sun."""

    early_on_minutes: float = 30.0
    late_off_minutes: float = 90.0
    jitter_minutes: float = 15.0

    def __post_init__(self) -> None:
        if min(self.early_on_minutes, self.late_off_minutes, self.jitter_minutes) < 0:
            raise ConfigError("operator lag parameters must be non-negative")


@dataclass
class FaultEvent:
    at: datetime
    lamps_failed: int  # absolute failed-lamp count from this instant on


@dataclass
class Scenario:
    kind: str  # "conventional" | "proposed" | "custom"
    start_date: date
    duration_days: int
    operator_lag: OperatorLag = field(default_factory=OperatorLag)
    fault_script: list[FaultEvent] = field(default_factory=list)
    initial_mode: Mode = Mode.FULL_AUTO

    def __post_init__(self) -> None:
        if self.kind not in ("conventional", "proposed", "custom"):
            raise ConfigError(f"unknown scenario kind {self.kind!r}")
        if self.duration_days < 1:
            raise ConfigError("duration must be at least one day")


def mirpur_default() -> ZoneConfig:
    """The deployed station: 300 lamps over four lanes in Mirpur, Dhaka."""
    return ZoneConfig(
        location=GeoLocation(23.79, 90.40, 6 * 60),
        lanes=[LaneSpec(i, 75) for i in (1, 2, 3, 4)],
        schedule=ScheduleTable(TimeOfDay.parse("18:00"), TimeOfDay.parse("06:00")),
        whitelist={"+8801711111111"},
    )


# --- JSON (de)serialization ---------------------------------------------------


def zone_config_to_dict(cfg: ZoneConfig) -> dict:
    return {
        "location": {
            "latitude": cfg.location.latitude,
            "longitude": cfg.location.longitude,
            "utc_offset_minutes": cfg.location.utc_offset_minutes,
        },
        "lanes": [{"lane_id": l.lane_id, "lamp_count": l.lamp_count} for l in cfg.lanes],
        "schedule": {
            "preset_on": str(cfg.schedule.preset_on),
            "preset_off": str(cfg.schedule.preset_off),
            "sleep_window": (
                [str(cfg.schedule.sleep_window[0]), str(cfg.schedule.sleep_window[1])]
                if cfg.schedule.sleep_window
                else None
            ),
            "fetch_time": str(cfg.schedule.fetch_time),
        },
        "fault_policy": {
            "threshold_ratio": cfg.fault_policy.threshold_ratio,
            "debounce_ticks": cfg.fault_policy.debounce_ticks,
            "realert_hours": cfg.fault_policy.realert_interval.total_seconds() / 3600.0,
        },
        "lamp_watts": cfg.lamp_watts,
        "line_v_rms": cfg.line_v_rms,
        "whitelist": sorted(cfg.whitelist),
        "authority_number": cfg.authority_number,
        "tick_seconds": cfg.tick_seconds,
        "rng_seed": cfg.rng_seed,
        "synthesize_waveforms": cfg.synthesize_waveforms,
        "waveform_noise": cfg.waveform_noise,
    }


def zone_config_from_dict(doc: dict) -> ZoneConfig:
    try:
        loc = doc["location"]
        sched = doc["schedule"]
        sleep = sched.get("sleep_window")
        fp = doc.get("fault_policy", {})
        return ZoneConfig(
            location=GeoLocation(
                loc["latitude"], loc["longitude"], loc["utc_offset_minutes"]
            ),
            lanes=[LaneSpec(l["lane_id"], l["lamp_count"]) for l in doc["lanes"]],
            schedule=ScheduleTable(
                TimeOfDay.parse(sched["preset_on"]),
                TimeOfDay.parse(sched["preset_off"]),
                (TimeOfDay.parse(sleep[0]), TimeOfDay.parse(sleep[1])) if sleep else None,
                TimeOfDay.parse(sched.get("fetch_time", "10:00")),
            ),
            fault_policy=FaultPolicy(
                fp.get("threshold_ratio", 0.80),
                fp.get("debounce_ticks", 3),
                timedelta(hours=fp.get("realert_hours", 6.0)),
            ),
            lamp_watts=doc.get("lamp_watts", 25.0),
            line_v_rms=doc.get("line_v_rms", 230.0),
            whitelist=set(doc.get("whitelist", [])),
            authority_number=doc.get("authority_number", "+8801700000000"),
            tick_seconds=doc.get("tick_seconds", 30),
            rng_seed=doc.get("rng_seed", 0),
            synthesize_waveforms=doc.get("synthesize_waveforms", True),
            waveform_noise=doc.get("waveform_noise", 0.0),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad zone config: {exc}") from exc


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "kind": sc.kind,
        "start_date": sc.start_date.isoformat(),
        "duration_days": sc.duration_days,
        "operator_lag": {
            "early_on_minutes": sc.operator_lag.early_on_minutes,
            "late_off_minutes": sc.operator_lag.late_off_minutes,
            "jitter_minutes": sc.operator_lag.jitter_minutes,
        },
        "fault_script": [
            {"at": ev.at.isoformat(), "lamps_failed": ev.lamps_failed} for ev in sc.fault_script
        ],
        "initial_mode": sc.initial_mode.value,
    }


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        lag = doc.get("operator_lag", {})
        return Scenario(
            kind=doc["kind"],
            start_date=date.fromisoformat(doc["start_date"]),
            duration_days=doc["duration_days"],
            operator_lag=OperatorLag(
                lag.get("early_on_minutes", 30.0),
                lag.get("late_off_minutes", 90.0),
                lag.get("jitter_minutes", 15.0),
            ),
            fault_script=[
                FaultEvent(datetime.fromisoformat(ev["at"]), ev["lamps_failed"])
                for ev in doc.get("fault_script", [])
            ],
            initial_mode=Mode(doc.get("initial_mode", "auto")),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad scenario: {exc}") from exc


def load_zone_config(path: str | Path) -> ZoneConfig:
    return zone_config_from_dict(json.loads(Path(path).read_text()))


def save_zone_config(cfg: ZoneConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(zone_config_to_dict(cfg), indent=2, sort_keys=True) + "\n")


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))
