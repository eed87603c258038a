"""Minute-resolution clock times and wrap-around interval logic."""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timedelta

_HHMM = re.compile(r"^([01]?\d|2[0-3]):([0-5]\d)$")


@dataclass(frozen=True, order=True)
class TimeOfDay:
    """Minutes since local midnight, in [0, 1440)."""

    minutes: int

    def __post_init__(self) -> None:
        if not 0 <= self.minutes < 1440:
            raise ValueError(f"minutes out of range: {self.minutes}")

    @classmethod
    def of(cls, hour: int, minute: int = 0) -> "TimeOfDay":
        return cls(hour * 60 + minute)

    @classmethod
    def parse(cls, text: str) -> "TimeOfDay":
        m = _HHMM.match(text)
        if m is None:
            raise ValueError(f"not an HH:MM time: {text!r}")
        return cls(int(m.group(1)) * 60 + int(m.group(2)))

    @classmethod
    def from_datetime(cls, dt: datetime) -> "TimeOfDay":
        return cls(dt.hour * 60 + dt.minute)

    @property
    def hour(self) -> int:
        return self.minutes // 60

    @property
    def minute(self) -> int:
        return self.minutes % 60

    def __str__(self) -> str:
        return f"{self.hour:02d}:{self.minute:02d}"


def in_interval(now: TimeOfDay, start: TimeOfDay, end: TimeOfDay) -> bool:
    """Half-open membership now ∈ [start, end) with wrap past midnight.

    start == end denotes the empty interval, never the full day.
    """
    if start == end:
        return False
    if start < end:
        return start <= now < end
    return now >= start or now < end


class Rtc:
    """Battery-backed clock model: civil time plus optional drift.

    drift_seconds_per_day models a cheap crystal; positive drift makes the
    clock run fast relative to the reference it was set from.
    """

    def __init__(self, now: datetime, drift_seconds_per_day: float = 0.0):
        self._now = now
        self._drift = drift_seconds_per_day

    @property
    def now(self) -> datetime:
        return self._now

    def tick(self, dt: timedelta) -> datetime:
        if dt <= timedelta(0):
            raise ValueError("tick duration must be positive")
        scale = 1.0 + self._drift / 86400.0
        self._now = self._now + dt * scale
        return self._now

    def set(self, now: datetime) -> None:
        self._now = now
