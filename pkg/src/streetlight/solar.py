"""Sunset/sunrise acquisition: on-device computation, HTTP fetch, daily cache.

The switching station needs one pair per day: sunset of day D and sunrise of
day D+1. The pair may be downloaded from a small JSON endpoint or computed
locally from the station's coordinates.
"""

from __future__ import annotations

import json
import math
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from enum import Enum
from typing import Optional

from .times import TimeOfDay

SUN_ALTITUDE_AT_RISE_SET = -0.833  # geometric horizon + refraction, degrees


@dataclass(frozen=True)
class GeoLocation:
    latitude: float
    longitude: float
    utc_offset_minutes: int

    def __post_init__(self) -> None:
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude out of range: {self.latitude}")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude out of range: {self.longitude}")
        if not -840 <= self.utc_offset_minutes <= 840:
            raise ValueError(f"utc offset out of range: {self.utc_offset_minutes}")


class SolarSource(Enum):
    COMPUTED = "computed"
    FETCHED = "fetched"


@dataclass(frozen=True)
class SolarTimes:
    """Sunset of `day` paired with sunrise of the following day."""

    day: date
    sunset: TimeOfDay
    sunrise_next: TimeOfDay
    source: SolarSource
    acquired_at: Optional[datetime] = None


class NoEventKind(Enum):
    POLAR_DAY = "polar_day"
    POLAR_NIGHT = "polar_night"


class NoSolarEvent(Exception):
    """Sun never crosses the horizon on this date at this latitude."""

    def __init__(self, kind: NoEventKind):
        super().__init__(kind.value)
        self.kind = kind


@dataclass
class ScheduleTable:
    """Operator presets kept by the station clock."""

    preset_on: TimeOfDay
    preset_off: TimeOfDay
    sleep_window: Optional[tuple[TimeOfDay, TimeOfDay]] = None
    fetch_time: TimeOfDay = TimeOfDay.of(10, 0)

    def __post_init__(self) -> None:
        if self.preset_on == self.preset_off:
            raise ValueError("preset on/off interval is empty")
        if not TimeOfDay.of(8) <= self.fetch_time <= TimeOfDay.of(16):
            raise ValueError("fetch time must fall in [08:00, 16:00]")


class TimesProvenance(Enum):
    SOLAR = "solar"
    PRESET = "preset"


@dataclass(frozen=True)
class EffectiveTimes:
    on_time: TimeOfDay
    off_time: TimeOfDay
    sleep_window: Optional[tuple[TimeOfDay, TimeOfDay]]
    provenance: TimesProvenance


class MissingTimes(Exception):
    """Full-auto mode has no valid solar pair for today."""


# --- solar position (NOAA spreadsheet formulation) -------------------------


def _julian_day(d: date) -> float:
    a = (14 - d.month) // 12
    y = d.year + 4800 - a
    m = d.month + 12 * a - 3
    jdn = d.day + (153 * m + 2) // 5 + 365 * y + y // 4 - y // 100 + y // 400 - 32045
    return jdn - 0.5  # midnight UT


def _sun_declination_eqtime(jc: float) -> tuple[float, float]:
    """Solar declination (degrees) and equation of time (minutes) at Julian
    century jc from J2000."""
    gml = (280.46646 + jc * (36000.76983 + jc * 0.0003032)) % 360.0
    gma = 357.52911 + jc * (35999.05029 - 0.0001537 * jc)
    ecc = 0.016708634 - jc * (0.000042037 + 0.0000001267 * jc)
    gma_r = math.radians(gma)
    ctr = (
        math.sin(gma_r) * (1.914602 - jc * (0.004817 + 0.000014 * jc))
        + math.sin(2 * gma_r) * (0.019993 - 0.000101 * jc)
        + math.sin(3 * gma_r) * 0.000289
    )
    true_long = gml + ctr
    app_long = true_long - 0.00569 - 0.00478 * math.sin(math.radians(125.04 - 1934.136 * jc))
    mean_obliq = 23.0 + (26.0 + (21.448 - jc * (46.815 + jc * (0.00059 - jc * 0.001813))) / 60.0) / 60.0
    obliq = mean_obliq + 0.00256 * math.cos(math.radians(125.04 - 1934.136 * jc))
    obliq_r = math.radians(obliq)
    decl = math.degrees(math.asin(math.sin(obliq_r) * math.sin(math.radians(app_long))))
    var_y = math.tan(obliq_r / 2.0) ** 2
    gml_r = math.radians(gml)
    eqtime = 4.0 * math.degrees(
        var_y * math.sin(2 * gml_r)
        - 2 * ecc * math.sin(gma_r)
        + 4 * ecc * var_y * math.sin(gma_r) * math.cos(2 * gml_r)
        - 0.5 * var_y * var_y * math.sin(4 * gml_r)
        - 1.25 * ecc * ecc * math.sin(2 * gma_r)
    )
    return decl, eqtime


def _event_minutes_utc(loc: GeoLocation, d: date, rising: bool) -> float:
    """Minutes after 00:00 UT of the rise/set crossing at -0.833 degrees.

    Raises NoSolarEvent for polar day/night. Refined once so declination and
    the equation of time are evaluated near the event itself.
    """
    lat_r = math.radians(loc.latitude)
    zen_r = math.radians(90.0 - SUN_ALTITUDE_AT_RISE_SET)

    # first pass at local solar noon, then refine at the event estimate
    minutes = 720.0 - 4.0 * loc.longitude
    for _ in range(2):
        jc = (_julian_day(d) + minutes / 1440.0 - 2451545.0) / 36525.0
        decl, eqtime = _sun_declination_eqtime(jc)
        decl_r = math.radians(decl)
        cos_ha = (math.cos(zen_r) - math.sin(lat_r) * math.sin(decl_r)) / (
            math.cos(lat_r) * math.cos(decl_r)
        )
        if cos_ha > 1.0:
            raise NoSolarEvent(NoEventKind.POLAR_NIGHT)
        if cos_ha < -1.0:
            raise NoSolarEvent(NoEventKind.POLAR_DAY)
        ha = math.degrees(math.acos(cos_ha))
        if rising:
            minutes = 720.0 - 4.0 * (loc.longitude + ha) - eqtime
        else:
            minutes = 720.0 - 4.0 * (loc.longitude - ha) - eqtime
    return minutes


def _to_local_tod(minutes_utc: float, loc: GeoLocation) -> TimeOfDay:
    local = (minutes_utc + loc.utc_offset_minutes) % 1440.0
    return TimeOfDay(int(round(local)) % 1440)


def compute_sunrise(loc: GeoLocation, d: date) -> TimeOfDay:
    return _to_local_tod(_event_minutes_utc(loc, d, rising=True), loc)


def compute_sunset(loc: GeoLocation, d: date) -> TimeOfDay:
    return _to_local_tod(_event_minutes_utc(loc, d, rising=False), loc)


def compute_solar_times(loc: GeoLocation, d: date, now: Optional[datetime] = None) -> SolarTimes:
    """Sunset of day d and sunrise of day d+1, local clock time."""
    if not 1900 <= d.year <= 2100:
        raise ValueError(f"date out of supported range: {d}")
    sunset = compute_sunset(loc, d)
    sunrise = compute_sunrise(loc, d + timedelta(days=1))
    return SolarTimes(d, sunset, sunrise, SolarSource.COMPUTED, acquired_at=now)


# --- fetch client -----------------------------------------------------------


class FetchErrorKind(Enum):
    TIMEOUT = "timeout"
    BAD_STATUS = "bad_status"
    BAD_BODY = "bad_body"


class FetchError(Exception):
    def __init__(self, kind: FetchErrorKind, detail: str = ""):
        super().__init__(f"{kind.value}: {detail}" if detail else kind.value)
        self.kind = kind


def parse_fetch_body(body: bytes) -> tuple[TimeOfDay, TimeOfDay]:
    """Decode the endpoint's {"sunset": "HH:MM", "sunrise": "HH:MM"} body."""
    try:
        doc = json.loads(body.decode("utf-8"))
        if not isinstance(doc, dict):
            raise ValueError("not an object")
        sunset = TimeOfDay.parse(doc["sunset"])
        sunrise = TimeOfDay.parse(doc["sunrise"])
    except (ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
        raise FetchError(FetchErrorKind.BAD_BODY, str(exc)) from exc
    return sunset, sunrise


def fetch_solar_times(
    endpoint: str,
    loc: GeoLocation,
    d: date,
    timeout: float = 5.0,
    now: Optional[datetime] = None,
) -> SolarTimes:
    """Download the sunset/next-sunrise pair for day d.

    Callers fall back to compute_solar_times on any FetchError.
    """
    url = "{}?{}".format(
        endpoint,
        urllib.parse.urlencode(
            {"lat": f"{loc.latitude:.4f}", "lon": f"{loc.longitude:.4f}", "date": d.isoformat()}
        ),
    )
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            if resp.status != 200:
                raise FetchError(FetchErrorKind.BAD_STATUS, str(resp.status))
            body = resp.read()
    except FetchError:
        raise
    except urllib.error.HTTPError as exc:
        raise FetchError(FetchErrorKind.BAD_STATUS, str(exc.code)) from exc
    except (TimeoutError, urllib.error.URLError, OSError) as exc:
        raise FetchError(FetchErrorKind.TIMEOUT, str(exc)) from exc
    sunset, sunrise = parse_fetch_body(body)
    return SolarTimes(d, sunset, sunrise, SolarSource.FETCHED, acquired_at=now)


# --- effective schedule -----------------------------------------------------


def effective_times(
    mode: "Mode",
    table: ScheduleTable,
    cache: Optional[SolarTimes],
    today: date,
) -> EffectiveTimes:
    """Pick tonight's on/off pair for the active mode.

    Full-auto requires a cache entry for today; anything else raises
    MissingTimes and the caller falls back to the presets for the tick.
    """
    from .commands import Mode  # local import avoids a module cycle

    if mode is Mode.FULL_AUTO:
        if cache is None or cache.day != today:
            raise MissingTimes(f"no solar times for {today}")
        return EffectiveTimes(
            cache.sunset, cache.sunrise_next, table.sleep_window, TimesProvenance.SOLAR
        )
    return EffectiveTimes(
        table.preset_on, table.preset_off, table.sleep_window, TimesProvenance.PRESET
    )
