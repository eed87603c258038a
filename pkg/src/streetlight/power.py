"""CT/PT sensing path: waveform capture, RMS/power extraction, fault episodes.

The feeder's voltage is sensed through a 230:12 potential transformer and its
current through a clamp CT; both deliver scaled secondary-side samples. Real
power comes from the pointwise v*i product, so power factor needs no separate
treatment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Optional, Sequence

from .gsm import FaultAlert
from .times import TimeOfDay

LINE_FREQ_HZ = 50.0
DEFAULT_SAMPLE_RATE_HZ = 2000.0
DEFAULT_WINDOW_CYCLES = 10
# SCT013-000 clamp: 100 A primary : 50 mA secondary
DEFAULT_CT_RATIO = 2000.0
DEFAULT_PT_RATIO = 230.0 / 12.0


class TooFewSamples(Exception):
    pass


@dataclass(frozen=True)
class SensorRatios:
    pt_ratio: float = DEFAULT_PT_RATIO
    ct_ratio: float = DEFAULT_CT_RATIO

    def __post_init__(self) -> None:
        if self.pt_ratio <= 0 or self.ct_ratio <= 0:
            raise ValueError("transformer ratios must be positive")


@dataclass(frozen=True)
class PowerSample:
    v_samples: Sequence[float]
    i_samples: Sequence[float]
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    window_cycles: int = DEFAULT_WINDOW_CYCLES

    def __post_init__(self) -> None:
        if len(self.v_samples) != len(self.i_samples):
            raise ValueError("voltage and current windows differ in length")
        per_cycle = self.sample_rate_hz / LINE_FREQ_HZ
        if len(self.v_samples) < 2 * per_cycle:
            raise TooFewSamples(f"need at least {2 * per_cycle:.0f} samples")
        if self.sample_rate_hz < 10 * LINE_FREQ_HZ:
            raise ValueError("sample rate below 10x line frequency")
        if self.window_cycles < 1:
            raise ValueError("window must cover at least one cycle")


@dataclass(frozen=True)
class PowerReading:
    v_rms: float
    i_rms: float
    p_watts: float
    window_end: datetime


def rms(samples: Sequence[float], dc_remove: bool = False) -> float:
    """Root mean square, optionally about the window mean instead of zero."""
    n = len(samples)
    if n < 2:
        raise TooFewSamples(f"{n} < 2")
    if dc_remove:
        mean = math.fsum(samples) / n
        return math.sqrt(math.fsum((x - mean) ** 2 for x in samples) / n)
    return math.sqrt(math.fsum(x * x for x in samples) / n)


def compute_power(
    sample: PowerSample, ratios: SensorRatios, window_end: datetime = datetime.min
) -> PowerReading:
    """Primary-side RMS volts/amps and real power over the capture window."""
    pt, ct = ratios.pt_ratio, ratios.ct_ratio
    v = [x * pt for x in sample.v_samples]
    i = [x * ct for x in sample.i_samples]
    p = math.fsum(a * b for a, b in zip(v, i)) / len(v)
    return PowerReading(rms(v), rms(i), p, window_end=window_end)


@dataclass(frozen=True)
class FaultPolicy:
    threshold_ratio: float = 0.80
    debounce_ticks: int = 3
    realert_interval: timedelta = timedelta(hours=6)

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold_ratio < 1.0:
            raise ValueError("threshold ratio must be in (0, 1)")
        if self.debounce_ticks < 1:
            raise ValueError("debounce must be at least 1 tick")
        if self.realert_interval <= timedelta(0):
            raise ValueError("re-alert interval must be positive")


@dataclass
class FaultEpisodeState:
    """Debounce counters for the one zone-wide power fault."""

    below_streak: int = 0
    healthy_streak: int = 0
    active: bool = False
    last_alert_at: Optional[datetime] = None


def evaluate_fault(
    reading: PowerReading,
    expected_watts: float,
    policy: FaultPolicy,
    episode: FaultEpisodeState,
) -> Optional[FaultAlert]:
    """One debounced threshold check; mutates the episode state in place.

    An alert fires after debounce_ticks consecutive below-threshold readings
    and repeats no sooner than realert_interval while the episode persists.
    With nothing expected to be drawing (all lanes off) there is no threshold
    to compare against, so the evaluation is skipped entirely.
    """
    if expected_watts <= 0.0:
        return None
    below = reading.p_watts < policy.threshold_ratio * expected_watts
    now = reading.window_end
    if below:
        episode.below_streak += 1
        episode.healthy_streak = 0
        fire = False
        if not episode.active:
            if episode.below_streak >= policy.debounce_ticks:
                episode.active = True
                fire = True
        elif episode.last_alert_at is None or now - episode.last_alert_at >= policy.realert_interval:
            fire = True
        if fire:
            episode.last_alert_at = now
            return FaultAlert(
                measured_watts=reading.p_watts,
                expected_watts=expected_watts,
                raised_at=TimeOfDay.from_datetime(now) if now != datetime.min else TimeOfDay(0),
            )
    else:
        episode.below_streak = 0
        episode.healthy_streak += 1
        if episode.active and episode.healthy_streak >= policy.debounce_ticks:
            episode.active = False
            episode.healthy_streak = 0
            episode.last_alert_at = None
    return None


def expected_zone_power(
    lane_relays: Sequence[tuple[bool, int]], lamp_watts: float
) -> float:
    """Watts the feeder should carry: (is_on, lamp_count) per lane."""
    return math.fsum(lamp_count * lamp_watts for on, lamp_count in lane_relays if on)
