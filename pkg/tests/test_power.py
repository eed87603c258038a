import math
import random
from datetime import datetime, timedelta

import pytest
from hypothesis import given
from hypothesis import strategies as st

from debounce_reference import reference_alert_positions
from streetlight.power import (
    FaultEpisodeState,
    FaultPolicy,
    PowerReading,
    PowerSample,
    SensorRatios,
    TooFewSamples,
    compute_power,
    evaluate_fault,
    expected_zone_power,
    rms,
)

T0 = datetime(2019, 7, 22, 0, 0, 0)


def sine(amp, n=400, cycles=10, phase=0.0):
    w = 2 * math.pi * cycles / n
    return [amp * math.sin(w * k + phase) for k in range(n)]


class TestRms:
    def test_sine_amplitude_over_sqrt2(self):
        value = rms(sine(10.0))
        assert value == pytest.approx(10.0 / math.sqrt(2), rel=0.005)

    def test_constant_with_dc_removal(self):
        assert rms([5.0] * 100, dc_remove=True) == pytest.approx(0.0, abs=1e-12)

    def test_constant_without_dc_removal(self):
        assert rms([5.0] * 100) == pytest.approx(5.0)

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamples):
            rms([1.0])

    @given(
        st.lists(st.floats(-100, 100), min_size=2, max_size=50),
        st.floats(-10, 10).filter(lambda k: abs(k) > 1e-6),
    )
    def test_scale_equivariance(self, xs, k):
        assert rms([k * x for x in xs]) == pytest.approx(abs(k) * rms(xs), rel=1e-9, abs=1e-9)


class TestComputePower:
    RATIOS = SensorRatios(pt_ratio=230.0 / 12.0, ct_ratio=2000.0)

    def _sample(self, v_rms_primary, i_rms_primary, phase=0.0):
        v_amp = v_rms_primary * math.sqrt(2) / self.RATIOS.pt_ratio
        i_amp = i_rms_primary * math.sqrt(2) / self.RATIOS.ct_ratio
        return PowerSample(sine(v_amp), sine(i_amp, phase=phase))

    def test_in_phase_full_zone_load(self):
        # 300 lamps x 25 W at 230 V
        reading = compute_power(self._sample(230.0, 7500.0 / 230.0), self.RATIOS)
        assert reading.p_watts == pytest.approx(7500.0, rel=0.01)

    def test_quadrature_power_is_zero(self):
        reading = compute_power(self._sample(230.0, 32.61, phase=math.pi / 2), self.RATIOS)
        assert abs(reading.p_watts) < 0.01 * reading.v_rms * reading.i_rms

    def test_pt_scaling_recovers_primary_volts(self):
        # 12 V RMS on the secondary winding
        sample = PowerSample(sine(12.0 * math.sqrt(2)), sine(0.01))
        reading = compute_power(sample, self.RATIOS)
        assert reading.v_rms == pytest.approx(230.0, rel=0.005)

    def test_power_never_exceeds_apparent_power(self):
        rng = random.Random(1)
        for _ in range(50):
            phase = rng.uniform(0, 2 * math.pi)
            v = rng.uniform(1, 300)
            i = rng.uniform(0.1, 50)
            reading = compute_power(self._sample(v, i, phase=phase), self.RATIOS)
            assert reading.p_watts <= reading.v_rms * reading.i_rms * (1 + 1e-6)

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(ValueError):
            PowerSample(sine(1.0, n=400), sine(1.0, n=399))

    def test_window_too_short(self):
        with pytest.raises(TooFewSamples):
            PowerSample([0.1] * 40, [0.1] * 40)  # < 2 cycles at 2 kHz / 50 Hz


class TestSensorRatios:
    def test_positive_required(self):
        with pytest.raises(ValueError):
            SensorRatios(pt_ratio=0.0)
        with pytest.raises(ValueError):
            SensorRatios(ct_ratio=-1.0)


def reading(watts, t):
    return PowerReading(230.0, watts / 230.0, watts, t)


class TestEvaluateFault:
    def test_above_threshold_is_healthy(self):
        ep = FaultEpisodeState()
        alert = evaluate_fault(reading(6900, T0), 7500.0, FaultPolicy(), ep)
        assert alert is None
        assert ep.below_streak == 0

    def test_alert_fires_on_third_consecutive_tick_exactly(self):
        policy = FaultPolicy(threshold_ratio=0.80, debounce_ticks=3)
        ep = FaultEpisodeState()
        t = T0
        fired = []
        for k in range(3):
            t += timedelta(seconds=30)
            fired.append(evaluate_fault(reading(5000, t), 7500.0, policy, ep))
        assert fired[0] is None and fired[1] is None
        assert fired[2] is not None
        assert fired[2].measured_watts == 5000
        assert fired[2].expected_watts == 7500

    def test_zero_expected_suppresses_evaluation(self):
        ep = FaultEpisodeState()
        assert evaluate_fault(reading(40, T0), 0.0, FaultPolicy(), ep) is None
        assert ep.below_streak == 0 and not ep.active

    def test_realert_after_interval(self):
        policy = FaultPolicy(debounce_ticks=1, realert_interval=timedelta(hours=6))
        ep = FaultEpisodeState()
        assert evaluate_fault(reading(100, T0), 7500.0, policy, ep) is not None
        t1 = T0 + timedelta(hours=3)
        assert evaluate_fault(reading(100, t1), 7500.0, policy, ep) is None
        t2 = T0 + timedelta(hours=6)
        assert evaluate_fault(reading(100, t2), 7500.0, policy, ep) is not None

    def test_episode_clears_after_healthy_streak(self):
        policy = FaultPolicy(debounce_ticks=2, realert_interval=timedelta(hours=6))
        ep = FaultEpisodeState()
        t = T0
        for _ in range(2):
            t += timedelta(seconds=30)
            evaluate_fault(reading(100, t), 7500.0, policy, ep)
        assert ep.active
        for _ in range(2):
            t += timedelta(seconds=30)
            evaluate_fault(reading(7400, t), 7500.0, policy, ep)
        assert not ep.active
        # a fresh fault must debounce again from scratch
        t += timedelta(seconds=30)
        assert evaluate_fault(reading(100, t), 7500.0, policy, ep) is None

    @given(
        st.lists(st.booleans(), min_size=1, max_size=120),
        st.integers(1, 5),
        st.integers(1, 40),
    )
    def test_matches_reference_scanner(self, below, debounce, realert_ticks):
        policy = FaultPolicy(
            debounce_ticks=debounce, realert_interval=timedelta(seconds=realert_ticks)
        )
        ep = FaultEpisodeState()
        got = []
        for i, b in enumerate(below):
            t = T0 + timedelta(seconds=i)
            alert = evaluate_fault(reading(100 if b else 7400, t), 7500.0, policy, ep)
            if alert is not None:
                got.append(i)
        assert got == reference_alert_positions(below, debounce, realert_ticks)


class TestExpectedZonePower:
    def test_full_zone(self):
        lanes = [(True, 75)] * 4
        assert expected_zone_power(lanes, 25.0) == 7500.0

    def test_all_off(self):
        assert expected_zone_power([(False, 75)] * 4, 25.0) == 0.0

    def test_half_on(self):
        lanes = [(True, 75), (True, 75), (False, 75), (False, 75)]
        assert expected_zone_power(lanes, 25.0) == 3750.0


class TestFaultPolicy:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"threshold_ratio": 0.0},
            {"threshold_ratio": 1.0},
            {"debounce_ticks": 0},
            {"realert_interval": timedelta(0)},
        ],
    )
    def test_ranges(self, kwargs):
        with pytest.raises(ValueError):
            FaultPolicy(**kwargs)
