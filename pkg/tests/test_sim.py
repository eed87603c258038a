import json
from datetime import date, datetime, timedelta

import pytest

from streetlight.config import (
    ConfigError,
    FaultEvent,
    OperatorLag,
    Scenario,
    ZoneConfig,
    load_zone_config,
    mirpur_default,
    save_zone_config,
    scenario_from_dict,
    scenario_to_dict,
)
from streetlight.sim import (
    EnergyLedger,
    ScenarioResult,
    SimReport,
    UnknownFormat,
    UnorderedSeries,
    compare_scenarios,
    conventional_operator_model,
    emit_report,
    energy_integrate,
    run_scenario,
    synthesize_reading,
)
from streetlight.solar import SolarTimes, TimesProvenance, compute_solar_times
from streetlight.times import TimeOfDay

START = date(2019, 7, 22)


def quiet_config(**kw):
    cfg = mirpur_default()
    cfg.synthesize_waveforms = kw.pop("synthesize_waveforms", False)
    for k, v in kw.items():
        setattr(cfg, k, v)
    return cfg


class TestEnergyLedger:
    def test_constant_load_exact(self):
        t0 = datetime(2019, 7, 22)
        ledger = EnergyLedger(t0)
        for k in range(120):
            ledger.record(t0 + timedelta(seconds=30 * k), 7500.0)
        ledger.close(t0 + timedelta(hours=1))
        assert ledger.total_kwh == pytest.approx(7.5, rel=1e-12)

    def test_matches_independent_integral(self):
        t0 = datetime(2019, 7, 22)
        series = []
        ledger = EnergyLedger(t0)
        watts = [0.0, 7500.0, 1875.0, 0.0, 7500.0]
        for k, w in enumerate(watts):
            t = t0 + timedelta(minutes=17 * k)
            ledger.record(t, w)
            series.append((t, w))
        end = t0 + timedelta(hours=3)
        ledger.close(end)
        assert ledger.total_kwh == pytest.approx(energy_integrate(series, end), rel=1e-12)

    def test_fast_path_equals_slow_path(self):
        t0 = datetime(2019, 7, 22)
        slow, fast = EnergyLedger(t0), EnergyLedger(t0)
        for k in range(100):
            t = t0 + timedelta(seconds=30 * k)
            slow.record(t, 100.0 * (k % 7))
            fast.record(t, 100.0 * (k % 7), dt_s=30.0)
        end = t0 + timedelta(seconds=3000)
        slow.close(end)
        fast.close(end)
        assert fast.total_kwh == pytest.approx(slow.total_kwh, rel=1e-12)

    def test_hourly_curve_buckets(self):
        t0 = datetime(2019, 7, 22)
        ledger = EnergyLedger(t0)
        ledger.record(t0, 1000.0)
        ledger.record(t0 + timedelta(minutes=30), 3000.0)
        ledger.close(t0 + timedelta(hours=1))
        curve = dict(ledger.hourly_curve())
        assert curve["2019-07-22T00:00:00"] == pytest.approx(2000.0)

    def test_unordered_series_rejected(self):
        t0 = datetime(2019, 7, 22)
        with pytest.raises(UnorderedSeries):
            energy_integrate([(t0, 1.0), (t0 - timedelta(seconds=1), 2.0)], t0)


class TestOperatorModel:
    SOLAR = [
        SolarTimes(START, TimeOfDay.parse("18:46"), TimeOfDay.parse("05:24"),
                   TimesProvenance.SOLAR, datetime(2019, 7, 22, 10, 0))
    ]

    def test_zero_jitter_deterministic(self):
        lag = OperatorLag(30.0, 90.0, 0.0)
        (on_m, off_m), = conventional_operator_model(0, lag, self.SOLAR)
        assert on_m == TimeOfDay.parse("18:16").minutes
        assert off_m == TimeOfDay.parse("06:54").minutes

    def test_same_seed_same_draw(self):
        lag = OperatorLag()
        a = conventional_operator_model(7, lag, self.SOLAR * 30)
        b = conventional_operator_model(7, lag, self.SOLAR * 30)
        assert a == b
        assert a != conventional_operator_model(8, lag, self.SOLAR * 30)

    def test_jitter_bounded(self):
        lag = OperatorLag(30.0, 90.0, 15.0)
        for on_m, off_m in conventional_operator_model(3, lag, self.SOLAR * 200):
            assert abs(on_m - TimeOfDay.parse("18:16").minutes) <= 15
            assert abs(off_m - TimeOfDay.parse("06:54").minutes) <= 15

    def test_negative_lag_rejected(self):
        with pytest.raises(ConfigError):
            OperatorLag(-1.0, 90.0, 15.0)


class TestSynthesizedReading:
    def test_recovers_commanded_power(self):
        r = synthesize_reading(7500.0, 230.0, datetime(2019, 7, 22, 22, 0))
        assert r.p_watts == pytest.approx(7500.0, rel=1e-6)
        assert r.v_rms == pytest.approx(230.0, rel=1e-6)

    def test_zero_load(self):
        r = synthesize_reading(0.0, 230.0, datetime(2019, 7, 22, 22, 0))
        assert r.p_watts == pytest.approx(0.0, abs=1e-9)


class TestScenarios:
    def test_duration_zero_rejected(self):
        with pytest.raises(ConfigError):
            Scenario("proposed", START, 0)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError):
            Scenario("zippy", START, 1)

    def test_proposed_day_follows_solar_times(self):
        cfg = quiet_config()
        res = run_scenario(cfg, Scenario("proposed", START, 1))
        st = compute_solar_times(cfg.location, START)
        st_prev = compute_solar_times(cfg.location, START - timedelta(days=1))
        # lit from midnight to the previous night's sunrise, then sunset to
        # midnight; lamp-seconds follow from those two intervals
        lit_minutes = st_prev.sunrise_next.minutes + (1440 - st.sunset.minutes)
        expected_kwh = 300 * 25.0 * lit_minutes * 60 / 3.6e6
        assert res.total_kwh == pytest.approx(expected_kwh, rel=1e-6)

    def test_conventional_burns_more_than_proposed(self):
        cfg = quiet_config(rng_seed=11)
        report = compare_scenarios(cfg, 5, START)
        conv, prop = report.scenarios
        assert conv.name == "conventional" and prop.name == "proposed"
        assert conv.total_kwh > prop.total_kwh
        assert report.savings_percent == pytest.approx(
            (conv.total_kwh - prop.total_kwh) / conv.total_kwh * 100.0
        )

    def test_fault_script_triggers_single_alert(self):
        cfg = quiet_config()
        sc = Scenario(
            "proposed", START, 1,
            fault_script=[FaultEvent(datetime(2019, 7, 22, 22, 0), 90)],
        )
        res = run_scenario(cfg, sc)
        assert len(res.alert_log) == 1
        assert "FAULT POWER 5250W/7500W AT 22:01" in res.alert_log[0]
        alert_sms = [s for s in res.sms_sent if s["body"].startswith("FAULT")]
        assert len(alert_sms) == 1
        assert alert_sms[0]["to"] == cfg.authority_number

    def test_small_fault_below_threshold_silent(self):
        cfg = quiet_config()
        sc = Scenario(
            "proposed", START, 1,
            fault_script=[FaultEvent(datetime(2019, 7, 22, 22, 0), 30)],
        )
        res = run_scenario(cfg, sc)
        assert res.alert_log == []

    def test_injected_sms_changes_state_and_acks(self):
        cfg = quiet_config()
        sc = Scenario("proposed", START, 1)
        res = run_scenario(
            cfg, sc,
            inject_sms=[(datetime(2019, 7, 22, 22, 0), "+8801711111111", "LANE 1 OFF")],
        )
        acks = [s for s in res.sms_sent if s["body"] == "ACK LANE 1 OFF"]
        assert len(acks) == 1
        assert acks[0]["to"] == "+8801711111111"
        assert any("lane=1 state=off reason=override" in line for line in res.relay_log)

    def test_unlisted_sender_ignored(self):
        cfg = quiet_config()
        res = run_scenario(
            cfg, Scenario("proposed", START, 1),
            inject_sms=[(datetime(2019, 7, 22, 22, 0), "+8809999999999", "LANE 1 OFF")],
        )
        assert res.sms_sent == []
        assert not any("override" in line for line in res.relay_log)

    def test_repeat_run_identical_report(self):
        cfg = quiet_config(rng_seed=5)
        a = emit_report(compare_scenarios(cfg, 2, START), "json")
        b = emit_report(compare_scenarios(cfg, 2, START), "json")
        assert a == b


class TestReports:
    def _report(self):
        res = ScenarioResult(
            name="proposed", start_date="2019-07-22", duration_days=1,
            total_kwh=75.0, per_lane_kwh={"1": 18.75},
            hourly_watts=[("00:00", 7500.0)], alert_log=[], relay_log=[], sms_sent=[],
        )
        conv = ScenarioResult(
            name="conventional", start_date="2019-07-22", duration_days=1,
            total_kwh=90.0, per_lane_kwh={"1": 22.5},
            hourly_watts=[("00:00", 7500.0)], alert_log=[], relay_log=[], sms_sent=[],
        )
        return SimReport([conv, res], savings_percent=(90.0 - 75.0) / 90.0 * 100.0)

    def test_json_round_trip_and_rounding(self):
        doc = json.loads(emit_report(self._report(), "json"))
        assert doc["savings_percent"] == pytest.approx(16.6667, abs=5e-5)
        assert doc["scenarios"][0]["total_kwh"] == 90.0

    def test_csv_has_header_and_rows(self):
        out = emit_report(self._report(), "csv")
        lines = out.strip().splitlines()
        assert lines[0] == "scenario,hour,avg_watts"
        assert "conventional,00:00,7500.000" in lines

    def test_table_names_both_scenarios(self):
        out = emit_report(self._report(), "table")
        assert "conventional" in out and "proposed" in out
        assert "savings: 16.67 %" in out

    def test_unknown_format(self):
        with pytest.raises(UnknownFormat):
            emit_report(self._report(), "yaml")


class TestConfigSerialization:
    def test_zone_config_round_trip(self, tmp_path):
        cfg = mirpur_default()
        cfg.waveform_noise = 0.001
        p = tmp_path / "zone.json"
        save_zone_config(cfg, p)
        back = load_zone_config(p)
        assert back == cfg

    def test_scenario_round_trip(self):
        sc = Scenario(
            "custom", START, 3,
            operator_lag=OperatorLag(10.0, 20.0, 5.0),
            fault_script=[FaultEvent(datetime(2019, 7, 22, 22, 0), 90)],
        )
        assert scenario_from_dict(scenario_to_dict(sc)) == sc

    def test_tick_must_divide_minute(self):
        cfg = mirpur_default()
        with pytest.raises(ConfigError):
            ZoneConfig(cfg.location, cfg.lanes, cfg.schedule, tick_seconds=45)
