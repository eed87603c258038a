import random
from datetime import date, datetime

import pytest

from solar_oracle import oracle_sunset_sunrise_next
from streetlight.commands import Mode
from streetlight.gsm import FaultAlert  # noqa: F401  (import sanity across modules)
from streetlight.solar import (
    EffectiveTimes,
    FetchError,
    FetchErrorKind,
    GeoLocation,
    MissingTimes,
    NoEventKind,
    NoSolarEvent,
    ScheduleTable,
    SolarSource,
    SolarTimes,
    TimesProvenance,
    compute_solar_times,
    effective_times,
    fetch_solar_times,
    parse_fetch_body,
)
from streetlight.solar_stub import SolarStubServer
from streetlight.times import TimeOfDay

DHAKA = GeoLocation(23.79, 90.40, 6 * 60)


def _wrap_diff(a_minutes: float, b_minutes: float) -> float:
    d = abs(a_minutes - b_minutes)
    return min(d, 1440.0 - d)


class TestComputeSolarTimes:
    def test_dhaka_july_2019_matches_frozen_oracle_values(self):
        # frozen from the minute-scan oracle: sunset 18:46.3, sunrise 05:23.7
        st = compute_solar_times(DHAKA, date(2019, 7, 22))
        assert st.sunset == TimeOfDay.parse("18:46")
        assert st.sunrise_next == TimeOfDay.parse("05:24")
        assert st.source is SolarSource.COMPUTED

    def test_dhaka_against_live_oracle(self):
        st = compute_solar_times(DHAKA, date(2019, 7, 22))
        ss, sr = oracle_sunset_sunrise_next(date(2019, 7, 22), 23.79, 90.40, 360)
        assert _wrap_diff(st.sunset.minutes, ss) <= 2.0
        assert _wrap_diff(st.sunrise_next.minutes, sr) <= 2.0

    def test_polar_day(self):
        with pytest.raises(NoSolarEvent) as exc:
            compute_solar_times(GeoLocation(80.0, 0.0, 0), date(2019, 6, 21))
        assert exc.value.kind is NoEventKind.POLAR_DAY

    def test_polar_night(self):
        with pytest.raises(NoSolarEvent) as exc:
            compute_solar_times(GeoLocation(80.0, 0.0, 0), date(2019, 12, 21))
        assert exc.value.kind is NoEventKind.POLAR_NIGHT

    def test_date_range_enforced(self):
        with pytest.raises(ValueError):
            compute_solar_times(DHAKA, date(1899, 12, 31))

    def test_oracle_agreement_sample(self):
        # the full 1000-pair sweep lives in the acceptance suite
        rng = random.Random(42)
        for _ in range(50):
            lat = rng.uniform(-60.0, 60.0)
            lon = rng.uniform(-180.0, 180.0)
            off = round(lon / 15.0) * 60
            d = date(rng.randint(1950, 2050), rng.randint(1, 12), rng.randint(1, 28))
            st = compute_solar_times(GeoLocation(lat, lon, off), d)
            ss, sr = oracle_sunset_sunrise_next(d, lat, lon, off)
            assert ss is not None and sr is not None
            assert _wrap_diff(st.sunset.minutes, ss) <= 2.0, (lat, lon, d)
            assert _wrap_diff(st.sunrise_next.minutes, sr) <= 2.0, (lat, lon, d)

    def test_day_length_peaks_at_june_solstice(self):
        loc = GeoLocation(45.0, 0.0, 0)
        lengths = {}
        d = date(2019, 1, 1)
        for k in range(365):
            day = date.fromordinal(d.toordinal() + k)
            try:
                st = compute_solar_times(loc, day)
            except NoSolarEvent:
                continue
            lengths[day] = (st.sunrise_next.minutes - st.sunset.minutes) % 1440
        # night length is minimal (day maximal) near June 21
        best = min(lengths, key=lengths.get)
        assert abs((best - date(2019, 6, 21)).days) <= 4


class TestGeoLocation:
    @pytest.mark.parametrize(
        "lat,lon,off", [(91, 0, 0), (-91, 0, 0), (0, 181, 0), (0, 0, 900)]
    )
    def test_ranges(self, lat, lon, off):
        with pytest.raises(ValueError):
            GeoLocation(lat, lon, off)


class TestFetch:
    def test_parse_valid_body(self):
        sunset, sunrise = parse_fetch_body(b'{"sunset":"18:49","sunrise":"05:22"}')
        assert sunset == TimeOfDay.parse("18:49")
        assert sunrise == TimeOfDay.parse("05:22")

    def test_missing_key_is_bad_body(self):
        with pytest.raises(FetchError) as exc:
            parse_fetch_body(b'{"sunset":"18:49"}')
        assert exc.value.kind is FetchErrorKind.BAD_BODY

    def test_garbage_is_bad_body(self):
        with pytest.raises(FetchError) as exc:
            parse_fetch_body(b"\xff\xfenot json")
        assert exc.value.kind is FetchErrorKind.BAD_BODY

    def test_fetch_from_stub_roundtrips_computed_times(self):
        with SolarStubServer(utc_offset_minutes=360) as stub:
            got = fetch_solar_times(stub.endpoint, DHAKA, date(2019, 7, 22))
        want = compute_solar_times(DHAKA, date(2019, 7, 22))
        assert got.sunset == want.sunset
        assert got.sunrise_next == want.sunrise_next
        assert got.source is SolarSource.FETCHED

    def test_http_error_is_bad_status(self):
        with SolarStubServer() as stub:
            bad = stub.endpoint.replace("/solar", "/nope")
            with pytest.raises(FetchError) as exc:
                fetch_solar_times(bad, DHAKA, date(2019, 7, 22))
        assert exc.value.kind is FetchErrorKind.BAD_STATUS

    def test_unreachable_is_timeout(self):
        with pytest.raises(FetchError) as exc:
            fetch_solar_times(
                "http://127.0.0.1:1/solar", DHAKA, date(2019, 7, 22), timeout=0.2
            )
        assert exc.value.kind is FetchErrorKind.TIMEOUT


class TestEffectiveTimes:
    TABLE = ScheduleTable(TimeOfDay.parse("18:00"), TimeOfDay.parse("06:00"))

    def test_semi_auto_uses_presets(self):
        eff = effective_times(Mode.SEMI_AUTO, self.TABLE, None, date(2019, 7, 22))
        assert (eff.on_time, eff.off_time) == (TimeOfDay.parse("18:00"), TimeOfDay.parse("06:00"))
        assert eff.provenance is TimesProvenance.PRESET

    def test_full_auto_fresh_cache(self):
        cache = SolarTimes(
            date(2019, 7, 22),
            TimeOfDay.parse("18:49"),
            TimeOfDay.parse("05:22"),
            SolarSource.FETCHED,
        )
        eff = effective_times(Mode.FULL_AUTO, self.TABLE, cache, date(2019, 7, 22))
        assert (eff.on_time, eff.off_time) == (TimeOfDay.parse("18:49"), TimeOfDay.parse("05:22"))
        assert eff.provenance is TimesProvenance.SOLAR

    def test_full_auto_stale_cache_raises(self):
        cache = SolarTimes(
            date(2019, 7, 21),
            TimeOfDay.parse("18:49"),
            TimeOfDay.parse("05:22"),
            SolarSource.COMPUTED,
        )
        with pytest.raises(MissingTimes):
            effective_times(Mode.FULL_AUTO, self.TABLE, cache, date(2019, 7, 22))

    def test_full_auto_no_cache_raises(self):
        with pytest.raises(MissingTimes):
            effective_times(Mode.FULL_AUTO, self.TABLE, None, date(2019, 7, 22))


class TestScheduleTable:
    def test_empty_preset_interval_rejected(self):
        with pytest.raises(ValueError):
            ScheduleTable(TimeOfDay.parse("18:00"), TimeOfDay.parse("18:00"))

    def test_fetch_time_outside_daytime_rejected(self):
        with pytest.raises(ValueError):
            ScheduleTable(
                TimeOfDay.parse("18:00"),
                TimeOfDay.parse("06:00"),
                fetch_time=TimeOfDay.parse("02:00"),
            )
