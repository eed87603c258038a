"""Command-line entry points for the switching station tooling."""

from __future__ import annotations

import json
import sys
from datetime import date, datetime
from pathlib import Path

import click

from .config import (
    ConfigError,
    Scenario,
    load_scenario,
    load_zone_config,
    mirpur_default,
    save_zone_config,
)
from .sim import SimReport, UnknownFormat, compare_scenarios, emit_report, run_scenario
from .solar import GeoLocation, NoSolarEvent, compute_solar_times


def _load_config(path: str | None):
    if path is None:
        return mirpur_default()
    try:
        return load_zone_config(path)
    except (ConfigError, OSError, ValueError) as exc:
        raise click.ClickException(str(exc))


@click.group()
def main() -> None:
    """Street-light switching station: simulate, compare, serve, poke."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--scenario", "scenario_name", default="proposed", show_default=True,
              help="conventional | proposed | custom:<file.json>")
@click.option("--days", type=int, default=7, show_default=True)
@click.option("--start", default="2019-07-22", show_default=True, help="start date YYYY-MM-DD")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="write report here, else stdout")
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "table"]), default="table",
              show_default=True)
def simulate(config_path, scenario_name, days, start, seed, out, fmt) -> None:
    """Run one scenario and emit its report."""
    cfg = _load_config(config_path)
    cfg.rng_seed = seed
    try:
        start_d = date.fromisoformat(start)
        if scenario_name.startswith("custom:"):
            sc = load_scenario(scenario_name.split(":", 1)[1])
        elif scenario_name in ("conventional", "proposed"):
            sc = Scenario(scenario_name, start_d, days)
        else:
            raise click.UsageError(f"unknown scenario {scenario_name!r}")
        result = run_scenario(cfg, sc)
        doc = emit_report(SimReport([result]), fmt)
    except (ConfigError, UnknownFormat) as exc:
        raise click.ClickException(str(exc))
    if out:
        Path(out).write_text(doc)
    else:
        click.echo(doc, nl=False)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--days", type=int, default=7, show_default=True)
@click.option("--start", default="2019-07-22", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "table"]), default="table",
              show_default=True)
def compare(config_path, days, start, seed, fmt) -> None:
    """Run conventional and proposed over the same dates; print savings."""
    cfg = _load_config(config_path)
    cfg.rng_seed = seed
    try:
        report = compare_scenarios(cfg, days, date.fromisoformat(start))
        click.echo(emit_report(report, fmt), nl=False)
    except (ConfigError, ValueError) as exc:
        raise click.ClickException(str(exc))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--realtime-factor", type=float, default=60.0, show_default=True)
@click.option("--state-dir", type=click.Path(), default=None)
def serve(config_path, port, realtime_factor, state_dir) -> None:
    """Run the live station with the HTTP console API."""
    from .service import serve as run_serve

    if config_path is None:
        # materialize the default so the served config is inspectable
        cfg = mirpur_default()
        tmp = Path(state_dir or ".") / "config.json"
        tmp.parent.mkdir(parents=True, exist_ok=True)
        save_zone_config(cfg, tmp)
        config_path = str(tmp)
    run_serve(config_path, port, realtime_factor, state_dir)


@main.command("send-sms")
@click.option("--from", "sender", required=True, help="sender phone number")
@click.option("--body", required=True)
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
def send_sms(sender, body, url) -> None:
    """Inject an SMS into a running serve instance."""
    import urllib.request

    req = urllib.request.Request(
        f"{url}/api/sms",
        data=json.dumps({"from": sender, "body": body}).encode("utf-8"),
        headers={"Content-Type": "application/json"},
    )
    try:
        with urllib.request.urlopen(req, timeout=5) as resp:
            click.echo(resp.read().decode("utf-8"))
    except OSError as exc:
        raise click.ClickException(f"cannot reach {url}: {exc}")


@main.command()
@click.option("--lat", type=float, required=True)
@click.option("--lon", type=float, required=True)
@click.option("--date", "day", default=None, help="YYYY-MM-DD, default today")
@click.option("--utc-offset", type=int, default=0, show_default=True, help="minutes east of UTC")
def solar(lat, lon, day, utc_offset) -> None:
    """Print computed sunset (for the date) and next-morning sunrise."""
    d = date.fromisoformat(day) if day else datetime.now().date()
    try:
        st = compute_solar_times(GeoLocation(lat, lon, utc_offset), d)
    except NoSolarEvent as exc:
        raise click.ClickException(f"no sunrise/sunset: {exc.kind.value}")
    except ValueError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"date: {d}  sunset: {st.sunset}  sunrise(next day): {st.sunrise_next}")


if __name__ == "__main__":
    sys.exit(main())
