"""The station's decision engine.

Each control tick runs four phases in a fixed order: apply pending commands,
evaluate the power fault state, evaluate the lane schedule, and finally check
whether the device itself is switched on. Effects are the only output:
ordered, loggable records of relay changes, acknowledgments and alerts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Optional, Union

from .commands import (
    Command,
    DeviceOff,
    DeviceOn,
    InboundCommand,
    Mode,
    Relay,
    SetLane,
    SetMode,
    SetTimes,
    Status,
)
from .gsm import FaultAlert
from .power import (
    FaultEpisodeState,
    FaultPolicy,
    PowerReading,
    evaluate_fault,
    expected_zone_power,
)
from .solar import EffectiveTimes, ScheduleTable, TimesProvenance
from .times import TimeOfDay, in_interval


class Reason(Enum):
    SCHEDULE = "schedule"
    SOLAR = "solar"
    SLEEP = "sleep"
    OVERRIDE = "override"
    MANUAL = "manual"


@dataclass
class Override:
    forced: Relay
    expires_at: Optional[datetime] = None


@dataclass
class LaneState:
    lane_id: int
    lamp_count: int
    relay: Relay = Relay.OFF
    override: Optional[Override] = None
    # schedule-only desired state at the previous tick; an override auto-
    # clears when this flips (the next on/off boundary crossing)
    last_base: Optional[Relay] = None


@dataclass(frozen=True)
class ScheduleDecision:
    lane_id: int
    desired: Relay
    reason: Reason


# --- effects ------------------------------------------------------------------


@dataclass(frozen=True)
class Ack:
    phase = "command"
    command_text: str
    source: str
    detail: str = ""

    def log_detail(self) -> str:
        base = f"ack source={self.source} cmd={self.command_text!r}"
        return f"{base} {self.detail}" if self.detail else base


@dataclass(frozen=True)
class Rejection:
    phase = "command"
    reason: str
    source: str
    command_text: str = ""

    def log_detail(self) -> str:
        return f"reject source={self.source} reason={self.reason!r} cmd={self.command_text!r}"


@dataclass(frozen=True)
class AlertSms:
    phase = "fault"
    alert: FaultAlert

    def log_detail(self) -> str:
        return f"alert {self.alert.body()!r}"


@dataclass(frozen=True)
class RelayChange:
    phase = "relay"
    lane_id: int
    relay: Relay
    reason: Reason

    def log_detail(self) -> str:
        return f"lane={self.lane_id} state={self.relay.value} reason={self.reason.value}"


@dataclass(frozen=True)
class LogEffect:
    phase = "log"
    message: str

    def log_detail(self) -> str:
        return self.message


Effect = Union[Ack, Rejection, AlertSms, RelayChange, LogEffect]


def format_effect(ts: datetime, effect: Effect) -> str:
    """One append-only log line: `<iso8601> <phase> <detail>`."""
    return f"{ts.isoformat()} {effect.phase} {effect.log_detail()}"


# --- state ---------------------------------------------------------------------


@dataclass
class ControllerState:
    mode: Mode
    lanes: list[LaneState]
    schedule: ScheduleTable
    fault_policy: FaultPolicy
    lamp_watts: float
    clock: datetime
    device_on: bool = True
    fault_episode: FaultEpisodeState = field(default_factory=FaultEpisodeState)

    def __post_init__(self) -> None:
        if not self.lanes:
            raise ValueError("at least one lane required")
        ids = [lane.lane_id for lane in self.lanes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate lane ids")

    def lane(self, lane_id: int) -> Optional[LaneState]:
        for lane in self.lanes:
            if lane.lane_id == lane_id:
                return lane
        return None


@dataclass
class TickInputs:
    now: datetime
    times: EffectiveTimes
    commands: list[InboundCommand] = field(default_factory=list)
    power: Optional[PowerReading] = None


# --- decision rules --------------------------------------------------------------


def _in_interval_m(now_m: int, start_m: int, end_m: int) -> bool:
    # integer-minute twin of times.in_interval, for the per-tick hot path
    if start_m == end_m:
        return False
    if start_m < end_m:
        return start_m <= now_m < end_m
    return now_m >= start_m or now_m < end_m


def _base_desired_m(now_m: int, times: EffectiveTimes) -> tuple[Relay, Reason]:
    """Schedule-only decision, ignoring overrides and manual mode."""
    reason = Reason.SOLAR if times.provenance is TimesProvenance.SOLAR else Reason.SCHEDULE
    if _in_interval_m(now_m, times.on_time.minutes, times.off_time.minutes):
        sleep = times.sleep_window
        if sleep is not None and _in_interval_m(now_m, sleep[0].minutes, sleep[1].minutes):
            return Relay.OFF, Reason.SLEEP
        return Relay.ON, reason
    return Relay.OFF, reason


def _base_desired(now: TimeOfDay, times: EffectiveTimes) -> tuple[Relay, Reason]:
    return _base_desired_m(now.minutes, times)


def desired_lane_state(
    mode: Mode, now: TimeOfDay, times: EffectiveTimes, lane: LaneState
) -> ScheduleDecision:
    """What one lane's relay should be right now.

    An unexpired override always wins. Manual mode keeps whatever state the
    last explicit command left; automatic modes follow the half-open
    [on, off) night interval minus the sleep window.
    """
    if lane.override is not None:
        return ScheduleDecision(lane.lane_id, lane.override.forced, Reason.OVERRIDE)
    if mode is Mode.MANUAL:
        return ScheduleDecision(lane.lane_id, lane.relay, Reason.MANUAL)
    desired, reason = _base_desired(now, times)
    return ScheduleDecision(lane.lane_id, desired, reason)


def apply_command(state: ControllerState, inbound: InboundCommand) -> list[Effect]:
    """Install one command's state change; always answers Ack or Rejection."""
    cmd = inbound.command
    src = inbound.source
    if isinstance(cmd, SetLane):
        lane = state.lane(cmd.lane_id)
        if lane is None:
            return [Rejection("no such lane", src, cmd.render())]
        lane.override = Override(cmd.relay)
        return [Ack(cmd.render(), src)]
    if isinstance(cmd, SetMode):
        state.mode = cmd.mode
        return [Ack(cmd.render(), src)]
    if isinstance(cmd, SetTimes):
        if cmd.on_time == cmd.off_time:
            return [Rejection("empty interval", src, cmd.render())]
        if cmd.sleep_window is not None and cmd.sleep_window[0] == cmd.sleep_window[1]:
            return [Rejection("empty sleep window", src, cmd.render())]
        state.schedule.preset_on = cmd.on_time
        state.schedule.preset_off = cmd.off_time
        state.schedule.sleep_window = cmd.sleep_window
        return [Ack(cmd.render(), src)]
    if isinstance(cmd, Status):
        lanes = " ".join(f"L{l.lane_id}={l.relay.value}" for l in state.lanes)
        detail = f"mode={state.mode.value} device={'on' if state.device_on else 'off'} {lanes}"
        return [Ack(cmd.render(), src, detail=detail)]
    if isinstance(cmd, DeviceOn):
        state.device_on = True
        return [Ack(cmd.render(), src)]
    if isinstance(cmd, DeviceOff):
        state.device_on = False
        return [Ack(cmd.render(), src)]
    return [Rejection("unknown command", src)]


def control_tick(state: ControllerState, inputs: TickInputs) -> list[Effect]:
    """One pass of the main loop; mutates state and returns ordered effects.

    Phase order is fixed: commands, fault evaluation, schedule evaluation,
    device-on check. A switched-off device does nothing except listen for
    DEVICE ON.
    """
    state.clock = inputs.now
    if not state.device_on:
        effects: list[Effect] = []
        for ic in inputs.commands:
            if isinstance(ic.command, DeviceOn):
                state.device_on = True
                effects.append(Ack(ic.command.render(), ic.source))
        return effects

    effects = []
    for ic in inputs.commands:
        effects.extend(apply_command(state, ic))
    if not state.device_on:
        # a DEVICE OFF command stops the tick right here
        return effects

    times = inputs.times
    if inputs.power is not None:
        lit = 0
        for lane in state.lanes:
            if lane.relay is Relay.ON:
                lit += lane.lamp_count
        alert = evaluate_fault(
            inputs.power, lit * state.lamp_watts, state.fault_policy, state.fault_episode
        )
        if alert is not None:
            effects.append(AlertSms(alert))

    if state.mode is Mode.FULL_AUTO and times.provenance is TimesProvenance.PRESET:
        effects.append(LogEffect("solar times unavailable; falling back to presets"))

    now_m = inputs.now.hour * 60 + inputs.now.minute
    manual = state.mode is Mode.MANUAL
    if not manual:
        base, base_reason = _base_desired_m(now_m, times)
    for lane in state.lanes:
        ov = lane.override
        if ov is not None and ov.expires_at is not None and inputs.now >= ov.expires_at:
            lane.override = ov = None
        if manual:
            desired = ov.forced if ov is not None else lane.relay
            reason = Reason.OVERRIDE
        else:
            if ov is not None and lane.last_base is not None and base is not lane.last_base:
                lane.override = ov = None
            lane.last_base = base
            if ov is not None:
                desired, reason = ov.forced, Reason.OVERRIDE
            else:
                desired, reason = base, base_reason
        if desired is not lane.relay:
            lane.relay = desired
            effects.append(RelayChange(lane.lane_id, desired, reason))
    return effects
