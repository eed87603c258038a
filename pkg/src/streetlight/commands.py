"""Operator commands: the control vocabulary shared by SMS, API and CLI.

Canonical text grammar (case-insensitive, single-space separated):

    LANE <n> ON|OFF
    MODE MANUAL|SEMI|AUTO
    SETTIME <HH:MM> <HH:MM> [SLEEP <HH:MM> <HH:MM>]
    STATUS
    DEVICE ON|OFF
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from .times import TimeOfDay


class Mode(Enum):
    MANUAL = "manual"
    SEMI_AUTO = "semi"
    FULL_AUTO = "auto"


class Relay(Enum):
    ON = "on"
    OFF = "off"


@dataclass(frozen=True)
class SetLane:
    lane_id: int
    relay: Relay

    def render(self) -> str:
        return f"LANE {self.lane_id} {self.relay.value.upper()}"


@dataclass(frozen=True)
class SetMode:
    mode: Mode

    def render(self) -> str:
        return f"MODE {self.mode.value.upper()}"


@dataclass(frozen=True)
class SetTimes:
    on_time: TimeOfDay
    off_time: TimeOfDay
    sleep_window: Optional[tuple[TimeOfDay, TimeOfDay]] = None

    def render(self) -> str:
        base = f"SETTIME {self.on_time} {self.off_time}"
        if self.sleep_window is not None:
            base += f" SLEEP {self.sleep_window[0]} {self.sleep_window[1]}"
        return base


@dataclass(frozen=True)
class Status:
    def render(self) -> str:
        return "STATUS"


@dataclass(frozen=True)
class DeviceOn:
    def render(self) -> str:
        return "DEVICE ON"


@dataclass(frozen=True)
class DeviceOff:
    def render(self) -> str:
        return "DEVICE OFF"


Command = Union[SetLane, SetMode, SetTimes, Status, DeviceOn, DeviceOff]


@dataclass(frozen=True)
class InboundCommand:
    """A command plus where it came from, so acks can be routed back."""

    command: Command
    source: str  # "api", "cli", or the sender's phone number
