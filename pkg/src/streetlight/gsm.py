"""Text-mode GSM shield path: SMS grammar parsing, AT framing, modem driver.

The station talks to its modem over an 8-bit byte stream. Lines from the
modem end in CRLF; commands to the modem end in CR; an outgoing message body
is terminated by Ctrl-Z (0x1A). The send prompt "> " arrives without a line
terminator and is matched against the raw buffer.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Optional

from .commands import (
    Command,
    DeviceOff,
    DeviceOn,
    Mode,
    Relay,
    SetLane,
    SetMode,
    SetTimes,
    Status,
)
from .times import TimeOfDay

MAX_SMS_LEN = 160
MAX_RETRIES = 3
OUTBOX_CAPACITY = 16
_BUFFER_CAP = 65536

CTRL_Z = b"\x1a"


@dataclass(frozen=True)
class SmsMessage:
    sender: str
    body: str
    received_at: Optional[datetime] = None

    def __post_init__(self) -> None:
        if not self.sender:
            raise ValueError("empty sender")
        if not self.body:
            raise ValueError("empty body")
        if len(self.body) > MAX_SMS_LEN:
            raise ValueError("body exceeds 160 characters")


@dataclass(frozen=True)
class FaultAlert:
    measured_watts: float
    expected_watts: float
    raised_at: TimeOfDay
    kind: str = "power_below_threshold"

    def body(self) -> str:
        return (
            f"FAULT POWER {self.measured_watts:.0f}W/"
            f"{self.expected_watts:.0f}W AT {self.raised_at}"
        )


# --- inbound SMS grammar ----------------------------------------------------


class RejectionKind(Enum):
    UNAUTHORIZED = "unauthorized"
    BAD_SYNTAX = "bad_syntax"


@dataclass(frozen=True)
class ParseRejection(Exception):
    kind: RejectionKind
    position: int = 0  # token index of the offending word
    detail: str = ""

    def __str__(self) -> str:
        if self.kind is RejectionKind.UNAUTHORIZED:
            return "unauthorized sender"
        return f"bad syntax at token {self.position}: {self.detail}"


_MODES = {"MANUAL": Mode.MANUAL, "SEMI": Mode.SEMI_AUTO, "AUTO": Mode.FULL_AUTO}


def _parse_time_token(tokens: list[str], i: int) -> TimeOfDay:
    if i >= len(tokens):
        raise ParseRejection(RejectionKind.BAD_SYNTAX, i, "expected HH:MM")
    try:
        return TimeOfDay.parse(tokens[i])
    except ValueError:
        raise ParseRejection(RejectionKind.BAD_SYNTAX, i, f"bad time {tokens[i]!r}") from None


def parse_command_text(text: str) -> Command:
    """Parse one canonical command line; raises ParseRejection on bad syntax."""
    tokens = text.strip().upper().split()
    if not tokens:
        raise ParseRejection(RejectionKind.BAD_SYNTAX, 0, "empty command")
    head = tokens[0]
    if head == "LANE":
        if len(tokens) != 3:
            raise ParseRejection(RejectionKind.BAD_SYNTAX, len(tokens), "LANE <n> ON|OFF")
        if not tokens[1].isdigit():
            raise ParseRejection(RejectionKind.BAD_SYNTAX, 1, f"bad lane {tokens[1]!r}")
        if tokens[2] not in ("ON", "OFF"):
            raise ParseRejection(RejectionKind.BAD_SYNTAX, 2, f"expected ON|OFF, got {tokens[2]!r}")
        return SetLane(int(tokens[1]), Relay.ON if tokens[2] == "ON" else Relay.OFF)
    if head == "MODE":
        if len(tokens) != 2:
            raise ParseRejection(RejectionKind.BAD_SYNTAX, len(tokens), "MODE MANUAL|SEMI|AUTO")
        if tokens[1] not in _MODES:
            raise ParseRejection(RejectionKind.BAD_SYNTAX, 1, f"unknown mode {tokens[1]!r}")
        return SetMode(_MODES[tokens[1]])
    if head == "SETTIME":
        if len(tokens) not in (3, 6):
            raise ParseRejection(
                RejectionKind.BAD_SYNTAX, len(tokens), "SETTIME HH:MM HH:MM [SLEEP HH:MM HH:MM]"
            )
        on_t = _parse_time_token(tokens, 1)
        off_t = _parse_time_token(tokens, 2)
        sleep = None
        if len(tokens) == 6:
            if tokens[3] != "SLEEP":
                raise ParseRejection(RejectionKind.BAD_SYNTAX, 3, "expected SLEEP")
            sleep = (_parse_time_token(tokens, 4), _parse_time_token(tokens, 5))
        return SetTimes(on_t, off_t, sleep)
    if head == "STATUS":
        if len(tokens) != 1:
            raise ParseRejection(RejectionKind.BAD_SYNTAX, 1, "STATUS takes no arguments")
        return Status()
    if head == "DEVICE":
        if len(tokens) != 2 or tokens[1] not in ("ON", "OFF"):
            raise ParseRejection(RejectionKind.BAD_SYNTAX, 1, "DEVICE ON|OFF")
        return DeviceOn() if tokens[1] == "ON" else DeviceOff()
    raise ParseRejection(RejectionKind.BAD_SYNTAX, 0, f"unknown command {head!r}")


def parse_sms(msg: SmsMessage, whitelist: set[str]) -> Command:
    """Authenticate the sender, then parse the body against the grammar."""
    if msg.sender not in whitelist:
        raise ParseRejection(RejectionKind.UNAUTHORIZED)
    return parse_command_text(msg.body)


# --- outbound framing ---------------------------------------------------------


class FramingError(Exception):
    pass


class BodyTooLong(FramingError):
    pass


class NonPrintable(FramingError):
    pass


def frame_send_sms(recipient: str, body: str) -> list[bytes]:
    """AT text-mode chunks to transmit one SMS.

    Chunk boundaries are part of the contract: the third chunk must be held
    until the modem's "> " prompt.
    """
    if len(body) > MAX_SMS_LEN:
        raise BodyTooLong(f"{len(body)} > {MAX_SMS_LEN}")
    if any(not 0x20 <= ord(c) <= 0x7E for c in body):
        raise NonPrintable("body contains non-printable bytes")
    return [
        b"AT+CMGF=1\r",
        f'AT+CMGS="{recipient}"\r'.encode("ascii"),
        body.encode("ascii") + CTRL_Z,
    ]


# --- modem byte-stream parser -------------------------------------------------


class ModemEventKind(Enum):
    OK = "ok"
    ERROR = "error"
    PROMPT = "prompt"
    NEW_MESSAGE_INDEX = "new_message_index"
    SMS_RECEIVED = "sms_received"
    SEND_SUCCEEDED = "send_succeeded"
    SEND_FAILED = "send_failed"
    SEND_ABANDONED = "send_abandoned"
    OUTBOX_DROPPED = "outbox_dropped"
    GARBAGE_SKIPPED = "garbage_skipped"


@dataclass(frozen=True)
class ModemEvent:
    kind: ModemEventKind
    index: Optional[int] = None
    sender: Optional[str] = None
    body: Optional[str] = None


class LinkState(Enum):
    IDLE = "idle"
    AWAITING_PROMPT = "awaiting_prompt"
    AWAITING_SEND_RESULT = "awaiting_send_result"


_CMTI_RE = re.compile(rb'\+CMTI:\s*"[^"]*",\s*(\d+)')
_CMGR_RE = re.compile(rb'\+CMGR:\s*"[^"]*",\s*"([^"]*)"')


@dataclass
class ModemSession:
    """Driver state for the GSM shield. At most one send in flight."""

    state: LinkState = LinkState.IDLE
    outbox: deque = field(default_factory=lambda: deque())
    retry_count: int = 0
    _buffer: bytes = b""
    _pending_sender: Optional[str] = None  # between +CMGR header and body line


def _classify_line(session: ModemSession, line: bytes) -> Optional[ModemEvent]:
    if line == b"OK":
        return ModemEvent(ModemEventKind.OK)
    if line == b"ERROR" or line.startswith(b"+CMS ERROR"):
        return ModemEvent(ModemEventKind.ERROR)
    m = _CMTI_RE.match(line)
    if m:
        return ModemEvent(ModemEventKind.NEW_MESSAGE_INDEX, index=int(m.group(1)))
    m = _CMGR_RE.match(line)
    if m:
        session._pending_sender = m.group(1).decode("ascii", "replace")
        return None
    if session._pending_sender is not None:
        sender = session._pending_sender
        session._pending_sender = None
        return ModemEvent(
            ModemEventKind.SMS_RECEIVED, sender=sender, body=line.decode("ascii", "replace")
        )
    if line.startswith(b"+CMGS"):
        return None  # send receipt; the OK that follows settles the send
    return ModemEvent(ModemEventKind.GARBAGE_SKIPPED)


def modem_feed(session: ModemSession, data: bytes) -> list[ModemEvent]:
    """Incremental parse of modem output; tolerates arbitrary garbage."""
    session._buffer += data
    if len(session._buffer) > _BUFFER_CAP:
        session._buffer = session._buffer[-_BUFFER_CAP:]
    events: list[ModemEvent] = []
    while True:
        if session.state is LinkState.AWAITING_PROMPT and session._buffer.endswith(b"> "):
            session._buffer = b""
            events.append(ModemEvent(ModemEventKind.PROMPT))
            continue
        nl = session._buffer.find(b"\r\n")
        if nl < 0:
            break
        line = session._buffer[:nl]
        session._buffer = session._buffer[nl + 2 :]
        if not line:
            continue
        ev = _classify_line(session, line)
        if ev is None:
            continue
        if ev.kind is ModemEventKind.OK and session.state is LinkState.AWAITING_SEND_RESULT:
            session.state = LinkState.IDLE
            session.retry_count = 0
            session.outbox.popleft()
            events.append(ModemEvent(ModemEventKind.SEND_SUCCEEDED))
        elif ev.kind is ModemEventKind.ERROR and session.state is not LinkState.IDLE:
            session.state = LinkState.IDLE
            session.retry_count += 1
            events.append(ModemEvent(ModemEventKind.SEND_FAILED))
            if session.retry_count >= MAX_RETRIES:
                session.outbox.popleft()
                session.retry_count = 0
                events.append(ModemEvent(ModemEventKind.SEND_ABANDONED))
        else:
            events.append(ev)
    return events


def enqueue_sms(session: ModemSession, recipient: str, body: str) -> list[ModemEvent]:
    """Queue one outbound SMS; a full outbox drops the oldest entry."""
    events: list[ModemEvent] = []
    if len(session.outbox) >= OUTBOX_CAPACITY:
        session.outbox.popleft()
        if session.state is not LinkState.IDLE:
            # the dropped entry was in flight; abandon it
            session.state = LinkState.IDLE
            session.retry_count = 0
        events.append(ModemEvent(ModemEventKind.OUTBOX_DROPPED))
    session.outbox.append((recipient, body))
    return events


def dispatch_alert(session: ModemSession, alert: FaultAlert, authority: str) -> list[ModemEvent]:
    """Queue the fault SMS for the concerned authority."""
    return enqueue_sms(session, authority, alert.body())


def pump_outbox(session: ModemSession) -> list[bytes]:
    """Bytes to transmit now: starts the head-of-queue send when idle."""
    if session.state is LinkState.IDLE and session.outbox:
        recipient, body = session.outbox[0]
        chunks = frame_send_sms(recipient, body)
        session.state = LinkState.AWAITING_PROMPT
        return chunks[:2]
    return []


def on_prompt(session: ModemSession) -> list[bytes]:
    """Body chunk released by the modem's '> ' prompt."""
    if session.state is not LinkState.AWAITING_PROMPT or not session.outbox:
        return []
    recipient, body = session.outbox[0]
    session.state = LinkState.AWAITING_SEND_RESULT
    return [frame_send_sms(recipient, body)[2]]
