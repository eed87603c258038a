"""Scripted and behavioral emulations of the GSM shield's AT byte interface.

FakeModem behaves like a real text-mode modem: it answers CMGF/CMGS/CMGR,
stores every message it is asked to transmit, and raises +CMTI notifications
for injected inbound SMS. ScriptedModem replays a fixture file of
expect/reply steps for wire-level golden tests.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .gsm import CTRL_Z

_CMGS_RE = re.compile(rb'AT\+CMGS="([^"]*)"')
_CMGR_RE = re.compile(rb"AT\+CMGR=(\d+)")


@dataclass
class StoredSms:
    recipient: str
    body: str


@dataclass
class FakeModem:
    """Behavioral peer: speaks just enough of the text-mode command set."""

    sent: list[StoredSms] = field(default_factory=list)
    inbox: dict[int, tuple[str, str]] = field(default_factory=dict)
    fail_sends: int = 0  # reply ERROR to this many sends, then succeed
    _next_index: int = 1
    _rx: bytes = b""
    _tx: bytes = b""
    _pending_recipient: Optional[str] = None

    def feed(self, data: bytes) -> None:
        """Bytes from the controller; replies accumulate in the output."""
        self._rx += data
        self._process()

    def read(self) -> bytes:
        out, self._tx = self._tx, b""
        return out

    def inject_sms(self, sender: str, body: str) -> int:
        """Deliver an inbound SMS and raise the unsolicited +CMTI notice."""
        idx = self._next_index
        self._next_index += 1
        self.inbox[idx] = (sender, body)
        self._tx += f'+CMTI: "SM",{idx}\r\n'.encode("ascii")
        return idx

    def _process(self) -> None:
        while True:
            if self._pending_recipient is not None:
                z = self._rx.find(CTRL_Z)
                if z < 0:
                    return
                body = self._rx[:z].decode("ascii", "replace")
                self._rx = self._rx[z + 1 :]
                if self.fail_sends > 0:
                    self.fail_sends -= 1
                    self._tx += b"ERROR\r\n"
                else:
                    self.sent.append(StoredSms(self._pending_recipient, body))
                    self._tx += f"+CMGS: {len(self.sent)}\r\nOK\r\n".encode("ascii")
                self._pending_recipient = None
                continue
            cr = self._rx.find(b"\r")
            if cr < 0:
                return
            cmd = self._rx[:cr].strip()
            self._rx = self._rx[cr + 1 :]
            if not cmd:
                continue
            self._handle(cmd)

    def _handle(self, cmd: bytes) -> None:
        m = _CMGS_RE.match(cmd)
        if m:
            self._pending_recipient = m.group(1).decode("ascii", "replace")
            self._tx += b"> "
            return
        m = _CMGR_RE.match(cmd)
        if m:
            idx = int(m.group(1))
            if idx in self.inbox:
                sender, body = self.inbox[idx]
                self._tx += f'+CMGR: "REC UNREAD","{sender}",,""\r\n{body}\r\nOK\r\n'.encode(
                    "ascii"
                )
            else:
                self._tx += b"ERROR\r\n"
            return
        if cmd.startswith(b"AT"):
            self._tx += b"OK\r\n"
            return
        self._tx += b"ERROR\r\n"


class ScriptError(Exception):
    pass


@dataclass
class _Step:
    expect: re.Pattern
    replies: list[bytes]


class ScriptedModem:
    """Replays a control file of `expect <regex>` / `reply <literal>` lines.

    Each expect step matches against the next CR-terminated command (or the
    Ctrl-Z-terminated body while a send is open); its replies are then queued
    verbatim, with \\r \\n \\x1a \\x20 escapes expanded.
    """

    def __init__(self, script: str):
        self._steps: list[_Step] = []
        current: Optional[_Step] = None
        for raw in script.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            verb, _, rest = line.partition(" ")
            if verb == "expect":
                current = _Step(re.compile(rest), [])
                self._steps.append(current)
            elif verb == "reply":
                if current is None:
                    raise ScriptError("reply before any expect")
                current.replies.append(
                    rest.encode("ascii")
                    .replace(b"\\r", b"\r")
                    .replace(b"\\n", b"\n")
                    .replace(b"\\x1a", CTRL_Z)
                    .replace(b"\\x20", b" ")
                )
            else:
                raise ScriptError(f"unknown verb {verb!r}")
        self._rx = b""
        self._tx = b""
        self._pos = 0

    @property
    def finished(self) -> bool:
        return self._pos >= len(self._steps)

    def feed(self, data: bytes) -> None:
        self._rx += data
        while True:
            cut = -1
            for term in (b"\r", CTRL_Z):
                i = self._rx.find(term)
                if i >= 0 and (cut < 0 or i < cut):
                    cut = i
            if cut < 0:
                return
            unit = self._rx[:cut]
            self._rx = self._rx[cut + 1 :]
            if not unit:
                continue
            if self._pos >= len(self._steps):
                raise ScriptError(f"unexpected traffic after script end: {unit!r}")
            step = self._steps[self._pos]
            if not step.expect.search(unit.decode("ascii", "replace")):
                raise ScriptError(f"step {self._pos}: {unit!r} does not match {step.expect.pattern!r}")
            self._pos += 1
            for r in step.replies:
                self._tx += r

    def read(self) -> bytes:
        out, self._tx = self._tx, b""
        return out
