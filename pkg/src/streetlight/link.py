"""Glue between the controller and its modem: pumping, reads, ack routing."""

from __future__ import annotations

from typing import Optional, Protocol

from .commands import InboundCommand
from .gsm import (
    FaultAlert,
    ModemEvent,
    ModemEventKind,
    ModemSession,
    ParseRejection,
    SmsMessage,
    dispatch_alert,
    enqueue_sms,
    modem_feed,
    on_prompt,
    pump_outbox,
)


class Transport(Protocol):
    """Byte pipe to the modem (real serial port or a fake peer)."""

    def feed(self, data: bytes) -> None: ...

    def read(self) -> bytes: ...


class StationLink:
    """Runs the AT conversation and turns inbound SMS into commands."""

    def __init__(self, transport: Transport, whitelist: set[str], authority: str):
        self.session = ModemSession()
        self.transport = transport
        self.whitelist = whitelist
        self.authority = authority
        self.rejected: list[tuple[str, str]] = []  # (sender, why) for the log

    def send_sms(self, recipient: str, body: str) -> None:
        enqueue_sms(self.session, recipient, body)

    def send_alert(self, alert: FaultAlert) -> None:
        dispatch_alert(self.session, alert, self.authority)

    def pump(self, max_rounds: int = 8) -> list[InboundCommand]:
        """Exchange pending bytes with the modem until quiescent.

        Returns commands parsed from newly read SMS, in arrival order.
        """
        commands: list[InboundCommand] = []
        for _ in range(max_rounds):
            out = b"".join(pump_outbox(self.session))
            if out:
                self.transport.feed(out)
            data = self.transport.read()
            if not out and not data:
                break
            progressed = bool(out or data)
            for ev in modem_feed(self.session, data):
                self._handle_event(ev, commands)
            if not progressed:
                break
        return commands

    def _handle_event(self, ev: ModemEvent, commands: list[InboundCommand]) -> None:
        if ev.kind is ModemEventKind.PROMPT:
            body = b"".join(on_prompt(self.session))
            if body:
                self.transport.feed(body)
        elif ev.kind is ModemEventKind.NEW_MESSAGE_INDEX:
            self.transport.feed(f"AT+CMGR={ev.index}\r".encode("ascii"))
        elif ev.kind is ModemEventKind.SMS_RECEIVED:
            self._on_sms(ev.sender or "", ev.body or "", commands)

    def _on_sms(self, sender: str, body: str, commands: list[InboundCommand]) -> None:
        from .gsm import parse_sms

        try:
            msg = SmsMessage(sender, body)
        except ValueError as exc:
            self.rejected.append((sender, str(exc)))
            return
        try:
            cmd = parse_sms(msg, self.whitelist)
        except ParseRejection as rej:
            self.rejected.append((sender, str(rej)))
            return
        commands.append(InboundCommand(cmd, source=sender))
