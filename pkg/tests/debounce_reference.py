"""Brute-force reference for the fault debounce/re-alert rules.

Scans a boolean below-threshold sequence with explicit counters and returns
the indices at which an alert must fire. Written against the rules, not the
production state machine, so the two can be compared.
"""

from __future__ import annotations


def reference_alert_positions(
    below: list[bool], debounce: int, realert_ticks: int
) -> list[int]:
    """Ticks are one time unit apart; realert_ticks is the re-alert interval
    expressed in ticks."""
    alerts = []
    below_streak = 0
    healthy_streak = 0
    active = False
    last_alert = None
    for i, b in enumerate(below):
        if b:
            below_streak += 1
            healthy_streak = 0
            if not active:
                if below_streak >= debounce:
                    active = True
                    alerts.append(i)
                    last_alert = i
            else:
                if last_alert is None or i - last_alert >= realert_ticks:
                    alerts.append(i)
                    last_alert = i
        else:
            below_streak = 0
            healthy_streak += 1
            if active and healthy_streak >= debounce:
                active = False
                healthy_streak = 0
                last_alert = None
    return alerts
