"""Simulated time, per-operation cost model, and the persistence-event log.

The system assumes battery-backed servers: nothing is ever flushed, and
memory fences only order persistent updates. In simulation an ordering
point is a ``barrier`` event in the log; everything emitted before a
barrier is durable before anything emitted after it. The log doubles as
the crash-injection hook: a planned power failure fires just before the
Nth event would take effect.
"""

from __future__ import annotations

import time
from dataclasses import dataclass


class PowerFailure(Exception):
    """Simulated power interruption; the in-flight update stops mid-step."""


@dataclass(frozen=True)
class CostModel:
    """Nanosecond costs of simulated operations (desk-scale calibration,
    deliberately approximate)."""

    syscall_ns: float = 1800.0
    walk_step_ns: float = 300.0
    tlb_invalidation_ns: float = 1400.0
    checksum_page_ns: float = 1200.0
    parity_page_ns: float = 6000.0
    scrub_page_ns: float = 1300.0
    meta_per_page_ns: float = 1.0
    io_op_ns: float = 120.0
    io_line_ns: float = 60.0

    def io_cost_s(self, lines: int) -> float:
        return (self.io_op_ns + self.io_line_ns * lines) * 1e-9


class SimClock:
    """Deterministic simulated clock measured in seconds."""

    def __init__(self, start: float = 0.0):
        self._now = float(start)

    def now(self) -> float:
        return self._now

    def advance(self, seconds: float) -> None:
        if seconds < 0:
            raise ValueError("time only moves forward")
        self._now += seconds

    def wait_until(self, deadline: float, stop_event=None) -> bool:
        """Jump to the deadline; returns True if a stop was requested."""
        if deadline > self._now:
            self._now = deadline
        return bool(stop_event is not None and stop_event.is_set())


class WallClock:
    """Real monotonic clock with interruptible sleeps."""

    def __init__(self):
        self._t0 = time.monotonic()

    def now(self) -> float:
        return time.monotonic() - self._t0

    def advance(self, seconds: float) -> None:
        # real time advances on its own; simulated costs are a no-op here
        pass

    def wait_until(self, deadline: float, stop_event=None) -> bool:
        remaining = deadline - self.now()
        if stop_event is None:
            if remaining > 0:
                time.sleep(remaining)
            return False
        return stop_event.wait(max(0.0, remaining))


class PersistenceLog:
    """Ordered record of persistent updates and their ordering barriers.

    Events are ``(kind, arg)`` tuples; kinds used by the updater are
    get / shadow_store / barrier / clear / checksum / parity /
    shadow_clear / meta. Recording can be disabled for long runs while
    still counting events so planned crashes stay addressable.
    """

    def __init__(self, record: bool = True):
        self.record = record
        self.events: list[tuple[str, int]] = []
        self.count = 0
        self.crash_at: int | None = None

    def plan_crash(self, at_event: int) -> None:
        """Raise PowerFailure just before event number `at_event` (1-based)
        takes effect."""
        self.crash_at = at_event

    def cancel_crash(self) -> None:
        self.crash_at = None

    def emit(self, kind: str, arg: int = -1) -> None:
        if self.crash_at is not None and self.count + 1 >= self.crash_at:
            self.crash_at = None
            raise PowerFailure(f"power failure at event {self.count + 1} ({kind})")
        self.count += 1
        if self.record:
            self.events.append((kind, arg))

    def kinds(self) -> list[str]:
        return [k for k, _ in self.events]

    def clear(self) -> None:
        self.events.clear()
