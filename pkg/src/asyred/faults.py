"""Firmware-bug fault injection and power-failure simulation.

Injected corruptions happen below the software: they never touch dirty
bits. A lost write reverts a staged write's bytes while the application
believes the write completed; whether that ends up silent or detectable
depends on whether the page's checksum was recomputed before or after
the bytes were dropped. Rest corruption scribbles over a page in place,
modeling wear-leveling bugs. Misdirected writes land a staged write's
payload on the wrong page; misdirected reads return the wrong page's
bytes once, without changing the store.

Power failure is survivable by design: the battery keeps the server up
long enough to run one final update pass, so afterwards every page is
clean and its redundancy exact. The battery sizing arithmetic is
energy = watts x pass time, cost = energy x price per kilojoule.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .events import SimClock
from .store import PagedStore
from .updater import PassStats, Updater


class FaultKind(enum.Enum):
    LOST_WRITE = "lost_write"
    MISDIRECTED_WRITE = "misdirected_write"
    MISDIRECTED_READ = "misdirected_read"
    REST_CORRUPTION = "rest_corruption"
    BIT_FLIP = "bit_flip"


class Trigger(enum.Enum):
    BEFORE_REDUNDANCY_UPDATE = "before_redundancy_update"
    AFTER_REDUNDANCY_UPDATE = "after_redundancy_update"
    AT_REST = "at_rest"


_MISDIRECTED = (FaultKind.MISDIRECTED_WRITE, FaultKind.MISDIRECTED_READ)


@dataclass
class FaultEvent:
    """One scheduled firmware-bug occurrence."""

    kind: FaultKind
    target_page: int
    aux_page: int | None = None
    trigger: Trigger = Trigger.AT_REST
    payload_seed: int = 0
    at_time: float | None = None

    def __post_init__(self):
        if isinstance(self.kind, str):
            self.kind = FaultKind(self.kind)
        if isinstance(self.trigger, str):
            self.trigger = Trigger(self.trigger)
        if self.kind in _MISDIRECTED:
            if self.aux_page is None:
                raise ValueError(f"{self.kind.value} needs an aux_page")
            if self.aux_page == self.target_page:
                raise ValueError("misdirected faults need distinct pages")


def inject_lost_write(store: PagedStore, page: int) -> bool:
    """Drop the newest staged write to `page`: media bytes revert, the
    dirty bit is left exactly as the original write set it. No-op when
    nothing is staged."""
    staged = _pop_newest_staged(store, page)
    if staged is None:
        return False
    n = len(staged.before)
    store.data[page, staged.offset:staged.offset + n] = np.frombuffer(
        staged.before, dtype=np.uint8)
    return True


def inject_rest_corruption(store: PagedStore, page: int, payload_seed: int = 0,
                           payload: bytes | None = None) -> None:
    """Overwrite a page below the software; the dirty bit stays untouched."""
    store._check_page(page)
    if payload is None:
        rng = np.random.default_rng(payload_seed)
        payload = rng.integers(0, 256, size=store.config.page_size, dtype=np.uint8)
    else:
        payload = np.frombuffer(payload, dtype=np.uint8)
        if len(payload) != store.config.page_size:
            raise ValueError("payload must be one full page")
    store.data[page] = payload


def inject_bit_flip(store: PagedStore, page: int, payload_seed: int = 0) -> None:
    """Flip one data bit in place (dirty bit untouched)."""
    store._check_page(page)
    nbits = store.config.page_size * 8
    bit = payload_seed % nbits
    store.data[page, bit // 8] ^= np.uint8(1 << (bit % 8))


def inject_misdirected(store: PagedStore, kind: FaultKind, target_page: int,
                       aux_page: int) -> bool:
    """Misdirected write: the newest staged write to target lands on aux
    instead (aux dirty bit not set). Misdirected read: the next read of
    target returns aux's bytes."""
    if target_page == aux_page:
        raise ValueError("misdirected faults need distinct pages")
    store._check_page(target_page)
    store._check_page(aux_page)
    if kind == FaultKind.MISDIRECTED_READ:
        store.redirect_next_read(target_page, aux_page)
        return True
    if kind != FaultKind.MISDIRECTED_WRITE:
        raise ValueError(f"not a misdirected kind: {kind}")
    staged = _pop_newest_staged(store, target_page)
    if staged is None:
        return False
    n = len(staged.after)
    store.data[aux_page, staged.offset:staged.offset + n] = np.frombuffer(
        staged.after, dtype=np.uint8)
    return True


def _pop_newest_staged(store: PagedStore, page: int):
    for i in range(len(store.staged_writes) - 1, -1, -1):
        if store.staged_writes[i].page == page:
            staged = store.staged_writes[i]
            del store.staged_writes[i]
            return staged
    return None


def inject(store: PagedStore, event: FaultEvent) -> bool:
    """Apply one fault event now. Returns False for no-op injections."""
    if event.kind == FaultKind.LOST_WRITE:
        return inject_lost_write(store, event.target_page)
    if event.kind == FaultKind.REST_CORRUPTION:
        inject_rest_corruption(store, event.target_page, event.payload_seed)
        return True
    if event.kind == FaultKind.BIT_FLIP:
        inject_bit_flip(store, event.target_page, event.payload_seed)
        return True
    return inject_misdirected(store, event.kind, event.target_page, event.aux_page)


# -- power failure ---------------------------------------------------------------


@dataclass(frozen=True)
class BatteryModel:
    server_watts: float = 500.0
    ultracapacitor_usd_per_kj: float = 2.85
    lithium_ion_usd_per_kj: float = 0.02


@dataclass
class BatteryReport:
    pass_seconds: float
    energy_kj: float
    cost_ultracapacitor_usd: float
    cost_lithium_ion_usd: float
    pages_flushed: int = 0
    stripes_flushed: int = 0


def battery_report(pass_seconds: float, battery: BatteryModel = BatteryModel(),
                   pages_flushed: int = 0, stripes_flushed: int = 0) -> BatteryReport:
    """Energy and cost needed to ride out one final update pass."""
    energy_kj = battery.server_watts * pass_seconds / 1000.0
    return BatteryReport(
        pass_seconds=pass_seconds,
        energy_kj=energy_kj,
        cost_ultracapacitor_usd=energy_kj * battery.ultracapacitor_usd_per_kj,
        cost_lithium_ion_usd=energy_kj * battery.lithium_ion_usd_per_kj,
        pages_flushed=pages_flushed,
        stripes_flushed=stripes_flushed,
    )


def simulate_power_failure(updater: Updater,
                           battery: BatteryModel = BatteryModel()) -> BatteryReport:
    """Cut power: in-flight application writes are already durable (the
    caches are battery-backed), so the only work left is one full update
    pass on battery. Afterwards every page is clean and redundancy exact.
    """
    updater.log.cancel_crash()
    clock = updater.clock
    if clock is None:
        clock = updater.clock = SimClock()
    t0 = clock.now()
    stats: PassStats = updater.run_one_pass()
    seconds = clock.now() - t0
    return battery_report(seconds, battery,
                          pages_flushed=stats.pages_checksummed,
                          stripes_flushed=stats.stripes_reparitied)
