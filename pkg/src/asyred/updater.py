"""Background redundancy-update thread.

Each pass walks the store in batches of B pages: snapshot dirty bits,
persist them as the shadow copy, clear the originals, recompute the
checksum of every dirty page and the parity of every stripe containing
one, then drop the shadow copy. A page is covered-pending while either
its dirty bit or its shadow bit is set; that is the window in which its
redundancy may be stale but the staleness is known.

A single shadow bitvector of size B plus the current batch's starting
page stands in for per-page shadow bits: only the batch being processed
ever has its dirty bits cleared. If a pass dies mid-batch the shadow
survives, and the next pass first re-processes the interrupted batch.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .crc import crc32c, crc32c_pages
from .events import CostModel, PersistenceLog, SimClock
from .redundancy import RedundancyRegion, StripeConfig
from .store import PagedStore


@dataclass
class ShadowState:
    """Persistent shadow copy of one batch's dirty bits."""

    batch_size: int
    bits: np.ndarray = None
    batch_start: int = 0

    def __post_init__(self):
        if self.bits is None:
            self.bits = np.zeros(self.batch_size, dtype=bool)

    def any(self) -> bool:
        return bool(self.bits.any())

    def covers(self, page: int) -> bool:
        off = page - self.batch_start
        return 0 <= off < self.batch_size and bool(self.bits[off])

    def set_from(self, bits: np.ndarray, batch_start: int) -> None:
        self.batch_start = batch_start
        n = len(bits)
        self.bits[:n] = bits
        self.bits[n:] = False

    def clear(self) -> None:
        self.bits[:] = False


def is_covered_pending(shadow: ShadowState, store: PagedStore, page: int) -> bool:
    """True while the page's redundancy may lag its data."""
    return bool(store.dirty[page]) or shadow.covers(page)


@dataclass(frozen=True)
class UpdaterConfig:
    period: float = 1.0
    stripe: StripeConfig = field(default_factory=StripeConfig)

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")


@dataclass
class PassStats:
    batches: int = 0
    pages_checksummed: int = 0
    stripes_reparitied: int = 0
    recovery_batches: int = 0
    start_time: float = 0.0
    duration_s: float = 0.0
    completed: bool = False


class Updater:
    """Owner of the shadow state and all redundancy-region writes."""

    def __init__(self, store: PagedStore, region: RedundancyRegion,
                 shadow: ShadowState, config: UpdaterConfig,
                 log: PersistenceLog | None = None,
                 clock: SimClock | None = None,
                 cost_model: CostModel | None = None):
        self.store = store
        self.region = region
        self.shadow = shadow
        self.config = config
        self.log = log if log is not None else PersistenceLog(record=False)
        self.clock = clock
        self.cost = cost_model or CostModel()
        self.passes_done = 0

    # -- one pass -------------------------------------------------------------

    def run_one_pass(self, should_stop=None) -> PassStats:
        stats = PassStats()
        for _ in self.pass_steps(stats, should_stop=should_stop):
            pass
        return stats

    def pass_steps(self, stats: PassStats, should_stop=None, bulk: bool = True):
        """Generator form of one pass; yields once per persistent micro-step.

        With bulk=True the checksums of a batch are computed vectorized
        right after the clear; with bulk=False each page is checksummed at
        its own step, which is what interleaving harnesses want.
        """
        if self.clock is not None:
            stats.start_time = self.clock.now()
        n = self.store.num_pages
        b = self.store.config.batch_size
        if self.shadow.any():
            # a previous pass died mid-batch; finish its work first
            stats.recovery_batches += 1
            yield from self._batch_steps(self.shadow.batch_start, stats, bulk)
        for i in range(0, n, b):
            if should_stop is not None and should_stop():
                return
            yield from self._batch_steps(i, stats, bulk)
        self.log.emit("meta")
        self.region.refresh_meta_checksum()
        self._advance(self.cost.meta_per_page_ns * n * 1e-9)
        if self.clock is not None:
            stats.duration_s = self.clock.now() - stats.start_time
        stats.completed = True
        self.passes_done += 1
        yield "meta"

    def _batch_steps(self, start: int, stats: PassStats, bulk: bool):
        store, region, shadow = self.store, self.region, self.shadow
        stripe_cfg = self.config.stripe
        end = min(start + store.config.batch_size, store.num_pages)
        before = store.counters.snapshot()
        csums = parities = 0

        self.log.emit("get", start)
        bv = store.get_dirty_bits(start, end)
        yield "get"
        if shadow.any() and shadow.batch_start == start:
            # merge the interrupted batch's pending pages
            bv.bits |= shadow.bits[: end - start]
        self.log.emit("shadow_store", start)
        shadow.set_from(bv.bits, start)
        yield "shadow_store"
        self.log.emit("barrier")
        self.log.emit("clear", start)
        store.clear_dirty_bits(start, end, bv)
        yield "clear"

        if bv.any():
            dirty_pages = bv.pages()
            crcs = None
            if bulk:
                crcs = dict(zip(dirty_pages,
                                (int(c) for c in crc32c_pages(store.data[dirty_pages]))))
            first_stripe = stripe_cfg.stripe_of(start)
            last_stripe = stripe_cfg.stripe_of(end - 1)
            dirty_set = set(dirty_pages)
            for s in range(first_stripe, last_stripe + 1):
                pages = stripe_cfg.stripe_pages(s, store.num_pages)
                touched = [p for p in pages if p in dirty_set]
                if not touched:
                    continue
                for p in touched:
                    value = crcs[p] if crcs is not None else crc32c(store.data[p])
                    self.log.emit("checksum", p)
                    region.checksums[p] = value
                    csums += 1
                    yield "checksum"
                self.log.emit("parity", s)
                region.parity[s] = region.stripe_parity(s, store.data)
                parities += 1
                yield "parity"

        self.log.emit("barrier")
        self.log.emit("shadow_clear", start)
        shadow.clear()
        stats.batches += 1
        stats.pages_checksummed += csums
        stats.stripes_reparitied += parities
        delta = store.counters.delta(before)
        self._advance_batch_cost(delta, csums, parities)
        yield "shadow_clear"

    def _advance_batch_cost(self, delta, csums: int, parities: int) -> None:
        c = self.cost
        ns = (
            delta.syscalls * c.syscall_ns
            + delta.walk_steps * c.walk_step_ns
            + delta.tlb_invalidations * c.tlb_invalidation_ns
            + csums * c.checksum_page_ns
            + parities * c.parity_page_ns
        )
        self._advance(ns * 1e-9)

    def _advance(self, seconds: float) -> None:
        if self.clock is not None:
            self.clock.advance(seconds)

    # -- periodic scheduling ----------------------------------------------------

    def run_periodic(self, stop_signal: threading.Event, clock=None,
                     until: float | None = None,
                     max_passes: int | None = None) -> list[PassStats]:
        """Run passes at fixed deadlines (previous deadline + period).

        Stops promptly once stop_signal is set, finishing the in-flight
        batch first. `until`/`max_passes` bound simulated runs.
        """
        clk = clock or self.clock
        if clk is None:
            raise ValueError("run_periodic needs a clock")
        results: list[PassStats] = []
        deadline = clk.now() + self.config.period
        while True:
            if max_passes is not None and len(results) >= max_passes:
                break
            if until is not None and deadline > until:
                break
            if clk.wait_until(deadline, stop_signal):
                break
            results.append(self.run_one_pass(should_stop=stop_signal.is_set))
            deadline += self.config.period
        return results
