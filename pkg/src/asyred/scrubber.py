"""Background verification of clean pages, with single-parity recovery.

A page is verified only when neither its dirty bit nor its shadow bit is
set. On a checksum mismatch the clean test is repeated: a write that
landed between the first check and the verification has set the dirty
bit again, so the mismatch is stale and no report is raised. Only a page
that is still clean on the second look is reported as corrupted; the run
is then flagged halted (the real system would signal the application,
the simulator keeps going so the outcome can be analyzed).

Recovery rebuilds a reported page from parity XOR its stripe siblings,
which is sound only while every page of the stripe is clean.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .crc import crc32c, crc32c_pages
from .events import CostModel, SimClock
from .redundancy import RedundancyRegion, StripeConfig
from .store import PagedStore
from .updater import ShadowState, is_covered_pending


@dataclass
class CorruptionReport:
    page: int
    stripe: int
    pass_number: int
    stored_checksum: int
    computed_checksum: int


class RecoveryOutcome(enum.Enum):
    RECOVERED = "recovered"
    UNRECOVERABLE_DIRTY_STRIPE = "unrecoverable_dirty_stripe"
    UNRECOVERABLE_BAD_RECONSTRUCTION = "unrecoverable_bad_reconstruction"


@dataclass
class ScrubReport:
    pass_number: int = 0
    pages_scanned: int = 0
    pages_skipped: int = 0
    reports: list[CorruptionReport] = field(default_factory=list)
    halted: bool = False


class Scrubber:
    def __init__(self, store: PagedStore, region: RedundancyRegion,
                 shadow: ShadowState, stripe: StripeConfig,
                 clock: SimClock | None = None,
                 cost_model: CostModel | None = None):
        self.store = store
        self.region = region
        self.shadow = shadow
        self.stripe = stripe
        self.clock = clock
        self.cost = cost_model or CostModel()
        self.passes_done = 0
        self.halted = False
        # pages already reported; the real system halts on the first report,
        # the simulator keeps scanning but reports each page once
        self.reported_pages: set[int] = set()

    def _covered(self, page: int) -> bool:
        return is_covered_pending(self.shadow, self.store, page)

    def scrub_one_pass(self, bulk: bool = True) -> ScrubReport:
        """Sweep all pages in index order and verify the clean ones."""
        report = ScrubReport(pass_number=self.passes_done)
        if bulk:
            covered = self.store.dirty.copy()
            lo = self.shadow.batch_start
            hi = min(lo + self.shadow.batch_size, self.store.num_pages)
            if lo < self.store.num_pages:
                covered[lo:hi] |= self.shadow.bits[: hi - lo]
            computed = crc32c_pages(self.store.data)
            mismatched = (computed != self.region.checksums) & ~covered
            report.pages_skipped = int(np.count_nonzero(covered))
            report.pages_scanned = self.store.num_pages - report.pages_skipped
            for page in np.flatnonzero(mismatched):
                self._recheck_and_report(int(page), int(computed[page]), report)
        else:
            for _ in self.scrub_steps(report):
                pass
        if self.clock is not None:
            self.clock.advance(report.pages_scanned * self.cost.scrub_page_ns * 1e-9)
        self.passes_done += 1
        if report.halted:
            self.halted = True
        return report

    def scrub_steps(self, report: ScrubReport):
        """Generator form: one yield per page check, verify, and recheck."""
        for page in range(self.store.num_pages):
            if self._covered(page):
                report.pages_skipped += 1
                yield "skip"
                continue
            yield "check"
            computed = crc32c(self.store.data[page])
            report.pages_scanned += 1
            if computed == int(self.region.checksums[page]):
                yield "verify"
                continue
            yield "verify"
            self._recheck_and_report(page, computed, report)
            yield "recheck"

    def _recheck_and_report(self, page: int, computed: int, report: ScrubReport):
        if self._covered(page):
            # modified after the first check; not a corruption
            return
        if page in self.reported_pages:
            return
        self.reported_pages.add(page)
        report.reports.append(CorruptionReport(
            page=page,
            stripe=self.stripe.stripe_of(page),
            pass_number=self.passes_done,
            stored_checksum=int(self.region.checksums[page]),
            computed_checksum=computed,
        ))
        report.halted = True

    # -- recovery ---------------------------------------------------------------

    def attempt_recovery(self, page: int) -> RecoveryOutcome:
        """Rebuild a reported page if its whole stripe is clean."""
        s = self.stripe.stripe_of(page)
        for sibling in self.stripe.stripe_pages(s, self.store.num_pages):
            if sibling != page and self._covered(sibling):
                return RecoveryOutcome.UNRECOVERABLE_DIRTY_STRIPE
        if self._covered(page):
            return RecoveryOutcome.UNRECOVERABLE_DIRTY_STRIPE
        rebuilt = self.region.reconstruct_page(page, self.store.data)
        if crc32c(rebuilt) != int(self.region.checksums[page]):
            return RecoveryOutcome.UNRECOVERABLE_BAD_RECONSTRUCTION
        # repair below the application: data only, dirty bit untouched
        self.store.data[page] = rebuilt
        self.reported_pages.discard(page)
        return RecoveryOutcome.RECOVERED
