"""Mean-time-to-data-loss model and vulnerable-stripe measurement.

Without redundancy any page corruption is a loss, so the MTTDL is the
per-page MTTF divided by the page count. With delayed checksums and
parity, only corruption inside a vulnerable stripe (one holding at least
one covered-pending page) is a loss, so the MTTDL divides by the number
of vulnerable stripes times the stripe width instead. The improvement
factor P / (V x N) follows; MTTF_Page itself cancels out of it.

V is a property of the workload and update period; harnesses sample it
during runs and feed the time-average in here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .redundancy import StripeConfig
from .store import PagedStore
from .updater import ShadowState

HOURS_MTTF_PAGE_DEFAULT = 1e6


@dataclass(frozen=True)
class MttdlInputs:
    mttf_page: float
    total_pages: int
    pages_per_stripe: int
    vulnerable_stripes: float

    def __post_init__(self):
        if self.mttf_page <= 0 or self.total_pages < 1 or self.pages_per_stripe < 1:
            raise ValueError("mttf_page, total_pages, pages_per_stripe must be positive")
        if self.vulnerable_stripes < 0:
            raise ValueError("vulnerable_stripes must be >= 0")
        limit = math.ceil(self.total_pages / self.pages_per_stripe)
        if self.vulnerable_stripes > limit:
            raise ValueError(f"vulnerable_stripes exceeds stripe count {limit}")


def mttdl_no_redundancy(inputs: MttdlInputs) -> float:
    """Every page corruption is a data loss."""
    return inputs.mttf_page / inputs.total_pages


def mttdl_with_redundancy(inputs: MttdlInputs) -> float:
    """Loss requires a corruption inside a vulnerable stripe; V = 0 means
    unbounded (reported as infinity)."""
    if inputs.vulnerable_stripes == 0:
        return math.inf
    return inputs.mttf_page / (inputs.vulnerable_stripes * inputs.pages_per_stripe)


def improvement_factor(inputs: MttdlInputs) -> float:
    if inputs.vulnerable_stripes == 0:
        return math.inf
    return inputs.total_pages / (inputs.vulnerable_stripes * inputs.pages_per_stripe)


def covered_pending_mask(store: PagedStore, shadow: ShadowState) -> np.ndarray:
    """Per-page bool mask: dirty bit or in-batch shadow bit set."""
    mask = store.dirty.copy()
    lo = shadow.batch_start
    hi = min(lo + shadow.batch_size, store.num_pages)
    if lo < store.num_pages:
        mask[lo:hi] |= shadow.bits[: hi - lo]
    return mask


def sample_vulnerable_stripes(store: PagedStore, shadow: ShadowState,
                              stripe: StripeConfig) -> int:
    """Stripes holding at least one covered-pending page, right now."""
    mask = covered_pending_mask(store, shadow)
    d = stripe.data_pages_per_stripe
    n = len(mask)
    pad = (-n) % d
    if pad:
        mask = np.concatenate([mask, np.zeros(pad, dtype=bool)])
    return int(mask.reshape(-1, d).any(axis=1).sum())
