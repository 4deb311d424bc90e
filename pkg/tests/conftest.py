import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from asyred import (PagedStore, RedundancyRegion, Scrubber, ShadowState, SimClock,
                    StoreConfig, StripeConfig, Updater, UpdaterConfig)


class System:
    """One store plus its redundancy machinery, wired together."""

    def __init__(self, num_pages=16, page_size=256, cache_line=64, batch_size=None,
                 period=1.0, clock=None, log=None):
        batch_size = batch_size if batch_size is not None else min(512, num_pages)
        self.store_cfg = StoreConfig(num_pages=num_pages, page_size=page_size,
                                     cache_line=cache_line, batch_size=batch_size)
        self.stripe = StripeConfig()
        self.store = PagedStore(self.store_cfg)
        self.region = RedundancyRegion(num_pages, page_size, self.stripe)
        self.region.init_from_store(self.store.data)
        self.shadow = ShadowState(batch_size)
        self.clock = clock if clock is not None else SimClock()
        self.updater = Updater(self.store, self.region, self.shadow,
                               UpdaterConfig(period, self.stripe),
                               log=log, clock=self.clock)
        self.scrubber = Scrubber(self.store, self.region, self.shadow, self.stripe,
                                 clock=self.clock)

    def fill_random(self, seed=0):
        rng = np.random.default_rng(seed)
        self.store.data[:] = rng.integers(0, 256, self.store.data.shape, dtype=np.uint8)
        self.region.init_from_store(self.store.data)


@pytest.fixture
def system():
    return System()


def make_system(**kw) -> System:
    return System(**kw)
