"""Emulated direct-access paged store with per-page dirty bits.

The store models an NVM file mapped into an application's address space:
a flat array of fixed-size pages written at cache-line granularity. Every
write sets the page's dirty bit; dirty bits are fetched and conditionally
cleared in batches through ``get_dirty_bits``/``clear_dirty_bits``, which
also account the simulated kernel costs (syscalls, page-walk steps, TLB
invalidations) that batching amortizes.
"""

from __future__ import annotations

import struct
from collections import deque
from dataclasses import dataclass

import numpy as np

STORE_MAGIC = b"VLMB"
STORE_VERSION = 1

# entries per page-table level; one walk step is charged per leaf table touched
PTES_PER_TABLE = 512


@dataclass(frozen=True)
class StoreConfig:
    num_pages: int
    page_size: int = 4096
    cache_line: int = 64
    batch_size: int = 512

    def __post_init__(self):
        if self.num_pages < 1:
            raise ValueError("num_pages must be >= 1")
        if self.cache_line < 1:
            raise ValueError("cache_line must be >= 1")
        if self.page_size < 1 or self.page_size % self.cache_line != 0:
            raise ValueError("page_size must be a positive multiple of cache_line")
        if not 1 <= self.batch_size <= self.num_pages:
            raise ValueError("batch_size must satisfy 1 <= B <= num_pages")

    @property
    def lines_per_page(self) -> int:
        return self.page_size // self.cache_line


@dataclass
class DirtyBitvector:
    """Snapshot of dirty bits for pages [base_page, base_page + len(bits))."""

    bits: np.ndarray
    base_page: int

    def __len__(self) -> int:
        return len(self.bits)

    def any(self) -> bool:
        return bool(self.bits.any())

    def pages(self) -> list[int]:
        return [self.base_page + int(i) for i in np.flatnonzero(self.bits)]


@dataclass
class OpCounters:
    """Simulated kernel-cost counters for dirty-bit maintenance."""

    syscalls: int = 0
    get_calls: int = 0
    clear_calls: int = 0
    walk_steps: int = 0
    tlb_invalidations: int = 0
    pages_cleared: int = 0

    def snapshot(self) -> "OpCounters":
        return OpCounters(
            self.syscalls,
            self.get_calls,
            self.clear_calls,
            self.walk_steps,
            self.tlb_invalidations,
            self.pages_cleared,
        )

    def delta(self, since: "OpCounters") -> "OpCounters":
        return OpCounters(
            self.syscalls - since.syscalls,
            self.get_calls - since.get_calls,
            self.clear_calls - since.clear_calls,
            self.walk_steps - since.walk_steps,
            self.tlb_invalidations - since.tlb_invalidations,
            self.pages_cleared - since.pages_cleared,
        )


@dataclass
class StagedWrite:
    """A write sitting in the emulated on-device write-back cache."""

    page: int
    offset: int
    before: bytes
    after: bytes
    seq: int


class PagedStore:
    """Byte store of ``num_pages`` pages with write-interposed dirty bits.

    Writes and reads are callable from any thread; ``get_dirty_bits`` and
    ``clear_dirty_bits`` belong to the single updater thread. Individual
    dirty bits are set/cleared atomically; snapshots are not atomic across
    pages.
    """

    def __init__(self, config: StoreConfig, track_writes: bool = False,
                 staging_capacity: int = 1024):
        self.config = config
        self.data = np.zeros((config.num_pages, config.page_size), dtype=np.uint8)
        self.dirty = np.zeros(config.num_pages, dtype=bool)
        self.counters = OpCounters()
        self.write_log: list[tuple[int, int, int]] | None = [] if track_writes else None
        self.staged_writes: deque[StagedWrite] = deque(maxlen=staging_capacity)
        self._write_seq = 0
        # read-path fault hook: page -> list of source pages for redirected reads
        self._read_redirects: dict[int, list[int]] = {}

    @property
    def num_pages(self) -> int:
        return self.config.num_pages

    def _check_page(self, page: int):
        if not 0 <= page < self.config.num_pages:
            raise IndexError(f"page {page} out of range [0, {self.config.num_pages})")

    def _check_span(self, page: int, offset: int, length: int):
        self._check_page(page)
        if offset < 0 or length < 0 or offset + length > self.config.page_size:
            raise IndexError(
                f"byte range [{offset}, {offset + length}) exceeds page size "
                f"{self.config.page_size}"
            )

    def write(self, page: int, offset: int, payload: bytes) -> None:
        """Apply a cache-line-granular write and set the page's dirty bit."""
        n = len(payload)
        self._check_span(page, offset, n)
        if n == 0:
            raise ValueError("empty write")
        cl = self.config.cache_line
        if offset % cl != 0 or n % cl != 0:
            raise ValueError("offset and length must be multiples of the cache line")
        before = self.data[page, offset:offset + n].tobytes()
        self.data[page, offset:offset + n] = np.frombuffer(payload, dtype=np.uint8)
        self.dirty[page] = True
        self._write_seq += 1
        self.staged_writes.append(
            StagedWrite(page, offset, before, bytes(payload), self._write_seq)
        )
        if self.write_log is not None:
            self.write_log.append((page, offset, n))

    def read(self, page: int, offset: int, length: int) -> bytes:
        """Read bytes; never touches dirty bits."""
        self._check_span(page, offset, length)
        redirects = self._read_redirects.get(page)
        if redirects:
            src = redirects.pop(0)
            if not redirects:
                del self._read_redirects[page]
            return self.data[src, offset:offset + length].tobytes()
        return self.data[page, offset:offset + length].tobytes()

    def page_bytes(self, page: int) -> np.ndarray:
        """Raw view of one page (no fault interposition)."""
        self._check_page(page)
        return self.data[page]

    def redirect_next_read(self, target_page: int, source_page: int) -> None:
        """Arm a misdirected read: the next read of target returns source's bytes."""
        self._check_page(target_page)
        self._check_page(source_page)
        self._read_redirects.setdefault(target_page, []).append(source_page)

    def _walk_steps(self, start: int, end: int) -> int:
        return (end - 1) // PTES_PER_TABLE - start // PTES_PER_TABLE + 1

    def _check_range(self, start: int, end: int):
        if not (0 <= start < end <= self.config.num_pages):
            raise IndexError(f"page range [{start}, {end}) invalid for N={self.config.num_pages}")
        if end - start > self.config.batch_size:
            raise IndexError(f"range longer than batch size {self.config.batch_size}")

    def get_dirty_bits(self, start: int, end: int) -> DirtyBitvector:
        """Snapshot dirty bits for [start, end). One simulated syscall."""
        self._check_range(start, end)
        self.counters.syscalls += 1
        self.counters.get_calls += 1
        self.counters.walk_steps += self._walk_steps(start, end)
        return DirtyBitvector(self.dirty[start:end].copy(), start)

    def clear_dirty_bits(self, start: int, end: int, mask: DirtyBitvector) -> None:
        """Clear dirty bits in [start, end) only where the mask bit is set.

        Pages dirtied after the snapshot whose mask bit is unset keep their
        dirty bit; their redundancy is picked up on a later round.
        """
        self._check_range(start, end)
        if mask.base_page != start or len(mask.bits) != end - start:
            raise ValueError("mask must cover exactly [start, end)")
        self.counters.syscalls += 1
        self.counters.clear_calls += 1
        self.counters.walk_steps += self._walk_steps(start, end)
        window = self.dirty[start:end]
        cleared = int(np.count_nonzero(window & mask.bits))
        # touch only masked positions so unmasked bits can never be lost
        window[mask.bits] = False
        self.counters.tlb_invalidations += cleared
        self.counters.pages_cleared += cleared

    # -- flat-file persistence (crash-simulation round trips) ----------------

    def save(self, path) -> None:
        """Persist data + dirty bits: magic, u32 version, u64 page_size,
        u64 num_pages, raw pages, LSB-first packed dirty bits."""
        header = STORE_MAGIC + struct.pack(
            "<IQQ", STORE_VERSION, self.config.page_size, self.config.num_pages
        )
        packed = np.packbits(self.dirty, bitorder="little")
        with open(path, "wb") as f:
            f.write(header)
            f.write(self.data.tobytes())
            f.write(packed.tobytes())

    @classmethod
    def load(cls, path, cache_line: int = 64, batch_size: int | None = None) -> "PagedStore":
        with open(path, "rb") as f:
            magic = f.read(4)
            if magic != STORE_MAGIC:
                raise ValueError(f"bad magic {magic!r}")
            version, page_size, num_pages = struct.unpack("<IQQ", f.read(20))
            if version != STORE_VERSION:
                raise ValueError(f"unsupported store version {version}")
            if batch_size is None:
                batch_size = min(512, num_pages)
            cfg = StoreConfig(num_pages=num_pages, page_size=page_size,
                              cache_line=cache_line, batch_size=batch_size)
            store = cls(cfg)
            raw = f.read(num_pages * page_size)
            store.data[:] = np.frombuffer(raw, dtype=np.uint8).reshape(num_pages, page_size)
            packed = np.frombuffer(f.read((num_pages + 7) // 8), dtype=np.uint8)
            store.dirty[:] = np.unpackbits(packed, bitorder="little")[:num_pages].astype(bool)
        return store
