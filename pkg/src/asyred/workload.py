"""Synthetic workload generation and execution.

Workloads are deterministic per (spec, seed): every thread draws from its
own seeded generator, so the op sequence and the set of touched pages do
not depend on scheduling. Threads get disjoint contiguous page ranges by
default (mirroring per-thread data-structure instances); a shared-range
mode exists for race stress.

Patterns: `sequential` and `uniform_random` walk every io-size block of
the range exactly once per cycle (the random variant via a fresh
permutation each cycle), `zipf` draws pages from a Zipfian popularity
distribution with a seeded rank-to-page scramble, offsets uniform within
the page. Simulated time, not wall time, is the throughput denominator:
each op costs a think-time slot of 1/op_rate plus its modeled IO cost.
"""

from __future__ import annotations

import struct
import threading
from dataclasses import dataclass, field, replace

import numpy as np

from .events import CostModel
from .store import PagedStore, StoreConfig

MODES = ("write_only", "read_only", "mixed")
PATTERNS = ("uniform_random", "sequential", "zipf")


@dataclass(frozen=True)
class WorkloadSpec:
    mode: str = "write_only"
    read_fraction: float = 0.0
    pattern: str = "uniform_random"
    zipf_theta: float = 0.99
    io_size: int = 64
    total_ops: int | None = None
    duration: float | None = None
    threads: int = 1
    rng_seed: int = 0
    op_rate: float = 50_000.0
    shared_range: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.pattern not in PATTERNS:
            raise ValueError(f"pattern must be one of {PATTERNS}")
        if not 0.0 <= self.read_fraction <= 1.0:
            raise ValueError("read_fraction must be in [0, 1]")
        if self.pattern == "zipf" and not 0.0 < self.zipf_theta <= 1.2:
            raise ValueError("zipf_theta must be in (0, 1.2]")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.io_size < 1:
            raise ValueError("io_size must be positive")
        if self.op_rate <= 0:
            raise ValueError("op_rate must be positive")

    def effective_read_fraction(self) -> float:
        if self.mode == "read_only":
            return 1.0
        if self.mode == "write_only":
            return 0.0
        return self.read_fraction


def make_ycsb_like_mix(read_fraction: float, **overrides) -> WorkloadSpec:
    """Key-value-style mix: Zipfian page popularity, given read share.
    0.5 is an A-like mix, 0.95 B-like, 1.0 C-like (read-only)."""
    if not 0.0 <= read_fraction <= 1.0:
        raise ValueError("read_fraction must be in [0, 1]")
    mode = "read_only" if read_fraction >= 1.0 else "mixed"
    return WorkloadSpec(mode=mode, read_fraction=read_fraction,
                        pattern="zipf", zipf_theta=0.99, **overrides)


@dataclass
class WorkloadStats:
    ops: int = 0
    writes: int = 0
    reads: int = 0
    distinct_pages_written: int = 0
    sim_seconds: float = 0.0
    ops_per_second: float = 0.0
    per_thread_ops: list[int] = field(default_factory=list)
    per_thread_ops_per_second: list[float] = field(default_factory=list)


def validate_against_store(spec: WorkloadSpec, cfg: StoreConfig) -> None:
    if spec.io_size % cfg.cache_line != 0:
        raise ValueError("io_size must be a multiple of the cache line")
    if spec.io_size > cfg.page_size or cfg.page_size % spec.io_size != 0:
        raise ValueError("io_size must evenly divide the page size")
    if not spec.shared_range and spec.threads > cfg.num_pages:
        raise ValueError("more threads than pages to partition")


def thread_page_ranges(spec: WorkloadSpec, cfg: StoreConfig) -> list[tuple[int, int]]:
    """Contiguous disjoint [lo, hi) page ranges, or the full range for all
    threads in shared mode."""
    if spec.shared_range:
        return [(0, cfg.num_pages)] * spec.threads
    base, extra = divmod(cfg.num_pages, spec.threads)
    ranges = []
    lo = 0
    for t in range(spec.threads):
        hi = lo + base + (1 if t < extra else 0)
        ranges.append((lo, hi))
        lo = hi
    return ranges


def _payload(io_size: int, thread_id: int, seq: int) -> bytes:
    word = struct.pack("<II", thread_id & 0xFFFFFFFF, seq & 0xFFFFFFFF)
    return word * (io_size // 8) if io_size % 8 == 0 else (word * (io_size // 8 + 1))[:io_size]


def op_stream(spec: WorkloadSpec, cfg: StoreConfig, thread_id: int,
              page_range: tuple[int, int]):
    """Infinite deterministic stream of (kind, page, offset, payload) ops."""
    lo, hi = page_range
    npages = hi - lo
    if npages < 1:
        return
    rng = np.random.default_rng([spec.rng_seed, thread_id])
    bpp = cfg.page_size // spec.io_size
    nblocks = npages * bpp
    rf = spec.effective_read_fraction()
    chunk = 4096

    if spec.pattern == "zipf":
        probs = 1.0 / np.power(np.arange(1, npages + 1, dtype=np.float64), spec.zipf_theta)
        probs /= probs.sum()
        scramble = rng.permutation(npages)
        seq = 0
        while True:
            ranks = rng.choice(npages, size=chunk, p=probs)
            offs = rng.integers(0, bpp, size=chunk)
            kinds = rng.random(chunk) < rf if 0.0 < rf < 1.0 else None
            for j in range(chunk):
                page = lo + int(scramble[ranks[j]])
                offset = int(offs[j]) * spec.io_size
                read = rf >= 1.0 or (kinds is not None and bool(kinds[j]))
                seq += 1
                if read:
                    yield ("r", page, offset, None)
                else:
                    yield ("w", page, offset, _payload(spec.io_size, thread_id, seq))
        return

    seq = 0
    while True:
        if spec.pattern == "sequential":
            order = np.arange(nblocks)
        else:
            order = rng.permutation(nblocks)
        kinds = rng.random(nblocks) < rf if 0.0 < rf < 1.0 else None
        for j in range(nblocks):
            block = int(order[j])
            page = lo + block // bpp
            offset = (block % bpp) * spec.io_size
            read = rf >= 1.0 or (kinds is not None and bool(kinds[j]))
            seq += 1
            if read:
                yield ("r", page, offset, None)
            else:
                yield ("w", page, offset, _payload(spec.io_size, thread_id, seq))


def default_total_ops(spec: WorkloadSpec, cfg: StoreConfig) -> int:
    """One full cycle: every io block of the file once."""
    return cfg.num_pages * (cfg.page_size // spec.io_size)


def run_workload(store: PagedStore, spec: WorkloadSpec,
                 cost_model: CostModel | None = None) -> WorkloadStats:
    """Execute the workload standalone (no concurrent updater).

    Multi-thread specs run on real threads against the shared store;
    per-thread simulated time accumulates independently and the slowest
    thread sets the workload's simulated duration. op_rate is the
    aggregate offered load, split evenly across threads.
    """
    validate_against_store(spec, store.config)
    cost = cost_model or CostModel()
    if spec.total_ops is not None:
        total = spec.total_ops
    elif spec.duration is not None:
        total = int(spec.duration * spec.op_rate)
    else:
        total = default_total_ops(spec, store.config)
    base, extra = divmod(total, spec.threads)
    quotas = [base + (1 if t < extra else 0) for t in range(spec.threads)]
    ranges = thread_page_ranges(spec, store.config)
    lines = spec.io_size // store.config.cache_line
    op_cost = spec.threads / spec.op_rate + cost.io_cost_s(lines)

    written_masks = [np.zeros(store.num_pages, dtype=bool) for _ in range(spec.threads)]
    counts = [[0, 0, 0] for _ in range(spec.threads)]  # ops, writes, reads

    def drive(t: int):
        mask = written_masks[t]
        c = counts[t]
        stream = op_stream(spec, store.config, t, ranges[t])
        for _ in range(quotas[t]):
            kind, page, offset, payload = next(stream)
            if kind == "w":
                store.write(page, offset, payload)
                mask[page] = True
                c[1] += 1
            else:
                store.read(page, offset, spec.io_size)
                c[2] += 1
            c[0] += 1

    if spec.threads == 1:
        drive(0)
    else:
        workers = [threading.Thread(target=drive, args=(t,)) for t in range(spec.threads)]
        for w in workers:
            w.start()
        for w in workers:
            w.join()

    stats = WorkloadStats()
    stats.per_thread_ops = [c[0] for c in counts]
    stats.ops = sum(stats.per_thread_ops)
    stats.writes = sum(c[1] for c in counts)
    stats.reads = sum(c[2] for c in counts)
    union = np.zeros(store.num_pages, dtype=bool)
    for m in written_masks:
        union |= m
    stats.distinct_pages_written = int(union.sum())
    stats.sim_seconds = max(q * op_cost for q in quotas) if quotas else 0.0
    stats.ops_per_second = stats.ops / stats.sim_seconds if stats.sim_seconds > 0 else 0.0
    stats.per_thread_ops_per_second = [
        q / (q * op_cost) if q else 0.0 for q in quotas]
    return stats


def spec_with(spec: WorkloadSpec, **changes) -> WorkloadSpec:
    return replace(spec, **changes)
