"""Single-run experiment engine.

Drives a workload, the periodic updater, the scrubber, a fault schedule,
and vulnerable-stripe sampling on one simulated clock, and produces a
RunReport. Workload ops, the updater, and the scrubber share the clock
the way they would share a pinned core: a pass blocks the workload and
its cost pushes simulated time forward.

The engine keeps a golden mirror of what the application believes is
stored. Faults mutate only the store, so at the end of the run any page
that differs from the mirror and was never reported by the scrubber (or
was reported but could not be recovered) is accounted as data loss:
silent if undetected, unrecoverable if detected.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .events import CostModel, PersistenceLog, PowerFailure, SimClock
from .faults import (BatteryModel, FaultEvent, FaultKind, Trigger, _pop_newest_staged,
                     inject, simulate_power_failure)
from .redundancy import RedundancyRegion, StripeConfig
from .reliability import (MttdlInputs, improvement_factor, mttdl_no_redundancy,
                          mttdl_with_redundancy, sample_vulnerable_stripes)
from .report import RunReport
from .scrubber import RecoveryOutcome, Scrubber
from .store import PagedStore, StoreConfig
from .updater import ShadowState, Updater, UpdaterConfig
from .workload import (WorkloadSpec, default_total_ops, op_stream,
                       thread_page_ranges, validate_against_store)


@dataclass
class ScenarioConfig:
    store: StoreConfig
    stripe: StripeConfig = field(default_factory=StripeConfig)
    workload: WorkloadSpec = field(default_factory=WorkloadSpec)
    period: float = 1.0
    scrub_every: int = 10          # scrub passes once per this many update periods; 0 = never
    duration: float | None = None  # simulated seconds of workload activity
    faults: list[FaultEvent] = field(default_factory=list)
    power_failure_at: float | None = None
    mttf_page_hours: float = 1e6
    v_samples_per_period: int = 4
    cost_model: CostModel = field(default_factory=CostModel)
    battery: BatteryModel = field(default_factory=BatteryModel)
    attempt_recovery: bool = True
    crash_pass_at_event: int | None = None  # arm a mid-pass power failure (testing)


class _FaultSchedule:
    """Orders fault events and resolves their trigger semantics."""

    def __init__(self, faults: list[FaultEvent]):
        self._heap = []
        for i, ev in enumerate(faults):
            heapq.heappush(self._heap, (ev.at_time or 0.0, i, ev))
        self.armed_on_write: list[FaultEvent] = []
        # (event, staged write or None) pairs waiting for the next pass
        self.after_next_pass: list[tuple[FaultEvent, object]] = []
        self.applied: list[FaultEvent] = []
        self.noop: list[FaultEvent] = []

    def due(self, now: float):
        while self._heap and self._heap[0][0] <= now:
            yield heapq.heappop(self._heap)[2]

    def pending(self) -> bool:
        return bool(self._heap or self.armed_on_write or self.after_next_pass)


def run_scenario(cfg: ScenarioConfig, state_out: dict | None = None) -> RunReport:
    """Run one scenario; `state_out`, when given, receives the live store,
    region, shadow, updater, scrubber, and golden mirror for inspection."""
    validate_against_store(cfg.workload, cfg.store)
    store = PagedStore(cfg.store)
    region = RedundancyRegion(cfg.store.num_pages, cfg.store.page_size, cfg.stripe)
    region.init_from_store(store.data)
    shadow = ShadowState(cfg.store.batch_size)
    clock = SimClock()
    log = PersistenceLog(record=False)
    updater = Updater(store, region, shadow, UpdaterConfig(cfg.period, cfg.stripe),
                      log=log, clock=clock, cost_model=cfg.cost_model)
    scrubber = Scrubber(store, region, shadow, cfg.stripe,
                        clock=clock, cost_model=cfg.cost_model)
    golden = store.data.copy()
    schedule = _FaultSchedule(cfg.faults)

    spec = cfg.workload
    ranges = thread_page_ranges(spec, cfg.store)
    streams = [op_stream(spec, cfg.store, t, ranges[t]) for t in range(spec.threads)]
    if spec.total_ops is not None:
        total_ops = spec.total_ops
    elif cfg.duration is not None or spec.duration is not None:
        total_ops = None
    else:
        total_ops = default_total_ops(spec, cfg.store)
    duration = cfg.duration if cfg.duration is not None else spec.duration
    lines = spec.io_size // cfg.store.cache_line
    op_gap = 1.0 / spec.op_rate + cfg.cost_model.io_cost_s(lines)

    pass_rows: list[dict] = []
    scrub_rows: list[dict] = []
    v_samples: list[int] = []
    corruption_rows: list[dict] = []
    writes = reads = ops_done = 0
    written_mask = np.zeros(store.num_pages, dtype=bool)
    misread_delivered = 0
    battery = None
    power_failed = False

    next_pass_at = cfg.period
    sample_gap = cfg.period / max(1, cfg.v_samples_per_period)
    next_sample_at = sample_gap

    def sample_v():
        v_samples.append(sample_vulnerable_stripes(store, shadow, cfg.stripe))

    def apply_fault(ev: FaultEvent):
        if ev.kind in (FaultKind.LOST_WRITE, FaultKind.MISDIRECTED_WRITE):
            # needs a staged write; arm and fire on the next write to target
            schedule.armed_on_write.append(ev)
        elif ev.trigger == Trigger.AFTER_REDUNDANCY_UPDATE:
            schedule.after_next_pass.append((ev, None))
        else:
            if inject(store, ev):
                schedule.applied.append(ev)
            else:
                schedule.noop.append(ev)

    def fire_armed(page: int):
        for ev in list(schedule.armed_on_write):
            if ev.target_page != page:
                continue
            schedule.armed_on_write.remove(ev)
            if ev.trigger == Trigger.AFTER_REDUNDANCY_UPDATE:
                # pin the exact staged write whose checksum the pass will cover
                staged = _pop_newest_staged(store, page)
                schedule.after_next_pass.append((ev, staged))
            else:
                if inject(store, ev):
                    schedule.applied.append(ev)
                else:
                    schedule.noop.append(ev)

    def apply_deferred(ev: FaultEvent, staged) -> None:
        if staged is not None:
            n = len(staged.before)
            if ev.kind == FaultKind.LOST_WRITE:
                store.data[ev.target_page, staged.offset:staged.offset + n] = \
                    np.frombuffer(staged.before, np.uint8)
            else:
                store.data[ev.aux_page, staged.offset:staged.offset + n] = \
                    np.frombuffer(staged.after, np.uint8)
            schedule.applied.append(ev)
        elif inject(store, ev):
            schedule.applied.append(ev)
        else:
            schedule.noop.append(ev)

    def run_update_pass():
        nonlocal battery, power_failed
        sample_v()
        if cfg.crash_pass_at_event is not None and not power_failed:
            log.plan_crash(cfg.crash_pass_at_event)
        try:
            stats = updater.run_one_pass()
        except PowerFailure:
            power_failed = True
            battery = simulate_power_failure(updater, cfg.battery)
            return
        pass_rows.append({
            "pass": updater.passes_done,
            "time": clock.now(),
            "batches": stats.batches,
            "pages_checksummed": stats.pages_checksummed,
            "stripes_reparitied": stats.stripes_reparitied,
            "recovery_batches": stats.recovery_batches,
            "duration_s": stats.duration_s,
        })
        for ev, staged in schedule.after_next_pass[:]:
            schedule.after_next_pass.remove((ev, staged))
            apply_deferred(ev, staged)

    def run_scrub_pass():
        rep = scrubber.scrub_one_pass()
        scrub_rows.append({
            "pass": rep.pass_number,
            "time": clock.now(),
            "scanned": rep.pages_scanned,
            "skipped": rep.pages_skipped,
            "reports": len(rep.reports),
        })
        for cr in rep.reports:
            outcome = "detected"
            if cfg.attempt_recovery:
                rec = scrubber.attempt_recovery(cr.page)
                outcome = ("recovered" if rec == RecoveryOutcome.RECOVERED
                           else "unrecoverable")
            corruption_rows.append({
                "pass": cr.pass_number,
                "page": cr.page,
                "stripe": cr.stripe,
                "outcome": outcome,
            })

    def deadlines():
        nonlocal next_pass_at, next_sample_at
        while next_sample_at <= clock.now() and next_sample_at < next_pass_at:
            sample_v()
            next_sample_at += sample_gap
        while next_pass_at <= clock.now():
            run_update_pass()
            if power_failed:
                return
            if cfg.scrub_every and updater.passes_done % cfg.scrub_every == 0:
                run_scrub_pass()
            next_pass_at += cfg.period
            while next_sample_at <= next_pass_at - cfg.period + 1e-12:
                next_sample_at += sample_gap

    # -- main loop: workload ops interleaved with deadlines -------------------
    t = 0
    while not power_failed:
        if total_ops is not None and ops_done >= total_ops:
            break
        if duration is not None and clock.now() >= duration:
            break
        if cfg.power_failure_at is not None and clock.now() >= cfg.power_failure_at:
            battery = simulate_power_failure(updater, cfg.battery)
            power_failed = True
            break
        for ev in schedule.due(clock.now()):
            apply_fault(ev)
        kind, page, offset, payload = next(streams[t])
        if kind == "w":
            store.write(page, offset, payload)
            golden[page, offset:offset + len(payload)] = np.frombuffer(payload, np.uint8)
            written_mask[page] = True
            writes += 1
            fire_armed(page)
        else:
            redirected = bool(store._read_redirects.get(page))
            got = store.read(page, offset, spec.io_size)
            if redirected and got != golden[page, offset:offset + spec.io_size].tobytes():
                misread_delivered += 1
            reads += 1
        ops_done += 1
        t = (t + 1) % spec.threads
        clock.advance(op_gap)
        deadlines()

    # -- epilogue --------------------------------------------------------------
    for ev in schedule.due(float("inf")):
        apply_fault(ev)
    if cfg.power_failure_at is not None and not power_failed:
        battery = simulate_power_failure(updater, cfg.battery)
        power_failed = True
    if not power_failed:
        run_update_pass()
    if power_failed:
        for ev, staged in schedule.after_next_pass[:]:
            schedule.after_next_pass.remove((ev, staged))
            apply_deferred(ev, staged)
    run_scrub_pass()

    # -- accounting --------------------------------------------------------------
    mismatched = np.flatnonzero(np.any(store.data != golden, axis=1))
    reported_pages = {row["page"] for row in corruption_rows}
    silent_pages = [int(p) for p in mismatched if int(p) not in reported_pages]
    silent = len(silent_pages) + misread_delivered
    recovered = sum(1 for r in corruption_rows if r["outcome"] == "recovered")
    unrecoverable = sum(1 for r in corruption_rows if r["outcome"] == "unrecoverable")
    detected_only = sum(1 for r in corruption_rows if r["outcome"] == "detected")

    v_avg = float(np.mean(v_samples)) if v_samples else 0.0
    total_pages = store.num_pages + region.parity.shape[0]
    inputs = MttdlInputs(
        mttf_page=cfg.mttf_page_hours,
        total_pages=total_pages,
        pages_per_stripe=cfg.stripe.pages_per_stripe,
        vulnerable_stripes=min(v_avg, region.parity.shape[0]),
    )
    sim_seconds = clock.now()
    exit_code = 2 if (silent > 0 or unrecoverable > 0) else 0

    if state_out is not None:
        state_out.update(store=store, region=region, shadow=shadow, updater=updater,
                         scrubber=scrubber, golden=golden, clock=clock)

    return RunReport(
        config={
            "num_pages": cfg.store.num_pages,
            "page_size": cfg.store.page_size,
            "cache_line": cfg.store.cache_line,
            "batch_size": cfg.store.batch_size,
            "stripe_pages": cfg.stripe.pages_per_stripe,
            "period": cfg.period,
            "scrub_every": cfg.scrub_every,
            "duration": duration,
            "power_failure_at": cfg.power_failure_at,
            "mttf_page_hours": cfg.mttf_page_hours,
            "workload": {
                "mode": spec.mode,
                "read_fraction": spec.read_fraction,
                "pattern": spec.pattern,
                "zipf_theta": spec.zipf_theta,
                "io_size": spec.io_size,
                "threads": spec.threads,
                "total_ops": total_ops,
                "op_rate": spec.op_rate,
                "rng_seed": spec.rng_seed,
            },
            "faults": len(cfg.faults),
        },
        workload={
            "ops": ops_done,
            "writes": writes,
            "reads": reads,
            "distinct_pages_written": int(written_mask.sum()),
            "sim_seconds": sim_seconds,
            "ops_per_second": ops_done / sim_seconds if sim_seconds > 0 else 0.0,
        },
        passes=pass_rows,
        scrubs=scrub_rows,
        op_counters={
            "syscalls": store.counters.syscalls,
            "get_calls": store.counters.get_calls,
            "clear_calls": store.counters.clear_calls,
            "walk_steps": store.counters.walk_steps,
            "tlb_invalidations": store.counters.tlb_invalidations,
            "pages_cleared": store.counters.pages_cleared,
        },
        corruption_reports=corruption_rows,
        outcome_counts={
            "silent": silent,
            "detected_recovered": recovered,
            "detected_unrecoverable": unrecoverable,
            "detected_unattempted": detected_only,
        },
        silent_corruptions=silent,
        mttdl={
            "total_pages": total_pages,
            "pages_per_stripe": cfg.stripe.pages_per_stripe,
            "v_avg": v_avg,
            "v_samples": len(v_samples),
            "mttdl_no_redundancy_h": mttdl_no_redundancy(inputs),
            "mttdl_with_redundancy_h": mttdl_with_redundancy(inputs),
            "improvement_factor": improvement_factor(inputs),
        },
        battery=(None if battery is None else {
            "pass_seconds": battery.pass_seconds,
            "energy_kj": battery.energy_kj,
            "cost_ultracapacitor_usd": battery.cost_ultracapacitor_usd,
            "cost_lithium_ion_usd": battery.cost_lithium_ion_usd,
            "pages_flushed": battery.pages_flushed,
            "stripes_flushed": battery.stripes_flushed,
        }),
        halted=scrubber.halted,
        exit_code=exit_code,
    )
