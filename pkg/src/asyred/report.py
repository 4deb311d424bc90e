"""Run reports: JSON round trip, append-safe summary CSV, corruption CSV.

The summary CSV column order is fixed (SUMMARY_COLUMNS) so sweep outputs
concatenate cleanly; it is documented in the README.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field


SUMMARY_COLUMNS = [
    "seed",
    "num_pages",
    "page_size",
    "batch_size",
    "stripe_pages",
    "period",
    "scrub_every",
    "workload_mode",
    "pattern",
    "read_fraction",
    "io_size",
    "threads",
    "op_rate",
    "ops",
    "writes",
    "reads",
    "distinct_pages_written",
    "sim_seconds",
    "ops_per_second",
    "passes",
    "pages_checksummed",
    "stripes_reparitied",
    "get_calls",
    "clear_calls",
    "syscalls",
    "walk_steps",
    "tlb_invalidations",
    "pages_cleared",
    "v_avg",
    "v_samples",
    "mttdl_no_redundancy_h",
    "mttdl_with_redundancy_h",
    "improvement_factor",
    "corruption_reports",
    "detected_recovered",
    "detected_unrecoverable",
    "silent_corruptions",
    "halted",
    "battery_pass_seconds",
    "battery_energy_kj",
    "battery_cost_ultracapacitor_usd",
    "battery_cost_lithium_ion_usd",
    "exit_code",
]

CORRUPTION_COLUMNS = ["pass", "page", "stripe", "outcome"]


@dataclass
class RunReport:
    config: dict
    workload: dict
    passes: list = field(default_factory=list)
    scrubs: list = field(default_factory=list)
    op_counters: dict = field(default_factory=dict)
    corruption_reports: list = field(default_factory=list)
    outcome_counts: dict = field(default_factory=dict)
    silent_corruptions: int = 0
    mttdl: dict = field(default_factory=dict)
    battery: dict | None = None
    halted: bool = False
    exit_code: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, allow_nan=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))

    def write_json(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.to_json())
            f.write("\n")

    def summary_row(self) -> dict:
        cfg = self.config
        wl_cfg = cfg.get("workload", {})
        wl = self.workload
        mttdl = self.mttdl
        counters = self.op_counters
        battery = self.battery or {}
        return {
            "seed": wl_cfg.get("rng_seed"),
            "num_pages": cfg.get("num_pages"),
            "page_size": cfg.get("page_size"),
            "batch_size": cfg.get("batch_size"),
            "stripe_pages": cfg.get("stripe_pages"),
            "period": cfg.get("period"),
            "scrub_every": cfg.get("scrub_every"),
            "workload_mode": wl_cfg.get("mode"),
            "pattern": wl_cfg.get("pattern"),
            "read_fraction": wl_cfg.get("read_fraction"),
            "io_size": wl_cfg.get("io_size"),
            "threads": wl_cfg.get("threads"),
            "op_rate": wl_cfg.get("op_rate"),
            "ops": wl.get("ops"),
            "writes": wl.get("writes"),
            "reads": wl.get("reads"),
            "distinct_pages_written": wl.get("distinct_pages_written"),
            "sim_seconds": wl.get("sim_seconds"),
            "ops_per_second": wl.get("ops_per_second"),
            "passes": len(self.passes),
            "pages_checksummed": sum(p["pages_checksummed"] for p in self.passes),
            "stripes_reparitied": sum(p["stripes_reparitied"] for p in self.passes),
            "get_calls": counters.get("get_calls"),
            "clear_calls": counters.get("clear_calls"),
            "syscalls": counters.get("syscalls"),
            "walk_steps": counters.get("walk_steps"),
            "tlb_invalidations": counters.get("tlb_invalidations"),
            "pages_cleared": counters.get("pages_cleared"),
            "v_avg": mttdl.get("v_avg"),
            "v_samples": mttdl.get("v_samples"),
            "mttdl_no_redundancy_h": mttdl.get("mttdl_no_redundancy_h"),
            "mttdl_with_redundancy_h": _finite(mttdl.get("mttdl_with_redundancy_h")),
            "improvement_factor": _finite(mttdl.get("improvement_factor")),
            "corruption_reports": len(self.corruption_reports),
            "detected_recovered": self.outcome_counts.get("detected_recovered", 0),
            "detected_unrecoverable": self.outcome_counts.get("detected_unrecoverable", 0),
            "silent_corruptions": self.silent_corruptions,
            "halted": int(self.halted),
            "battery_pass_seconds": battery.get("pass_seconds"),
            "battery_energy_kj": battery.get("energy_kj"),
            "battery_cost_ultracapacitor_usd": battery.get("cost_ultracapacitor_usd"),
            "battery_cost_lithium_ion_usd": battery.get("cost_lithium_ion_usd"),
            "exit_code": self.exit_code,
        }

    def append_summary_csv(self, path) -> None:
        row = self.summary_row()
        new_file = not os.path.exists(path) or os.path.getsize(path) == 0
        with open(path, "a", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=SUMMARY_COLUMNS)
            if new_file:
                writer.writeheader()
            writer.writerow(row)

    def write_corruptions_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=CORRUPTION_COLUMNS)
            writer.writeheader()
            for row in self.corruption_reports:
                writer.writerow({k: row.get(k) for k in CORRUPTION_COLUMNS})


def _finite(x):
    if x is None:
        return None
    return x if x == x and abs(x) != float("inf") else "inf"
