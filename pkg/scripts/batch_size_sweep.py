#!/usr/bin/env python3
"""Dirty-bit maintenance cost vs. batch size.

Runs the same write-heavy workload at several batch sizes and reports the
simulated kernel-cost counters (syscalls, page-walk steps, TLB
invalidations). Syscall count falls as ceil(N/B) per pass with
diminishing returns, which is the point of batching.

Usage: python scripts/batch_size_sweep.py [--pages 4096] [--out results]
"""

import argparse
import csv
import os

from asyred import StoreConfig, WorkloadSpec
from asyred.scenario import ScenarioConfig, run_scenario


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--pages", type=int, default=4096)
    ap.add_argument("--batches", type=str, default="1,2,8,32,128,512")
    ap.add_argument("--ops", type=int, default=20_000)
    ap.add_argument("--out", type=str, default="results")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    rows = []
    for batch in [int(b) for b in args.batches.split(",")]:
        cfg = ScenarioConfig(
            store=StoreConfig(num_pages=args.pages, page_size=256, batch_size=batch),
            workload=WorkloadSpec(mode="write_only", pattern="zipf",
                                  total_ops=args.ops, op_rate=4000.0, rng_seed=1),
            period=0.5, scrub_every=0,
        )
        rep = run_scenario(cfg)
        c = rep.op_counters
        rows.append({
            "batch_size": batch,
            "passes": len(rep.passes),
            "get_calls": c["get_calls"],
            "syscalls": c["syscalls"],
            "walk_steps": c["walk_steps"],
            "tlb_invalidations": c["tlb_invalidations"],
        })

    path = os.path.join(args.out, "batch_size_sweep.csv")
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)

    print(f"{'B':>6} {'passes':>7} {'get':>8} {'syscalls':>9} {'walks':>8} {'tlb':>8}")
    for r in rows:
        print(f"{r['batch_size']:>6} {r['passes']:>7} {r['get_calls']:>8} "
              f"{r['syscalls']:>9} {r['walk_steps']:>8} {r['tlb_invalidations']:>8}")
    print(f"\nwrote {path}")


if __name__ == "__main__":
    main()
