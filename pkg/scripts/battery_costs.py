#!/usr/bin/env python3
"""Battery sizing for the final on-battery update pass after power loss.

Cuts power at a fixed point in each workload/period combination, runs
the battery-backed flush pass, and prices the consumed energy for
ultra-capacitors ($2.85/KJ) and lithium-ion ($0.02/KJ) at 500 W. Longer
periods accumulate more dirty pages, so the final pass costs more.

Usage: python scripts/battery_costs.py [--out results]
"""

import argparse
import csv
import os

from asyred import StoreConfig, WorkloadSpec
from asyred.scenario import ScenarioConfig, run_scenario


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--pages", type=int, default=8192)
    ap.add_argument("--out", type=str, default="results")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    rows = []
    for pattern in ("sequential", "uniform_random", "zipf"):
        for period in (1.0, 10.0, 60.0):
            cfg = ScenarioConfig(
                store=StoreConfig(num_pages=args.pages, page_size=256, batch_size=512),
                workload=WorkloadSpec(mode="write_only", pattern=pattern,
                                      op_rate=1500.0, rng_seed=3),
                period=period, scrub_every=0,
                # fail just shy of the hour mark: mid-period for every sweep value
                duration=90.0, power_failure_at=59.0,
            )
            rep = run_scenario(cfg)
            b = rep.battery
            rows.append({
                "pattern": pattern,
                "period_s": period,
                "pages_flushed": b["pages_flushed"],
                "pass_seconds": round(b["pass_seconds"], 6),
                "energy_kj": round(b["energy_kj"], 6),
                "ultracap_usd": round(b["cost_ultracapacitor_usd"], 6),
                "liion_usd": round(b["cost_lithium_ion_usd"], 6),
            })

    path = os.path.join(args.out, "battery_costs.csv")
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)

    print(f"{'pattern':>15} {'period':>7} {'flushed':>8} {'pass_s':>10} "
          f"{'KJ':>10} {'ultracap$':>10} {'li-ion$':>9}")
    for r in rows:
        print(f"{r['pattern']:>15} {r['period_s']:>7} {r['pages_flushed']:>8} "
              f"{r['pass_seconds']:>10} {r['energy_kj']:>10} "
              f"{r['ultracap_usd']:>10} {r['liion_usd']:>9}")
    print(f"\nwrote {path}")


if __name__ == "__main__":
    main()
