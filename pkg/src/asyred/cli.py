"""Command-line front end.

    asyred run   --config PATH --out DIR [--seed U64] [--duration SECONDS]
    asyred sweep --config PATH --param NAME --values LIST --out DIR ...

`run` executes one configured scenario and writes report.json,
summary.csv (append-safe), and corruptions.csv into the output
directory. Exit codes: 0 clean run, 1 config error, 2 when any silent or
unrecoverable corruption occurred.

`sweep` re-runs the scenario once per value of a parameter (period,
batch_size, threads, or stripe_size), writing one report per value plus
a combined sweep.csv ready for plotting.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .config import ConfigError, load_scenario_config
from .redundancy import StripeConfig
from .scenario import ScenarioConfig, run_scenario

SWEEP_PARAMS = ("period", "batch_size", "threads", "stripe_size")


def _parse_args(argv):
    parser = argparse.ArgumentParser(prog="asyred",
                                     description="asynchronous page-redundancy simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one scenario")
    sweep_p = sub.add_parser("sweep", help="re-run a scenario across parameter values")
    for p in (run_p, sweep_p):
        p.add_argument("--config", required=True, help="scenario config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="workload RNG seed override")
        p.add_argument("--duration", type=float, default=None,
                       help="simulated run duration override (seconds)")
    sweep_p.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    sweep_p.add_argument("--values", required=True,
                         help="comma-separated values, e.g. 1,8,64,512")
    return parser.parse_args(argv)


def _with_param(cfg: ScenarioConfig, param: str, value: float) -> ScenarioConfig:
    if param == "period":
        return dataclasses.replace(cfg, period=float(value))
    if param == "batch_size":
        store = dataclasses.replace(cfg.store, batch_size=int(value))
        return dataclasses.replace(cfg, store=store)
    if param == "threads":
        wl = dataclasses.replace(cfg.workload, threads=int(value))
        return dataclasses.replace(cfg, workload=wl)
    if param == "stripe_size":
        stripe = StripeConfig(data_pages_per_stripe=int(value) - 1,
                              pages_per_stripe=int(value))
        return dataclasses.replace(cfg, stripe=stripe)
    raise ValueError(f"unknown sweep parameter {param}")


def _write_outputs(report, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    report.write_json(os.path.join(out_dir, "report.json"))
    report.append_summary_csv(os.path.join(out_dir, "summary.csv"))
    report.write_corruptions_csv(os.path.join(out_dir, "corruptions.csv"))


def _print_summary(report) -> None:
    row = report.summary_row()
    wl = report.workload
    print(f"pages={row['num_pages']} batch={row['batch_size']} period={row['period']}s "
          f"mode={row['workload_mode']}/{row['pattern']}")
    print(f"ops={wl['ops']} writes={wl['writes']} reads={wl['reads']} "
          f"distinct_pages={wl['distinct_pages_written']} "
          f"sim_time={wl['sim_seconds']:.3f}s")
    print(f"passes={row['passes']} checksums={row['pages_checksummed']} "
          f"parities={row['stripes_reparitied']} syscalls={row['syscalls']} "
          f"walk_steps={row['walk_steps']} tlb_inval={row['tlb_invalidations']}")
    print(f"V_avg={row['v_avg']:.2f} improvement={row['improvement_factor']}x "
          f"reports={row['corruption_reports']} recovered={row['detected_recovered']} "
          f"unrecoverable={row['detected_unrecoverable']} silent={row['silent_corruptions']}")
    if report.battery is not None:
        b = report.battery
        print(f"battery: pass={b['pass_seconds']:.3f}s energy={b['energy_kj']:.4f}KJ "
              f"ultracap=${b['cost_ultracapacitor_usd']:.4f} "
              f"li-ion=${b['cost_lithium_ion_usd']:.4f}")
    print(f"exit_code={report.exit_code}")


def cmd_run(args) -> int:
    try:
        cfg = load_scenario_config(args.config, seed=args.seed, duration=args.duration)
    except (ConfigError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    report = run_scenario(cfg)
    _write_outputs(report, args.out)
    _print_summary(report)
    return report.exit_code


def cmd_sweep(args) -> int:
    try:
        cfg = load_scenario_config(args.config, seed=args.seed, duration=args.duration)
        values = [v.strip() for v in args.values.split(",") if v.strip()]
        if not values:
            raise ConfigError("--values is empty")
        parsed = [float(v) for v in values]
    except (ConfigError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    worst = 0
    os.makedirs(args.out, exist_ok=True)
    sweep_csv = os.path.join(args.out, "sweep.csv")
    if os.path.exists(sweep_csv):
        os.remove(sweep_csv)
    for value in parsed:
        try:
            run_cfg = _with_param(cfg, args.param, value)
        except ValueError as e:
            print(f"config error: {e}", file=sys.stderr)
            return 1
        label = f"{args.param}_{value:g}"
        print(f"== {label} ==")
        report = run_scenario(run_cfg)
        sub = os.path.join(args.out, label)
        _write_outputs(report, sub)
        report.append_summary_csv(sweep_csv)
        _print_summary(report)
        worst = max(worst, report.exit_code)
    return worst


def main(argv=None) -> int:
    args = _parse_args(argv if argv is not None else sys.argv[1:])
    if args.command == "run":
        return cmd_run(args)
    return cmd_sweep(args)


if __name__ == "__main__":
    sys.exit(main())
