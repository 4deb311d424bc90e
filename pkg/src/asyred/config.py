"""Scenario configuration files.

Flat INI-style key/value files with [store], [updater], [workload], and
[faults] sections (optional extras: [battery], [reliability]). Any key
can be overridden from the environment as ASYRED_<SECTION>_<KEY>, e.g.
ASYRED_STORE_NUM_PAGES=4096, and the CLI's --seed/--duration flags win
over both.

Fault entries are one per key (key names are arbitrary, processed in
sorted order). The value is a kind followed by key=value tokens:

    [faults]
    f1 = rest_corruption target=12 at=0.5 seed=7
    f2 = lost_write target=3 trigger=before_redundancy_update at=1.0
    f3 = misdirected_write target=4 aux=9 trigger=after_redundancy_update
    power_failure_at = 2.5
"""

from __future__ import annotations

import configparser
import os

from .events import CostModel
from .faults import BatteryModel, FaultEvent
from .redundancy import StripeConfig
from .scenario import ScenarioConfig
from .store import StoreConfig
from .workload import WorkloadSpec


class ConfigError(Exception):
    pass


_ENV_PREFIX = "ASYRED_"
_SECTIONS = ("store", "updater", "workload", "faults", "battery", "reliability")


def _read_sections(path) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser()
    try:
        with open(path) as f:
            parser.read_file(f)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    except configparser.Error as e:
        raise ConfigError(f"config parse error: {e}") from e
    sections = {name.lower(): dict(parser[name]) for name in parser.sections()}
    unknown = set(sections) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    return sections


def _apply_env(sections: dict[str, dict[str, str]], environ=None) -> None:
    env = os.environ if environ is None else environ
    for key, value in env.items():
        if not key.startswith(_ENV_PREFIX):
            continue
        rest = key[len(_ENV_PREFIX):]
        section, _, option = rest.partition("_")
        section = section.lower()
        if section not in _SECTIONS or not option:
            continue
        sections.setdefault(section, {})[option.lower()] = value


def _get(sections, section, key, cast, default):
    raw = sections.get(section, {}).get(key)
    if raw is None:
        return default
    try:
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except ValueError as e:
        raise ConfigError(f"[{section}] {key}: {e}") from e


def _parse_fault(text: str) -> FaultEvent:
    tokens = text.split()
    if not tokens:
        raise ConfigError("empty fault entry")
    kind = tokens[0]
    kwargs: dict = {}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise ConfigError(f"bad fault token {tok!r} (want key=value)")
        k, v = tok.split("=", 1)
        if k == "target":
            kwargs["target_page"] = int(v)
        elif k == "aux":
            kwargs["aux_page"] = int(v)
        elif k == "trigger":
            kwargs["trigger"] = v
        elif k == "seed":
            kwargs["payload_seed"] = int(v)
        elif k == "at":
            kwargs["at_time"] = float(v)
        else:
            raise ConfigError(f"unknown fault key {k!r}")
    if "target_page" not in kwargs:
        raise ConfigError(f"fault {text!r} missing target=")
    try:
        return FaultEvent(kind=kind, **kwargs)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def load_scenario_config(path, environ=None, seed: int | None = None,
                         duration: float | None = None) -> ScenarioConfig:
    """Build a ScenarioConfig from a config file plus env/CLI overrides."""
    sections = _read_sections(path)
    _apply_env(sections, environ)

    # desk-scale default file: 64 MiB of 4 KiB pages
    num_pages = _get(sections, "store", "num_pages", int, 16384)
    store = StoreConfig(
        num_pages=num_pages,
        page_size=_get(sections, "store", "page_size", int, 4096),
        cache_line=_get(sections, "store", "cache_line", int, 64),
        batch_size=_get(sections, "store", "batch_size", int, min(512, num_pages)),
    )
    data_per = _get(sections, "updater", "stripe_data_pages", int, 4)
    try:
        stripe = StripeConfig(data_pages_per_stripe=data_per,
                              pages_per_stripe=data_per + 1)
    except ValueError as e:
        raise ConfigError(str(e)) from e

    wl_seed = seed if seed is not None else _get(sections, "workload", "seed", int, 0)
    total_ops = _get(sections, "workload", "total_ops", int, None)
    spec = WorkloadSpec(
        mode=_get(sections, "workload", "mode", str, "write_only"),
        read_fraction=_get(sections, "workload", "read_fraction", float, 0.0),
        pattern=_get(sections, "workload", "pattern", str, "uniform_random"),
        zipf_theta=_get(sections, "workload", "zipf_theta", float, 0.99),
        io_size=_get(sections, "workload", "io_size", int, 64),
        total_ops=total_ops,
        threads=_get(sections, "workload", "threads", int, 1),
        rng_seed=wl_seed,
        op_rate=_get(sections, "workload", "op_rate", float, 50_000.0),
        shared_range=_get(sections, "workload", "shared_range", bool, False),
    )

    faults = []
    fault_section = dict(sections.get("faults", {}))
    power_failure_at = None
    if "power_failure_at" in fault_section:
        power_failure_at = float(fault_section.pop("power_failure_at"))
    for key in sorted(fault_section):
        faults.append(_parse_fault(fault_section[key]))

    battery = BatteryModel(
        server_watts=_get(sections, "battery", "server_watts", float, 500.0),
        ultracapacitor_usd_per_kj=_get(sections, "battery", "ultracapacitor_usd_per_kj",
                                       float, 2.85),
        lithium_ion_usd_per_kj=_get(sections, "battery", "lithium_ion_usd_per_kj",
                                    float, 0.02),
    )

    run_duration = duration
    if run_duration is None:
        run_duration = _get(sections, "updater", "duration", float, None)
    if run_duration is None and total_ops is None:
        run_duration = 5.0

    try:
        return ScenarioConfig(
            store=store,
            stripe=stripe,
            workload=spec,
            period=_get(sections, "updater", "period", float, 1.0),
            scrub_every=_get(sections, "updater", "scrub_every", int, 10),
            duration=run_duration,
            faults=faults,
            power_failure_at=power_failure_at,
            mttf_page_hours=_get(sections, "reliability", "mttf_page_hours", float, 1e6),
            v_samples_per_period=_get(sections, "reliability", "v_samples_per_period",
                                      int, 4),
            cost_model=CostModel(),
            battery=battery,
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e
