"""Asynchronous page-redundancy maintenance over an emulated paged store.

CRC-32C page checksums and XOR parity stripes are kept up to date by a
periodic background pass that batch-reads and clears per-page dirty
bits, holding a persistent shadow copy while redundancy is in flight. A
scrubbing pass verifies clean pages and recovers corrupted ones from
parity when their stripe is clean. Fault injection, power-failure and
battery-cost simulation, MTTDL analysis, and synthetic workloads drive
the experiments.
"""

from .crc import crc32c, crc32c_pages
from .events import CostModel, PersistenceLog, PowerFailure, SimClock, WallClock
from .faults import (BatteryModel, BatteryReport, FaultEvent, FaultKind, Trigger,
                     battery_report, inject, inject_bit_flip, inject_lost_write,
                     inject_misdirected, inject_rest_corruption,
                     simulate_power_failure)
from .redundancy import (RedundancyRegion, StripeConfig, compute_page_checksum,
                         compute_parity)
from .reliability import (MttdlInputs, covered_pending_mask, improvement_factor,
                          mttdl_no_redundancy, mttdl_with_redundancy,
                          sample_vulnerable_stripes)
from .report import RunReport
from .scenario import ScenarioConfig, run_scenario
from .scrubber import CorruptionReport, RecoveryOutcome, ScrubReport, Scrubber
from .store import DirtyBitvector, OpCounters, PagedStore, StoreConfig
from .updater import (PassStats, ShadowState, Updater, UpdaterConfig,
                      is_covered_pending)
from .workload import (WorkloadSpec, WorkloadStats, make_ycsb_like_mix, op_stream,
                       run_workload)

__version__ = "0.1.0"
