"""Cycle-accurate simulation and analysis of parallel-in/serial-out sorting trees.

Three architectures share one toolkit: a double-buffered "hourglass" tree
that streams one sorted value per cycle after a log-depth fill, a
registered comparator tree whose output alternates between valid and
empty, and an unregistered tournament used for critical-path accounting.
"""

from .analysis import (
    ResourceEstimate,
    VariantComparison,
    carry8_count,
    check_invariants,
    compare_variants,
    detect_bubbles,
    latency_model,
    lut_fit,
    oracle_stable_sort,
    reg_count,
    resource_estimate,
)
from .core import (
    CellRegisters,
    ConfigError,
    CycleTrace,
    Element,
    InputError,
    PortView,
    RegisteredNodeState,
    SimConfig,
    SinkPattern,
    StallError,
    element_less,
)
from .engine import RunReport, SimState, build_engine, load, run, run_take, simulate, step
from .topology import (
    TreeTopology,
    build_tree,
    cell_count_of,
    depth_of,
    format_topology,
    validate_topology,
)

__version__ = "0.1.0"
