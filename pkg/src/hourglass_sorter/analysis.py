"""Resource and latency models, oracles, and offline invariant checking.

The register and carry-chain counts are structural: each cell carries two
data registers plus two valid bits, each leaf one data register plus one
valid bit, and one 8-bit carry block per comparator per 16 bits of operand.
The LUT numbers are an affine-in-n fit per element width, not a structural
model, and are refused outside the fitted widths rather than extrapolated.
"""

from __future__ import annotations

import dataclasses
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import (
    CellRegisters,
    CycleTrace,
    Element,
    RegisteredNodeState,
    SimConfig,
)
from .engine import RunReport, simulate
from .topology import cell_count_of, depth_of

__all__ = [
    "ResourceEstimate",
    "VariantComparison",
    "carry8_count",
    "check_invariants",
    "compare_variants",
    "detect_bubbles",
    "latency_model",
    "lut_fit",
    "oracle_stable_sort",
    "reg_count",
    "resource_estimate",
]


def _require_pow2(n: int, minimum: int) -> None:
    if n < minimum or n & (n - 1):
        raise ValueError(f"n must be a power of two >= {minimum}, got {n}")


def reg_count(n: int, w: int) -> int:
    """Flip-flop count of the double-buffered tree at power-of-two n."""
    _require_pow2(n, 2)
    return (n - 1) * (2 * w + 2) + n * (w + 1)


def carry8_count(n: int, w: int) -> int:
    """Carry-chain blocks: one per comparator per started 16 bits of w."""
    _require_pow2(n, 2)
    return (n - 1) * -(-w // 16)


# LUT(n, w) = slope_halves/2 * n - intercept, fitted per width.
_LUT_FIT = {8: (55, 28), 16: (95, 48), 32: (174, 86)}


def lut_fit(n: int, w: int) -> int:
    """Affine LUT estimate; only the fitted widths are supported."""
    if w not in _LUT_FIT:
        raise ValueError(f"no LUT fit available for width {w}")
    _require_pow2(n, 64)
    slope_halves, intercept = _LUT_FIT[w]
    return (slope_halves * n) // 2 - intercept


def latency_model(n: int) -> tuple[int, int]:
    """(first output cycle, cycles to fully drain) for the hourglass tree."""
    d = depth_of(n)
    return d, d + n


@dataclass(frozen=True)
class ResourceEstimate:
    """One row of the resource report.

    ``extrapolated`` flags non-power-of-two sizes, where register and carry
    totals are derived from the padded tree's actual cell count instead of
    the n-1 closed form.  ``lut_estimate`` is None when no fit exists.
    """

    n: int
    w: int
    reg_bits: int
    carry8_blocks: int
    lut_estimate: int | None
    latency_first: int
    latency_total: int
    extrapolated: bool


def resource_estimate(n: int, w: int) -> ResourceEstimate:
    if n < 1 or w < 1:
        raise ValueError("n and w must be positive")
    cells = cell_count_of(n)
    pow2 = n >= 2 and n & (n - 1) == 0
    try:
        lut: int | None = lut_fit(n, w)
    except ValueError:
        lut = None
    first, total = latency_model(n)
    return ResourceEstimate(
        n=n,
        w=w,
        reg_bits=cells * (2 * w + 2) + n * (w + 1),
        carry8_blocks=cells * -(-w // 16),
        lut_estimate=lut,
        latency_first=first,
        latency_total=total,
        extrapolated=not pow2,
    )


def oracle_stable_sort(items: Sequence[Element]) -> list[Element]:
    """Reference ordering: ascending by value, ties in original order."""
    return sorted(items, key=lambda e: e.value)


def detect_bubbles(trace: Sequence[CycleTrace], first: int, count: int) -> list[int]:
    """Cycles within [first, first+count-1] where the sink was ready but
    no root transaction happened: output gaps the tree itself caused."""
    stop = first + count - 1
    return [
        rec.cycle
        for rec in trace
        if first <= rec.cycle <= stop and rec.sink_ready and not rec.root_transaction
    ]


def check_invariants(
    trace: Sequence[CycleTrace], loaded: Sequence[Element] | None = None
) -> list[str]:
    """Offline re-check of the per-cycle invariants from a full trace.

    Covers register ordering (v1 implies v0, d0 <= d1), valid/exhausted
    exclusivity and stickiness for registered nodes, monotone and
    transaction-consistent emission, and, when the loaded elements are
    given, exact multiset conservation at every recorded boundary.
    """
    problems: list[str] = []
    loaded_counter = Counter(loaded) if loaded is not None else None
    prev_emitted: Element | None = None
    emitted_so_far: list[Element] = []
    sticky: dict[int, bool] = {}
    for rec in trace:
        if rec.root_transaction != (rec.emitted is not None):
            problems.append(
                f"cycle {rec.cycle}: emitted element inconsistent with root_txn"
            )
        if rec.emitted is not None:
            if prev_emitted is not None and prev_emitted.value > rec.emitted.value:
                problems.append(
                    f"cycle {rec.cycle}: output not monotone "
                    f"({prev_emitted.value} before {rec.emitted.value})"
                )
            prev_emitted = rec.emitted
        in_flight: list[Element] = []
        for cid, regs in rec.per_cell.items():
            if isinstance(regs, CellRegisters):
                if regs.v1 and not regs.v0:
                    problems.append(f"cycle {rec.cycle}: cell {cid}: v1 set without v0")
                if regs.v0 and regs.v1 and regs.d0.value > regs.d1.value:
                    problems.append(
                        f"cycle {rec.cycle}: cell {cid}: d0={regs.d0.value} "
                        f"> d1={regs.d1.value}"
                    )
                if regs.v0:
                    in_flight.append(regs.d0)
                if regs.v1:
                    in_flight.append(regs.d1)
            elif isinstance(regs, RegisteredNodeState):
                if regs.v_out and regs.e_out:
                    problems.append(
                        f"cycle {rec.cycle}: node {cid}: v_out and e_out both set"
                    )
                if sticky.get(cid) and not regs.e_out:
                    problems.append(f"cycle {rec.cycle}: node {cid}: e_out flag dropped")
                sticky[cid] = regs.e_out
                if regs.v_out:
                    in_flight.append(regs.d_out)
        if loaded_counter is not None and rec.per_leaf:
            for leaf in rec.per_leaf.values():
                if leaf.v:
                    in_flight.append(leaf.d)
            # The snapshot precedes this cycle's emission.
            now = Counter(in_flight)
            now.update(emitted_so_far)
            if now != loaded_counter:
                problems.append(f"cycle {rec.cycle}: element conservation broken")
        if rec.emitted is not None:
            emitted_so_far.append(rec.emitted)
    return problems


@dataclass(frozen=True)
class VariantComparison:
    """Same input pushed through both clocked trees."""

    n: int
    hourglass: RunReport
    registered: RunReport

    @property
    def cycle_ratio(self) -> float:
        return self.hourglass.total_cycles / self.registered.total_cycles


def compare_variants(
    config: SimConfig, values: Sequence[int], want_timelines: bool = False
) -> VariantComparison:
    """Run both clocked variants on identical input and compare cycles.

    The double-buffered tree must finish strictly earlier for n >= 4; the
    cycle ratio tends to 1/2 as n grows.  ``want_timelines`` keeps basic
    traces on both reports for plotting.
    """
    trace = "basic" if want_timelines else "none"
    hourglass = simulate(
        dataclasses.replace(config, variant="hourglass"), values, trace=trace
    )
    registered = simulate(
        dataclasses.replace(config, variant="registered"), values, trace=trace
    )
    if config.n >= 4 and not hourglass.total_cycles < registered.total_cycles:
        raise RuntimeError(
            f"double buffering did not pay off at n={config.n}: "
            f"{hourglass.total_cycles} vs {registered.total_cycles} cycles"
        )
    return VariantComparison(n=config.n, hourglass=hourglass, registered=registered)
