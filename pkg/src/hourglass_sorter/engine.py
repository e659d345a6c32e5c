"""Two-phase clocked simulation of the three tree variants.

Each step evaluates every combinational signal (selections, readies,
handshakes) from the cycle-start register snapshot, then commits all
register updates at once, so evaluation order can never leak into results.

Cycle convention: the loaded state is clock boundary 0, and the interval
that reads boundary c is cycle c.  A root transaction observed in cycle c
is stamped c, which makes the first always-ready output of the
double-buffered tree land exactly on the tree depth and the last on
depth + n - 1.  RunReport.total_cycles is the number of simulated cycles,
i.e. the last transaction stamp plus one.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .cells import (
    MISSING_PARENT,
    LeafState,
    Selection,
    UpstreamView,
    comb_extract,
    hourglass_commit,
    hourglass_outputs,
    hourglass_select,
    leaf_step,
    registered_step,
)
from .core import (
    CellRegisters,
    CycleTrace,
    Element,
    InputError,
    PortView,
    RegisteredNodeState,
    SimConfig,
    SinkPattern,
    StallError,
)
from .topology import LEAF, TreeTopology, build_tree

__all__ = [
    "RunReport",
    "SimState",
    "SinkPattern",
    "build_engine",
    "load",
    "run",
    "run_take",
    "simulate",
    "step",
]

_EMPTY_PORT = PortView(None, False, False)


@dataclass(frozen=True)
class SimState:
    """Complete register snapshot at a clock boundary."""

    cycle: int
    leaves: tuple[LeafState, ...]
    cells: tuple
    emitted: tuple[Element, ...]


@dataclass(frozen=True)
class RunReport:
    """Everything a finished run can be judged by."""

    output: tuple[Element, ...]
    first_output_cycle: int | None
    last_output_cycle: int | None
    total_cycles: int
    bubbles: int
    violations: tuple[str, ...]
    trace: tuple[CycleTrace, ...] | None = None
    path_units: int | None = None


def _as_elements(config: SimConfig, values: Sequence[int]) -> tuple[Element, ...]:
    if len(values) != config.n:
        raise InputError(f"expected {config.n} values, got {len(values)}")
    bound = 1 << config.w
    out = []
    for i, v in enumerate(values):
        v = int(v)
        if not 0 <= v < bound:
            raise InputError(f"value {v} at position {i} outside [0, 2^{config.w})")
        out.append(Element(v, i if config.track_indices else None))
    return tuple(out)


class _BaseEngine:
    """Shared wiring: topology slots, load, and the run loop."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.topology: TreeTopology = build_tree(config.n)
        n = config.n
        # Node slots: leaves are 0..n-1, cell c sits at n + c.  Ready
        # signals are routed per slot because each node feeds exactly one
        # consumer.
        self._slots: list[tuple[int, int]] = []
        for node in self.topology.cells:
            left = node.left[1] if node.left[0] == LEAF else n + node.left[1]
            if node.right is None:
                right = -1
            else:
                right = node.right[1] if node.right[0] == LEAF else n + node.right[1]
            self._slots.append((left, right))
        self._root_slot = n + self.topology.cell_count - 1

    def load(self, values: Sequence[int]) -> SimState:
        elements = _as_elements(self.config, values)
        leaves = tuple(LeafState(e, True) for e in elements)
        return SimState(0, leaves, self._initial_cells(), ())

    def step(self, state: SimState) -> SimState:
        return self._step_full(state, want_snapshots=False)[0]

    def run(self, values: Sequence[int], trace: str = "none") -> RunReport:
        """Step until the configured number of root transactions happened.

        trace: "none" (default), "basic" (per-cycle handshake records), or
        "full" (adds per-node register snapshots).  Invariant violations
        are recorded in the report, never raised; only the
        non-termination guard aborts the run.
        """
        if trace not in ("none", "basic", "full"):
            raise ValueError(f"unknown trace mode {trace!r}")
        cfg = self.config
        state = self.load(values)
        loaded = Counter(leaf.d for leaf in state.leaves)
        target = cfg.target
        guard_ready = 4 * cfg.n + 4 * self.topology.depth
        guard_abs = guard_ready * self._stall_slack()
        records: list[CycleTrace] = []
        violations: list[str] = []
        first: int | None = None
        last: int | None = None
        bubbles = 0
        stall_ready = 0
        stall_abs = 0
        prev_e: list[bool] | None = None
        while len(state.emitted) < target:
            state, rec = self._step_full(state, want_snapshots=(trace == "full"))
            if trace != "none":
                records.append(rec)
            if rec.root_transaction:
                if first is None:
                    first = rec.cycle
                last = rec.cycle
                stall_ready = 0
                stall_abs = 0
            else:
                stall_abs += 1
                if rec.sink_ready:
                    stall_ready += 1
                    if first is not None:
                        bubbles += 1
                if stall_ready > guard_ready or stall_abs > guard_abs:
                    raise StallError(
                        f"no root transaction for {max(stall_ready, stall_abs)} cycles "
                        f"(cycle {state.cycle}, {len(state.emitted)}/{target} emitted)"
                    )
            violations.extend(self._boundary_violations(state, rec, loaded))
            prev_e = self._check_sticky_flags(state, prev_e, violations)
        return RunReport(
            output=state.emitted,
            first_output_cycle=first,
            last_output_cycle=last,
            total_cycles=state.cycle,
            bubbles=bubbles,
            violations=tuple(violations),
            trace=tuple(records) if trace != "none" else None,
            path_units=self._path_units(len(state.emitted)),
        )

    # variant hooks ------------------------------------------------------

    def _initial_cells(self) -> tuple:
        raise NotImplementedError

    def _step_full(self, state: SimState, want_snapshots: bool) -> tuple[SimState, CycleTrace]:
        raise NotImplementedError

    def _boundary_violations(
        self, state: SimState, rec: CycleTrace, loaded: Counter
    ) -> list[str]:
        raise NotImplementedError

    def _check_sticky_flags(
        self, state: SimState, prev: list[bool] | None, violations: list[str]
    ) -> list[bool] | None:
        return None

    def _stall_slack(self) -> int:
        sink = self.config.sink
        if sink.kind == "every":
            return sink.period
        if sink.kind == "random":
            return max(1, int(8 / sink.p)) if sink.p > 0 else 1
        return 1

    def _path_units(self, outputs: int) -> int | None:
        return None

    # shared checks ------------------------------------------------------

    def _common_violations(
        self, state: SimState, rec: CycleTrace, loaded: Counter, in_flight: Iterable[Element]
    ) -> list[str]:
        problems: list[str] = []
        if rec.root_transaction and len(state.emitted) >= 2:
            a, b = state.emitted[-2], state.emitted[-1]
            if a.value > b.value:
                problems.append(
                    f"cycle {rec.cycle}: output not monotone ({a.value} before {b.value})"
                )
        now = Counter(in_flight)
        now.update(state.emitted)
        if now != loaded:
            problems.append(f"cycle {rec.cycle}: element conservation broken")
        return problems


class HourglassEngine(_BaseEngine):
    """Double-buffered cells: accept and emit in the same cycle."""

    def _initial_cells(self) -> tuple:
        return tuple(CellRegisters() for _ in self.topology.cells)

    def _step_full(self, state: SimState, want_snapshots: bool) -> tuple[SimState, CycleTrace]:
        cfg = self.config
        n = cfg.n
        leaves = state.leaves
        cells: tuple[CellRegisters, ...] = state.cells
        ready = cfg.sink.ready_at(state.cycle, cfg.seed)

        ports: list[PortView] = [
            PortView(leaf.d, True, False) if leaf.v else _EMPTY_PORT for leaf in leaves
        ]
        ports.extend(hourglass_outputs(regs) for regs in cells)

        r_out = [False] * (n + len(cells))
        sels: list[Selection] = []
        for (pl, pr), regs in zip(self._slots, cells):
            left = ports[pl]
            right = ports[pr] if pr >= 0 else _EMPTY_PORT
            sel = hourglass_select(left, right, regs.v1, cfg.tie_break)
            sels.append(sel)
            if sel.r_l:
                r_out[pl] = True
            elif sel.r_r:
                r_out[pr] = True
        r_out[self._root_slot] = ready

        root = cells[-1]
        txn = root.v0 and ready
        emitted = root.d0 if txn else None

        new_cells = tuple(
            hourglass_commit(regs, sel, r_out[n + c])
            for c, (regs, sel) in enumerate(zip(cells, sels))
        )
        new_leaves = tuple(leaf_step(leaf, r_out[j]) for j, leaf in enumerate(leaves))
        new_emitted = state.emitted + (emitted,) if txn else state.emitted

        rec = CycleTrace(
            cycle=state.cycle,
            per_cell={node.cell_id: regs for node, regs in zip(self.topology.cells, cells)}
            if want_snapshots
            else {},
            per_leaf={j: leaf for j, leaf in enumerate(leaves)} if want_snapshots else {},
            root_valid=root.v0,
            root_transaction=txn,
            emitted=emitted,
            sink_ready=ready,
        )
        return SimState(state.cycle + 1, new_leaves, new_cells, new_emitted), rec

    def _boundary_violations(
        self, state: SimState, rec: CycleTrace, loaded: Counter
    ) -> list[str]:
        problems: list[str] = []
        in_flight: list[Element] = [leaf.d for leaf in state.leaves if leaf.v]
        for node, regs in zip(self.topology.cells, state.cells):
            if regs.v1 and not regs.v0:
                problems.append(
                    f"cycle {rec.cycle}: cell {node.cell_id}: v1 set without v0"
                )
            if regs.v0 and regs.v1 and regs.d0.value > regs.d1.value:
                problems.append(
                    f"cycle {rec.cycle}: cell {node.cell_id}: d0={regs.d0.value} "
                    f"> d1={regs.d1.value}"
                )
            if regs.v0:
                in_flight.append(regs.d0)
            if regs.v1:
                in_flight.append(regs.d1)
        problems.extend(self._common_violations(state, rec, loaded, in_flight))
        return problems


class RegisteredEngine(_BaseEngine):
    """Single-register comparator nodes with sticky exhausted flags."""

    def _initial_cells(self) -> tuple:
        return tuple(RegisteredNodeState() for _ in self.topology.cells)

    def _upstream(self, slot: int, leaves, cells) -> UpstreamView:
        if slot < 0:
            return MISSING_PARENT
        if slot < self.config.n:
            leaf = leaves[slot]
            return UpstreamView(leaf.d if leaf.v else None, leaf.v, not leaf.v)
        node: RegisteredNodeState = cells[slot - self.config.n]
        return UpstreamView(node.d_out if node.v_out else None, node.v_out, node.e_out)

    def _step_full(self, state: SimState, want_snapshots: bool) -> tuple[SimState, CycleTrace]:
        cfg = self.config
        n = cfg.n
        leaves = state.leaves
        cells: tuple[RegisteredNodeState, ...] = state.cells
        ready = cfg.sink.ready_at(state.cycle, cfg.seed)

        root = cells[-1]
        txn = root.v_out and ready
        emitted = root.d_out if txn else None

        # Pass 1: from the snapshot, decide every node's action and which
        # parent registers get cleared.  Nodes holding a value never clear
        # anything, so skipping them is safe.
        clear = [False] * (n + len(cells))
        staged: list[RegisteredNodeState] = []
        for (pl, pr), node in zip(self._slots, cells):
            nxt, c1, c2 = registered_step(
                node,
                self._upstream(pl, leaves, cells),
                self._upstream(pr, leaves, cells),
                consumed=False,
                tie_break=cfg.tie_break,
            )
            staged.append(nxt)
            if c1:
                clear[pl] = True
            if c2:
                clear[pr] = True
        if txn:
            clear[self._root_slot] = True

        # Pass 2: consumption wins over the staged action; both read only
        # cycle-start state, so they can never fire together.
        new_cells = tuple(
            node._replace(v_out=False) if clear[n + c] else staged[c]
            for c, node in enumerate(cells)
        )
        new_leaves = tuple(leaf_step(leaf, clear[j]) for j, leaf in enumerate(leaves))
        new_emitted = state.emitted + (emitted,) if txn else state.emitted

        rec = CycleTrace(
            cycle=state.cycle,
            per_cell={node.cell_id: regs for node, regs in zip(self.topology.cells, cells)}
            if want_snapshots
            else {},
            per_leaf={j: leaf for j, leaf in enumerate(leaves)} if want_snapshots else {},
            root_valid=root.v_out,
            root_transaction=txn,
            emitted=emitted,
            sink_ready=ready,
        )
        return SimState(state.cycle + 1, new_leaves, new_cells, new_emitted), rec

    def _boundary_violations(
        self, state: SimState, rec: CycleTrace, loaded: Counter
    ) -> list[str]:
        problems: list[str] = []
        in_flight: list[Element] = [leaf.d for leaf in state.leaves if leaf.v]
        for node, regs in zip(self.topology.cells, state.cells):
            if regs.v_out and regs.e_out:
                problems.append(
                    f"cycle {rec.cycle}: node {node.cell_id}: v_out and e_out both set"
                )
            if regs.v_out:
                in_flight.append(regs.d_out)
        problems.extend(self._common_violations(state, rec, loaded, in_flight))
        return problems

    def _check_sticky_flags(
        self, state: SimState, prev: list[bool] | None, violations: list[str]
    ) -> list[bool] | None:
        flags = [regs.e_out for regs in state.cells]
        if prev is not None:
            for node, before, after in zip(self.topology.cells, prev, flags):
                if before and not after:
                    violations.append(
                        f"cycle {state.cycle}: node {node.cell_id}: e_out flag dropped"
                    )
        return flags


class CombinationalEngine(_BaseEngine):
    """Unregistered tournament: one extraction per cycle, modelled cost."""

    def _initial_cells(self) -> tuple:
        return ()

    def _step_full(self, state: SimState, want_snapshots: bool) -> tuple[SimState, CycleTrace]:
        cfg = self.config
        ready = cfg.sink.ready_at(state.cycle, cfg.seed)
        any_valid = any(leaf.v for leaf in state.leaves)
        txn = ready and any_valid
        emitted: Element | None = None
        new_leaves = state.leaves
        if txn:
            winner, winner_leaf, _ = comb_extract(list(state.leaves), cfg.tie_break)
            emitted = winner
            new_leaves = tuple(
                leaf_step(leaf, j == winner_leaf) for j, leaf in enumerate(state.leaves)
            )
        new_emitted = state.emitted + (emitted,) if txn else state.emitted
        rec = CycleTrace(
            cycle=state.cycle,
            per_cell={},
            per_leaf={j: leaf for j, leaf in enumerate(state.leaves)} if want_snapshots else {},
            root_valid=any_valid,
            root_transaction=txn,
            emitted=emitted,
            sink_ready=ready,
        )
        return SimState(state.cycle + 1, new_leaves, (), new_emitted), rec

    def _boundary_violations(
        self, state: SimState, rec: CycleTrace, loaded: Counter
    ) -> list[str]:
        in_flight = [leaf.d for leaf in state.leaves if leaf.v]
        return self._common_violations(state, rec, loaded, in_flight)

    def _path_units(self, outputs: int) -> int | None:
        return 2 * self.topology.depth * outputs


_ENGINES = {
    "hourglass": HourglassEngine,
    "registered": RegisteredEngine,
    "combinational": CombinationalEngine,
}


def build_engine(config: SimConfig) -> _BaseEngine:
    return _ENGINES[config.variant](config)


def load(config: SimConfig, values: Sequence[int]) -> SimState:
    """Parallel-load the input into the leaf row of a fresh tree."""
    return build_engine(config).load(values)


def step(config: SimConfig, state: SimState) -> SimState:
    """Advance one clock cycle (convenience wrapper around the engine)."""
    return build_engine(config).step(state)


def run(config: SimConfig, values: Sequence[int], trace: str = "none") -> RunReport:
    """Simulate with the reference engine until the run target is met."""
    return build_engine(config).run(values, trace=trace)


def run_take(config: SimConfig, values: Sequence[int], trace: str = "none") -> RunReport:
    """Early-stop run; requires config.take to be set."""
    if config.take is None:
        raise ValueError("run_take requires config.take")
    return run(config, values, trace=trace)


def simulate(
    config: SimConfig, values: Sequence[int], trace: str = "none", prefer_fast: bool = True
) -> RunReport:
    """Run with the compiled bulk kernel when possible, else the reference.

    Both paths are exchangeable: the kernels are tested to reproduce the
    reference engine's outputs, stamps, and bubble counts bit for bit.
    Traces and the combinational variant always use the reference engine.
    """
    if prefer_fast and trace == "none" and config.variant in ("hourglass", "registered"):
        from . import fastsim

        return fastsim.fast_run(config, values).to_report(config)
    return run(config, values, trace=trace)
