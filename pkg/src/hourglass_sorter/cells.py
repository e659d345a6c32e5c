"""Pure single-cycle step semantics for every node kind.

Each function maps cycle-start state to cycle-end state and may be applied
to all nodes of a tree in any order, because inputs are always taken from
the cycle-start snapshot.
"""

from __future__ import annotations

from typing import NamedTuple

from .core import CellRegisters, Element, PortView, RegisteredNodeState, TieBreak, element_less
from .topology import depth_of


class Selection(NamedTuple):
    """Outcome of a cell's input multiplexer for one cycle.

    ``d``/``v`` mirror the chosen parent's output; ``r_l``/``r_r`` carry the
    cell's ready toward at most one parent.
    """

    d: Element | None
    v: bool
    r_l: bool
    r_r: bool


class LeafState(NamedTuple):
    """Single-shot source register: valid until consumed, then silent."""

    d: Element | None
    v: bool


_INVALID_PORT = PortView(None, False, False)


def hourglass_select(
    left: PortView, right: PortView, v1: bool, tie_break: TieBreak = "left"
) -> Selection:
    """Choose which parent a double-buffered cell consumes this cycle.

    The data comparison only decides when both parents are valid; a lone
    valid side always wins, and with both sides idle the ready defaults to
    the left port.  Ready is asserted toward the chosen side only while the
    overflow register is free (not v1).
    """
    if left.v and right.v:
        take_left = element_less(left.d, right.d, tie_break)  # type: ignore[arg-type]
    else:
        take_left = left.v or not right.v
    r = not v1
    if take_left:
        return Selection(left.d if left.v else None, left.v, r, False)
    return Selection(right.d if right.v else None, right.v, False, r)


def hourglass_commit(regs: CellRegisters, sel: Selection, r_out: bool) -> CellRegisters:
    """Apply one clock edge to a double-buffered cell's registers.

    ``sel`` is this cycle's selection and ``r_out`` the downstream ready.
    An input transaction happened iff sel.v and the cell advertised ready
    (not regs.v1); the ladder below never stores sel when v1 was set.
    """
    if not regs.v0:
        return CellRegisters(sel.d, regs.d1, sel.v, regs.v1)
    if not regs.v1:
        if r_out:
            # Output register read and refilled in the same cycle.
            return CellRegisters(sel.d, regs.d1, sel.v, regs.v1)
        return CellRegisters(regs.d0, sel.d, regs.v0, sel.v)
    if r_out:
        # Both full and the output was read: overflow shifts down.
        return CellRegisters(regs.d1, None, regs.v1, False)
    return regs


def hourglass_outputs(regs: CellRegisters) -> PortView:
    """Downstream view of a cell: data from register zero, ready from v1."""
    return PortView(regs.d0 if regs.v0 else None, regs.v0, not regs.v1)


class UpstreamView(NamedTuple):
    """What a registered comparator sees on one parent port."""

    d: Element | None
    v: bool
    e: bool


MISSING_PARENT = UpstreamView(None, False, True)


def registered_step(
    node: RegisteredNodeState,
    in1: UpstreamView,
    in2: UpstreamView,
    consumed: bool,
    tie_break: TieBreak = "left",
) -> tuple[RegisteredNodeState, bool, bool]:
    """One cycle of a single-register comparator node.

    Returns the next state plus clear flags for the parents whose registers
    this node emptied.  The output register is written only while empty and
    cleared only by the consumer, so a node can never emit on consecutive
    cycles; that restriction is what the double-buffered cell removes.
    """
    if consumed:
        return node._replace(v_out=False), False, False
    if node.v_out:
        return node, False, False
    if in1.v and in2.v:
        if element_less(in1.d, in2.d, tie_break):  # type: ignore[arg-type]
            return RegisteredNodeState(in1.d, True, node.e_out), True, False
        return RegisteredNodeState(in2.d, True, node.e_out), False, True
    if in1.v and in2.e:
        return RegisteredNodeState(in1.d, True, node.e_out), True, False
    if in2.v and in1.e:
        return RegisteredNodeState(in2.d, True, node.e_out), False, True
    if in1.e and in2.e:
        return node._replace(e_out=True), False, False
    return node, False, False


def comb_extract(
    leaves: list[LeafState] | tuple[LeafState, ...], tie_break: TieBreak = "left"
) -> tuple[Element, int, int]:
    """Tournament-extract the minimum of the still-valid leaves.

    Returns the winning element, the leaf it came from (which the caller
    must invalidate before extracting again), and the modelled critical
    path of 2 * depth units: the compare chain down plus the reset chain
    back up.
    """
    entries: list[tuple[Element, int] | None] = [
        (leaf.d, i) if leaf.v and leaf.d is not None else None
        for i, leaf in enumerate(leaves)
    ]
    if all(entry is None for entry in entries):
        raise ValueError("no valid leaf to extract from")
    while len(entries) > 1:
        merged: list[tuple[Element, int] | None] = []
        for j in range(0, len(entries), 2):
            a = entries[j]
            b = entries[j + 1] if j + 1 < len(entries) else None
            if a is None:
                merged.append(b)
            elif b is None:
                merged.append(a)
            else:
                merged.append(a if element_less(a[0], b[0], tie_break) else b)
        entries = merged
    winner, winner_leaf = entries[0]  # type: ignore[misc]
    return winner, winner_leaf, 2 * depth_of(len(leaves))


def leaf_step(leaf: LeafState, ready_seen: bool) -> LeafState:
    """Invalidate a source register once its value was handed off."""
    if leaf.v and ready_seen:
        return LeafState(leaf.d, False)
    return leaf
