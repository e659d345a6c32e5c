import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hourglass_sorter.cells import (
    MISSING_PARENT,
    LeafState,
    UpstreamView,
    comb_extract,
    hourglass_commit,
    hourglass_outputs,
    hourglass_select,
    leaf_step,
    registered_step,
)
from hourglass_sorter.core import CellRegisters, Element, PortView, RegisteredNodeState


def port(value=None, v=False):
    return PortView(Element(value) if value is not None else None, v, False)


class TestHourglassSelect:
    def test_strict_minimum_with_room(self):
        sel = hourglass_select(port(2, True), port(5, True), v1=False)
        assert (sel.d.value, sel.v, sel.r_l, sel.r_r) == (2, True, True, False)

    def test_invalid_left_forces_right(self):
        sel = hourglass_select(port(9, False), port(7, True), v1=False)
        assert (sel.d.value, sel.v, sel.r_l, sel.r_r) == (7, True, False, True)

    def test_full_overflow_register_blocks_ready(self):
        sel = hourglass_select(port(2, True), port(5, True), v1=True)
        assert (sel.d.value, sel.v, sel.r_l, sel.r_r) == (2, True, False, False)

    def test_both_idle_routes_ready_left(self):
        sel = hourglass_select(port(), port(), v1=False)
        assert (sel.d, sel.v, sel.r_l, sel.r_r) == (None, False, True, False)

    def test_tie_policies(self):
        left = hourglass_select(port(4, True), port(4, True), v1=False, tie_break="left")
        right = hourglass_select(port(4, True), port(4, True), v1=False, tie_break="right")
        assert left.r_l and not left.r_r
        assert right.r_r and not right.r_l

    @given(
        lv=st.booleans(),
        rv=st.booleans(),
        lval=st.integers(0, 7),
        rval=st.integers(0, 7),
        v1=st.booleans(),
        policy=st.sampled_from(["left", "right"]),
    )
    def test_ready_goes_to_at_most_one_side_and_only_when_room(
        self, lv, rv, lval, rval, v1, policy
    ):
        sel = hourglass_select(port(lval, lv), port(rval, rv), v1, policy)
        assert not (sel.r_l and sel.r_r)
        if v1:
            assert not sel.r_l and not sel.r_r
        else:
            assert sel.r_l or sel.r_r
        if sel.v:
            assert sel.d is not None


class TestHourglassCommit:
    def test_fill_empty_first_register(self):
        regs = hourglass_commit(
            CellRegisters(), _sel(4, True), r_out=False
        )
        assert regs == CellRegisters(Element(4), None, True, False)
        # Downstream ready is irrelevant while register zero is empty.
        assert hourglass_commit(CellRegisters(), _sel(4, True), r_out=True) == regs

    def test_simultaneous_in_and_out(self):
        regs = CellRegisters(Element(3), None, True, False)
        out = hourglass_commit(regs, _sel(9, True), r_out=True)
        assert out == CellRegisters(Element(9), None, True, False)

    def test_fill_second_register_when_blocked(self):
        regs = CellRegisters(Element(3), None, True, False)
        out = hourglass_commit(regs, _sel(9, True), r_out=False)
        assert out == CellRegisters(Element(3), Element(9), True, True)

    def test_shift_out_when_both_full(self):
        regs = CellRegisters(Element(3), Element(8), True, True)
        out = hourglass_commit(regs, _sel(None, False), r_out=True)
        assert out == CellRegisters(Element(8), None, True, False)

    def test_stall_keeps_everything(self):
        regs = CellRegisters(Element(3), Element(8), True, True)
        assert hourglass_commit(regs, _sel(None, False), r_out=False) == regs

    @given(data=st.data())
    def test_commit_preserves_invariants_and_never_drops_values(self, data):
        # Reachable states: v1 implies v0, d0 <= d1, and any arriving value
        # is at least d0 (the cell already forwarded everything smaller).
        v0 = data.draw(st.booleans())
        v1 = data.draw(st.booleans()) if v0 else False
        d0 = Element(data.draw(st.integers(0, 7))) if v0 else None
        d1 = Element(data.draw(st.integers(d0.value, 9))) if v1 else None
        regs = CellRegisters(d0, d1, v0, v1)
        sel_v = data.draw(st.booleans())
        low = d0.value if v0 else 0
        sel = _sel(data.draw(st.integers(low, 12)) if sel_v else None, sel_v)
        r_out = data.draw(st.booleans())

        out = hourglass_commit(regs, sel, r_out)
        assert out.v1 <= out.v0
        if out.v0 and out.v1:
            assert out.d0.value <= out.d1.value
        held_before = _held(regs)
        held_after = _held(out)
        took_input = sel.v and not regs.v1
        gave_output = regs.v0 and r_out
        assert len(held_after) == len(held_before) + took_input - gave_output
        if took_input:
            assert sel.d in held_after


def _sel(value, v):
    from hourglass_sorter.cells import Selection

    return Selection(Element(value) if value is not None else None, v, False, False)


def _held(regs):
    held = []
    if regs.v0:
        held.append(regs.d0)
    if regs.v1:
        held.append(regs.d1)
    return held


class TestHourglassOutputs:
    def test_full_cell(self):
        out = hourglass_outputs(CellRegisters(Element(3), Element(8), True, True))
        assert (out.d.value, out.v, out.r) == (3, True, False)

    def test_empty_cell(self):
        out = hourglass_outputs(CellRegisters())
        assert (out.d, out.v, out.r) == (None, False, True)

    def test_half_full_cell_is_ready_upstream(self):
        out = hourglass_outputs(CellRegisters(Element(5), None, True, False))
        assert (out.d.value, out.v, out.r) == (5, True, True)


class TestRegisteredStep:
    def test_loads_minimum_and_clears_argmin(self):
        node, c1, c2 = registered_step(
            RegisteredNodeState(),
            UpstreamView(Element(4), True, False),
            UpstreamView(Element(7), True, False),
            consumed=False,
        )
        assert node == RegisteredNodeState(Element(4), True, False)
        assert (c1, c2) == (True, False)

    def test_consumed_cycle_is_read_only(self):
        node, c1, c2 = registered_step(
            RegisteredNodeState(Element(4), True, False),
            UpstreamView(Element(1), True, False),
            UpstreamView(Element(2), True, False),
            consumed=True,
        )
        assert node == RegisteredNodeState(Element(4), False, False)
        assert (c1, c2) == (False, False)

    def test_exhausted_parents_propagate(self):
        node, c1, c2 = registered_step(
            RegisteredNodeState(),
            UpstreamView(None, False, True),
            UpstreamView(None, False, True),
            consumed=False,
        )
        assert node == RegisteredNodeState(None, False, True)
        assert (c1, c2) == (False, False)

    def test_single_valid_parent_needs_the_other_exhausted(self):
        lagging = UpstreamView(None, False, False)
        ready = UpstreamView(Element(5), True, False)
        node, c1, c2 = registered_step(RegisteredNodeState(), ready, lagging, False)
        assert node == RegisteredNodeState() and not c1 and not c2
        node, c1, c2 = registered_step(RegisteredNodeState(), ready, MISSING_PARENT, False)
        assert node == RegisteredNodeState(Element(5), True, False)
        assert (c1, c2) == (True, False)

    def test_full_output_register_blocks_loading(self):
        held = RegisteredNodeState(Element(9), True, False)
        node, c1, c2 = registered_step(
            held,
            UpstreamView(Element(1), True, False),
            UpstreamView(Element(2), True, False),
            consumed=False,
        )
        assert node == held and not c1 and not c2

    def test_tie_break_right(self):
        node, c1, c2 = registered_step(
            RegisteredNodeState(),
            UpstreamView(Element(4, 0), True, False),
            UpstreamView(Element(4, 1), True, False),
            consumed=False,
            tie_break="right",
        )
        assert node.d_out.index == 1
        assert (c1, c2) == (False, True)


class TestCombExtract:
    def test_minimum_of_three(self):
        leaves = [LeafState(Element(3), True), LeafState(Element(1), True), LeafState(Element(2), True)]
        winner, winner_leaf, path = comb_extract(leaves)
        assert (winner.value, winner_leaf, path) == (1, 1, 4)

    def test_tie_prefers_leftmost(self):
        leaves = [LeafState(Element(5), True), LeafState(Element(5), True)]
        assert comb_extract(leaves, "left")[1] == 0
        assert comb_extract(leaves, "right")[1] == 1

    def test_errors_when_nothing_valid(self):
        with pytest.raises(ValueError):
            comb_extract([LeafState(Element(5), False)])

    def test_repeated_extraction_sorts(self):
        leaves = [LeafState(Element(v), True) for v in (3, 1, 2)]
        got = []
        for _ in range(3):
            winner, idx, _ = comb_extract(leaves)
            got.append(winner.value)
            leaves[idx] = leaf_step(leaves[idx], True)
        assert got == [1, 2, 3]

    def test_exhaustive_equivalence_with_stable_sort(self):
        # Brute force: every permutation up to length 6 and every duplicate
        # pattern over {0,1,2} up to length 5, plus {0,1} up to length 8.
        pools = []
        for k in range(1, 7):
            pools.extend(itertools.permutations(range(k)))
        for k in range(1, 6):
            pools.extend(itertools.product(range(3), repeat=k))
        for k in (7, 8):
            pools.extend(itertools.product(range(2), repeat=k))
        for values in pools:
            leaves = [LeafState(Element(v, i), True) for i, v in enumerate(values)]
            expected = sorted(
                (Element(v, i) for i, v in enumerate(values)), key=lambda e: e.value
            )
            got = []
            for _ in range(len(values)):
                winner, idx, _ = comb_extract(leaves, "left")
                got.append(winner)
                leaves[idx] = leaf_step(leaves[idx], True)
            assert got == expected, values


class TestLeafStep:
    def test_handoff(self):
        assert leaf_step(LeafState(Element(7), True), True) == LeafState(Element(7), False)

    def test_no_ready_no_change(self):
        leaf = LeafState(Element(7), True)
        assert leaf_step(leaf, False) == leaf

    def test_exhausted_source_stays_exhausted(self):
        leaf = LeafState(None, False)
        assert leaf_step(leaf, True) == leaf
