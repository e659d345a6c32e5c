import dataclasses

import pytest

from hourglass_sorter.analysis import (
    ResourceEstimate,
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
from hourglass_sorter.core import (
    CellRegisters,
    CycleTrace,
    Element,
    SimConfig,
    SinkPattern,
)
from hourglass_sorter.engine import run

# Synthesis reference for the shipped configurations:
# (n, w, lut, reg, carry8, first-output latency).
REFERENCE_ROWS = [
    (1024, 8, 28132, 27630, 1023, 10),
    (512, 8, 14052, 13806, 511, 9),
    (256, 8, 7012, 6894, 255, 8),
    (128, 8, 3492, 3438, 127, 7),
    (64, 8, 1732, 1710, 63, 6),
    (1024, 16, 48592, 52190, 1023, 10),
    (512, 16, 24272, 26078, 511, 9),
    (256, 16, 12112, 13022, 255, 8),
    (128, 16, 6032, 6494, 127, 7),
    (64, 16, 2992, 3230, 63, 6),
    (1024, 32, 89002, 101310, 2046, 10),
    (512, 32, 44458, 50622, 1022, 9),
    (256, 32, 22186, 25278, 510, 8),
    (128, 32, 11050, 12606, 254, 7),
    (64, 32, 5482, 6270, 126, 6),
]


class TestResourceModels:
    @pytest.mark.parametrize("n,w,lut,reg,carry,first", REFERENCE_ROWS)
    def test_reference_rows_reproduce_exactly(self, n, w, lut, reg, carry, first):
        assert reg_count(n, w) == reg
        assert carry8_count(n, w) == carry
        assert lut_fit(n, w) == lut
        assert latency_model(n) == (first, first + n)

    def test_smallest_tree_register_count(self):
        assert reg_count(2, 8) == 1 * 18 + 2 * 9 == 36

    def test_lut_fit_refuses_unknown_width(self):
        with pytest.raises(ValueError, match="no LUT fit"):
            lut_fit(1024, 24)

    def test_lut_fit_refuses_sizes_below_the_fit_domain(self):
        with pytest.raises(ValueError):
            lut_fit(32, 8)

    def test_structural_counts_require_power_of_two(self):
        with pytest.raises(ValueError):
            reg_count(6, 8)
        with pytest.raises(ValueError):
            carry8_count(100, 8)

    def test_estimate_matches_closed_forms_at_powers_of_two(self):
        est = resource_estimate(1024, 8)
        assert est == ResourceEstimate(
            n=1024,
            w=8,
            reg_bits=27630,
            carry8_blocks=1023,
            lut_estimate=28132,
            latency_first=10,
            latency_total=1034,
            extrapolated=False,
        )

    def test_estimate_extrapolates_padded_trees(self):
        est = resource_estimate(6, 8)
        # Padded tree has 6 cells instead of n-1 = 5.
        assert est.extrapolated
        assert est.reg_bits == 6 * 18 + 6 * 9
        assert est.carry8_blocks == 6
        assert est.lut_estimate is None
        assert est.latency_first == 3

    @pytest.mark.parametrize("n", [64, 128, 256, 512, 1024])
    def test_latency_model_matches_simulation(self, n):
        values = [(i * 40503) % 256 for i in range(n)]
        report = run(SimConfig(n=n, w=8), values)
        first, total = latency_model(n)
        assert report.first_output_cycle == first
        assert report.last_output_cycle + 1 == total

    def test_latency_model_n6_matches_simulation(self):
        report = run(SimConfig(n=6, w=8), [5, 2, 4, 0, 3, 1])
        assert latency_model(6) == (3, 9)
        assert report.first_output_cycle == 3
        assert report.total_cycles == 9


class TestOracle:
    def test_sorts_values(self):
        got = oracle_stable_sort([Element(3), Element(1), Element(2)])
        assert [e.value for e in got] == [1, 2, 3]

    def test_stability(self):
        a, b = Element(5, 0), Element(5, 1)
        assert oracle_stable_sort([a, b]) == [a, b]
        assert oracle_stable_sort([b, a]) == [b, a]

    def test_empty(self):
        assert oracle_stable_sort([]) == []


class TestDetectBubbles:
    def test_hourglass_stream_is_bubble_free(self):
        report = run(SimConfig(n=64, w=8), list(range(64)), trace="basic")
        window = report.last_output_cycle - report.first_output_cycle + 1
        assert detect_bubbles(report.trace, report.first_output_cycle, window) == []
        assert window == 64

    def test_registered_n8_has_exactly_seven_bubbles(self):
        report = run(
            SimConfig(n=8, w=8, variant="registered"),
            [3, 6, 1, 7, 0, 5, 2, 4],
            trace="basic",
        )
        window = report.last_output_cycle - report.first_output_cycle + 1
        bubbles = detect_bubbles(report.trace, report.first_output_cycle, window)
        assert len(bubbles) == 7
        assert bubbles == list(range(4, 17, 2))  # every other cycle after first at 3
        assert report.bubbles == 7

    def test_sink_stalls_are_not_tree_bubbles(self):
        report = run(
            SimConfig(n=64, w=8, sink=SinkPattern.every(2)), list(range(64)), trace="basic"
        )
        window = report.last_output_cycle - report.first_output_cycle + 1
        assert detect_bubbles(report.trace, report.first_output_cycle, window) == []


class TestCheckInvariants:
    def test_clean_run_passes(self):
        values = [4, 1, 3, 1, 2, 0]
        report = run(SimConfig(n=6, w=8, track_indices=True), values, trace="full")
        loaded = [Element(v, i) for i, v in enumerate(values)]
        assert check_invariants(report.trace, loaded) == []

    def test_clean_registered_run_passes(self):
        values = [4, 1, 3, 5]
        report = run(
            SimConfig(n=4, w=8, variant="registered", track_indices=True),
            values,
            trace="full",
        )
        loaded = [Element(v, i) for i, v in enumerate(values)]
        assert check_invariants(report.trace, loaded) == []

    def test_corrupted_cell_is_named(self):
        report = run(SimConfig(n=4, w=8), [3, 1, 4, 2], trace="full")
        rec = report.trace[2]
        corrupted = dataclasses.replace(
            rec,
            per_cell={**rec.per_cell, 1: CellRegisters(None, Element(9), False, True)},
        )
        trace = list(report.trace)
        trace[2] = corrupted
        problems = check_invariants(trace)
        assert any("cell 1" in p and "cycle 2" in p for p in problems)

    def test_missing_element_breaks_conservation(self):
        values = [3, 1, 4, 2]
        report = run(SimConfig(n=4, w=8, track_indices=True), values, trace="full")
        rec = report.trace[1]
        emptied = dataclasses.replace(rec, per_cell={**rec.per_cell, 0: CellRegisters()})
        trace = list(report.trace)
        trace[1] = emptied
        loaded = [Element(v, i) for i, v in enumerate(values)]
        problems = check_invariants(trace, loaded)
        assert any("conservation" in p for p in problems)

    def test_unordered_emission_is_flagged(self):
        trace = [
            CycleTrace(0, {}, {}, True, True, Element(5), True),
            CycleTrace(1, {}, {}, True, True, Element(3), True),
        ]
        problems = check_invariants(trace)
        assert any("monotone" in p for p in problems)


class TestCompareVariants:
    def test_n4_hand_trace_totals(self):
        comparison = compare_variants(SimConfig(n=4, w=8), [9, 5, 12, 7])
        assert comparison.hourglass.total_cycles == 6  # 2 + 4
        assert comparison.registered.total_cycles == 9
        assert comparison.hourglass.total_cycles < comparison.registered.total_cycles

    def test_n2_both_work(self):
        comparison = compare_variants(SimConfig(n=2, w=8), [8, 3])
        assert len(comparison.hourglass.output) == 2
        assert len(comparison.registered.output) == 2
        assert comparison.hourglass.first_output_cycle == 1

    def test_large_tree_ratio_tends_to_half(self, fast_kernels):
        values = [(i * 2654435761) % 256 for i in range(1024)]
        comparison = compare_variants(SimConfig(n=1024, w=8), values)
        assert comparison.hourglass.total_cycles == 1034
        assert comparison.registered.total_cycles >= 2 * 1024
        assert 0.45 < comparison.cycle_ratio < 0.55

    def test_timelines_available_for_plotting(self):
        comparison = compare_variants(
            SimConfig(n=4, w=8), [4, 1, 3, 2], want_timelines=True
        )
        assert comparison.hourglass.trace is not None
        assert comparison.registered.trace is not None
