import pytest
from hypothesis import given
from hypothesis import strategies as st

from hourglass_sorter.core import (
    ConfigError,
    Element,
    SimConfig,
    SinkPattern,
    element_less,
    mix64,
)


class TestElementLess:
    def test_strict_order_agrees_under_both_policies(self):
        assert element_less(Element(3), Element(5), "left") is True
        assert element_less(Element(3), Element(5), "right") is True
        assert element_less(Element(5), Element(3), "left") is False

    def test_tie_prefers_left_under_left_policy(self):
        assert element_less(Element(4), Element(4), "left") is True

    def test_tie_falls_right_under_strict_policy(self):
        assert element_less(Element(4), Element(4), "right") is False

    def test_index_never_participates(self):
        assert element_less(Element(4, 9), Element(4, 0), "left") is True
        assert element_less(Element(4, 0), Element(4, 9), "right") is False

    @given(
        a=st.integers(min_value=0, max_value=255),
        b=st.integers(min_value=0, max_value=255),
        policy=st.sampled_from(["left", "right"]),
    )
    def test_antisymmetric_on_distinct_values(self, a, b, policy):
        if a == b:
            return
        assert element_less(Element(a), Element(b), policy) != element_less(
            Element(b), Element(a), policy
        )

    @given(v=st.integers(min_value=0, max_value=255))
    def test_equal_values_split_by_policy(self, v):
        assert element_less(Element(v), Element(v), "left")
        assert not element_less(Element(v), Element(v), "right")


class TestSimConfig:
    def test_defaults(self):
        cfg = SimConfig(n=8)
        assert cfg.w == 16
        assert cfg.variant == "hourglass"
        assert cfg.tie_break == "left"
        assert cfg.sink.kind == "always"
        assert cfg.target == 8

    def test_take_bounds(self):
        assert SimConfig(n=8, take=8).target == 8
        assert SimConfig(n=8, take=1).target == 1
        with pytest.raises(ConfigError):
            SimConfig(n=8, take=0)
        with pytest.raises(ConfigError):
            SimConfig(n=8, take=9)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n": 0},
            {"n": 4, "w": 0},
            {"n": 4, "variant": "bogus"},
            {"n": 4, "tie_break": "middle"},
            {"n": 4, "seed": -1},
        ],
    )
    def test_rejects_bad_fields(self, kwargs):
        with pytest.raises(ConfigError):
            SimConfig(**kwargs)


class TestSinkPattern:
    def test_parse(self):
        assert SinkPattern.parse("always") == SinkPattern.always()
        assert SinkPattern.parse("every:3") == SinkPattern.every(3)
        assert SinkPattern.parse("random:0.25") == SinkPattern.random(0.25)

    @pytest.mark.parametrize("text", ["sometimes", "every:x", "random:2", "every:0"])
    def test_parse_rejects_garbage(self, text):
        with pytest.raises(ConfigError):
            SinkPattern.parse(text)

    def test_always_and_every(self):
        assert all(SinkPattern.always().ready_at(c, 0) for c in range(10))
        every3 = SinkPattern.every(3)
        assert [every3.ready_at(c, 0) for c in range(7)] == [
            True, False, False, True, False, False, True,
        ]

    def test_random_is_a_pure_function_of_seed_and_cycle(self):
        sink = SinkPattern.random(0.5)
        stream = [sink.ready_at(c, 1234) for c in range(64)]
        assert stream == [sink.ready_at(c, 1234) for c in range(64)]
        assert stream != [sink.ready_at(c, 1235) for c in range(64)]

    def test_random_rate_is_roughly_p(self):
        sink = SinkPattern.random(0.25)
        hits = sum(sink.ready_at(c, 7) for c in range(4000))
        assert 800 <= hits <= 1200

    def test_degenerate_probabilities(self):
        assert all(SinkPattern.random(1.0).ready_at(c, 3) for c in range(100))
        assert not any(SinkPattern.random(0.0).ready_at(c, 3) for c in range(100))


def test_mix64_is_deterministic_and_64_bit():
    seen = {mix64(x) for x in range(1000)}
    assert len(seen) == 1000
    assert all(0 <= v < (1 << 64) for v in seen)
    assert mix64(42) == mix64(42)
