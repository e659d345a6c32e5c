"""Shared domain types for the sorting-tree simulators.

Elements, handshake port views, per-node register files, run configuration,
sink backpressure patterns, and the per-cycle trace record used by every
tree variant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Literal, Mapping, NamedTuple

if TYPE_CHECKING:
    from .cells import LeafState

TieBreak = Literal["left", "right"]
Variant = Literal["hourglass", "registered", "combinational"]

VARIANTS: tuple[str, ...] = ("hourglass", "registered", "combinational")
TIE_BREAKS: tuple[str, ...] = ("left", "right")


class ConfigError(ValueError):
    """Invalid simulation configuration."""


class InputError(ValueError):
    """Rejected input data: bad length, value range, or file contents."""


class StallError(RuntimeError):
    """Non-termination guard tripped: no forward progress for too long."""


class Element(NamedTuple):
    """A sortable payload: unsigned value plus optional original position."""

    value: int
    index: int | None = None


def element_less(a: Element, b: Element, tie_break: TieBreak = "left") -> bool:
    """Return True when the left operand ``a`` wins the comparison.

    With tie_break="left" equal values favour the left operand, which is
    what makes the tree sort stably.  With tie_break="right" the comparison
    is strict and ties fall through to the right side.  Indices never
    participate in the ordering.
    """
    if tie_break == "left":
        return a.value <= b.value
    return a.value < b.value


class PortView(NamedTuple):
    """Snapshot of one handshake interface within a cycle.

    ``d`` is meaningful only while ``v`` (producer valid) is set; ``r`` is
    the consumer-side ready.  A transaction completes in a cycle iff both
    ``v`` and ``r`` are observed high in that cycle.
    """

    d: Element | None
    v: bool
    r: bool = False


class CellRegisters(NamedTuple):
    """The four storage elements of a double-buffered cell.

    Register zero drives the output; register one is the overflow slot that
    lets the cell accept and emit in the same cycle.  At every clock
    boundary v1 implies v0, and when both are valid d0 <= d1.
    """

    d0: Element | None = None
    d1: Element | None = None
    v0: bool = False
    v1: bool = False


class RegisteredNodeState(NamedTuple):
    """Single output register plus exhausted flag of a registered comparator.

    ``e_out`` marks that the whole subtree above is drained; it is sticky
    and mutually exclusive with ``v_out``.
    """

    d_out: Element | None = None
    v_out: bool = False
    e_out: bool = False


# splitmix64 finalizer; shared by the reference engine and the compiled
# kernels so both observe bit-identical sink readiness streams.
_M64 = (1 << 64) - 1
MIX_GAMMA = 0x9E3779B97F4A7C15
MIX_STREAM = 0xD1B54A32D192ED03


def mix64(x: int) -> int:
    """Map a 64-bit integer to a well-scrambled 64-bit integer."""
    z = (x + MIX_GAMMA) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class SinkPattern:
    """Backpressure behaviour of the consumer attached to the tree root.

    kind "always": ready every cycle.  kind "every": ready on cycles that
    are multiples of ``period``.  kind "random": ready with probability
    ``p`` per cycle, drawn from a counter-based stream so readiness is a
    pure function of (seed, cycle).
    """

    kind: Literal["always", "every", "random"] = "always"
    period: int = 1
    p: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("always", "every", "random"):
            raise ConfigError(f"unknown sink kind {self.kind!r}")
        if self.period < 1:
            raise ConfigError("sink period must be >= 1")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("sink probability must be in [0, 1]")

    @classmethod
    def always(cls) -> "SinkPattern":
        return cls("always")

    @classmethod
    def every(cls, period: int) -> "SinkPattern":
        return cls("every", period=period)

    @classmethod
    def random(cls, p: float) -> "SinkPattern":
        return cls("random", p=p)

    @classmethod
    def parse(cls, text: str) -> "SinkPattern":
        """Parse CLI sink descriptors: always | every:K | random:P."""
        if text == "always":
            return cls.always()
        head, sep, arg = text.partition(":")
        if sep:
            try:
                if head == "every":
                    return cls.every(int(arg))
                if head == "random":
                    return cls.random(float(arg))
            except ValueError as exc:
                raise ConfigError(f"bad sink descriptor {text!r}") from exc
        raise ConfigError(f"bad sink descriptor {text!r}")

    @property
    def threshold(self) -> int:
        """53-bit acceptance threshold for the random pattern."""
        return int(self.p * (1 << 53))

    def ready_at(self, cycle: int, seed: int) -> bool:
        if self.kind == "always":
            return True
        if self.kind == "every":
            return cycle % self.period == 0
        draw = mix64((seed & _M64) ^ ((cycle * MIX_STREAM) & _M64))
        return (draw >> 11) < self.threshold


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to reproduce one run bit for bit."""

    n: int
    w: int = 16
    variant: Variant = "hourglass"
    tie_break: TieBreak = "left"
    take: int | None = None
    sink: SinkPattern = field(default_factory=SinkPattern)
    seed: int = 0
    track_indices: bool = False

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.w < 1:
            raise ConfigError("w must be >= 1")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.tie_break not in TIE_BREAKS:
            raise ConfigError(f"unknown tie_break {self.tie_break!r}")
        if self.take is not None and not 1 <= self.take <= self.n:
            raise ConfigError("take must satisfy 1 <= take <= n")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    @property
    def target(self) -> int:
        """Number of root transactions a run must complete."""
        return self.take if self.take is not None else self.n


@dataclass(frozen=True)
class CycleTrace:
    """One simulated cycle as observed at its starting clock boundary.

    ``per_cell`` and ``per_leaf`` hold the cycle-start register snapshots
    (empty mappings unless a full trace was requested).  ``emitted`` is
    present iff ``root_transaction`` is true.
    """

    cycle: int
    per_cell: Mapping[int, CellRegisters | RegisteredNodeState]
    per_leaf: Mapping[int, "LeafState"]
    root_valid: bool
    root_transaction: bool
    emitted: Element | None
    sink_ready: bool
