"""The single-sample game and the max-sample threshold rule.

Every value the gambler sees carries a private U[0,1] tag. Values are compared
lexicographically on ``(value, tag)``, which gives a strict total order as long
as no two entries share both value and tag. Comparisons never fall back to
plain value ordering, including the real-vs-threshold test.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Sequence

import numpy as np

from .distributions import ValidatedSpec, quantile


class Phase(str, Enum):
    SAMPLE = "sample"
    REAL = "real"


class Ordering(IntEnum):
    LESS = -1
    GREATER = 1


class TieError(ValueError):
    """Two entries share both value and tag, so they cannot be ordered."""


@dataclass(frozen=True)
class TaggedValue:
    value: float
    tag: float
    dist_index: int
    phase: Phase = Phase.REAL

    @property
    def key(self) -> tuple:
        return (self.value, self.tag)


def compare(a: TaggedValue, b: TaggedValue) -> Ordering:
    ka, kb = a.key, b.key
    if ka == kb:
        raise TieError(f"cannot order {a} and {b}: identical (value, tag)")
    return Ordering.GREATER if ka > kb else Ordering.LESS


def exceeds(a: TaggedValue, b: TaggedValue) -> bool:
    return compare(a, b) is Ordering.GREATER


def tagged_max(values: Sequence[TaggedValue]) -> TaggedValue:
    best = values[0]
    for v in values[1:]:
        if exceeds(v, best):
            best = v
    return best


def sort_ascending(values: Sequence[TaggedValue]) -> list[TaggedValue]:
    """Sort under :func:`compare`; raises :class:`TieError` on a forbidden tie."""
    out = sorted(values, key=lambda v: v.key)
    for lo, hi in zip(out, out[1:]):
        compare(hi, lo)
    return out


@dataclass(frozen=True)
class PhaseSplit:
    samples: tuple[TaggedValue, ...]
    reals: tuple[TaggedValue, ...]

    def __post_init__(self):
        n = len(self.samples)
        if n == 0 or len(self.reals) != n:
            raise ValueError("need one sample and one real per distribution")
        for phase, seq in ((Phase.SAMPLE, self.samples), (Phase.REAL, self.reals)):
            if [v.dist_index for v in seq] != list(range(n)):
                raise ValueError(f"{phase.value} entries must be indexed 0..n-1 in order")
            if any(v.phase is not phase for v in seq):
                raise ValueError(f"{phase.value} entries carry the wrong phase")

    @property
    def n(self) -> int:
        return len(self.samples)

    @classmethod
    def from_values(cls, samples, reals, sample_tags=None, real_tags=None) -> "PhaseSplit":
        """Convenience constructor from plain sequences (tags default to distinct rationals)."""
        n = len(samples)
        if sample_tags is None:
            sample_tags = [(2 * i + 1) / (4 * n) for i in range(n)]
        if real_tags is None:
            real_tags = [(2 * i + 2) / (4 * n) for i in range(n)]
        return cls(
            tuple(TaggedValue(v, t, i, Phase.SAMPLE) for i, (v, t) in enumerate(zip(samples, sample_tags))),
            tuple(TaggedValue(v, t, i, Phase.REAL) for i, (v, t) in enumerate(zip(reals, real_tags))),
        )


class OrderKind(str, Enum):
    INDEXED = "indexed"
    EXPLICIT = "explicit_permutation"
    ALMIGHTY = "almighty_worst_case"


@dataclass(frozen=True)
class OrderPolicy:
    kind: OrderKind
    perm: tuple[int, ...] | None = None

    @classmethod
    def indexed(cls) -> "OrderPolicy":
        return cls(OrderKind.INDEXED)

    @classmethod
    def explicit(cls, perm: Sequence[int]) -> "OrderPolicy":
        perm = tuple(int(i) for i in perm)
        if sorted(perm) != list(range(len(perm))):
            raise ValueError(f"not a permutation of 0..{len(perm) - 1}: {perm}")
        return cls(OrderKind.EXPLICIT, perm)

    @classmethod
    def almighty(cls) -> "OrderPolicy":
        return cls(OrderKind.ALMIGHTY)

    @classmethod
    def from_name(cls, name: str) -> "OrderPolicy":
        kind = OrderKind(name)
        if kind is OrderKind.EXPLICIT:
            raise ValueError("explicit_permutation needs a permutation; use OrderPolicy.explicit")
        return cls(kind)


@dataclass(frozen=True)
class RunOutcome:
    accepted: TaggedValue | None
    accepted_position: int | None
    threshold: TaggedValue

    @property
    def payoff(self):
        return 0 if self.accepted is None else self.accepted.value


def draw_phase_split(specs: Sequence[ValidatedSpec], rng: np.random.Generator) -> PhaseSplit:
    """2n independent draws with fresh tags.

    Consumes one ``rng.random((4, n))`` block laid out as rows
    (sample uniform, sample tag, real uniform, real tag); the batch simulator
    uses the same layout so both paths agree draw for draw.
    """
    n = len(specs)
    if n < 1:
        raise ValueError("need at least one distribution")
    u = rng.random((4, n))
    samples, reals = [], []
    for i, spec in enumerate(specs):
        samples.append(TaggedValue(quantile(spec, u[0, i]), float(u[1, i]), i, Phase.SAMPLE))
        reals.append(TaggedValue(quantile(spec, u[2, i]), float(u[3, i]), i, Phase.REAL))
    return PhaseSplit(tuple(samples), tuple(reals))


def pick_threshold(split: PhaseSplit) -> TaggedValue:
    return tagged_max(split.samples)


def arrival_order(
    split: PhaseSplit, policy: OrderPolicy, threshold: TaggedValue | None = None
) -> tuple[int, ...]:
    """Order in which the reals are revealed.

    The almighty adversary shows reals smallest first, so the rule stops at
    the smallest real above the threshold. ``threshold`` is accepted for
    adversaries that would condition on it; the worst case does not need it.
    """
    n = split.n
    if policy.kind is OrderKind.INDEXED:
        return tuple(range(n))
    if policy.kind is OrderKind.EXPLICIT:
        if policy.perm is None or sorted(policy.perm) != list(range(n)):
            raise ValueError(f"permutation {policy.perm} does not match n={n}")
        return policy.perm
    return tuple(v.dist_index for v in sort_ascending(split.reals))


def run_threshold_rule(
    split: PhaseSplit, threshold: TaggedValue, order: Sequence[int]
) -> RunOutcome:
    for pos, i in enumerate(order):
        real = split.reals[i]
        if exceeds(real, threshold):
            return RunOutcome(real, pos, threshold)
    return RunOutcome(None, None, threshold)


def run_scaled_threshold_rule(split: PhaseSplit, c, order: Sequence[int]) -> RunOutcome:
    """Threshold ``c * max sample``; the threshold keeps the max sample's tag."""
    if not c > 0:
        raise ValueError(f"scale c must be positive, got {c!r}")
    top = pick_threshold(split)
    scaled = TaggedValue(c * top.value, top.tag, top.dist_index, Phase.SAMPLE)
    return run_threshold_rule(split, scaled, order)


def play(split: PhaseSplit, policy: OrderPolicy, c=1) -> RunOutcome:
    """Threshold, order and scan in one call."""
    threshold = pick_threshold(split)
    order = arrival_order(split, policy, threshold)
    if c == 1:
        return run_threshold_rule(split, threshold, order)
    return run_scaled_threshold_rule(split, c, order)
