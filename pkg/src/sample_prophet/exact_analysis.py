"""Exact analysis over the coin-flip assignment of pre-drawn value pairs.

Each distribution ``i`` contributes two fixed draws. A fair coin decides
which one becomes the sample and which the real, independently per ``i``.
The closed forms here give, as exact dyadic rationals, the expected maximum
real and the expected payoff of the threshold rule when the reals arrive
smallest first. :func:`brute_force_over_assignments` enumerates all ``2^n``
coin vectors and serves as the independent oracle for both.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from . import core_game
from .core_game import OrderKind, OrderPolicy, Phase, PhaseSplit, TaggedValue
from .distributions import ValidatedSpec, support

HALF = Fraction(1, 2)
ENUMERATION_CAP = 20
JOINT_SUPPORT_CAP = 10**7
TIE_ORDER_CAP = 10**6


class CapExceeded(ValueError):
    """An enumeration would exceed its configured size cap."""


class Entry(NamedTuple):
    value: Fraction
    tag: Fraction
    dist_index: int
    draw: int  # 0 for v_i^1, 1 for v_i^2

    @property
    def key(self):
        return (self.value, self.tag)

    @property
    def ident(self) -> tuple[int, int]:
        return (self.dist_index, self.draw)


@dataclass(frozen=True)
class DrawTable:
    draws: tuple[tuple[Fraction, Fraction], ...]
    tags: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        if not self.draws or len(self.draws) != len(self.tags):
            raise ValueError("draws and tags must be non-empty and of equal length")
        keys = [e.key for e in self.entries()]
        if any(e.value < 0 for e in self.entries()):
            raise ValueError("draw values must be non-negative")
        if len(set(keys)) != len(keys):
            raise ValueError("(value, tag) pairs must be pairwise distinct")

    @property
    def n(self) -> int:
        return len(self.draws)

    @classmethod
    def from_values(cls, draws: Sequence[tuple], tags: Sequence[tuple] | None = None) -> "DrawTable":
        n = len(draws)
        fdraws = tuple((Fraction(a), Fraction(b)) for a, b in draws)
        if tags is None:
            # distinct by construction, increasing with entry position
            tags = [(Fraction(2 * i + 1, 2 * n + 1), Fraction(2 * i + 2, 2 * n + 1)) for i in range(n)]
        ftags = tuple((Fraction(a), Fraction(b)) for a, b in tags)
        return cls(fdraws, ftags)

    def entries(self) -> list[Entry]:
        return [
            Entry(self.draws[i][k], self.tags[i][k], i, k)
            for i in range(self.n)
            for k in (0, 1)
        ]


def random_table(
    n: int, rng: np.random.Generator, max_num: int = 20, max_den: int = 8
) -> DrawTable:
    """Random rational table; small numerators/denominators make value ties common."""
    nums = rng.integers(0, max_num + 1, size=2 * n)
    dens = rng.integers(1, max_den + 1, size=2 * n)
    ranks = rng.permutation(2 * n) + 1
    vals = [Fraction(int(a), int(b)) for a, b in zip(nums, dens)]
    tags = [Fraction(int(r), 2 * n + 1) for r in ranks]
    return DrawTable(
        tuple((vals[2 * i], vals[2 * i + 1]) for i in range(n)),
        tuple((tags[2 * i], tags[2 * i + 1]) for i in range(n)),
    )


@dataclass(frozen=True)
class RepeatStructure:
    sorted: tuple[Entry, ...]  # descending
    repeat_value: Entry
    repeat_pair: Entry
    T: tuple[Entry, ...]  # descending, strictly above repeat_value
    above_counts: tuple[int, ...]  # |T_i^k| for each member of T, aligned with T

    @property
    def last_in_T(self) -> Entry:
        return self.T[-1]


def find_repeat_structure(table: DrawTable) -> RepeatStructure:
    ordered = sorted(table.entries(), key=lambda e: e.key, reverse=True)
    seen: dict[int, Entry] = {}
    for pos, e in enumerate(ordered):
        if e.dist_index in seen:
            T = tuple(ordered[:pos])
            # members of T are sorted descending, so |T_i^k| is the position
            return RepeatStructure(tuple(ordered), e, seen[e.dist_index], T, tuple(range(len(T))))
        seen[e.dist_index] = e
    raise AssertionError("unreachable: 2n entries over n indices must repeat")


def closed_form_expected_max(rs: RepeatStructure) -> Fraction:
    total = sum((HALF ** (c + 1) * e.value for e, c in zip(rs.T, rs.above_counts)), Fraction(0))
    return total + HALF ** len(rs.T) * rs.repeat_value.value


def closed_form_alg_value(rs: RepeatStructure) -> Fraction:
    body = zip(rs.T[:-1], rs.above_counts[:-1])
    total = sum((HALF ** (c + 2) * e.value for e, c in body), Fraction(0))
    return total + HALF ** len(rs.T) * rs.last_in_T.value


@dataclass(frozen=True)
class ProbabilityProfile:
    """Per-entry probabilities keyed by ``(dist_index, draw)``.

    ``Y``: probability of being the maximum real. ``Z``: probability of being
    selected when reals arrive smallest first.
    """

    Y: dict[tuple[int, int], Fraction]
    Z: dict[tuple[int, int], Fraction]


def selection_probabilities(table: DrawTable, rs: RepeatStructure | None = None) -> ProbabilityProfile:
    rs = rs or find_repeat_structure(table)
    Y = {e.ident: Fraction(0) for e in table.entries()}
    Z = dict(Y)
    for e, c in zip(rs.T, rs.above_counts):
        Y[e.ident] = HALF ** (c + 1)
        Z[e.ident] = HALF ** (c + 2)
    Y[rs.repeat_value.ident] = HALF ** len(rs.T)
    Z[rs.last_in_T.ident] = HALF ** len(rs.T)
    return ProbabilityProfile(Y, Z)


@dataclass(frozen=True)
class OracleResult:
    expected_max: Fraction
    expected_worst_case_alg: Fraction
    Y: dict[tuple[int, int], Fraction]
    Z: dict[tuple[int, int], Fraction]


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise CapExceeded(f"n={n} exceeds the enumeration cap of {cap}")


def brute_force_over_assignments(table: DrawTable, cap: int = ENUMERATION_CAP) -> OracleResult:
    """Enumerate all 2^n coin vectors with integer tallies.

    Entries are replaced by their descending rank, so the whole enumeration
    runs on small integers: the maximum real is the real of lowest rank, the
    threshold the sample of lowest rank, and the worst-case pick is the real
    of highest rank still ranked above the threshold.
    """
    n = table.n
    _check_cap(n, cap)
    entries = table.entries()
    order = sorted(range(2 * n), key=lambda j: entries[j].key, reverse=True)
    rank = np.empty(2 * n, dtype=np.int64)
    rank[order] = np.arange(2 * n)
    by_rank = np.asarray(order, dtype=np.int64)

    coins = (np.arange(1 << n, dtype=np.int64)[:, None] >> np.arange(n)) & 1
    base = 2 * np.arange(n, dtype=np.int64)
    real_rank = rank[base + 1 - coins]  # coin 0: draw 1 is the sample, draw 2 the real
    sample_rank = rank[base + coins]

    top_real = by_rank[real_rank.min(axis=1)]
    thr = sample_rank.min(axis=1, keepdims=True)
    above = np.where(real_rank < thr, real_rank, -1).max(axis=1)
    chosen = by_rank[above[above >= 0]]

    y_counts = np.bincount(top_real, minlength=2 * n)
    z_counts = np.bincount(chosen, minlength=2 * n)
    return _oracle_from_counts(entries, y_counts.tolist(), z_counts.tolist(), n)


def brute_force_via_game(table: DrawTable, cap: int = ENUMERATION_CAP) -> OracleResult:
    """Same enumeration, played through :mod:`core_game` one split at a time.

    Slow; used to cross-check the rank-based enumeration.
    """
    n = table.n
    _check_cap(n, cap)
    entries = table.entries()
    y_counts = [0] * (2 * n)
    z_counts = [0] * (2 * n)
    policy = OrderPolicy.almighty()
    for coins in itertools.product((0, 1), repeat=n):
        samples, reals = [], []
        for i, c in enumerate(coins):
            s, r = entries[2 * i + c], entries[2 * i + 1 - c]
            samples.append(TaggedValue(s.value, s.tag, i, Phase.SAMPLE))
            reals.append(TaggedValue(r.value, r.tag, i, Phase.REAL))
        split = PhaseSplit(tuple(samples), tuple(reals))
        top = core_game.tagged_max(split.reals)
        y_counts[2 * top.dist_index + 1 - coins[top.dist_index]] += 1
        out = core_game.play(split, policy)
        if out.accepted is not None:
            i = out.accepted.dist_index
            z_counts[2 * i + 1 - coins[i]] += 1
    return _oracle_from_counts(entries, y_counts, z_counts, n)


def _oracle_from_counts(entries, y_counts, z_counts, n) -> OracleResult:
    total = 1 << n
    Y = {e.ident: Fraction(int(c), total) for e, c in zip(entries, y_counts)}
    Z = {e.ident: Fraction(int(c), total) for e, c in zip(entries, z_counts)}
    emax = Fraction(sum(int(c) * e.value for e, c in zip(entries, y_counts)), total)
    ealg = Fraction(sum(int(c) * e.value for e, c in zip(entries, z_counts)), total)
    return OracleResult(emax, ealg, Y, Z)


def is_dyadic_unit(x: Fraction) -> bool:
    """0 or a power of 1/2."""
    return x == 0 or (x.numerator == 1 and x.denominator & (x.denominator - 1) == 0)


@dataclass
class VerificationReport:
    table: DrawTable
    expected_max: Fraction
    alg_value: Fraction
    oracle_expected_max: Fraction
    oracle_alg_value: Fraction
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def verify_instance(table: DrawTable, cap: int = ENUMERATION_CAP) -> VerificationReport:
    rs = find_repeat_structure(table)
    emax = closed_form_expected_max(rs)
    alg = closed_form_alg_value(rs)
    prof = selection_probabilities(table, rs)
    oracle = brute_force_over_assignments(table, cap)
    checks = {
        "expected_max_matches_oracle": emax == oracle.expected_max,
        "alg_value_matches_oracle": alg == oracle.expected_worst_case_alg,
        "two_approximation": 2 * alg >= emax,
        "Y_matches_oracle": prof.Y == oracle.Y,
        "Z_matches_oracle": prof.Z == oracle.Z,
        "Y_sums_to_one": sum(prof.Y.values()) == 1,
        "Z_sum_at_most_one": sum(prof.Z.values()) <= 1,
        "dyadic": all(map(is_dyadic_unit, [*prof.Y.values(), *prof.Z.values()])),
    }
    return VerificationReport(table, emax, alg, oracle.expected_max, oracle.expected_worst_case_alg, checks)


@dataclass(frozen=True)
class ExactPerformance:
    expected_alg: Fraction
    expected_max_reals: Fraction

    @property
    def ratio(self) -> Fraction:
        return self.expected_alg / self.expected_max_reals


def _tie_orderings(values: Sequence[Fraction], joint: bool):
    """Yield (weight, tags) over uniformly random strict orders of the tags.

    With ``joint`` false only the relative order inside each group of equal
    values is enumerated, which is all that matters when every comparison is
    between entries of equal value or of different value. ``joint`` enumerates
    the order of all tags, needed when a scaled threshold borrows a tag from
    one value group and meets a real from another.
    """
    m = len(values)
    if joint:
        count = math.factorial(m)
        if count > TIE_ORDER_CAP:
            raise CapExceeded(f"{count} tag orderings exceed the cap of {TIE_ORDER_CAP}")
        w = Fraction(1, count)
        for perm in itertools.permutations(range(m)):
            yield w, [Fraction(p + 1, m + 1) for p in perm]
        return
    groups: dict[Fraction, list[int]] = {}
    for j, v in enumerate(values):
        groups.setdefault(v, []).append(j)
    tied = [g for g in groups.values() if len(g) > 1]
    count = math.prod(math.factorial(len(g)) for g in tied)
    if count > TIE_ORDER_CAP:
        raise CapExceeded(f"{count} tie orderings exceed the cap of {TIE_ORDER_CAP}")
    w = Fraction(1, count)
    base = [Fraction(1, 2)] * m
    for combo in itertools.product(*(itertools.permutations(range(len(g))) for g in tied)):
        tags = list(base)
        for g, perm in zip(tied, combo):
            for j, p in zip(g, perm):
                tags[j] = Fraction(p + 1, len(g) + 1)
        yield w, tags


def exact_finite_support_performance(
    specs: Sequence[ValidatedSpec],
    c=1,
    adversary: OrderPolicy | None = None,
    cap: int = JOINT_SUPPORT_CAP,
) -> ExactPerformance:
    """Exact E[ALG] and E[max of reals] over every joint outcome.

    Equal values are ordered uniformly at random, which is the exact law of
    comparing independent continuous tags.
    """
    if not specs:
        raise ValueError("need at least one distribution")
    adversary = adversary or OrderPolicy.almighty()
    c = Fraction(c)
    if c <= 0:
        raise ValueError("scale c must be positive")
    supports = [support(s) for s in specs]
    size = math.prod(len(s) ** 2 for s in supports)
    if size > cap:
        raise CapExceeded(f"joint support of {size} outcomes exceeds the cap of {cap}")
    n = len(specs)
    e_alg = Fraction(0)
    e_max = Fraction(0)
    for outcome in itertools.product(*(itertools.product(s, s) for s in supports)):
        prob = math.prod((a.mass * b.mass for a, b in outcome), start=Fraction(1))
        s_vals = [a.value for a, _ in outcome]
        r_vals = [b.value for _, b in outcome]
        e_max += prob * max(r_vals)
        values = s_vals + r_vals
        joint = c != 1 and any(c * s in r_vals for s in s_vals)
        payoff = Fraction(0)
        for w, tags in _tie_orderings(values, joint):
            split = PhaseSplit(
                tuple(TaggedValue(s_vals[i], tags[i], i, Phase.SAMPLE) for i in range(n)),
                tuple(TaggedValue(r_vals[i], tags[n + i], i, Phase.REAL) for i in range(n)),
            )
            payoff += w * core_game.play(split, adversary, c).payoff
        e_alg += prob * payoff
    return ExactPerformance(e_alg, e_max)


def assignment_averaged_performance(
    specs: Sequence[ValidatedSpec], cap: int = JOINT_SUPPORT_CAP
) -> ExactPerformance:
    """E[ALG] and E[max real] via the closed forms, averaged over draw pairs.

    Enumerates both draws of every distribution, breaks value ties uniformly,
    and averages :func:`closed_form_alg_value` and
    :func:`closed_form_expected_max` over the resulting tables. This never
    plays the game, so agreement with :func:`exact_finite_support_performance`
    (worst-case order, ``c = 1``) checks that averaging over coin flips
    reproduces the original game.
    """
    if not specs:
        raise ValueError("need at least one distribution")
    supports = [support(s) for s in specs]
    size = math.prod(len(s) ** 2 for s in supports)
    if size > cap:
        raise CapExceeded(f"joint support of {size} outcomes exceeds the cap of {cap}")
    n = len(specs)
    e_alg = Fraction(0)
    e_max = Fraction(0)
    for outcome in itertools.product(*(itertools.product(s, s) for s in supports)):
        prob = math.prod((a.mass * b.mass for a, b in outcome), start=Fraction(1))
        values = [pt.value for pair in outcome for pt in pair]
        for w, tags in _tie_orderings(values, joint=False):
            table = DrawTable(
                tuple((values[2 * i], values[2 * i + 1]) for i in range(n)),
                tuple((tags[2 * i], tags[2 * i + 1]) for i in range(n)),
            )
            rs = find_repeat_structure(table)
            e_alg += prob * w * closed_form_alg_value(rs)
            e_max += prob * w * closed_form_expected_max(rs)
    return ExactPerformance(e_alg, e_max)
