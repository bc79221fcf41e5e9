"""Hard instances for threshold rules and the exact gaps they produce."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .core_game import OrderPolicy
from .distributions import ValidatedSpec, constant, two_point
from .exact_analysis import exact_finite_support_performance


@dataclass(frozen=True)
class Fact:
    value: Fraction
    note: str


@dataclass(frozen=True)
class NamedInstance:
    name: str
    parameter: Fraction
    specs: tuple[ValidatedSpec, ...]
    analytic_facts: dict[str, Fact] = field(default_factory=dict, hash=False)


def ksg_instance(eps) -> NamedInstance:
    """X1 = 1 surely, X2 = 1/eps with probability eps and 0 otherwise."""
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    facts = {
        "prophet": Fact(2 - eps, "E[max] = eps * (1/eps) + (1 - eps) * 1"),
        "full_knowledge_gambler_upper": Fact(
            Fraction(1), "any stopping rule earns 1 from X1 or E[X2] = 1 from X2"
        ),
        "single_sample_alg": Fact(
            1 - eps / 2, "max-sample threshold with tag tie-breaks, worst-case order"
        ),
    }
    specs = (constant(1, label="X1"), two_point(1 / eps, eps, 0, label="X2"))
    return NamedInstance("ksg", eps, specs, facts)


def scaled_threshold_gap_instance(n: int) -> NamedInstance:
    """X1 = 1 surely, X2 = 2^n with probability 1/n and 0 otherwise."""
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n}")
    n = int(n)
    p = Fraction(1, n)
    facts = {
        "prophet": Fact(Fraction(2**n, n) + 1 - p, "E[max] = 2^n/n + (1 - 1/n)"),
    }
    specs = (constant(1, label="X1"), two_point(2**n, p, 0, label="X2"))
    return NamedInstance("scaled_gap", Fraction(n), specs, facts)


def constant_instance(value=1) -> NamedInstance:
    v = Fraction(value)
    return NamedInstance("constant", v, (constant(v),), {"prophet": Fact(v, "point mass")})


@dataclass(frozen=True)
class GapReport:
    instance: str
    parameter: Fraction
    c: Fraction
    expected_alg: Fraction
    expected_max: Fraction

    @property
    def ratio(self) -> Fraction:
        return self.expected_alg / self.expected_max

    CSV_HEADER = "instance,parameter,c,ratio_num,ratio_den,ratio_float"

    def csv_row(self) -> str:
        r = self.ratio
        return f"{self.instance},{self.parameter},{self.c},{r.numerator},{r.denominator},{float(r)!r}"


def evaluate_counterexample(
    instance: NamedInstance, c=1, adversary: OrderPolicy | None = None
) -> GapReport:
    perf = exact_finite_support_performance(instance.specs, c, adversary or OrderPolicy.almighty())
    return GapReport(instance.name, instance.parameter, Fraction(c), perf.expected_alg, perf.expected_max_reals)


def sweep_scaled_gap(ns: Iterable[int], c=Fraction(1, 2)) -> list[GapReport]:
    return [evaluate_counterexample(scaled_threshold_gap_instance(n), c) for n in ns]


def sweep_c(instance: NamedInstance, cs: Sequence) -> list[GapReport]:
    return [evaluate_counterexample(instance, c) for c in cs]


def facts_hold(instance: NamedInstance) -> dict[str, bool]:
    """Compare the enumerable analytic facts with exact enumeration."""
    perf = exact_finite_support_performance(instance.specs, 1, OrderPolicy.almighty())
    out = {}
    for key, fact in instance.analytic_facts.items():
        if key == "prophet":
            out[key] = perf.expected_max_reals == fact.value
        elif key == "single_sample_alg":
            out[key] = perf.expected_alg == fact.value
        elif key.endswith("_upper"):
            out[key] = perf.expected_alg <= fact.value
    return out
