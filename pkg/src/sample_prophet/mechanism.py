"""Posted-price mechanism induced by the max-sample threshold rule.

Bidders arrive one at a time and are offered the largest sample as a
take-it-or-leave-it price. The benchmark for revenue is a second-price
auction with the monopoly reserve, which is revenue-optimal for i.i.d.
regular bidders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import core_game
from .core_game import OrderKind, OrderPolicy, Phase, PhaseSplit, TaggedValue
from .distributions import SpecError, ValidatedSpec, draw_values, monopoly_reserve
from .simulation import play_batch, split_block
from .streams import Estimate, estimate, ratio_estimate, uniform_blocks

WELFARE_BOUND = 0.5
REGULAR_REVENUE_BOUND = 0.25
MHR_REVENUE_BOUND = 1.0 / (4.0 * math.e)


@dataclass(frozen=True)
class BidderProfile:
    spec: ValidatedSpec
    sample: TaggedValue
    value: TaggedValue


@dataclass(frozen=True)
class AuctionOutcome:
    winner: int | None
    price: float
    welfare: float
    revenue: float


NO_SALE = AuctionOutcome(None, 0, 0, 0)


def _as_split(bidders: Sequence[BidderProfile]) -> PhaseSplit:
    return PhaseSplit(
        tuple(TaggedValue(b.sample.value, b.sample.tag, i, Phase.SAMPLE) for i, b in enumerate(bidders)),
        tuple(TaggedValue(b.value.value, b.value.tag, i, Phase.REAL) for i, b in enumerate(bidders)),
    )


def run_opm(bidders: Sequence[BidderProfile], order: Sequence[int]) -> AuctionOutcome:
    if not bidders:
        raise ValueError("need at least one bidder")
    split = _as_split(bidders)
    price = core_game.pick_threshold(split)
    out = core_game.run_threshold_rule(split, price, order)
    if out.accepted is None:
        return NO_SALE
    return AuctionOutcome(out.accepted.dist_index, price.value, out.accepted.value, price.value)


def apply_lazy_sample_reserves(
    outcome: AuctionOutcome, bidders: Sequence[BidderProfile]
) -> AuctionOutcome:
    """Drop a winner below their own sample, else charge max(price, own sample)."""
    if outcome.winner is None:
        return outcome
    if not 0 <= outcome.winner < len(bidders):
        raise ValueError(f"winner {outcome.winner} is not one of {len(bidders)} bidders")
    b = bidders[outcome.winner]
    if outcome.welfare != b.value.value:
        raise ValueError("outcome welfare does not match the winner's value")
    own = TaggedValue(b.sample.value, b.sample.tag, outcome.winner, Phase.SAMPLE)
    if not core_game.exceeds(b.value, own):
        return NO_SALE
    price = max(outcome.price, own.value)
    return AuctionOutcome(outcome.winner, price, outcome.welfare, price)


def second_price_revenue(values: np.ndarray, reserve: float) -> np.ndarray:
    """Per-row revenue of a second-price auction with a common reserve."""
    if values.shape[1] == 1:
        second = np.zeros(values.shape[0])
        top = values[:, 0]
    else:
        part = np.partition(values, values.shape[1] - 2, axis=1)
        top, second = part[:, -1], part[:, -2]
    return np.where(top >= reserve, np.maximum(second, reserve), 0.0)


def _require_regular(spec: ValidatedSpec) -> None:
    if spec.is_regular is not True:
        raise SpecError(f"{spec.family.value} is not flagged regular; revenue benchmark undefined")


def myerson_benchmark_revenue(spec: ValidatedSpec, n: int, trials: int, seed: int) -> Estimate:
    _require_regular(spec)
    if n < 1:
        raise ValueError("need at least one bidder")
    r = monopoly_reserve(spec)
    specs = [spec] * n
    rev = [second_price_revenue(draw_values(specs, u), r) for u in uniform_blocks(seed, trials, (n,))]
    return estimate(np.concatenate(rev))


@dataclass(frozen=True)
class RatioReport:
    family: str
    label: str
    n: int
    trials: int
    seed: int
    adversarial_order: bool
    opm_welfare: Estimate
    opm_revenue: Estimate
    max_welfare: Estimate
    myerson_revenue: Estimate | None
    welfare_ratio: Estimate
    revenue_ratio: Estimate | None
    passes: dict[str, bool]

    def to_json(self) -> dict:
        bench = {
            "max_welfare": self.max_welfare.to_json(),
            "opm_welfare": self.opm_welfare.to_json(),
            "opm_revenue": self.opm_revenue.to_json(),
            "myerson_revenue": self.myerson_revenue.to_json() if self.myerson_revenue else None,
        }
        return {
            "family": self.family,
            "label": self.label,
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "adversarial_order": self.adversarial_order,
            "welfare_ratio": self.welfare_ratio.to_json(),
            "revenue_ratio": self.revenue_ratio.to_json() if self.revenue_ratio else None,
            "benchmarks": bench,
            "pass": dict(self.passes),
        }

    CSV_HEADER = (
        "family,label,n,trials,seed,adversarial_order,welfare_ratio,welfare_stderr,"
        "revenue_ratio,revenue_stderr,pass_welfare,pass_revenue_regular,pass_revenue_mhr"
    )

    def csv_row(self) -> str:
        rr = self.revenue_ratio
        cells = [
            self.family, self.label, self.n, self.trials, self.seed, self.adversarial_order,
            repr(self.welfare_ratio.mean), repr(self.welfare_ratio.stderr),
            repr(rr.mean) if rr else "", repr(rr.stderr) if rr else "",
            self.passes.get("welfare_half", ""),
            self.passes.get("revenue_quarter_regular", ""),
            self.passes.get("revenue_quarter_e_mhr", ""),
        ]
        return ",".join(str(c) for c in cells)


def ratio_experiment(
    spec: ValidatedSpec,
    n: int,
    trials: int,
    seed: int,
    adversarial_order: bool = True,
    revenue: bool = True,
    k: float = 3.0,
) -> RatioReport:
    """OPM welfare and revenue against E[max] and the Myerson benchmark.

    Benchmarks are evaluated on the same bidder values as the OPM, so the
    ratios come from paired trials. Pass flags allow ``k`` standard errors
    of one-sided slack.
    """
    if n < 1:
        raise ValueError("need at least one bidder")
    if revenue:
        _require_regular(spec)
        reserve = monopoly_reserve(spec)
    policy = OrderPolicy.almighty() if adversarial_order else OrderPolicy.indexed()
    specs = [spec] * n
    opm_w, opm_r, max_w, bench_r = [], [], [], []
    for u in uniform_blocks(seed, trials, (4, n)):
        sv, st, rv, rt = split_block(specs, u)
        out = play_batch(sv, st, rv, rt, policy)
        sold = out.accepted >= 0
        opm_w.append(out.payoff)
        opm_r.append(np.where(sold, out.threshold_value, 0.0))
        max_w.append(rv.max(axis=1))
        if revenue:
            bench_r.append(second_price_revenue(rv, reserve))
    w, r, m = (np.concatenate(a) for a in (opm_w, opm_r, max_w))
    welfare_ratio = ratio_estimate(w, m)
    passes = {"welfare_half": welfare_ratio.mean >= WELFARE_BOUND - k * welfare_ratio.stderr}
    myerson = revenue_ratio = None
    if revenue:
        b = np.concatenate(bench_r)
        myerson = estimate(b)
        revenue_ratio = ratio_estimate(r, b)
        passes["revenue_quarter_regular"] = (
            revenue_ratio.mean >= REGULAR_REVENUE_BOUND - k * revenue_ratio.stderr
        )
        if spec.is_mhr:
            passes["revenue_quarter_e_mhr"] = (
                revenue_ratio.mean >= MHR_REVENUE_BOUND - k * revenue_ratio.stderr
            )
    return RatioReport(
        spec.family.value, spec.label, n, trials, seed, adversarial_order,
        estimate(w), estimate(r), estimate(m), myerson, welfare_ratio, revenue_ratio, passes,
    )
