"""Vectorized Monte Carlo play of the threshold rule.

Arrays are shaped ``(trials, n)``. The per-trial semantics match
:func:`sample_prophet.core_game.play` exactly; ``tests/test_simulation.py``
replays the same uniforms through both paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core_game import OrderKind, OrderPolicy
from .distributions import ValidatedSpec, draw_values
from .streams import Estimate, estimate, ratio_estimate, uniform_blocks


def lex_argmax(v: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Row-wise index of the (value, tag)-maximum."""
    top = v.max(axis=1, keepdims=True)
    return np.where(v == top, t, -np.inf).argmax(axis=1)


def lex_gt(v, t, tv, tt) -> np.ndarray:
    return (v > tv) | ((v == tv) & (t > tt))


@dataclass
class BatchOutcome:
    threshold_value: np.ndarray
    accepted: np.ndarray  # dist index, -1 when nothing is accepted
    payoff: np.ndarray


def play_batch(
    sample_v: np.ndarray,
    sample_t: np.ndarray,
    real_v: np.ndarray,
    real_t: np.ndarray,
    policy: OrderPolicy,
    c: float = 1.0,
) -> BatchOutcome:
    rows = np.arange(sample_v.shape[0])
    h = lex_argmax(sample_v, sample_t)
    thr_v = c * sample_v[rows, h]
    thr_t = sample_t[rows, h]
    ok = lex_gt(real_v, real_t, thr_v[:, None], thr_t[:, None])
    any_ok = ok.any(axis=1)

    if policy.kind is OrderKind.ALMIGHTY:
        # smallest exceeding real under (value, tag)
        mv = np.where(ok, real_v, np.inf)
        low = mv.min(axis=1, keepdims=True)
        pick = np.where(ok & (real_v == low), real_t, np.inf).argmin(axis=1)
    else:
        perm = np.arange(real_v.shape[1]) if policy.kind is OrderKind.INDEXED else np.asarray(policy.perm)
        if len(perm) != real_v.shape[1]:
            raise ValueError("permutation length does not match n")
        pick = perm[ok[:, perm].argmax(axis=1)]

    accepted = np.where(any_ok, pick, -1)
    payoff = np.where(any_ok, real_v[rows, pick], 0.0)
    return BatchOutcome(thr_v, accepted, payoff)


def split_block(specs: Sequence[ValidatedSpec], u: np.ndarray):
    """Turn a ``(m, 4, n)`` uniform block into sample/real values and tags."""
    return (
        draw_values(specs, u[:, 0, :]),
        u[:, 1, :],
        draw_values(specs, u[:, 2, :]),
        u[:, 3, :],
    )


@dataclass(frozen=True)
class SimulationReport:
    alg: Estimate
    prophet: Estimate
    ratio: Estimate
    trials: int
    seed: int
    policy: str
    c: float

    def to_json(self) -> dict:
        return {
            "alg": self.alg.to_json(),
            "prophet": self.prophet.to_json(),
            "ratio": self.ratio.to_json(),
            "trials": self.trials,
            "seed": self.seed,
            "adversary": self.policy,
            "c": self.c,
        }


def simulate_ratio(
    specs: Sequence[ValidatedSpec],
    trials: int,
    seed: int,
    policy: OrderPolicy | None = None,
    c: float = 1.0,
) -> SimulationReport:
    """Estimate E[ALG], E[max of reals] and their ratio from paired trials."""
    if not specs:
        raise ValueError("need at least one distribution")
    policy = policy or OrderPolicy.almighty()
    n = len(specs)
    alg, prophet = [], []
    for u in uniform_blocks(seed, trials, (4, n)):
        sv, st, rv, rt = split_block(specs, u)
        out = play_batch(sv, st, rv, rt, policy, float(c))
        alg.append(out.payoff)
        prophet.append(rv.max(axis=1))
    a, p = np.concatenate(alg), np.concatenate(prophet)
    return SimulationReport(
        estimate(a), estimate(p), ratio_estimate(a, p), trials, seed, policy.kind.value, float(c)
    )
