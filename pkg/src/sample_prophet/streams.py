"""Counter-derived random streams and small Monte Carlo statistics helpers.

Every Monte Carlo driver in the package pulls its uniforms through
:func:`uniform_blocks`. Trials are grouped into fixed-size chunks and chunk
``k`` gets its own generator seeded from ``(seed, k)``, so the randomness of a
trial depends only on the master seed and the trial index. Splitting the
chunks over workers or processing them in any order cannot change a result as
long as partial results are reassembled by chunk index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

CHUNK_TRIALS = 1 << 16
MAX_SEED = (1 << 64) - 1


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def chunk_generator(seed: int, chunk_index: int) -> np.random.Generator:
    """Generator owned by one chunk of trials."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=(int(chunk_index),))
    return np.random.Generator(np.random.PCG64(ss))


def uniform_blocks(
    seed: int, trials: int, shape: tuple[int, ...]
) -> Iterator[np.ndarray]:
    """Yield arrays of shape ``(m, *shape)`` of U[0,1) draws, chunk by chunk.

    Row ``t`` of the concatenated output is trial ``t``. Within a chunk the
    draws are filled in C order, i.e. exactly as ``m`` successive calls of
    ``rng.random(shape)`` on the chunk generator.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    n_chunks = -(-trials // CHUNK_TRIALS)
    for k in range(n_chunks):
        m = min(CHUNK_TRIALS, trials - k * CHUNK_TRIALS)
        yield chunk_generator(seed, k).random((m, *shape))


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.mean - target) <= k * self.stderr

    def to_json(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr}


def estimate(x: np.ndarray) -> Estimate:
    """Sample mean with its standard error."""
    x = np.asarray(x, dtype=float)
    n = x.size
    mean = float(np.mean(x))
    if n < 2:
        return Estimate(mean, 0.0)
    return Estimate(mean, float(np.std(x, ddof=1) / math.sqrt(n)))


def ratio_estimate(num: np.ndarray, den: np.ndarray) -> Estimate:
    """Ratio of means for paired per-trial observations, delta-method stderr."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    n = num.size
    mn, md = float(np.mean(num)), float(np.mean(den))
    if md == 0.0:
        raise ZeroDivisionError("benchmark mean is zero")
    r = mn / md
    if n < 2:
        return Estimate(r, 0.0)
    cov = np.cov(num, den, ddof=1)
    var = (cov[0, 0] - 2.0 * r * cov[0, 1] + r * r * cov[1, 1]) / (n * md * md)
    return Estimate(r, math.sqrt(max(float(var), 0.0)))
