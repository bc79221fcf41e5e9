"""Value distributions: sampling, CDF/quantile, and auction metadata.

Five families are supported. Parameters may be given as ints, floats or
:class:`fractions.Fraction`; finite-support families keep their parameters
exact so that :func:`support` can feed the exact enumeration code.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from fractions import Fraction
from numbers import Real
from typing import Mapping, Sequence

import numpy as np

from .streams import Estimate, estimate, uniform_blocks


class Family(str, Enum):
    CONSTANT = "constant"
    TWO_POINT = "two_point"
    UNIFORM_INTERVAL = "uniform_interval"
    EXPONENTIAL = "exponential"
    TRUNCATED_PARETO = "truncated_pareto"


PARAM_NAMES: dict[Family, tuple[str, ...]] = {
    Family.CONSTANT: ("value",),
    Family.TWO_POINT: ("high", "p", "low"),
    Family.UNIFORM_INTERVAL: ("lower", "upper"),
    Family.EXPONENTIAL: ("rate",),
    Family.TRUNCATED_PARETO: ("shape", "scale", "cap"),
}


class SpecError(ValueError):
    """A distribution description violates its family's constraints."""


@dataclass(frozen=True)
class DistributionSpec:
    family: Family
    params: Mapping[str, Real] = field(hash=False)
    label: str = ""


@dataclass(frozen=True)
class SupportPoint:
    value: Fraction
    mass: Fraction


@dataclass(frozen=True)
class ValidatedSpec:
    """A checked spec plus derived metadata.

    ``is_regular`` / ``is_mhr`` are ``None`` when the flag is not known for
    the parameters (non-degenerate two-point laws).
    """

    spec: DistributionSpec
    is_finite_support: bool
    is_regular: bool | None
    is_mhr: bool | None

    @property
    def family(self) -> Family:
        return self.spec.family

    @property
    def label(self) -> str:
        return self.spec.label

    def param(self, name: str) -> Real:
        return self.spec.params[name]

    def fparam(self, name: str) -> float:
        return float(self.spec.params[name])


def _finite_nonneg(name: str, x) -> None:
    if isinstance(x, bool) or not isinstance(x, Real):
        raise SpecError(f"parameter {name!r} must be a real number, got {x!r}")
    if not math.isfinite(float(x)):
        raise SpecError(f"parameter {name!r} must be finite, got {x!r}")
    if x < 0:
        raise SpecError(f"parameter {name!r} must be non-negative, got {x!r}")


def validate_spec(spec: DistributionSpec) -> ValidatedSpec:
    try:
        family = Family(spec.family)
    except ValueError:
        raise SpecError(f"unsupported family {spec.family!r}") from None
    names = PARAM_NAMES[family]
    params = dict(spec.params)
    missing = [k for k in names if k not in params]
    extra = [k for k in params if k not in names]
    if missing:
        raise SpecError(f"{family.value}: missing parameter(s) {', '.join(missing)}")
    if extra:
        raise SpecError(f"{family.value}: unknown parameter(s) {', '.join(extra)}")
    for k in names:
        _finite_nonneg(k, params[k])
    spec = DistributionSpec(family, params, spec.label)

    if family is Family.CONSTANT:
        return ValidatedSpec(spec, True, True, True)

    if family is Family.TWO_POINT:
        p = params["p"]
        if p > 1:
            raise SpecError(f"two_point: probability p must lie in [0,1], got {p!r}")
        degenerate = p in (0, 1) or params["high"] == params["low"]
        flag = True if degenerate else None
        return ValidatedSpec(spec, True, flag, flag)

    if family is Family.UNIFORM_INTERVAL:
        if not params["lower"] < params["upper"]:
            raise SpecError(
                f"uniform_interval: need lower < upper, got lower={params['lower']!r}, "
                f"upper={params['upper']!r}"
            )
        return ValidatedSpec(spec, False, True, True)

    if family is Family.EXPONENTIAL:
        if params["rate"] <= 0:
            raise SpecError("exponential: rate must be positive")
        return ValidatedSpec(spec, False, True, True)

    # truncated Pareto on [scale, cap]
    a, s, c = (float(params[k]) for k in names)
    if a <= 0 or s <= 0:
        raise SpecError("truncated_pareto: shape and scale must be positive")
    if not c > s:
        raise SpecError("truncated_pareto: cap must exceed scale")
    q = (s / c) ** a
    # virtual value x(1-1/a) + x^(a+1)/(a c^a) has slope increasing in x
    regular = (a - 1.0) + (a + 1.0) * q >= 0.0
    # hazard a / (x (1 - (x/c)^a)) is non-decreasing iff (a+1)(s/c)^a >= 1
    mhr = (a + 1.0) * q >= 1.0
    return ValidatedSpec(spec, False, regular, mhr)


def make(family: Family | str, label: str = "", **params) -> ValidatedSpec:
    return validate_spec(DistributionSpec(Family(family), params, label))


def constant(value, label: str = "") -> ValidatedSpec:
    return make(Family.CONSTANT, label, value=value)


def two_point(high, p, low=0, label: str = "") -> ValidatedSpec:
    return make(Family.TWO_POINT, label, high=high, p=p, low=low)


def uniform_interval(lower, upper, label: str = "") -> ValidatedSpec:
    return make(Family.UNIFORM_INTERVAL, label, lower=lower, upper=upper)


def exponential(rate, label: str = "") -> ValidatedSpec:
    return make(Family.EXPONENTIAL, label, rate=rate)


def truncated_pareto(shape, scale, cap, label: str = "") -> ValidatedSpec:
    return make(Family.TRUNCATED_PARETO, label, shape=shape, scale=scale, cap=cap)


@lru_cache(maxsize=256)
def support(spec: ValidatedSpec) -> tuple[SupportPoint, ...]:
    """Exact support of a finite-support spec, ascending, zero masses dropped."""
    if spec.family is Family.CONSTANT:
        return (SupportPoint(Fraction(spec.param("value")), Fraction(1)),)
    if spec.family is Family.TWO_POINT:
        hi, p, lo = (Fraction(spec.param(k)) for k in ("high", "p", "low"))
        masses: dict[Fraction, Fraction] = {}
        for v, m in ((lo, 1 - p), (hi, p)):
            if m:
                masses[v] = masses.get(v, Fraction(0)) + m
        return tuple(SupportPoint(v, masses[v]) for v in sorted(masses))
    raise SpecError(f"{spec.family.value} does not have finite support")


def mean(spec: ValidatedSpec) -> float:
    f = spec.family
    if f in (Family.CONSTANT, Family.TWO_POINT):
        return float(sum(pt.value * pt.mass for pt in support(spec)))
    if f is Family.UNIFORM_INTERVAL:
        return 0.5 * (spec.fparam("lower") + spec.fparam("upper"))
    if f is Family.EXPONENTIAL:
        return 1.0 / spec.fparam("rate")
    a, s, c = spec.fparam("shape"), spec.fparam("scale"), spec.fparam("cap")
    norm = a * s**a / (1.0 - (s / c) ** a)
    if a == 1.0:
        return norm * math.log(c / s)
    return norm * (c ** (1.0 - a) - s ** (1.0 - a)) / (1.0 - a)


def cdf(spec: ValidatedSpec, x):
    """Right-continuous CDF; accepts scalars or numpy arrays."""
    f = spec.family
    xs = np.asarray(x, dtype=float)
    if f in (Family.CONSTANT, Family.TWO_POINT):
        out = np.zeros_like(xs)
        for pt in support(spec):
            out = out + np.where(xs >= float(pt.value), float(pt.mass), 0.0)
        out = np.minimum(out, 1.0)
    elif f is Family.UNIFORM_INTERVAL:
        lo, hi = spec.fparam("lower"), spec.fparam("upper")
        out = np.clip((xs - lo) / (hi - lo), 0.0, 1.0)
    elif f is Family.EXPONENTIAL:
        out = -np.expm1(-spec.fparam("rate") * np.maximum(xs, 0.0))
    else:
        a, s, c = spec.fparam("shape"), spec.fparam("scale"), spec.fparam("cap")
        xc = np.clip(xs, s, c)
        out = -np.expm1(a * np.log(s / xc)) / -np.expm1(a * math.log(s / c))
        out = np.where(xs >= c, 1.0, out)
    return float(out) if np.ndim(out) == 0 else out


@lru_cache(maxsize=256)
def _cumulative(spec: ValidatedSpec) -> tuple[list[float], list[float]]:
    pts = support(spec)
    acc, cum = Fraction(0), []
    for pt in pts[:-1]:
        acc += pt.mass
        cum.append(float(acc))
    return cum, [float(pt.value) for pt in pts]


def quantile(spec: ValidatedSpec, p):
    """Generalized inverse CDF ``inf{x : cdf(x) >= p}``."""
    if spec.is_finite_support and isinstance(p, float) and 0.0 <= p <= 1.0:
        cum, vals = _cumulative(spec)
        return vals[bisect_left(cum, p)]
    ps = np.asarray(p, dtype=float)
    if np.any((ps < 0.0) | (ps > 1.0)) or np.any(np.isnan(ps)):
        raise ValueError("quantile level must lie in [0, 1]")
    f = spec.family
    if f in (Family.CONSTANT, Family.TWO_POINT):
        cum, vals = _cumulative(spec)
        out = np.asarray(vals)[np.searchsorted(cum, ps, side="left")]
    elif f is Family.UNIFORM_INTERVAL:
        lo, hi = spec.fparam("lower"), spec.fparam("upper")
        out = lo + ps * (hi - lo)
    elif f is Family.EXPONENTIAL:
        with np.errstate(divide="ignore"):
            out = -np.log1p(-ps) / spec.fparam("rate")
    else:
        a, s, c = spec.fparam("shape"), spec.fparam("scale"), spec.fparam("cap")
        tail = -np.expm1(a * math.log(s / c))
        out = s * np.exp(-np.log1p(-ps * tail) / a)
        out = np.minimum(out, c)
    return float(out) if np.ndim(out) == 0 else out


def sample(spec: ValidatedSpec, rng: np.random.Generator) -> float:
    """One draw, by inversion of a single uniform from ``rng``."""
    return quantile(spec, rng.random())


def monopoly_reserve(spec: ValidatedSpec, tol: float = 1e-9) -> float:
    """argmax_r r * (1 - cdf(r)) for a regular spec."""
    if spec.is_regular is not True:
        raise SpecError(f"monopoly reserve needs a regular distribution ({spec.family.value})")
    f = spec.family
    if f in (Family.CONSTANT, Family.TWO_POINT):
        # degenerate two-point laws are the only ones flagged regular
        return float(max(pt.value for pt in support(spec)))
    if f is Family.UNIFORM_INTERVAL:
        return max(spec.fparam("lower"), 0.5 * spec.fparam("upper"))
    if f is Family.EXPONENTIAL:
        return 1.0 / spec.fparam("rate")
    lo, hi = spec.fparam("scale"), spec.fparam("cap")
    return _golden_max(lambda r: r * (1.0 - cdf(spec, r)), lo, hi, tol)


def _golden_max(fn, lo: float, hi: float, tol: float) -> float:
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    # revenue curve may peak at an end of the support
    return max((lo, x, hi), key=fn)


def draw_values(specs: Sequence[ValidatedSpec], u: np.ndarray) -> np.ndarray:
    """Map uniforms ``u[..., i]`` through the quantile of ``specs[i]``."""
    out = np.empty_like(u, dtype=float)
    for i, spec in enumerate(specs):
        out[..., i] = quantile(spec, u[..., i])
    return out


def estimate_expected_max(
    specs: Sequence[ValidatedSpec], trials: int, seed: int
) -> Estimate:
    """Monte Carlo E[max_i X_i] from one draw per spec per trial."""
    if not specs:
        raise ValueError("need at least one distribution")
    maxima = [
        draw_values(specs, u).max(axis=1)
        for u in uniform_blocks(seed, trials, (len(specs),))
    ]
    return estimate(np.concatenate(maxima))
