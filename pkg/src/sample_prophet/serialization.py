"""JSON wire formats.

Exact rationals travel as ``{"num": "<int>", "den": "<int>"}`` with decimal
integer strings, so arbitrarily large values survive any JSON parser.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Real
from typing import Any

from .core_game import Phase, PhaseSplit, TaggedValue
from .distributions import DistributionSpec, Family, SpecError, ValidatedSpec, validate_spec
from .exact_analysis import DrawTable, VerificationReport


def rational_to_json(x: Fraction) -> dict[str, str]:
    x = Fraction(x)
    return {"num": str(x.numerator), "den": str(x.denominator)}


def rational_from_json(obj: Any) -> Fraction:
    if not isinstance(obj, dict) or set(obj) != {"num", "den"}:
        raise ValueError(f"expected {{'num','den'}} object, got {obj!r}")
    num, den = obj["num"], obj["den"]
    if not isinstance(num, str) or not isinstance(den, str):
        raise ValueError("rational fields must be integer strings")
    den_i = int(den)
    if den_i == 0:
        raise ValueError("rational with zero denominator")
    return Fraction(int(num), den_i)


def number_to_json(x) -> Any:
    """Fractions become rational objects; ints and floats stay JSON numbers."""
    if isinstance(x, Fraction):
        return rational_to_json(x)
    if isinstance(x, bool) or not isinstance(x, Real):
        raise TypeError(f"not a real number: {x!r}")
    return x if isinstance(x, int) else float(x)


def number_from_json(obj: Any):
    if isinstance(obj, dict):
        return rational_from_json(obj)
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ValueError(f"expected a number or rational object, got {obj!r}")
    return obj


def spec_to_json(spec: DistributionSpec | ValidatedSpec) -> dict:
    if isinstance(spec, ValidatedSpec):
        spec = spec.spec
    return {
        "family": Family(spec.family).value,
        "params": {k: number_to_json(v) for k, v in spec.params.items()},
        "label": spec.label,
    }


def spec_from_json(obj: Any) -> ValidatedSpec:
    if not isinstance(obj, dict):
        raise SpecError(f"distribution spec must be an object, got {obj!r}")
    family = obj.get("family")
    try:
        family = Family(family)
    except ValueError:
        raise SpecError(f"unsupported family {family!r}") from None
    params = obj.get("params", {})
    if not isinstance(params, dict):
        raise SpecError("'params' must be an object")
    try:
        parsed = {k: number_from_json(v) for k, v in params.items()}
    except ValueError as exc:
        raise SpecError(str(exc)) from None
    label = obj.get("label", "")
    if not isinstance(label, str):
        raise SpecError("'label' must be a string")
    return validate_spec(DistributionSpec(family, parsed, label))


def split_to_json(split: PhaseSplit) -> dict:
    def row(v: TaggedValue) -> dict:
        return {"v": number_to_json(v.value), "tag": number_to_json(v.tag), "i": v.dist_index}

    return {"samples": [row(v) for v in split.samples], "reals": [row(v) for v in split.reals]}


def split_from_json(obj: dict) -> PhaseSplit:
    def side(rows, phase):
        return tuple(
            TaggedValue(number_from_json(r["v"]), number_from_json(r["tag"]), int(r["i"]), phase)
            for r in rows
        )

    return PhaseSplit(side(obj["samples"], Phase.SAMPLE), side(obj["reals"], Phase.REAL))


def table_to_json(table: DrawTable) -> dict:
    return {
        "n": table.n,
        "draws": [[rational_to_json(a), rational_to_json(b)] for a, b in table.draws],
        "tags": [[rational_to_json(a), rational_to_json(b)] for a, b in table.tags],
    }


def table_from_json(obj: dict) -> DrawTable:
    draws = tuple((rational_from_json(a), rational_from_json(b)) for a, b in obj["draws"])
    tags = tuple((rational_from_json(a), rational_from_json(b)) for a, b in obj["tags"])
    if "n" in obj and obj["n"] != len(draws):
        raise ValueError(f"table declares n={obj['n']} but has {len(draws)} draw pairs")
    return DrawTable(draws, tags)


def report_to_json(report: VerificationReport) -> dict:
    return {
        "table": table_to_json(report.table),
        "expected_max": rational_to_json(report.expected_max),
        "alg_value": rational_to_json(report.alg_value),
        "oracle_expected_max": rational_to_json(report.oracle_expected_max),
        "oracle_alg_value": rational_to_json(report.oracle_alg_value),
        "checks": dict(report.checks),
        "passed": report.passed,
    }


def report_from_json(obj: dict) -> VerificationReport:
    return VerificationReport(
        table_from_json(obj["table"]),
        rational_from_json(obj["expected_max"]),
        rational_from_json(obj["alg_value"]),
        rational_from_json(obj["oracle_expected_max"]),
        rational_from_json(obj["oracle_alg_value"]),
        {k: bool(v) for k, v in obj["checks"].items()},
    )
