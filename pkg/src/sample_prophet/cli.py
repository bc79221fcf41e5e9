"""Batch experiment driver.

    sample-prophet {verify,simulate,mechanism,counterexample}
        [--config PATH] [--seed U64] [--out PATH] [--format json|csv]

Exit status: 0 when every checked invariant holds, 1 on an invariant
failure, 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from . import __version__
from .core_game import OrderKind, OrderPolicy
from .counterexamples import (
    NamedInstance,
    constant_instance,
    evaluate_counterexample,
    facts_hold,
    ksg_instance,
    scaled_threshold_gap_instance,
)
from .distributions import SpecError, ValidatedSpec
from .exact_analysis import (
    ENUMERATION_CAP,
    CapExceeded,
    DrawTable,
    exact_finite_support_performance,
    random_table,
    verify_instance,
)
from .mechanism import ratio_experiment
from .serialization import (
    number_from_json,
    rational_to_json,
    report_to_json,
    spec_from_json,
    spec_to_json,
    table_from_json,
    table_to_json,
)
from .simulation import simulate_ratio
from .streams import MAX_SEED

COMMANDS = ("verify", "simulate", "mechanism", "counterexample")
ADVERSARIES = (OrderKind.INDEXED.value, OrderKind.ALMIGHTY.value)
INSTANCES = ("ksg", "scaled_gap", "constant")
MAX_REPORTED_FAILURES = 20

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    command: str
    specs: list[ValidatedSpec] = field(default_factory=list)
    seed: int | None = None
    trials: int = 0
    n_range: tuple[int, int] | None = None
    c: Fraction | None = None
    adversary: str = OrderKind.ALMIGHTY.value
    output_path: str | None = None
    format: str = "json"
    instance: str | None = None
    epsilon: list[Fraction] = field(default_factory=list)
    tables: list[DrawTable] = field(default_factory=list)

    def to_json(self) -> dict:
        """Canonical echo; parses back to an equal config."""
        out: dict[str, Any] = {
            "command": self.command,
            "specs": [spec_to_json(s) for s in self.specs],
            "seed": self.seed,
            "trials": self.trials,
            "n_range": list(self.n_range) if self.n_range else None,
            "c": rational_to_json(self.c) if self.c is not None else None,
            "adversary": self.adversary,
            "format": self.format,
        }
        if self.instance:
            out["instance"] = self.instance
        if self.epsilon:
            out["epsilon"] = [rational_to_json(e) for e in self.epsilon]
        if self.tables:
            out["tables"] = [table_to_json(t) for t in self.tables]
        return out


def _fraction(name: str, obj) -> Fraction:
    try:
        x = number_from_json(obj)
    except ValueError as exc:
        raise ConfigError(name, str(exc)) from None
    # decimal literals are meant exactly: 0.01 is 1/100
    return Fraction(repr(x)) if isinstance(x, float) else Fraction(x)


def _int(name: str, obj, lo: int = 0) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ConfigError(name, f"expected an integer, got {obj!r}")
    if obj < lo:
        raise ConfigError(name, f"must be >= {lo}, got {obj}")
    return obj


_DEFAULT_TRIALS = {"verify": 1000, "simulate": 100_000, "mechanism": 100_000, "counterexample": 0}
_KNOWN_FIELDS = {
    "command", "specs", "seed", "trials", "n_range", "c", "adversary",
    "output_path", "format", "instance", "epsilon", "tables",
}


def config_from_dict(doc: Any) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be a JSON object")
    unknown = sorted(set(doc) - _KNOWN_FIELDS)
    if unknown:
        raise ConfigError(unknown[0], "unknown field")

    command = doc.get("command")
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    cfg = ExperimentConfig(command)

    specs = doc.get("specs") or []
    if not isinstance(specs, list):
        raise ConfigError("specs", "must be a list")
    for j, s in enumerate(specs):
        try:
            cfg.specs.append(spec_from_json(s))
        except (SpecError, ValueError) as exc:
            raise ConfigError(f"specs[{j}]", str(exc)) from None

    cfg.trials = _int("trials", doc.get("trials", _DEFAULT_TRIALS[command]))

    if doc.get("seed") is not None:
        cfg.seed = _int("seed", doc["seed"])
        if cfg.seed > MAX_SEED:
            raise ConfigError("seed", "must fit in an unsigned 64-bit integer")

    nr = doc.get("n_range")
    if nr is not None:
        if not isinstance(nr, list) or len(nr) != 2:
            raise ConfigError("n_range", "expected [lo, hi]")
        lo, hi = _int("n_range", nr[0], 1), _int("n_range", nr[1], 1)
        if lo > hi:
            raise ConfigError("n_range", f"lo={lo} exceeds hi={hi}")
        cfg.n_range = (lo, hi)

    if doc.get("c") is not None:
        cfg.c = _fraction("c", doc["c"])
        if cfg.c <= 0:
            raise ConfigError("c", "must be positive")

    cfg.adversary = doc.get("adversary", cfg.adversary)
    if cfg.adversary not in ADVERSARIES:
        raise ConfigError("adversary", f"expected one of {', '.join(ADVERSARIES)}")
    cfg.format = doc.get("format", cfg.format)
    if cfg.format not in ("json", "csv"):
        raise ConfigError("format", "expected json or csv")
    cfg.output_path = doc.get("output_path")

    cfg.instance = doc.get("instance")
    if cfg.instance is not None and cfg.instance not in INSTANCES:
        raise ConfigError("instance", f"expected one of {', '.join(INSTANCES)}")
    eps = doc.get("epsilon")
    if eps is not None:
        eps = eps if isinstance(eps, list) else [eps]
        cfg.epsilon = [_fraction("epsilon", e) for e in eps]
        if any(not 0 < e < 1 for e in cfg.epsilon):
            raise ConfigError("epsilon", "each value must lie in (0, 1)")

    for j, t in enumerate(doc.get("tables") or []):
        try:
            cfg.tables.append(table_from_json(t))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"tables[{j}]", str(exc)) from None

    _check_command(cfg)
    return cfg


def _check_command(cfg: ExperimentConfig) -> None:
    needs_seed = cfg.trials > 0 and not (cfg.command == "verify" and cfg.tables) and cfg.command != "counterexample"
    if needs_seed and cfg.seed is None:
        raise ConfigError("seed", f"required when trials > 0 (trials={cfg.trials})")

    if cfg.command == "verify":
        cfg.n_range = cfg.n_range or (1, 10)
        if cfg.n_range[1] > ENUMERATION_CAP:
            raise ConfigError("n_range", f"n={cfg.n_range[1]} exceeds the enumeration cap {ENUMERATION_CAP}")
    elif cfg.command == "simulate":
        if not cfg.specs and cfg.instance is None:
            raise ConfigError("specs", "simulate needs specs or an instance")
        if cfg.trials < 1:
            raise ConfigError("trials", "simulate needs trials >= 1")
        if cfg.c is None:
            cfg.c = Fraction(1)
    elif cfg.command == "mechanism":
        if len(cfg.specs) != 1:
            raise ConfigError("specs", "mechanism takes exactly one spec (bidders are i.i.d.)")
        if cfg.trials < 1:
            raise ConfigError("trials", "mechanism needs trials >= 1")
        cfg.n_range = cfg.n_range or (2, 2)
    else:
        if cfg.instance is None and not cfg.specs:
            raise ConfigError("instance", "counterexample needs an instance or specs")
        if cfg.instance == "scaled_gap":
            cfg.n_range = cfg.n_range or (4, 12)
            if cfg.n_range[0] < 2:
                raise ConfigError("n_range", "scaled_gap needs n >= 2")
        if cfg.specs and any(not s.is_finite_support for s in cfg.specs):
            raise ConfigError("specs", "exact enumeration needs finite-support specs")
        if cfg.c is None:
            cfg.c = Fraction(1, 2) if cfg.instance == "scaled_gap" else Fraction(1)
    if cfg.instance == "ksg" and not cfg.epsilon:
        raise ConfigError("epsilon", "ksg instance needs epsilon")


def parse_config(text: str) -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    return config_from_dict(doc)


def _instances(cfg: ExperimentConfig) -> list[NamedInstance]:
    if cfg.instance == "ksg":
        return [ksg_instance(e) for e in cfg.epsilon]
    if cfg.instance == "scaled_gap":
        lo, hi = cfg.n_range
        return [scaled_threshold_gap_instance(n) for n in range(lo, hi + 1)]
    if cfg.instance == "constant":
        return [constant_instance()]
    return [NamedInstance("specs", Fraction(len(cfg.specs)), tuple(cfg.specs))]


def _verify(cfg: ExperimentConfig):
    rows, failed = [], []
    if cfg.tables:
        groups = {"fixtures": cfg.tables}
    else:
        lo, hi = cfg.n_range
        groups = {}
        for n in range(lo, hi + 1):
            groups[n] = [
                random_table(n, np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(n, j))))
                for j in range(cfg.trials)
            ]
    for key, tables in groups.items():
        check_failures: dict[str, int] = {}
        bad = 0
        for t in tables:
            rep = verify_instance(t)
            if not rep.passed:
                bad += 1
                for name, ok in rep.checks.items():
                    if not ok:
                        check_failures[name] = check_failures.get(name, 0) + 1
                if len(failed) < MAX_REPORTED_FAILURES:
                    failed.append(report_to_json(rep))
        rows.append({"n": key, "tables": len(tables), "failures": bad, "check_failures": check_failures})
    total = sum(r["failures"] for r in rows)
    results = {"sweep": rows, "failures": total, "failed_reports": failed}
    csv = ["n,tables,failures"] + [f"{r['n']},{r['tables']},{r['failures']}" for r in rows]
    return total == 0, results, csv


def _simulate(cfg: ExperimentConfig):
    c = cfg.c
    policy = OrderPolicy.from_name(cfg.adversary)
    out, csv = [], ["instance,parameter,c,alg,alg_stderr,prophet,prophet_stderr,ratio,ratio_stderr,pass"]
    ok = True
    for inst in _instances(cfg):
        rep = simulate_ratio(inst.specs, cfg.trials, cfg.seed, policy, float(c))
        row = {"instance": inst.name, "parameter": rational_to_json(inst.parameter), **rep.to_json()}
        if c == 1:
            passed = rep.ratio.mean >= 0.5 - 3 * rep.ratio.stderr
            row["pass"] = {"ratio_at_least_half": passed}
            ok &= passed
        if all(s.is_finite_support for s in inst.specs):
            try:
                exact = exact_finite_support_performance(inst.specs, c, policy)
                row["exact"] = {
                    "expected_alg": rational_to_json(exact.expected_alg),
                    "expected_max": rational_to_json(exact.expected_max_reals),
                    "ratio": rational_to_json(exact.ratio) if exact.expected_max_reals else None,
                }
            except CapExceeded:
                pass
        out.append(row)
        csv.append(
            f"{inst.name},{inst.parameter},{c},{rep.alg.mean!r},{rep.alg.stderr!r},"
            f"{rep.prophet.mean!r},{rep.prophet.stderr!r},{rep.ratio.mean!r},{rep.ratio.stderr!r},"
            f"{row.get('pass', {}).get('ratio_at_least_half', '')}"
        )
    return ok, {"runs": out}, csv


def _mechanism(cfg: ExperimentConfig):
    from .mechanism import RatioReport

    spec = cfg.specs[0]
    lo, hi = cfg.n_range
    reports = [
        ratio_experiment(
            spec, n, cfg.trials, cfg.seed,
            adversarial_order=cfg.adversary == OrderKind.ALMIGHTY.value,
            revenue=spec.is_regular is True,
        )
        for n in range(lo, hi + 1)
    ]
    ok = all(all(r.passes.values()) for r in reports)
    csv = [RatioReport.CSV_HEADER] + [r.csv_row() for r in reports]
    return ok, {"reports": [r.to_json() for r in reports]}, csv


def _counterexample(cfg: ExperimentConfig):
    from .counterexamples import GapReport

    policy = OrderPolicy.from_name(cfg.adversary)
    c = cfg.c
    rows, checks = [], {}
    reports = []
    for inst in _instances(cfg):
        gap = evaluate_counterexample(inst, c, policy)
        reports.append(gap)
        facts = facts_hold(inst)
        rows.append({
            "instance": gap.instance,
            "parameter": rational_to_json(gap.parameter),
            "c": rational_to_json(gap.c),
            "expected_alg": rational_to_json(gap.expected_alg),
            "expected_max": rational_to_json(gap.expected_max),
            "ratio": rational_to_json(gap.ratio),
            "ratio_float": float(gap.ratio),
            "facts_hold": facts,
        })
        checks[f"facts[{inst.name}={inst.parameter}]"] = all(facts.values())
    if cfg.instance == "ksg" and c == 1:
        checks["ratio_exactly_half"] = all(r.ratio == Fraction(1, 2) for r in reports)
    if cfg.instance == "scaled_gap" and c < 1 and len(reports) > 1:
        checks["ratio_strictly_decreasing"] = all(a.ratio > b.ratio for a, b in zip(reports, reports[1:]))
    csv = [GapReport.CSV_HEADER] + [r.csv_row() for r in reports]
    return all(checks.values()), {"gaps": rows, "checks": checks}, csv


_RUNNERS = {
    "verify": _verify,
    "simulate": _simulate,
    "mechanism": _mechanism,
    "counterexample": _counterexample,
}


def run_experiment(cfg: ExperimentConfig) -> tuple[int, str]:
    """Run ``cfg`` and return (exit status, report text)."""
    ok, results, csv_rows = _RUNNERS[cfg.command](cfg)
    provenance = {
        "tool": "sample_prophet",
        "version": __version__,
        "command": cfg.command,
        "seed": cfg.seed,
        "config": cfg.to_json(),
    }
    if cfg.format == "csv":
        buf = io.StringIO()
        buf.write(f"# {json.dumps(provenance, sort_keys=True, separators=(',', ':'))}\n")
        buf.write(f"# pass={str(ok).lower()}\n")
        for line in csv_rows:
            buf.write(line + "\n")
        text = buf.getvalue()
    else:
        text = json.dumps({**provenance, "pass": ok, "results": results}, indent=2, sort_keys=True) + "\n"
    return (EXIT_OK if ok else EXIT_FAIL), text


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sample-prophet", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", metavar="PATH", help="JSON experiment config")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--out", metavar="PATH", help="report path (default: config output_path or stdout)")
    p.add_argument("--format", choices=("json", "csv"), help="report format (overrides the config)")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                doc = json.load(fh)
        else:
            doc = {"command": args.command}
        if not isinstance(doc, dict):
            raise ConfigError("config", "top level must be a JSON object")
        doc.setdefault("command", args.command)
        if doc["command"] != args.command:
            raise ConfigError("command", f"config says {doc['command']!r} but {args.command!r} was requested")
        if args.seed is not None:
            doc["seed"] = args.seed
        if args.format:
            doc["format"] = args.format
        cfg = config_from_dict(doc)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"sample-prophet: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        status, text = run_experiment(cfg)
    except CapExceeded as exc:
        print(f"sample-prophet: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = args.out or cfg.output_path
    try:
        if out:
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"sample-prophet: cannot write report: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return status


if __name__ == "__main__":
    sys.exit(main())
