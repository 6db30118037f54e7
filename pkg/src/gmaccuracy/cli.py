"""Command-line interface: ``gmaccuracy test | power | table1``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import re
import sys
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import __version__
from .errors import DegenerateError, DomainError, GMAccuracyError
from .power import (
    DEFAULT_REPS,
    FAMILIES,
    TABLE1_REPS,
    PowerScenario,
    default_beta_grid,
    run_power_curve,
    run_table1,
)
from .stattests import (
    DEFAULT_ALPHA,
    AccuracyVerdict,
    DuplicateRatioWarning,
    Outcome,
    TestReport,
    accuracy_test,
    binomial_sign_test,
    geometric_mean,
    make_ratio_sample,
)

EXIT_NOT_REJECTED = 0
EXIT_INPUT_ERROR = 1
EXIT_INACCURATE = 2
EXIT_NORMALITY_REJECTED = 3

_EXIT_CODES = {
    Outcome.NOT_REJECTED: EXIT_NOT_REJECTED,
    Outcome.INACCURATE: EXIT_INACCURATE,
    Outcome.NORMALITY_REJECTED: EXIT_NORMALITY_REJECTED,
}

REQUIRED_COLUMNS = ("period", "observed", "forecast")
_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")


class InputError(GMAccuracyError, ValueError):
    """Malformed input file or configuration."""


def exit_code_for(outcome: Outcome) -> int:
    return _EXIT_CODES[Outcome(outcome)]


def sig9(x: float) -> float:
    """Round to 9 significant digits, the precision of every emitted number."""
    return float(f"{x:.9g}")


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{x:.9g}"


# -- input --------------------------------------------------------------------


@dataclass(frozen=True)
class InputRecord:
    period: str
    observed: float
    forecast: float


def _parse_positive(text: str, column: str, line: int) -> float:
    text = text.strip()
    if not _NUMBER.fullmatch(text):
        raise InputError(f"line {line}: {column} is not a decimal number: {text!r}")
    value = float(text)
    if not math.isfinite(value) or value <= 0:
        raise InputError(f"line {line}: {column} must be > 0, got {text}")
    return value


def parse_records(data: bytes) -> list[InputRecord]:
    """Parse a delimited ``period,observed,forecast`` file.

    The delimiter (comma, semicolon or tab) is taken from the header line.
    Blank lines are skipped; diagnostics carry 1-based file line numbers.
    """
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise InputError(f"input is not valid UTF-8: {exc}") from None
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise InputError("input is empty or has no header row")
    header_line = lines[0]
    delimiter = max(",;\t", key=header_line.count)
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    header = [h.strip().lower() for h in next(reader)]
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise InputError(f"line 1: header must contain columns {', '.join(REQUIRED_COLUMNS)}; missing {', '.join(missing)}")
    idx = {c: header.index(c) for c in REQUIRED_COLUMNS}

    records = []
    for row in reader:
        line = reader.line_num
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise InputError(f"line {line}: expected {len(header)} fields, got {len(row)}")
        records.append(
            InputRecord(
                period=row[idx["period"]].strip(),
                observed=_parse_positive(row[idx["observed"]], "observed", line),
                forecast=_parse_positive(row[idx["forecast"]], "forecast", line),
            )
        )
    if len(records) < 3:
        raise InputError(f"need at least 3 data rows, got {len(records)}")
    return records


# -- report -------------------------------------------------------------------


def _round_report(r: Optional[TestReport]) -> Optional[TestReport]:
    if r is None:
        return None
    return TestReport(sig9(r.statistic), sig9(r.p_value), r.alpha, r.reject, r.method, r.notes)


@dataclass(frozen=True)
class ReportDocument:
    """Everything ``gmaccuracy test`` reports, with numbers at 9 significant digits."""

    tool_version: str
    input_digest: str
    alpha: float
    n: int
    geometric_mean: float
    min_ratio: float
    max_ratio: float
    duplicate_ratios: bool
    outcome: Outcome
    normality: TestReport
    location: Optional[TestReport]
    binomial: TestReport

    @classmethod
    def build(cls, sample, verdict: AccuracyVerdict, binomial: TestReport, alpha: float, digest: str):
        return cls(
            tool_version=__version__,
            input_digest=digest,
            alpha=float(alpha),
            n=sample.n,
            geometric_mean=sig9(geometric_mean(sample)),
            min_ratio=sig9(float(sample.ratios.min())),
            max_ratio=sig9(float(sample.ratios.max())),
            duplicate_ratios=bool(sample.duplicate_ratios),
            outcome=verdict.outcome,
            normality=_round_report(verdict.normality),
            location=_round_report(verdict.location),
            binomial=_round_report(binomial),
        )

    @property
    def exit_code(self) -> int:
        return exit_code_for(self.outcome)

    def to_dict(self) -> dict:
        return {
            "tool": "gmaccuracy",
            "tool_version": self.tool_version,
            "input_digest": self.input_digest,
            "alpha": self.alpha,
            "sample": {
                "n": self.n,
                "geometric_mean": self.geometric_mean,
                "min_ratio": self.min_ratio,
                "max_ratio": self.max_ratio,
                "duplicate_ratios": self.duplicate_ratios,
            },
            "accuracy_test": {
                "outcome": self.outcome.value,
                "normality": self.normality.to_dict(),
                "location": None if self.location is None else self.location.to_dict(),
            },
            "binomial_test": self.binomial.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReportDocument":
        acc = d["accuracy_test"]
        sample = d["sample"]
        return cls(
            tool_version=d["tool_version"],
            input_digest=d["input_digest"],
            alpha=float(d["alpha"]),
            n=int(sample["n"]),
            geometric_mean=float(sample["geometric_mean"]),
            min_ratio=float(sample["min_ratio"]),
            max_ratio=float(sample["max_ratio"]),
            duplicate_ratios=bool(sample["duplicate_ratios"]),
            outcome=Outcome(acc["outcome"]),
            normality=TestReport.from_dict(acc["normality"]),
            location=None if acc["location"] is None else TestReport.from_dict(acc["location"]),
            binomial=TestReport.from_dict(d["binomial_test"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self) -> str:
        def decision(r: TestReport, yes: str, no: str) -> str:
            return yes if r.reject else no

        lines = [
            f"gmaccuracy {self.tool_version}: forecast accuracy report",
            f"input: {self.input_digest}",
            f"n = {self.n}, alpha = {_fmt(self.alpha)}",
            f"geometric mean of observed/forecast ratios: {_fmt(self.geometric_mean)}",
            f"ratio range: {_fmt(self.min_ratio)} .. {_fmt(self.max_ratio)}",
        ]
        if self.duplicate_ratios:
            lines.append("warning: ratios contain exact duplicates")
        lines += [
            "",
            "accuracy test",
            f"  Shapiro-Wilk on log-ratios: W = {_fmt(self.normality.statistic)}, "
            f"p = {_fmt(self.normality.p_value)} "
            f"({decision(self.normality, 'normality rejected', 'normality not rejected')})",
        ]
        if self.location is None:
            lines.append("  t-test skipped: log-ratios are not normal, the accuracy test does not apply")
        else:
            lines.append(
                f"  t-test of mean log-ratio = 0: T = {_fmt(self.location.statistic)}, "
                f"p = {_fmt(self.location.p_value)} "
                f"({decision(self.location, 'rejected', 'not rejected')})"
            )
        lines.append(f"  outcome: {self.outcome.value}")
        lines += [
            "",
            "binomial sign test",
            f"  ratios above 1: {int(self.binomial.statistic)} of {self.n}, "
            f"p = {_fmt(self.binomial.p_value)} "
            f"({decision(self.binomial, 'rejected', 'not rejected')})",
        ]
        lines += [f"  note: {note}" for note in self.binomial.notes]
        return "\n".join(lines) + "\n"


def run_test(data: bytes, alpha: float = DEFAULT_ALPHA) -> ReportDocument:
    """Parse input bytes and run both tests."""
    records = parse_records(data)
    # duplicates are flagged in the report itself
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DuplicateRatioWarning)
        sample = make_ratio_sample([r.observed for r in records], [r.forecast for r in records])
    verdict = accuracy_test(sample, alpha)
    binomial = binomial_sign_test(sample.ratios, alpha)
    digest = "sha256:" + hashlib.sha256(data).hexdigest()
    return ReportDocument.build(sample, verdict, binomial, alpha, digest)


# -- power configs ------------------------------------------------------------

_SCENARIO_KEYS = {"label", "family", "n", "beta_grid", "reps", "alpha", "seed", "normality_gate"}


def _beta_grid(spec, family):
    if spec is None:
        return default_beta_grid(family)
    if isinstance(spec, dict):
        extra = set(spec) - {"start", "stop", "num"}
        if extra or not {"start", "stop", "num"} <= set(spec):
            raise InputError("beta_grid object needs exactly start, stop, num")
        return tuple(float(b) for b in np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"])))
    if isinstance(spec, list):
        return tuple(float(b) for b in spec)
    raise InputError("beta_grid must be a list or {start, stop, num}")


def _family(spec):
    if not isinstance(spec, dict) or "name" not in spec:
        raise InputError('family must be an object with a "name"')
    params = dict(spec)
    name = params.pop("name")
    if name not in FAMILIES:
        raise InputError(f"unknown family {name!r}; expected one of {', '.join(FAMILIES)}")
    try:
        return FAMILIES[name](**{k: float(v) for k, v in params.items()})
    except TypeError as exc:
        raise InputError(f"bad parameters for {name}: {exc}") from None


def scenarios_from_config(config: dict, seed: Optional[int] = None, reps: Optional[int] = None) -> list[PowerScenario]:
    """Build scenarios from a config tree.

    Top-level keys are defaults for every entry of ``scenarios``; without a
    ``scenarios`` list the top level is itself the single scenario.
    """
    if not isinstance(config, dict):
        raise InputError("config must be a JSON object")
    defaults = {k: v for k, v in config.items() if k != "scenarios"}
    entries = config.get("scenarios", [{}])
    if not isinstance(entries, list) or not entries:
        raise InputError("scenarios must be a non-empty list")
    out = []
    for i, entry in enumerate(entries):
        merged = {**defaults, **entry}
        unknown = set(merged) - _SCENARIO_KEYS
        if unknown:
            raise InputError(f"scenario {i}: unknown keys {', '.join(sorted(unknown))}")
        if "family" not in merged or "n" not in merged:
            raise InputError(f"scenario {i}: family and n are required")
        if seed is not None:
            merged["seed"] = seed
        if reps is not None:
            merged["reps"] = reps
        family = _family(merged["family"])
        try:
            out.append(
                PowerScenario(
                    family=family,
                    beta_grid=_beta_grid(merged.get("beta_grid"), family),
                    n=merged["n"],
                    reps=merged.get("reps", DEFAULT_REPS),
                    alpha=float(merged.get("alpha", DEFAULT_ALPHA)),
                    seed=merged.get("seed", 0),
                    normality_gate=merged.get("normality_gate", "non_rejection"),
                    label=str(merged.get("label", f"scenario{i}")),
                )
            )
        except (DomainError, TypeError, ValueError) as exc:
            raise InputError(f"scenario {i}: {exc}") from None
    return out


POWER_COLUMNS = (
    "label",
    "family",
    "params",
    "n",
    "reps",
    "alpha",
    "seed",
    "normality_gate",
    "beta",
    "reject_rate_accuracy",
    "reject_rate_binomial",
    "normality_gate_rate",
    "reject_rate_ttest",
    "mc_std_err_accuracy",
    "mc_std_err_binomial",
)


def power_table(scenarios: list[PowerScenario], workers: int = 1) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(POWER_COLUMNS)
    for sc in scenarios:
        fam = sc.family
        params = ";".join(f"{k}={_fmt(v)}" for k, v in vars(fam).items())
        for p in run_power_curve(sc, workers=workers):
            writer.writerow(
                [
                    sc.label,
                    type(fam).__name__,
                    params,
                    sc.n,
                    sc.reps,
                    _fmt(sc.alpha),
                    sc.seed,
                    sc.normality_gate,
                    _fmt(p.beta),
                    _fmt(p.reject_rate_accuracy),
                    _fmt(p.reject_rate_binomial),
                    _fmt(p.normality_gate_rate),
                    _fmt(p.reject_rate_ttest),
                    _fmt(p.mc_std_err_accuracy),
                    _fmt(p.mc_std_err_binomial),
                ]
            )
    return buf.getvalue()


TABLE1_COLUMNS = ("case", "a", "b", "n", "reps", "reject_pct", "mc_std_err_pct")


def table1_table(reps: int, seed: int = 0, workers: int = 1) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE1_COLUMNS)
    for row in run_table1(reps=reps, seed=seed, workers=workers):
        writer.writerow(
            [row.case, _fmt(row.a), _fmt(row.b), row.n, row.reps, _fmt(row.reject_pct), _fmt(row.mc_std_err_pct)]
        )
    return buf.getvalue()


# -- entry point --------------------------------------------------------------


def _write(text: str, path: Optional[str]):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _alpha(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gmaccuracy",
        description="Geometric-mean forecast accuracy test, sign test and power studies.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="test a file of observed/forecast pairs")
    p.add_argument("input", help="delimited file with header period,observed,forecast ('-' for stdin)")
    p.add_argument("--alpha", type=_alpha, default=DEFAULT_ALPHA)
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("--output", help="write the report here instead of stdout")

    p = sub.add_parser("power", help="Monte Carlo power curves from a JSON scenario config")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="CSV destination (default stdout)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--reps", type=int, help="override the config replication count")
    p.add_argument("--workers", type=int, default=1, help="processes for grid points (results do not depend on it)")

    p = sub.add_parser("table1", help="Shapiro-Wilk rejection rates for gamma log-ratios")
    p.add_argument("--reps", type=int, default=TABLE1_REPS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="CSV destination (default stdout)")
    p.add_argument("--workers", type=int, default=1)
    return parser


def _cmd_test(args) -> int:
    if args.input == "-":
        data = sys.stdin.buffer.read()
    else:
        with open(args.input, "rb") as fh:
            data = fh.read()
    try:
        report = run_test(data, args.alpha)
    except DegenerateError as exc:
        raise InputError(f"degenerate sample: {exc}") from None
    text = report.to_json() if args.format == "structured" else report.to_text()
    _write(text, args.output)
    return report.exit_code


def _cmd_power(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.config}: invalid JSON: {exc}") from None
    scenarios = scenarios_from_config(config, seed=args.seed, reps=args.reps)
    _write(power_table(scenarios, workers=args.workers), args.output)
    return 0


def _cmd_table1(args) -> int:
    if args.reps < 1:
        raise InputError("reps must be >= 1")
    _write(table1_table(args.reps, seed=args.seed, workers=args.workers), args.output)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"test": _cmd_test, "power": _cmd_power, "table1": _cmd_table1}[args.command]
    try:
        return handler(args)
    except (GMAccuracyError, OSError) as exc:
        print(f"gmaccuracy {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
