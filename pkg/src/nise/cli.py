"""Command-line front end.

Exit codes: 0 success, 1 estimation or model failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from nise import __version__
from nise.dataset import Dataset
from nise.errors import ConfigError, NiseError
from nise.estimators import nise_fit, ols_equation, tsls_fit
from nise.resample import DEFAULT_B, pairs_bootstrap, substream
from nise.simulate import (
    ESTIMATORS,
    EXOGENOUS,
    SCENARIOS,
    builtin_scenario,
    gen_market_sample,
    parse_config,
    run_replications,
)

EXIT_OK, EXIT_MODEL, EXIT_USAGE = 0, 1, 2
LABELS = {"ols": "OLS", "tsls": "TSLS", "nise": "NISE"}
FITTERS = {"ols": ols_equation, "tsls": tsls_fit, "nise": nise_fit}


class UsageError(Exception):
    pass


@dataclass
class RunReport:
    """Everything a run prints, kept once so text and JSON cannot drift apart."""

    command: str
    flags: dict
    seed: int | None
    coefficients: list[dict] = field(default_factory=list)
    tests: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def json_lines(self) -> str:
        records = [{"type": "invocation", "command": self.command, "flags": self.flags, "seed": self.seed}]
        records += [{"type": "coefficient", **row} for row in self.coefficients]
        records += [{"type": "test", **row} for row in self.tests]
        records += [{"type": "warning", "message": w} for w in self.warnings]
        if self.summary:
            records.append({"type": "summary", **self.summary})
        return "\n".join(json.dumps(r, allow_nan=True) for r in records) + "\n"


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.3f}"


# -- estimate ---------------------------------------------------------------


def read_csv(path: str) -> dict[str, np.ndarray]:
    """UTF-8, comma-separated, header row, '.' decimals, no missing values."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"--data: cannot read {path}: {exc}") from None
    if not rows:
        raise UsageError(f"--data: {path} is empty")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header) or any(not h for h in header):
        raise UsageError(f"--data: header has blank or duplicate names: {header}")
    values = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise UsageError(f"--data: row {i} has {len(row)} fields, header has {len(header)}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                v = math.nan
            if not math.isfinite(v):
                raise UsageError(f"--data: row {i}, column {header[j]!r}: bad value {cell!r}")
            values[i - 2, j] = v
    return {h: values[:, j] for j, h in enumerate(header)}


def _names(flag: str, value: str | None) -> list[str]:
    if value is None:
        return []
    return [s.strip() for s in value.split(",") if s.strip()]


def _columns(table: dict, flag: str, names: list[str]) -> np.ndarray | None:
    missing = [c for c in names if c not in table]
    if missing:
        raise UsageError(f"{flag}: unknown column(s) {', '.join(missing)}")
    return np.column_stack([table[c] for c in names]) if names else None


def cmd_estimate(args) -> RunReport:
    endog = _names("--endog", args.endog)
    exog = _names("--exog", args.exog)
    inst = _names("--instruments", args.instruments)
    if not endog:
        raise UsageError("--endog: name at least one column")
    methods = ESTIMATORS if args.method == "all" else (args.method,)
    if "tsls" in methods and not inst:
        raise UsageError("--instruments: required for --method tsls/all")
    if args.bootstrap is not None:
        if args.bootstrap < 1:
            raise UsageError("--bootstrap: must be a positive integer")
        if args.seed is None:
            raise UsageError("--seed: required with --bootstrap")

    table = read_csv(args.data)
    for col in _names("--log", args.log):
        if col not in table:
            raise UsageError(f"--log: unknown column {col!r}")
        if np.any(table[col] <= 0):
            raise NiseError(f"cannot take log of nonpositive values in column {col!r}")
        table[col] = np.log(table[col])
    data = Dataset(
        _columns(table, "--endog", endog),
        _columns(table, "--exog", exog),
        _columns(table, "--instruments", inst),
        tuple(endog),
        tuple(exog),
        tuple(inst),
    )

    report = RunReport("estimate", _flags(args), args.seed)
    report.summary = {"n": data.n, "lhs": endog[0]}
    for m in methods:
        fit = FITTERS[m](data)
        boot = None
        if args.bootstrap is not None:
            boot = pairs_bootstrap(data, FITTERS[m], args.bootstrap, args.seed)
            if boot.failures:
                report.warnings.append(f"{LABELS[m]}: {boot.failures} bootstrap resamples failed")
        for i, name in enumerate(fit.names):
            row = {"estimator": LABELS[m], "coefficient": name,
                   "estimate": float(fit.params[i]), "se": float(fit.se[i])}
            if boot is not None:
                row["se_boot_qn"] = float(boot.se_qn[i])
                row["se_boot_sd"] = float(boot.se_sd[i])
            report.coefficients.append(row)
        records = []
        if m == "tsls":
            records = list(fit.first_stage) + ([fit.j] if fit.j else [])
        elif m == "nise":
            records = [fit.z] if fit.z else []
            report.warnings.extend(f"NISE: {w}" for w in fit.warnings)
            report.summary["lambda_min"] = fit.lambda_min
            if fit.z is None:
                report.warnings.append("NISE: Z test needs at least two endogenous and two exogenous variables")
        for rec in records:
            report.tests.append({"estimator": LABELS[m], **rec.to_dict()})
    return report


def render_estimate(report: RunReport) -> str:
    boot = any("se_boot_qn" in r for r in report.coefficients)
    head = f"{'estimator':<10}{'coefficient':<16}{'estimate':>10}{'se':>10}"
    if boot:
        head += f"{'boot_qn':>10}{'boot_sd':>10}"
    lines = [_banner(report), f"lhs: {report.summary['lhs']}   n = {report.summary['n']}", "", head]
    for r in report.coefficients:
        line = f"{r['estimator']:<10}{r['coefficient']:<16}{fmt(r['estimate']):>10}{fmt(r['se']):>10}"
        if boot:
            line += f"{fmt(r['se_boot_qn']):>10}{fmt(r['se_boot_sd']):>10}"
        lines.append(line)
    if report.tests:
        lines += ["", f"{'estimator':<10}{'test':<6}{'statistic':>12}{'df':>12}{'p_value':>10}"]
        for t in report.tests:
            df = ",".join(str(d) for d in t["df"])
            lines.append(f"{t['estimator']:<10}{t['test']:<6}{fmt(t['statistic']):>12}{df:>12}{fmt(t['p_value']):>10}")
    if "lambda_min" in report.summary:
        lines += ["", f"lambda_min = {fmt(report.summary['lambda_min'])}"]
    lines += [f"warning: {w}" for w in report.warnings]
    return "\n".join(lines) + "\n"


# -- simulate ---------------------------------------------------------------


def cmd_simulate(args) -> RunReport:
    if args.reps < 1:
        raise UsageError("--reps: must be a positive integer")
    if args.n is not None and args.n < 1:
        raise UsageError("--n: must be a positive integer")
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"--config: cannot read {args.config}: {exc}") from None
        try:
            cfg = parse_config(text, args.n)
        except ConfigError as exc:
            raise UsageError(f"--config: {exc}") from None
    else:
        if args.n is None:
            raise UsageError("--n: required with --scenario")
        cfg = builtin_scenario(args.scenario, args.n)

    if args.emit_data:
        sample = gen_market_sample(cfg, substream(args.seed, 0))
        cols = list(sample.frame)
        with open(args.emit_data, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            w.writerows(zip(*(map(repr, map(float, sample.frame[c])) for c in cols)))

    summary = run_replications(cfg, args.reps, args.seed, workers=args.workers)
    report = RunReport("simulate", _flags(args), args.seed)
    for est, rows in summary.table().items():
        for name, cs in rows.items():
            report.coefficients.append(
                {"estimator": LABELS[est], "coefficient": name, "median": cs.median, "qn": cs.qn}
            )
    owner = {"F": "TSLS", "J": "TSLS", "Z": "NISE"}
    for key, p in summary.p_values.items():
        report.tests.append({"estimator": owner[key], "test": key, "median_p_value": p})
    for est, k in summary.failures.items():
        if k:
            report.warnings.append(f"{LABELS[est]}: {k} of {summary.reps} replications failed ({'; '.join(summary.errors[est][:3])})")
    report.summary = {
        "scenario": summary.label,
        "n": summary.n,
        "reps": summary.reps,
        "corr_p_ud": summary.corr_p_ud,
        "failures": {LABELS[e]: k for e, k in summary.failures.items()},
    }
    return report


def render_simulate(report: RunReport) -> str:
    s = report.summary
    ests = [LABELS[e] for e in ESTIMATORS]
    width = 10
    lines = [
        _banner(report),
        f"scenario {s['scenario']}   n = {s['n']}   reps = {s['reps']}",
        "median in simulation, Qn scale beneath",
        "",
        f"{'':<16}" + "".join(f"{e:>{width}}" for e in ests),
    ]
    by_key = {(r["estimator"], r["coefficient"]): r for r in report.coefficients}
    order: list[str] = []
    for r in report.coefficients:
        if r["coefficient"] not in order:
            order.append(r["coefficient"])
    for name in order:
        cells = [by_key.get((e, name)) for e in ests]
        lines.append(f"{name:<16}" + "".join(f"{fmt(c['median']) if c else '':>{width}}" for c in cells))
        lines.append(f"{'':<16}" + "".join(f"{'(' + fmt(c['qn']) + ')' if c else '':>{width}}" for c in cells))
    for t in report.tests:
        cells = [fmt(t["median_p_value"]) if e == t["estimator"] else "" for e in ests]
        lines.append(f"{t['test'] + ' signif':<16}" + "".join(f"{c:>{width}}" for c in cells))
    lines.append("")
    lines.append(f"{'corr(p, u_d)':<16}{fmt(s['corr_p_ud']):>{width}}")
    lines.append(f"{'failures':<16}" + "".join(f"{s['failures'].get(e, 0):>{width}}" for e in ests))
    lines += [f"warning: {w}" for w in report.warnings]
    return "\n".join(lines) + "\n"


# -- plumbing ---------------------------------------------------------------


def _flags(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "render") and v not in (None, False)}


def _banner(report: RunReport) -> str:
    flags = " ".join(f"--{k.replace('_', '-')} {v}" for k, v in report.flags.items() if k != "command")
    return f"nise {report.command} {flags}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nise", description="Estimate one equation of a simultaneous system by OLS, TSLS or NISE.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="fit OLS/TSLS/NISE to a CSV file")
    est.add_argument("--data", required=True, help="CSV file with a header row")
    est.add_argument("--endog", required=True, help="endogenous columns; the first is normalized on the left")
    est.add_argument("--exog", required=True, help="included exogenous columns (may be empty)")
    est.add_argument("--instruments", help="excluded exogenous columns, needed for TSLS")
    est.add_argument("--method", choices=("ols", "tsls", "nise", "all"), default="nise")
    est.add_argument("--bootstrap", type=int, metavar="B", help=f"pairs-bootstrap resamples (e.g. {DEFAULT_B})")
    est.add_argument("--seed", type=int)
    est.add_argument("--log", help="columns to log-transform before fitting")
    est.add_argument("--out", help="also write the report to this file")
    est.add_argument("--json", action="store_true", help="emit line-delimited JSON")
    est.set_defaults(func=cmd_estimate, render=render_estimate)

    sim = sub.add_parser("simulate", help="Monte Carlo study of the market model")
    which = sim.add_mutually_exclusive_group(required=True)
    which.add_argument("--scenario", choices=SCENARIOS)
    which.add_argument("--config", help="key=value scenario file")
    sim.add_argument("--n", type=int)
    sim.add_argument("--reps", type=int, required=True)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--emit-data", help=f"write one sample ({', '.join(('q', 'p') + EXOGENOUS)}) as CSV")
    sim.add_argument("--out", help="also write the report to this file")
    sim.add_argument("--json", action="store_true", help="emit line-delimited JSON")
    sim.set_defaults(func=cmd_simulate, render=render_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        report = args.func(args)
    except UsageError as exc:
        print(f"nise {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NiseError, ValueError, ArithmeticError) as exc:
        print(f"nise {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MODEL
    text = report.json_lines() if args.json else args.render(report)
    sys.stdout.write(text)
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"nise {args.command}: error: --out: {exc}", file=sys.stderr)
            return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
