"""Command-line interface.

Subcommands: ``test`` (one CSV column), ``simulate`` (write a series),
``density`` (null sample against the limit law), ``power`` (run a manifest
grid), ``rolling`` (expanding-window regression monitoring), ``fixture``
(write the synthetic factor dataset) and ``quantile`` (critical values).

Exit codes: 0 success, 1 internal error, 2 data or usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import limits
from .dgp import DgpSpec, simulate
from .inference import STATISTICS, change_test, law_for, normalize_statistic
from .power import KDE_RULE, density_check, density_overlay, parse_manifest, power_experiment
from .rolling import (
    DataError,
    RollingConfig,
    first_rejection,
    fixture_csv,
    load_table,
    make_factor_fixture,
    rolling_csv,
    run_rolling,
)
from .stats import DegenerateVarianceError, TrimSpec
from .svg import line_chart
from .variance import parse_variance

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _write(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def _common(p: argparse.ArgumentParser, stat_default="renyi"):
    p.add_argument("--stat", default=stat_default, help="renyi, cusum or de (comma-separated where several are allowed)")
    p.add_argument("--trim", default="log", help="log | quarter | sqrt | frac=θ | k=N")
    p.add_argument("--variance", default="kernel", help="known=σ² | split | kernel")
    p.add_argument("--kernel", default="bartlett")
    p.add_argument("--bandwidth", default="andrews", help="andrews | h=H")
    p.add_argument("--alpha", type=float, default=0.05)


def _vcfg(args):
    try:
        return parse_variance(args.variance, args.kernel, args.bandwidth)
    except ValueError as exc:
        raise UsageError(f"--variance/--kernel/--bandwidth: {exc}") from None


def _trim(args):
    try:
        return TrimSpec.parse(args.trim)
    except ValueError as exc:
        raise UsageError(f"--trim: {exc}") from None


def _alpha(args):
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    return args.alpha


def _stats(text, single=False):
    try:
        names = [normalize_statistic(s.strip()) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(f"--stat: {exc}") from None
    if not names or (single and len(names) != 1):
        raise UsageError("--stat needs exactly one statistic" if single else "--stat is empty")
    return names


def cmd_test(args) -> int:
    name = _stats(args.stat, single=True)[0]
    trim, vcfg, alpha = _trim(args), _vcfg(args), _alpha(args)
    x = load_table(args.input).column(args.column)
    T = len(x)
    if name == "renyi":
        try:
            tT = trim.resolve(T)
        except ValueError as exc:
            raise DataError(f"series of length {T} too short: {exc}") from None
        if T < 4 * tT:
            raise DataError(f"series of length {T} too short: need T >= 4 t_T = {4 * tT}")
    try:
        out = change_test(x, name, trim, vcfg)
    except DegenerateVarianceError as exc:
        raise DataError(str(exc)) from None
    report = {
        "statistic": out.statistic,
        "T": T,
        "scaled": out.scaled,
        "raw": out.raw,
        "p_value": out.p_value,
        "argmax": out.argmax,
        "law": out.law,
        "t_T": out.t_T,
        "sigma_hat": out.sigma_hat,
        "trim": trim.describe(),
        "variance": vcfg.describe(),
        "alpha": alpha,
        "decision": out.decision(alpha),
    }
    if args.format == "json":
        text = json.dumps(report, indent=2) + "\n"
    else:
        keys = list(report)
        text = ",".join(keys) + "\n" + ",".join("" if report[k] is None else str(report[k]) for k in keys) + "\n"
    _write(args.output, text)
    return EXIT_OK


def _spec_from_args(args) -> DgpSpec:
    text = Path(args.spec).read_text(encoding="utf-8") if args.spec else ""
    try:
        spec = DgpSpec.from_text(text)
        changes = {}
        for key in ("errors", "T", "mu", "delta", "tstar", "seed", "burn_in"):
            value = getattr(args, key)
            if value is not None:
                changes[key] = value
        params = dict(spec.params)
        for item in args.param or []:
            k, sep, v = item.partition("=")
            if not sep:
                raise ValueError(f"--param expects key=value, got {item!r}")
            params[k.strip()] = float(v)
        if "errors" in changes and changes["errors"] != spec.errors and not args.param:
            params = {}
        return spec.with_(**changes, params=params)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"series specification: {exc}") from None


def cmd_simulate(args) -> int:
    spec = _spec_from_args(args)
    x = simulate(spec)
    lines = ["t,x"] + [f"{t},{v:.17g}" for t, v in enumerate(x, 1)]
    _write(args.output, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_power(args) -> int:
    try:
        text = Path(args.manifest).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read manifest {args.manifest}: {exc.strerror}") from None
    try:
        grid, dgp = parse_manifest(text)
        overrides = {k: v for k, v in (("seed", args.seed), ("reps", args.reps)) if v is not None}
        grid = replace(grid, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    table = power_experiment(grid, dgp)
    if args.format == "json":
        rows = [dict(c.__dict__, rate=c.rate) for c in table.cells]
        text = json.dumps({"cells": rows, "diagnostics": table.diagnostics}, indent=2) + "\n"
    else:
        text = table.to_csv()
    _write(args.output, text)
    if args.svg:
        series = {}
        for name, delta, rate in table.to_long():
            series.setdefault(name, ([], []))
            series[name][0].append(delta)
            series[name][1].append(rate)
        series = {k: (xs, ys) for k, (xs, ys) in series.items()}
        svg = line_chart(series, title=f"Rejection rate, {dgp.errors} errors", xlabel="Δ", ylabel="rate", hline=grid.alpha)
        _write(args.svg, svg)
    return EXIT_OK


def cmd_density(args) -> int:
    spec = _spec_from_args(args)
    trim = _trim(args)
    if args.reps < 2:
        raise UsageError("reps must be >= 2")
    try:
        sample, ks = density_check(spec, spec.T, trim, args.reps, spec.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = {
        "errors": spec.errors,
        "T": spec.T,
        "t_T": trim.resolve(spec.T),
        "reps": args.reps,
        "seed": spec.seed,
        "ks_distance": ks,
    }
    _write(args.output, json.dumps(report, indent=2) + "\n")
    if args.svg:
        grid, kde, limit = density_overlay(sample)
        svg = line_chart(
            {f"T={spec.T}": (grid, kde), "limit": (grid, limit)},
            title=f"Scaled D_T density, {spec.errors} errors",
            xlabel="x",
            ylabel="density",
            desc=f"Gaussian kernel density estimate, bandwidth rule: {KDE_RULE}",
        )
        _write(args.svg, svg)
    return EXIT_OK


def _parse_ends(text, n):
    if text is None:
        return tuple(range(max(n - 65, 1), n))
    try:
        if ":" in text:
            a, b = text.split(":")
            a, b = int(a), int(b)
            a, b = (a + n if a < 0 else a), (b + n if b < 0 else b)
            return tuple(range(a, b + 1))
        return tuple(int(v) + n if int(v) < 0 else int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--ends expects A:B or a comma list of row indices, got {text!r}") from None


def _json_safe(res: dict) -> dict:
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in res.items()}


def cmd_rolling(args) -> int:
    table = load_table(args.input)
    n = len(table.rows)
    regressors = tuple(r.strip() for r in args.regressors.split(",") if r.strip()) if args.regressors else ()
    try:
        cfg = RollingConfig(
            response=args.response,
            regressors=regressors,
            start=args.start,
            ends=_parse_ends(args.ends, n),
            statistics=tuple(_stats(args.stat)),
            trim=_trim(args),
            vcfg=_vcfg(args),
            alpha=_alpha(args),
        )
    except ValueError as exc:
        raise UsageError(f"rolling configuration: {exc}") from None
    rows = run_rolling(cfg, table)
    if args.format == "json":
        payload = [
            {"end": r.end, "label": r.label, **{s: _json_safe(r.results[s]) for s in cfg.statistics}} for r in rows
        ]
        text = json.dumps(
            {"rows": payload, "first_rejection": {s: first_rejection(rows, s, cfg.alpha) for s in cfg.statistics}}, indent=2
        ) + "\n"
    else:
        text = rolling_csv(rows, cfg.statistics)
    _write(args.output, text)
    if args.svg:
        series = {}
        for s in cfg.statistics:
            ok = [r for r in rows if r.results[s]["status"] == "ok"]
            series[s] = ([r.end for r in ok], [r.results[s]["neglog10p"] for r in ok])
        labels = {r.end: r.label for r in rows}
        svg = line_chart(
            series, title="Residual change tests", xlabel="end of sample", ylabel="-log10(p)",
            hline=-math.log10(cfg.alpha), xlabels=labels,
        )
        _write(args.svg, svg)
    return EXIT_OK


def cmd_fixture(args) -> int:
    try:
        labels, y, F = make_factor_fixture(args.seed, n=args.n, break_rows=args.break_rows, alpha_shift=args.shift)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(args.output, fixture_csv(labels, y, F))
    return EXIT_OK


def cmd_quantile(args) -> int:
    law = law_for(_stats(args.stat, single=True)[0])
    _write(args.output, f"{limits.quantile(law, 1.0 - _alpha(args)):.10g}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="renyicp", description="Change-point tests for a change in the mean.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="test one CSV column for a change in mean")
    p.add_argument("input")
    p.add_argument("--column", required=True)
    _common(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="write a simulated series as CSV with columns t,x")
    p.add_argument("--spec", help="key=value specification file")
    p.add_argument("--errors")
    p.add_argument("--T", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--tstar")
    p.add_argument("--seed", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--param", action="append", help="model coefficient, e.g. rho=0.5 (repeatable)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("density", help="null sample of the scaled Rényi statistic against its limit law")
    p.add_argument("--spec", help="key=value specification file")
    p.add_argument("--errors")
    p.add_argument("--T", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--param", action="append", help="model coefficient, e.g. rho=0.5 (repeatable)")
    p.add_argument("--trim", default="log", help="log | quarter | sqrt | frac=θ | k=N")
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--svg")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_density, mu=None, delta=None, tstar=None)

    p = sub.add_parser("power", help="run a size/power grid from a manifest")
    p.add_argument("manifest")
    p.add_argument("--seed", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--svg")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("rolling", help="expanding-window regression with residual change tests")
    p.add_argument("input")
    p.add_argument("--response", required=True)
    p.add_argument("--regressors", default="", help="comma-separated columns; an intercept is always included")
    p.add_argument("--start", type=int, default=0, help="first data row of every window (0-based)")
    p.add_argument("--ends", help="inclusive end rows A:B or a comma list; negatives count from the end (default: last 65 rows)")
    _common(p, stat_default=",".join(STATISTICS))
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--svg")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_rolling)

    p = sub.add_parser("fixture", help="write the synthetic five-factor dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=965)
    p.add_argument("--break-rows", dest="break_rows", type=int, default=10)
    p.add_argument("--shift", type=float, default=1.25, help="intercept change in noise standard deviations")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("quantile", help="critical value of a statistic's null law")
    p.add_argument("--stat", default="renyi")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_quantile)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc.filename}: no such file", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
