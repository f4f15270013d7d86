"""Command-line front end.

    radchain infinite  --config run.cfg --out flip.csv
    radchain resolvent --config run.cfg --out spectrum.csv
    radchain radiate   --config run.cfg --out emission.csv --route both
    radchain validate  [--only bessel]

Every CSV gets '#' header lines with the code version and the resolved
parameters; a JSON report is written next to it (same stem, ``.json``).
Exit codes: 0 success, 1 numerical-accuracy failure, 2 config error,
3 pre-flight failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .chain import eigen_system, flip_probability
from .config import RunConfig, load_config
from .errors import ConfigError, InsufficientDataError, PreflightError, RadchainError, RangeError
from .propagator import Route, TimeSeries, chain_population, choose_mode_count, compare_decay_models, fit_decay
from .resolvent import preflight, sample_spectrum, write_spectral_csv

log = logging.getLogger("radchain")

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG, EXIT_PREFLIGHT = 0, 1, 2, 3


def _clean(obj):
    """JSON-safe copy: NaN/inf become None, numpy scalars become Python numbers."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _header(cfg: RunConfig, command: str) -> list[str]:
    return [f"radchain {__version__}", f"command {command}",
            "params " + json.dumps(_clean(cfg.snapshot()), sort_keys=True)]


def _paths(cfg: RunConfig, out, command: str):
    csv_path = Path(out or cfg.output or f"radchain_{command}.csv")
    return csv_path, csv_path.with_suffix(".json")


def _write_json(path: Path, cfg: RunConfig, command: str, report: dict) -> None:
    doc = {"version": __version__, "command": command, "params": cfg.snapshot(), **report}
    try:
        path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc.strerror}") from None


def _guard_io(fn, path, *args):
    try:
        fn(path, *args)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc.strerror}") from None


# subcommands -------------------------------------------------------------------------


def cmd_infinite(cfg: RunConfig, out=None) -> int:
    t_lo, t_hi, n = cfg.infinite_window
    t = np.linspace(t_lo, t_hi, n)
    cols = {j: flip_probability(j, t) for j in cfg.infinite_j}
    csv_path, json_path = _paths(cfg, out, "infinite")

    def write(path):
        with open(path, "w", newline="") as fh:
            for line in _header(cfg, "infinite"):
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"P_{j}" for j in cfg.infinite_j])
            for k in range(t.size):
                w.writerow([f"{t[k]:.17g}"] + [f"{cols[j][k]:.17g}" for j in cfg.infinite_j])

    _guard_io(write, csv_path)
    fits = {}
    for j in cfg.infinite_j:
        try:
            res = fit_decay(TimeSeries(t, 1.0 - cols[j]), t_lo, t_hi, "power", seed=cfg.seed)
            fits[f"P_{j}"] = res.as_dict()
        except InsufficientDataError as exc:
            fits[f"P_{j}"] = {"model": "power", "skipped": str(exc)}
    _write_json(json_path, cfg, "infinite", {"fits": fits, "csv": csv_path.name})
    log.info("wrote %s and %s", csv_path, json_path)
    return EXIT_OK


def _run_preflight(cfg: RunConfig, json_path: Path, command: str):
    rep = preflight(cfg.chain, cfg.field, raise_on_fail=False)
    if not rep.ok:
        _write_json(json_path, cfg, command, {"preflight": rep.as_dict()})
        preflight(cfg.chain, cfg.field, raise_on_fail=True)  # raises with the hint
    return rep


def cmd_resolvent(cfg: RunConfig, out=None) -> int:
    csv_path, json_path = _paths(cfg, out, "resolvent")
    rep = _run_preflight(cfg, json_path, "resolvent")
    lo, hi, n = cfg.resolvent_window
    p = np.linspace(lo, hi, n)
    p = p[~np.isin(p, eigen_system(cfg.chain).eigenvalues)]  # exact poles of f_mn
    nn, mm = cfg.resolvent_nm
    samples = sample_spectrum(cfg.chain, cfg.field, nn, mm, p)
    samples[1].check(cfg.field)
    _guard_io(write_spectral_csv, csv_path, samples, _header(cfg, "resolvent"))
    _write_json(json_path, cfg, "resolvent",
                {"preflight": rep.as_dict(), "n": nn, "m": mm, "csv": csv_path.name})
    return EXIT_OK


def cmd_radiate(cfg: RunConfig, out=None, route: str | None = None) -> int:
    route = (route or cfg.route).lower()
    if route not in ("fourier", "discretized", "both"):
        raise ConfigError(f"unknown route {route!r}")
    csv_path, json_path = _paths(cfg, out, "radiate")
    rep = _run_preflight(cfg, json_path, "radiate")
    t = cfg.times
    spec, params, m = cfg.chain, cfg.field, cfg.radiate_m
    pops, report = {}, {"preflight": rep.as_dict(), "m": m, "route": route}
    try:
        if route in ("fourier", "both"):
            pops["fourier"] = chain_population(spec, params, m, t, Route.FOURIER).values
        if route in ("discretized", "both"):
            K = choose_mode_count(params, float(t.max()))
            pops["discretized"] = chain_population(spec, params, m, t, Route.DISCRETIZED, K=K).values
            report["modes"] = K
    except RangeError as exc:
        raise ConfigError(f"time window outside route validity: {exc}") from None

    zero = params.v == 0
    cols = {f"P_{k}": (np.zeros_like(v) if zero else np.clip(1.0 - v, 0.0, 1.0)) for k, v in pops.items()}
    if route == "both":
        cols["agreement"] = np.abs(cols["P_fourier"] - cols["P_discretized"])
        report["agreement_max"] = float(cols["agreement"].max())

    def write(path):
        with open(path, "w", newline="") as fh:
            for line in _header(cfg, "radiate"):
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + list(cols))
            for k in range(t.size):
                w.writerow([f"{t[k]:.17g}"] + [f"{c[k]:.17g}" for c in cols.values()])

    _guard_io(write, csv_path)
    primary = "fourier" if "fourier" in pops else "discretized"
    series = TimeSeries(t, pops[primary])
    fits = []
    for lo, hi in cfg.fit_windows:
        try:
            fits.append(compare_decay_models(series, lo, hi, seed=cfg.seed))
        except InsufficientDataError as exc:
            fits.append({"window": [lo, hi], "skipped": str(exc)})
    exps = [f["power"]["parameter"] for f in fits if "power" in f]
    report.update({"fits": fits, "fit_route": primary, "csv": csv_path.name,
                   "exponents_increasing": bool(len(exps) > 1 and all(np.diff(exps) > 0))})
    _write_json(json_path, cfg, "radiate", report)
    return EXIT_OK


def cmd_validate(cfg: RunConfig, out=None, only: str | None = None) -> int:
    from .validation import GROUPS, run_checks

    if only is not None and only not in GROUPS:
        raise ConfigError(f"--only must be one of {sorted(GROUPS)}, got {only!r}")
    results = run_checks(cfg.field, only)
    doc = {"version": __version__, "command": "validate", "params": cfg.snapshot(),
           "only": only, "passed": all(r.passed for r in results),
           "results": [r.as_dict() for r in results]}
    text = json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"
    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise ConfigError(f"cannot write {out}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)
    for r in results:
        log.info("%-4s %s.%s value=%.3e tol=%.1e", "PASS" if r.passed else "FAIL",
                 r.group, r.name, r.value, r.tolerance)
    return EXIT_OK if doc["passed"] else EXIT_NUMERICAL


# entry point -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value run configuration")
    common.add_argument("--out", metavar="PATH", help="output CSV (JSON report alongside)")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="radchain", description=__doc__.split("\n\n")[0],
                                     parents=[common])
    parser.add_argument("--version", action="version", version=f"radchain {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("infinite", parents=[common], help="flip probabilities of the infinite chain")
    sub.add_parser("resolvent", parents=[common], help="resolvent boundary values and scan")
    rad = sub.add_parser("radiate", parents=[common], help="emission probability of the finite chain")
    rad.add_argument("--route", choices=["fourier", "discretized", "both"])
    val = sub.add_parser("validate", parents=[common], help="run the invariant/oracle suite")
    val.add_argument("--only", metavar="NAME", help="run one group (bessel, chain, field, resolvent, propagator)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        if args.command == "infinite":
            return cmd_infinite(cfg, args.out)
        if args.command == "resolvent":
            return cmd_resolvent(cfg, args.out)
        if args.command == "radiate":
            return cmd_radiate(cfg, args.out, args.route)
        return cmd_validate(cfg, args.out, args.only)
    except ConfigError as exc:
        print(f"radchain: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreflightError as exc:
        print(f"radchain: {exc}", file=sys.stderr)
        return EXIT_PREFLIGHT
    except RadchainError as exc:
        print(f"radchain: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
