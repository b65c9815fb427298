"""
Batch command-line front end.

    correlated-errors check --config run.json [--expect-violating]
    correlated-errors sweep --config run.json --out DIR [--quick]
    correlated-errors fit   [CSV ...] [--config run.json] [--model-kind KIND] --out DIR
    correlated-errors qecc  --config run.json --out DIR

Exit codes: 0 success / claim holds, 1 claim fails or numerical failure,
2 usage or configuration error, 3 insufficient data for a fit.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from dataclasses import dataclass

import numpy as np

from . import qecc, scaling
from .exceptions import (InsufficientDataError, ModelDefinitionError, NumericalError,
                         ValidationError)
from .models import (MODEL_KINDS, HamiltonianSpec, load_model_config, model_to_config,
                     verify_no_qubit_interaction)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3

RUN_KEYS = frozenset({"model", "sweep", "observables", "output_dir", "seed", "code", "logical"})
SWEEP_KEYS = frozenset({"t_min", "t_max", "n_points", "spacing", "times"})
QUICK_TOLERANCE_SCALE = 1.5


class UsageError(Exception):
    pass


@dataclass(frozen=True, eq=False)
class RunConfig:
    model: HamiltonianSpec
    model_doc: dict
    times: tuple[float, ...]
    observables: tuple[str, ...]
    output_dir: str | None
    seed: int
    code: str
    logical: np.ndarray


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return doc


def _sweep_times(sweep: dict, g: float, quick: bool) -> tuple[float, ...]:
    unknown = set(sweep) - SWEEP_KEYS
    if unknown:
        raise UsageError(f"unknown sweep keys: {sorted(unknown)}")
    if "times" in sweep:
        times = [float(t) for t in sweep["times"]]
        if any(t < 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
            raise UsageError("explicit times must be non-negative and strictly increasing")
        return tuple(times)
    n_points = int(sweep.get("n_points", scaling.DEFAULT_N_POINTS))
    if quick:
        n_points = max(scaling.MIN_POINTS, n_points // 2)
    if n_points < scaling.MIN_POINTS:
        raise UsageError(f"n_points must be >= {scaling.MIN_POINTS}")
    if "t_min" not in sweep and "t_max" not in sweep:
        return tuple(float(t) for t in scaling.default_times(g, n_points))
    t_min, t_max = float(sweep["t_min"]), float(sweep["t_max"])
    if not 0 < t_min < t_max:
        raise UsageError("need 0 < t_min < t_max")
    spacing = sweep.get("spacing", "log")
    if spacing == "log":
        times = np.logspace(np.log10(t_min), np.log10(t_max), n_points)
    elif spacing == "linear":
        times = np.linspace(t_min, t_max, n_points)
    else:
        raise UsageError(f"spacing must be 'log' or 'linear', got {spacing!r}")
    return tuple(float(t) for t in times)


def _logical(spec, seed: int) -> np.ndarray:
    if spec is None or spec == "default":
        return qecc.DEFAULT_LOGICAL
    if spec == "random":
        rng = np.random.default_rng(seed)
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        return v / np.linalg.norm(v)
    try:
        v = np.array([complex(re_, im) for re_, im in spec])
    except (TypeError, ValueError) as exc:
        raise UsageError("logical must be 'default', 'random' or [[re, im], [re, im]]") from exc
    if v.shape != (2,) or np.linalg.norm(v) == 0:
        raise UsageError("logical state must have two non-zero-norm amplitudes")
    return v / np.linalg.norm(v)


def load_run_config(path: str, quick: bool = False, seed: int | None = None) -> RunConfig:
    """Read a run config; a bare model document (with ``preset``) is accepted too."""
    doc = _load_json(path)
    if "preset" in doc:
        doc = {"model": doc}
    unknown = set(doc) - RUN_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    if "model" not in doc:
        raise UsageError("config needs a 'model' section")
    try:
        model = load_model_config(doc["model"])
    except (ValidationError, ModelDefinitionError, TypeError) as exc:
        raise UsageError(f"invalid model: {exc}") from exc
    seed = int(doc.get("seed", 0)) if seed is None else seed
    observables = doc.get("observables")
    if observables is None:
        observables = [f"weight_amplitude({m})" for m in range(1, model.space.n_qubits + 1)]
    try:
        observables = tuple(scaling.Observable.parse(o).label for o in observables)
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc
    times = _sweep_times(doc.get("sweep", {}), model.params.g, quick)
    return RunConfig(model, model_to_config(model), times, observables, doc.get("output_dir"),
                     seed, doc.get("code", "phaseflip3"), _logical(doc.get("logical"), seed))


# -- output helpers ----------------------------------------------------------------

def _out_dir(args, config: RunConfig | None) -> str:
    out = args.out or (config.output_dir if config else None)
    if not out:
        raise UsageError("no output directory: pass --out or set output_dir")
    os.makedirs(out, exist_ok=True)
    return out


def _write_json(obj, path: str | None):
    text = json.dumps(obj, indent=2, allow_nan=True) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def _slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", label).strip("_")


# -- commands -----------------------------------------------------------------------

def cmd_check(args) -> int:
    config = load_run_config(args.config, seed=args.seed)
    report = verify_no_qubit_interaction(config.model)
    out = {"model": config.model_doc, **report.to_dict(),
           "expect_violating": bool(args.expect_violating)}
    path = os.path.join(_out_dir(args, config), "check_report.json") if (args.out or config.output_dir) else None
    sys.stdout.write(_write_json(out, path))
    return EXIT_OK if report.holds != bool(args.expect_violating) else EXIT_FAIL


def _run_sweeps(config: RunConfig) -> list[scaling.SweepTable]:
    tables = []
    for obs in config.observables:
        tables.append(scaling.time_sweep(config.model, config.times, obs, logical=config.logical))
    return tables


def cmd_sweep(args) -> int:
    config = load_run_config(args.config, args.quick, args.seed)
    out = _out_dir(args, config)
    for table in _run_sweeps(config):
        path = os.path.join(out, f"sweep_{_slug(table.observable_label)}.csv")
        scaling.write_sweep_csv(table, path)
        print(path)
    return EXIT_OK


def _verdicts_for(fits: dict[str, scaling.ScalingFit], kind: str | None,
                  tol_scale: float) -> list[scaling.Verdict]:
    if kind is None:
        return []
    verdicts = []
    weight_fits = {}
    for label, fit in fits.items():
        obs = scaling.Observable.parse(label)
        if obs.kind == "weight_amplitude":
            weight_fits[obs.arg] = fit
        elif obs.kind == "factorization_residual":
            verdicts.append(scaling.factorization_verdict(fit, tol_scale))
        elif obs.kind == "dyson_defect":
            verdicts.append(scaling.dyson_verdict(fit, obs.arg, tol_scale))
        elif obs.kind == "qecc_infidelity":
            pair = {"protected": fit}
            if "unprotected_infidelity" in fits:
                pair["unprotected"] = fits["unprotected_infidelity"]
            try:
                verdicts.append(qecc.qecc_scaling_verdict(obs.arg, kind, pair, tol_scale))
            except ValidationError:
                pass
    if weight_fits:
        try:
            verdicts.extend(scaling.independence_verdict(weight_fits, kind, tol_scale))
        except ValidationError:
            pass
    return verdicts


def cmd_fit(args) -> int:
    config = load_run_config(args.config, args.quick, args.seed) if args.config else None
    tol_scale = QUICK_TOLERANCE_SCALE if args.quick else 1.0
    if args.csv:
        data: dict[str, list[tuple[float, float]]] = {}
        for path in args.csv:
            if not os.path.exists(path):
                raise UsageError(f"missing CSV file {path}")
            try:
                for label, pts in scaling.read_sweep_csv(path).items():
                    data.setdefault(label, []).extend(pts)
            except (ValidationError, KeyError, ValueError) as exc:
                raise UsageError(f"cannot parse {path}: {exc}") from exc
    elif config is not None:
        data = {t.observable_label: list(t.points) for t in _run_sweeps(config)}
    else:
        raise UsageError("fit needs CSV paths or --config")

    kind = args.model_kind
    if kind is None and config is not None:
        kind = MODEL_KINDS[config.model.preset]
    if kind is not None:
        try:
            kind = scaling.resolve_model_kind(kind)
        except ValidationError as exc:
            raise UsageError(str(exc)) from exc

    fits = {}
    for label, pts in data.items():
        pts = sorted(pts)
        fits[label] = scaling.fit_power_law([t for t, _ in pts], [v for _, v in pts])
    verdicts = _verdicts_for(fits, kind, tol_scale)
    by_obs = {v.observable: v for v in verdicts}
    report = {
        "model": config.model_doc if config else None,
        "model_kind": kind,
        "fits": [scaling.fit_report_entry(label, fit, by_obs.get(label))
                 for label, fit in fits.items()],
        "verdicts": [v.to_dict() for v in verdicts],
    }
    out = args.out or (config.output_dir if config else None)
    path = os.path.join(_out_dir(args, config), "fit_report.json") if out else None
    sys.stdout.write(_write_json(report, path))
    return EXIT_OK if all(v.passed for v in verdicts) else EXIT_FAIL


def cmd_qecc(args) -> int:
    config = load_run_config(args.config, args.quick, args.seed)
    tol_scale = QUICK_TOLERANCE_SCALE if args.quick else 1.0
    try:
        code = qecc.get_code(config.code)
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc
    out = _out_dir(args, config)
    reports = [qecc.logical_fidelity_experiment(code, config.model, config.logical, t)
               for t in config.times]
    times = [r.time for r in reports]
    report = {
        "code": code.name,
        "model": config.model_doc,
        "g": config.model.params.g,
        "env_dim": config.model.params.env_dim,
        "baseline": "one physical qubit, same preset, g and environment",
        "points": [r.to_dict() for r in reports],
        "fits": {},
        "verdict": None,
    }
    status = EXIT_OK
    try:
        fits = {
            "protected": scaling.fit_power_law(times, [r.protected_infidelity for r in reports]),
            "unprotected": scaling.fit_power_law(times, [r.unprotected_infidelity for r in reports]),
        }
    except InsufficientDataError as exc:
        report["fits_error"] = str(exc)
        status = EXIT_DATA
    else:
        report["fits"] = {k: scaling.fit_report_entry(f"{k}_infidelity", f, None)
                          for k, f in fits.items()}
        verdict = qecc.qecc_scaling_verdict(code, MODEL_KINDS[config.model.preset], fits, tol_scale)
        report["verdict"] = verdict.to_dict()
        status = EXIT_OK if verdict.passed else EXIT_FAIL
    sys.stdout.write(_write_json(report, os.path.join(out, "qecc_report.json")))
    return status


# -- entry point --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="correlated-errors", description=__doc__.split("\n\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run or model config (JSON)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--quick", action="store_true", help="half the points, 1.5x tolerances")
    common.add_argument("--seed", type=int, default=None)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("check", parents=[common], help="no-qubits-interaction check")
    p.add_argument("--expect-violating", action="store_true")
    sub.add_parser("sweep", parents=[common], help="time sweeps to CSV")
    p = sub.add_parser("fit", parents=[common], help="power-law fits and verdicts")
    p.add_argument("csv", nargs="*")
    p.add_argument("--model-kind", default=None)
    sub.add_parser("qecc", parents=[common], help="code experiment report")
    return parser


COMMANDS = {"check": cmd_check, "sweep": cmd_sweep, "fit": cmd_fit, "qecc": cmd_qecc}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command != "fit" and not args.config:
        print(f"{args.command}: --config is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InsufficientDataError as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, ValidationError, ModelDefinitionError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
