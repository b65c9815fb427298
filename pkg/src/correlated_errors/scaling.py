"""
Time sweeps, log-log power-law fits and order-of-t verdicts.

"Of order t^p" is made operational as the least-squares slope of
``ln value`` against ``ln t`` over a decade of small times, compared with a
tolerance band: 0.2 for exponents up to 2, 0.3 for 3 and 0.4 beyond.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .evolution import (SpectralHamiltonian, dyson_truncated, factorization_residual,
                        interaction_propagator)
from .exceptions import InsufficientDataError, ValidationError
from .models import MODEL_KINDS, HamiltonianSpec, assemble, assemble_part, env_ground_state
from .pauli_decomp import pauli_components, weight_spectrum

ZERO_FLOOR = 1e-14
MIN_POINTS = 4
DEFAULT_GT_WINDOW = (1e-3, 1e-2)
DEFAULT_N_POINTS = 8


def exponent_tolerance(p: float) -> float:
    if p <= 2:
        return 0.2
    if p <= 3:
        return 0.3
    return 0.4


def default_times(g: float, n_points: int = DEFAULT_N_POINTS,
                  gt_window: tuple[float, float] = DEFAULT_GT_WINDOW) -> np.ndarray:
    """Log-spaced times with ``g*t`` spanning ``gt_window`` (plain ``t`` if ``g == 0``)."""
    scale = abs(g) if g else 1.0
    return np.logspace(math.log10(gt_window[0]), math.log10(gt_window[1]), n_points) / scale


# -- observables ------------------------------------------------------------------

_OBS_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*([A-Za-z0-9_]+)\s*\))?\s*$")
_OBS_ARGS = {
    "weight_amplitude": int,
    "factorization_residual": None,
    "dyson_defect": int,
    "qecc_infidelity": str,
    "unprotected_infidelity": None,
}


@dataclass(frozen=True)
class Observable:
    kind: str
    arg: int | str | None = None

    @classmethod
    def parse(cls, text: "str | Observable") -> "Observable":
        """Parse labels such as ``weight_amplitude(2)`` or ``factorization_residual``."""
        if isinstance(text, Observable):
            return text
        match = _OBS_RE.match(text)
        if not match or match.group(1) not in _OBS_ARGS:
            raise ValidationError(f"unknown observable {text!r}")
        kind, raw = match.groups()
        conv = _OBS_ARGS[kind]
        if (conv is None) != (raw is None):
            raise ValidationError(f"observable {text!r}: wrong argument")
        return cls(kind, conv(raw) if conv else None)

    @property
    def label(self) -> str:
        return self.kind if self.arg is None else f"{self.kind}({self.arg})"

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class SweepTable:
    observable_label: str
    points: tuple[tuple[float, float], ...]
    model_name: str = ""
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        pts = tuple((float(t), float(v)) for t, v in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < MIN_POINTS:
            raise ValidationError(f"a sweep needs at least {MIN_POINTS} points, got {len(pts)}")
        ts = [t for t, _ in pts]
        if ts[0] <= 0 or any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValidationError("sweep times must be positive and strictly increasing")
        if any(not math.isfinite(v) or v < 0 for _, v in pts):
            raise ValidationError("sweep values must be finite and non-negative")

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.points])

    @property
    def n_zero(self) -> int:
        """Points at or below the numerical-zero floor, which fits ignore."""
        return int(np.sum(self.values <= ZERO_FLOOR))


def time_sweep(model: HamiltonianSpec, times: Sequence[float], observable, *,
               env_init: np.ndarray | None = None, steps: int = 256,
               quadrature_steps: int = 32, logical: np.ndarray | None = None) -> SweepTable:
    """Evaluate one observable at each time with exact propagators.

    Observables: ``weight_amplitude(m)``, ``factorization_residual``,
    ``dyson_defect(order)``, ``qecc_infidelity(code)`` and
    ``unprotected_infidelity``. Weight amplitudes are taken from the
    interaction-picture propagator acting on ``env_init`` (default: ground
    state of the free environment).
    """
    obs = Observable.parse(observable)
    times = [float(t) for t in times]
    h0 = SpectralHamiltonian(assemble_part(model, "free"), "H_0")
    ht = SpectralHamiltonian(assemble(model), "H_T")
    h_int = assemble_part(model, "interaction")
    if env_init is None:
        env_init = env_ground_state(model)

    if obs.kind in ("qecc_infidelity", "unprotected_infidelity"):
        from . import qecc

        code = qecc.get_code(obs.arg) if obs.kind == "qecc_infidelity" else None

    def evaluate(t):
        if obs.kind == "weight_amplitude":
            u = interaction_propagator(h0, ht, t)
            return weight_spectrum(pauli_components(u, model.space, env_init), t).amplitude(obs.arg)
        if obs.kind == "factorization_residual":
            return factorization_residual(model, t, steps, require_condition=False)
        if obs.kind == "dyson_defect":
            u = interaction_propagator(h0, ht, t).matrix
            d = dyson_truncated(h0, h_int, t, obs.arg, quadrature_steps).matrix
            return float(np.linalg.norm(u - d))
        if obs.kind == "qecc_infidelity":
            return qecc.logical_fidelity_experiment(code, model, logical, t).protected_infidelity
        return qecc.unprotected_infidelity(model, logical, t)

    points = []
    for t in times:
        try:
            points.append((t, float(evaluate(t))))
        except Exception as exc:
            exc.failing_time = t
            head = exc.args[0] if exc.args else ""
            exc.args = (f"{head} [observable {obs.label} at t={t!r}]",) + exc.args[1:]
            raise
    metadata = {"window": (min(times), max(times)) if times else None,
                "n_points": len(times)}
    if model.params is not None:
        metadata["g"] = model.params.g
    return SweepTable(obs.label, tuple(points), model.name, metadata)


# -- fitting ----------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingFit:
    """``value ≈ prefactor * t**exponent`` fitted in log-log space."""

    exponent: float
    prefactor: float
    r_squared: float
    n_points_used: int
    window: tuple[float, float]


def fit_power_law(times: Sequence[float], values: Sequence[float]) -> ScalingFit:
    """Ordinary least squares of ``ln value`` on ``ln t``.

    Values at or below 1e-14 are treated as numerical zeros and dropped.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = (v > ZERO_FLOOR) & (t > 0)
    if keep.sum() < MIN_POINTS:
        raise InsufficientDataError(
            f"need at least {MIN_POINTS} points above {ZERO_FLOOR:g}, got {int(keep.sum())}")
    x, y = np.log(t[keep]), np.log(v[keep])
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0:
        raise InsufficientDataError("all usable points share the same time")
    slope = np.sum((x - xm) * (y - ym)) / sxx
    intercept = ym - slope * xm
    ss_res = np.sum((y - (intercept + slope * x)) ** 2)
    ss_tot = np.sum((y - ym) ** 2)
    r2 = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return ScalingFit(float(slope), float(np.exp(intercept)), float(r2), int(keep.sum()),
                      (float(t[keep].min()), float(t[keep].max())))


def fit_exponent(table: SweepTable) -> ScalingFit:
    return fit_power_law(table.times, table.values)


# -- verdicts -----------------------------------------------------------------------

CLAIMS = ("weight1_linear", "weight_ge2_quadratic", "independent_weight_k",
          "factorization_quadratic", "custom")


@dataclass(frozen=True)
class Verdict:
    claim: str
    passed: bool
    measured: ScalingFit
    threshold: float
    direction: str
    observable: str = ""
    band: float | None = None
    note: str = ""

    def __post_init__(self):
        if self.claim not in CLAIMS:
            raise ValidationError(f"unknown claim {self.claim!r}")
        if self.direction not in (">=", "<=", "~"):
            raise ValidationError(f"unknown direction {self.direction!r}")

    def to_dict(self) -> dict:
        return {"claim": self.claim, "observable": self.observable, "pass": self.passed,
                "exponent": self.measured.exponent, "threshold": self.threshold,
                "direction": self.direction, "band": self.band, "note": self.note}


def check_exponent(fit: ScalingFit, claim: str, threshold: float, direction: str,
                   band: float | None = None, observable: str = "", note: str = "") -> Verdict:
    p = fit.exponent
    if direction == ">=":
        ok = p >= threshold
    elif direction == "<=":
        ok = p <= threshold
    else:
        ok = abs(p - threshold) <= band
    return Verdict(claim, bool(ok), fit, threshold, direction, observable, band, note)


def resolve_model_kind(kind: str) -> str:
    kind = MODEL_KINDS.get(kind, kind)
    if kind not in ("independent", "no_qubit_interaction", "violating"):
        raise ValidationError(f"unknown model kind {kind!r}")
    return kind


def independence_verdict(fits: Mapping[int, ScalingFit], model_kind: str,
                         tolerance_scale: float = 1.0) -> list[Verdict]:
    """Judge weight-amplitude exponents against the expected orders.

    ``fits`` maps error weight to its fit; ``model_kind`` is ``independent``,
    ``no_qubit_interaction``, ``violating`` or a preset name.
    ``tolerance_scale`` widens every band (1.5 for quick runs).
    """
    kind = resolve_model_kind(model_kind)
    label = "weight_amplitude({})".format
    out = []
    if kind == "independent":
        if not fits:
            raise ValidationError("no weight fits supplied")
        for m in sorted(fits):
            tol = exponent_tolerance(m) * tolerance_scale
            out.append(check_exponent(fits[m], "independent_weight_k", m - tol, ">=",
                                      observable=label(m)))
        return out
    if kind == "no_qubit_interaction":
        if 1 not in fits or not any(m >= 2 for m in fits):
            raise ValidationError("need weight-1 and at least one weight >= 2 fit")
        out.append(check_exponent(fits[1], "weight1_linear", 1.0, "~", 0.2 * tolerance_scale,
                                  observable=label(1)))
        for m in sorted(k for k in fits if k >= 2):
            out.append(check_exponent(fits[m], "weight_ge2_quadratic", 2.0 - 0.2 * tolerance_scale,
                                      ">=", observable=label(m)))
        return out
    if 2 not in fits:
        raise ValidationError("violating model needs a weight-2 fit")
    return [check_exponent(fits[2], "custom", 1.0 + 0.3 * tolerance_scale, "<=",
                           observable=label(2),
                           note="condition violated, correlated errors at first order")]


def factorization_verdict(fit: ScalingFit, tolerance_scale: float = 1.0) -> Verdict:
    return check_exponent(fit, "factorization_quadratic", 2.0 - 0.2 * tolerance_scale, ">=",
                          observable="factorization_residual")


def dyson_verdict(fit: ScalingFit, order: int, tolerance_scale: float = 1.0) -> Verdict:
    return check_exponent(fit, "custom", order + 1 - 0.2 * tolerance_scale, ">=",
                          observable=f"dyson_defect({order})",
                          note=f"truncation error of order t^{order + 1}")


# -- I/O ---------------------------------------------------------------------------

SWEEP_COLUMNS = ("t", "observable", "value")


def write_sweep_csv(table: SweepTable, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for t, v in table.points:
            writer.writerow([f"{t:.17g}", table.observable_label, f"{v:.17g}"])


def read_sweep_csv(path) -> dict[str, list[tuple[float, float]]]:
    """Points grouped by observable label, in file order."""
    out: dict[str, list[tuple[float, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != SWEEP_COLUMNS:
            raise ValidationError(f"{path}: expected header {','.join(SWEEP_COLUMNS)}")
        for row in reader:
            out.setdefault(row["observable"], []).append((float(row["t"]), float(row["value"])))
    return out


def fit_report_entry(observable: str, fit: ScalingFit, verdict: Verdict | None) -> dict:
    return {
        "observable": observable,
        "exponent": fit.exponent,
        "prefactor": fit.prefactor,
        "r2": fit.r_squared,
        "window": list(fit.window),
        "pass": None if verdict is None else verdict.passed,
        "threshold": None if verdict is None else verdict.threshold,
    }
