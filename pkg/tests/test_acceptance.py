"""
Acceptance run: nine end-to-end criteria at their stated tolerances.

Each criterion prints one ``PASS``/``FAIL`` line. Run directly with
``python3 tests/test_acceptance.py`` or through pytest (``-s`` shows the lines).
"""

import contextlib
import io
import json
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

from correlated_errors.cli import main as cli_main
from correlated_errors.evolution import (dyson_truncated, exact_propagator, factorization_residual,
                                         interaction_propagator)
from correlated_errors.models import (PRESETS, assemble, assemble_part, env_ground_state,
                                      preset_model)
from correlated_errors.pauli_decomp import (completeness_residual, pauli_components,
                                            reconstruction_residual)
from correlated_errors.qecc import get_code, logical_fidelity_experiment
from correlated_errors.scaling import default_times, fit_power_law, time_sweep

G = 0.1
TIMES = default_times(G)  # 8 log-spaced points, g*t in [1e-3, 1e-2]
MAX_DIM = 128


def weight_fits(model, weights):
    return {m: fit_power_law(TIMES, time_sweep(model, TIMES, f"weight_amplitude({m})").values)
            for m in weights}


def within(value, centre, band):
    return abs(value - centre) <= band


def criterion_1():
    rng = np.random.default_rng(20240)
    worst_c = worst_r = 0.0
    done = 0
    while done < 20:
        name = PRESETS[done % len(PRESETS)]
        n, d = int(rng.integers(1, 5)), int(rng.integers(2, 5))
        if name == "qubit_coupled_violating":
            n = max(n, 2)
        g, t = float(rng.uniform(0.05, 0.3)), float(rng.uniform(0.1, 10.0))
        model = preset_model(name, n_qubits=n, env_dim=d, g=g)
        if model.space.total_dim > MAX_DIM:
            continue
        u = exact_propagator(assemble(model), t).matrix
        comps = pauli_components(u, model.space, env_ground_state(model))
        worst_c = max(worst_c, completeness_residual(comps))
        worst_r = max(worst_r, reconstruction_residual(u, comps, model.space))
        done += 1
    ok = worst_c <= 1e-10 and worst_r <= 1e-10
    return ok, f"20 configs, max completeness {worst_c:.2e}, max reconstruction {worst_r:.2e}"


def criterion_2():
    fits = weight_fits(preset_model("independent", n_qubits=3, env_dim=2, g=G), (1, 2, 3))
    bands = {1: 0.2, 2: 0.2, 3: 0.3}
    ok = all(within(fits[m].exponent, m, bands[m]) and fits[m].r_squared >= 0.995 for m in fits)
    detail = ", ".join(f"A{m}: {f.exponent:.3f} (r2 {f.r_squared:.4f})" for m, f in fits.items())
    return ok, detail


def _no_interaction_thresholds(preset):
    fits = weight_fits(preset_model(preset, n_qubits=3, env_dim=3, g=G), (1, 2, 3))
    ok = (within(fits[1].exponent, 1, 0.2) and fits[2].exponent >= 1.8
          and fits[3].exponent >= 1.8)
    return ok, ", ".join(f"A{m}: {f.exponent:.3f}" for m, f in fits.items())


def criterion_3():
    return _no_interaction_thresholds("collective_dephasing")


def criterion_4():
    return _no_interaction_thresholds("incomplete_independent")


def criterion_5():
    model = preset_model("qubit_coupled_violating", n_qubits=3, env_dim=3, g=G, g_prime=G)
    fit = weight_fits(model, (2,))[2]
    return fit.exponent <= 1.3, f"A2: {fit.exponent:.3f}"


def criterion_6():
    model = preset_model("collective_dephasing", n_qubits=3, env_dim=2, g=G)
    forward = fit_power_law(TIMES, [factorization_residual(model, t) for t in TIMES])
    reverse = fit_power_law(TIMES, [factorization_residual(model, t, order=(2, 1, 0))
                                    for t in TIMES])
    shift = abs(forward.exponent - reverse.exponent)
    ok = forward.exponent >= 1.8 and forward.r_squared >= 0.99 and shift < 0.2
    return ok, (f"exponent {forward.exponent:.3f} (r2 {forward.r_squared:.4f}), "
                f"reversed order shift {shift:.3f}")


def criterion_7():
    model = preset_model("collective_dephasing", n_qubits=3, env_dim=2, g=G)
    h0, h_int, ht = (assemble_part(model, "free"), assemble_part(model, "interaction"),
                     assemble(model))
    defects = [np.linalg.norm(interaction_propagator(h0, ht, t).matrix
                              - dyson_truncated(h0, h_int, t, 2).matrix) for t in TIMES]
    fit = fit_power_law(TIMES, defects)
    return fit.exponent >= 2.8, f"order-2 defect exponent {fit.exponent:.3f}"


def criterion_8():
    code = get_code("phaseflip3")
    model = preset_model("collective_dephasing", n_qubits=3, env_dim=3, g=G)
    reps = [logical_fidelity_experiment(code, model, None, t) for t in TIMES]
    prot = [r.protected_infidelity for r in reps]
    bare = [r.unprotected_infidelity for r in reps]
    fp, fb = fit_power_law(TIMES, prot), fit_power_law(TIMES, bare)
    pointwise = all(p <= b for p, b in zip(prot, bare))
    violating = preset_model("qubit_coupled_violating", n_qubits=3, env_dim=3, g=G)
    fv = fit_power_law(TIMES, [logical_fidelity_experiment(code, violating, None, t)
                               .protected_infidelity for t in TIMES])
    ok = fp.exponent >= 3.6 and 1.8 <= fb.exponent <= 2.2 and pointwise and fv.exponent <= 2.4
    return ok, (f"protected {fp.exponent:.3f}, unprotected {fb.exponent:.3f}, "
                f"pointwise {pointwise}, violating protected {fv.exponent:.3f}")


def criterion_9():
    model = {"preset": "collective_dephasing", "n_qubits": 3, "env_dim": 2, "g": G}
    config = {"model": model, "seed": 3, "logical": "random",
              "observables": ["weight_amplitude(1)", "weight_amplitude(2)",
                              "factorization_residual", "dyson_defect(2)"]}
    with tempfile.TemporaryDirectory() as tmp, contextlib.redirect_stdout(io.StringIO()):
        root = Path(tmp)
        cfg = root / "run.json"
        cfg.write_text(json.dumps(config))
        runs = []
        for rerun in ("a", "b"):
            out = root / rerun
            for command in ("check", "sweep", "qecc"):
                cli_main([command, "--config", str(cfg), "--out", str(out)])
            cli_main(["fit", *sorted(str(p) for p in out.glob("sweep_*.csv")),
                      "--model-kind", "collective_dephasing", "--out", str(out)])
            runs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    same = runs[0] == runs[1] and len(runs[0]) >= 7
    return same, f"{len(runs[0])} files compared byte-for-byte"


CRITERIA = {
    1: ("completeness and reconstruction over random configs", criterion_1),
    2: ("independent model weight exponents", criterion_2),
    3: ("collective model weight exponents", criterion_3),
    4: ("incomplete-independent model weight exponents", criterion_4),
    5: ("qubit-coupled negative control", criterion_5),
    6: ("factorization residual exponent", criterion_6),
    7: ("second-order Dyson defect exponent", criterion_7),
    8: ("phase-flip code infidelity exponents", criterion_8),
    9: ("CLI determinism", criterion_9),
}


def run_criterion(number):
    title, fn = CRITERIA[number]
    ok, detail = fn()
    return ok, f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}"


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    ok, line = run_criterion(number)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(k) for k in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
