import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from correlated_errors.exceptions import InsufficientDataError, ValidationError
from correlated_errors.models import preset_model
from correlated_errors.scaling import (
    Observable, ScalingFit, SweepTable, default_times, dyson_verdict, factorization_verdict,
    fit_exponent, fit_power_law, independence_verdict, read_sweep_csv, time_sweep,
    write_sweep_csv,
)

TIMES = default_times(0.1)


def fake_fit(exponent):
    return ScalingFit(exponent, 1.0, 1.0, 8, (0.01, 0.1))


def test_default_window():
    assert len(TIMES) == 8
    assert TIMES[0] * 0.1 == pytest.approx(1e-3) and TIMES[-1] * 0.1 == pytest.approx(1e-2)


def test_observable_parsing():
    assert Observable.parse("weight_amplitude(2)") == Observable("weight_amplitude", 2)
    assert Observable.parse("qecc_infidelity(phaseflip3)").arg == "phaseflip3"
    assert Observable.parse(" factorization_residual ").label == "factorization_residual"
    for bad in ("weight_amplitude", "factorization_residual(1)", "nope(1)", "dyson_defect(x)"):
        with pytest.raises((ValidationError, ValueError)):
            Observable.parse(bad)


def test_sweep_table_validation():
    pts = [(t, t) for t in TIMES]
    assert SweepTable("x", pts).n_zero == 0
    with pytest.raises(ValidationError):
        SweepTable("x", pts[:3])
    with pytest.raises(ValidationError):
        SweepTable("x", pts[::-1])
    with pytest.raises(ValidationError):
        SweepTable("x", [(0.0, 1.0)] + pts)
    with pytest.raises(ValidationError):
        SweepTable("x", pts[:-1] + [(1.0, float("nan"))])


@pytest.mark.parametrize("c, p", [(3.0, 2.0), (5.0, 1.0)])
def test_fit_exact_power_law(c, p):
    fit = fit_exponent(SweepTable("x", [(t, c * t ** p) for t in TIMES]))
    assert abs(fit.exponent - p) <= 1e-12
    assert fit.prefactor == pytest.approx(c, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.n_points_used == 8


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 6), st.floats(1e-3, 1e3))
def test_fit_exact_for_any_power_law(p, c):
    fit = fit_power_law(TIMES, c * TIMES ** p)
    assert abs(fit.exponent - p) <= 1e-12
    assert fit.prefactor == pytest.approx(c, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_fit_rescaling(k):
    values = 2.0 * TIMES ** 1.5 * (1 + 0.3 * TIMES)
    base, scaled = fit_power_law(TIMES, values), fit_power_law(TIMES, k * values)
    assert scaled.exponent == pytest.approx(base.exponent, abs=1e-10)
    assert scaled.prefactor == pytest.approx(k * base.prefactor, rel=1e-10)


def test_fit_drops_numerical_zeros():
    values = 4 * TIMES ** 2
    values[:3] = 0.0
    fit = fit_power_law(TIMES, values)
    assert fit.n_points_used == 5 and fit.exponent == pytest.approx(2.0, abs=1e-12)
    values[:5] = 1e-15
    with pytest.raises(InsufficientDataError):
        fit_power_law(TIMES, values)


def test_time_sweep_without_interaction_gives_zeros():
    model = preset_model("collective_dephasing", n_qubits=2, env_dim=2, g=0.0)
    table = time_sweep(model, TIMES, "weight_amplitude(1)")
    assert all(v == 0.0 for v in table.values)


def test_time_sweep_identity_limit():
    model = preset_model("collective_dephasing", n_qubits=2, env_dim=2, g=0.1)
    table = time_sweep(model, np.logspace(-6, -3, 4), "weight_amplitude(0)")
    assert table.values[0] == pytest.approx(1.0, abs=1e-10)
    assert np.all(np.diff(table.values) <= 0)


def test_time_sweep_weight2_monotone_and_metadata():
    model = preset_model("collective_dephasing", n_qubits=3, env_dim=3, g=0.1)
    table = time_sweep(model, TIMES, "weight_amplitude(2)")
    assert np.all(np.diff(table.values) > 0)
    assert table.metadata["window"] == (TIMES[0], TIMES[-1])
    assert table.model_name == "collective_dephasing"


def test_fit_stable_when_dropping_last_point():
    model = preset_model("collective_general", n_qubits=3, env_dim=3, g=0.1)
    table = time_sweep(model, TIMES, "weight_amplitude(2)")
    full = fit_exponent(table)
    assert full.r_squared > 0.999
    trimmed = fit_power_law(table.times[:-1], table.values[:-1])
    assert abs(full.exponent - trimmed.exponent) < 0.1


def test_time_sweep_annotates_failing_time():
    model = preset_model("collective_dephasing", n_qubits=2, env_dim=2, g=0.1)
    with pytest.raises(ValidationError, match="at t="):
        time_sweep(model, TIMES, "qecc_infidelity(phaseflip3)")


def test_verdict_examples():
    collective = independence_verdict({1: fake_fit(1.02), 2: fake_fit(2.05)}, "collective_dephasing")
    assert [v.passed for v in collective] == [True, True]
    assert [v.claim for v in collective] == ["weight1_linear", "weight_ge2_quadratic"]
    (neg,) = independence_verdict({2: fake_fit(0.98)}, "qubit_coupled_violating")
    assert neg.passed and "violated" in neg.note
    flat = independence_verdict({1: fake_fit(1.0), 2: fake_fit(1.0)}, "no_qubit_interaction")
    assert [v.passed for v in flat] == [True, False]


def test_independent_verdict_thresholds():
    verdicts = independence_verdict({1: fake_fit(0.85), 2: fake_fit(1.79), 3: fake_fit(2.71)},
                                    "independent")
    assert [v.passed for v in verdicts] == [True, False, True]
    assert [v.threshold for v in verdicts] == pytest.approx([0.8, 1.8, 2.7])
    quick = independence_verdict({2: fake_fit(1.75)}, "independent", tolerance_scale=1.5)
    assert quick[0].passed


def test_verdict_missing_fits():
    with pytest.raises(ValidationError):
        independence_verdict({2: fake_fit(2.0)}, "collective_dephasing")
    with pytest.raises(ValidationError):
        independence_verdict({1: fake_fit(1.0)}, "violating")
    with pytest.raises(ValidationError):
        independence_verdict({1: fake_fit(1.0)}, "unknown_kind")


def test_factorization_and_dyson_verdicts():
    assert factorization_verdict(fake_fit(1.85)).passed
    assert not factorization_verdict(fake_fit(1.5)).passed
    assert dyson_verdict(fake_fit(2.85), 2).passed
    assert not dyson_verdict(fake_fit(2.7), 2).passed


def test_sweep_csv_roundtrip(tmp_path):
    table = SweepTable("weight_amplitude(2)", [(t, 1 / 3 * t ** 2) for t in TIMES])
    path = tmp_path / "s.csv"
    write_sweep_csv(table, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,observable,value"
    assert len(lines) == 9
    back = read_sweep_csv(path)["weight_amplitude(2)"]
    assert back == list(table.points)
