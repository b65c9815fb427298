import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from correlated_errors.evolution import dyson_truncated, exact_propagator, interaction_propagator
from correlated_errors.exceptions import ValidationError
from correlated_errors.models import (PRESETS, SIGMA_X, SIGMA_Z, assemble, assemble_part,
                                      build_space, env_ground_state, preset_model)
from correlated_errors.pauli_decomp import (
    ErrorComponent, PauliString, completeness_residual, mixed_weight_spectrum, pauli_components,
    reconstruction_residual, weight_spectrum, write_components_csv,
)


def random_unitary(dim, seed):
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_pauli_string():
    p = PauliString.from_text("XIZ")
    assert p.labels == (1, 0, 3) and p.weight == 2 and p.k_string == "103" and str(p) == "XIZ"
    assert PauliString.from_text("0120").weight == 2
    with pytest.raises(ValidationError):
        PauliString((4,))


def test_identity_decomposition():
    space = build_space(2, [3])
    comps = pauli_components(np.eye(12), space, np.array([1, 0, 0]))
    assert len(comps) == 16
    norms = {c.string.labels: c.norm for c in comps}
    assert norms[(0, 0)] == pytest.approx(1.0, abs=1e-15)
    assert sum(v for k, v in norms.items() if k != (0, 0)) == 0.0


def test_single_pauli_error_decomposition():
    space = build_space(2, [2])
    u = np.kron(np.kron(SIGMA_X, np.eye(2)), np.eye(2))
    comps = pauli_components(u, space, np.array([0, 1]))
    for c in comps:
        assert c.norm == pytest.approx(1.0 if c.string.labels == (1, 0) else 0.0, abs=1e-15)


@pytest.mark.parametrize("gt", [1e-3, 0.05, 0.4])
def test_dephasing_closed_form(gt):
    """U = exp(-i g t sigma_z ⊗ X) = cos(gt) I - i sin(gt) sigma_z ⊗ X on a 4x4 space."""
    h = np.kron(SIGMA_Z, SIGMA_X)
    w, v = np.linalg.eigh(h)
    u = v @ np.diag(np.exp(-1j * w * gt)) @ v.conj().T
    space = build_space(1, [2])
    env = np.array([0.6, 0.8j])
    norms = {c.string.labels: c.norm for c in pauli_components(u, space, env)}
    assert norms[(3,)] == pytest.approx(abs(np.sin(gt)) * np.linalg.norm(SIGMA_X @ env), abs=1e-10)
    assert norms[(0,)] == pytest.approx(abs(np.cos(gt)), abs=1e-10)
    assert norms[(1,)] < 1e-12 and norms[(2,)] < 1e-12


def test_validation():
    space = build_space(1, [2])
    with pytest.raises(ValidationError):
        pauli_components(np.eye(4), space, np.array([1.0, 1.0]))
    with pytest.raises(ValidationError):
        pauli_components(np.eye(4), space, np.array([1.0, 0, 0]))
    with pytest.raises(ValidationError):
        pauli_components(np.eye(6), space, np.array([1.0, 0]))


@pytest.mark.parametrize("n, d, seed", [(1, 1, 0), (2, 3, 1), (3, 2, 2), (4, 1, 3)])
def test_reconstruction_and_completeness_random_unitary(n, d, seed):
    space = build_space(n, [d])
    u = random_unitary(space.total_dim, seed)
    env = np.zeros(d)
    env[0] = 1
    comps = pauli_components(u, space, env)
    assert reconstruction_residual(u, comps, space) <= 1e-10
    assert completeness_residual(comps) <= 1e-10
    assert weight_spectrum(comps, 0.0, check_completeness=True).total == pytest.approx(1, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(PRESETS), st.integers(1, 3), st.integers(2, 4),
       st.floats(0.05, 0.5), st.floats(0.01, 5.0))
def test_completeness_property_over_presets(name, n, d, g, t):
    model = preset_model(name, n_qubits=n, env_dim=d, g=g)
    u = exact_propagator(assemble(model), t)
    comps = pauli_components(u, model.space, env_ground_state(model))
    assert completeness_residual(comps) <= 1e-10
    assert reconstruction_residual(u, comps, model.space) <= 1e-10


def test_truncated_dyson_is_not_complete():
    model = preset_model("collective_dephasing", n_qubits=2, env_dim=2, g=0.3)
    d = dyson_truncated(assemble_part(model, "free"), assemble_part(model, "interaction"), 1.0, 1)
    comps = pauli_components(d, model.space, env_ground_state(model))
    assert completeness_residual(comps) > 1e-6
    assert reconstruction_residual(d, comps, model.space) <= 1e-10


def test_basis_phase_invariance():
    model = preset_model("collective_general", n_qubits=2, env_dim=3, g=0.4,
                         qubit_couplings=("x", "y", "z"))
    u = exact_propagator(assemble(model), 0.7)
    env = env_ground_state(model)
    std = pauli_components(u, model.space, env)
    alt = pauli_components(u, model.space, env, convention="antihermitian_y")
    np.testing.assert_allclose([c.norm for c in std], [c.norm for c in alt], atol=1e-14)
    assert reconstruction_residual(u, alt, model.space, "antihermitian_y") <= 1e-10
    assert any(c.norm > 1e-3 for c in std if 2 in c.string.labels)


def test_product_unitary_spectrum_is_convolution():
    ua, ub = random_unitary(4, 10), random_unitary(2, 11)
    sa = weight_spectrum(pauli_components(ua, build_space(2, [1]), np.ones(1)), 0)
    sb = weight_spectrum(pauli_components(ub, build_space(1, [1]), np.ones(1)), 0)
    s = weight_spectrum(pauli_components(np.kron(ua, ub), build_space(3, [1]), np.ones(1)), 0)
    for m in range(4):
        conv = sum(sa.amplitude(a) ** 2 * sb.amplitude(m - a) ** 2
                   for a in range(3) if 0 <= m - a <= 1)
        assert s.amplitude(m) ** 2 == pytest.approx(conv, abs=1e-12)


def test_spectrum_independent_of_qubit_state_by_construction():
    # the decomposition never sees a qubit state; only the environment state enters
    model = preset_model("collective_dephasing", n_qubits=2, env_dim=3, g=0.2)
    u = exact_propagator(assemble(model), 0.3)
    comps = pauli_components(u, model.space, env_ground_state(model))
    assert all(c.env_vector.shape == (3,) for c in comps)


def test_weight_spectrum_examples():
    space = build_space(2, [1])
    spec = weight_spectrum(pauli_components(np.eye(4), space, np.ones(1)), 0.0)
    assert spec.amplitudes == {0: 1.0, 1: 0.0, 2: 0.0}
    assert spec.counts == {0: 1, 1: 6, 2: 9}
    comps = []
    for labels in np.ndindex(4, 4):
        norm = 1.0 if labels == (0, 2) else 0.0
        comps.append(ErrorComponent(PauliString(labels), np.eye(1) * norm, np.ones(1) * norm, norm))
    assert weight_spectrum(comps, 0.1).amplitude(1) == 1.0
    with pytest.raises(ValidationError):
        weight_spectrum(comps[:-1], 0.1)
    with pytest.raises(ValidationError):
        weight_spectrum([c for c in comps if c.weight != 1] + comps[:6], 0.1,
                        check_completeness=True)


def test_weight1_to_weight2_ratio_grows_inverse_linearly():
    model = preset_model("collective_dephasing", n_qubits=2, env_dim=2, g=0.1)
    h0, ht = assemble_part(model, "free"), assemble(model)
    env = env_ground_state(model)

    def ratio(t):
        s = weight_spectrum(pauli_components(interaction_propagator(h0, ht, t), model.space, env), t)
        return s.amplitude(1) / s.amplitude(2)

    assert ratio(0.05) / ratio(0.1) == pytest.approx(2.0, rel=0.1)


def test_mixed_environment_spectrum():
    model = preset_model("collective_dephasing", n_qubits=2, env_dim=3, g=0.3)
    u = exact_propagator(assemble(model), 0.5)
    states = [np.eye(3)[0], np.eye(3)[1]]
    mixed = mixed_weight_spectrum(u, model.space, states, [0.7, 0.3], 0.5)
    assert mixed.total == pytest.approx(1.0, abs=1e-12)
    pure = [weight_spectrum(pauli_components(u, model.space, s), 0.5) for s in states]
    assert mixed.amplitude(1) ** 2 == pytest.approx(
        0.7 * pure[0].amplitude(1) ** 2 + 0.3 * pure[1].amplitude(1) ** 2)
    with pytest.raises(ValidationError):
        mixed_weight_spectrum(u, model.space, states, [0.5, 0.6], 0.5)


def test_components_csv(tmp_path):
    model = preset_model("collective_dephasing", n_qubits=2, env_dim=2, g=0.3)
    env = env_ground_state(model)
    rows = [(t, pauli_components(exact_propagator(assemble(model), t), model.space, env))
            for t in (0.1, 0.2)]
    path = tmp_path / "components.csv"
    write_components_csv(path, rows)
    with open(path) as fh:
        data = list(csv.DictReader(fh))
    assert list(data[0]) == ["t", "k_string", "weight", "norm", "max_env_amp"]
    assert len(data) == 32
    assert data[3]["k_string"] == "03" and data[3]["weight"] == "1"
