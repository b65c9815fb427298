"""
Exact and interaction-picture propagators, truncated Dyson series and the
per-qubit factorization of the interaction-picture propagator.

All times are in units of inverse energy (hbar = 1). Every function is pure;
:class:`SpectralHamiltonian` caches one eigendecomposition and is read-only
afterwards, so it can be shared between threads evaluating different times.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .exceptions import AccuracyError, ConditionViolatedError, NumericalError, ValidationError
from .models import (HamiltonianSpec, HilbertSpec, TensorTerm, assemble, assemble_part,
                     split_interaction, term_matrix)

logger = logging.getLogger(__name__)

UNITARITY_TOL = 1e-10
REUNITARIZE_TOL = 1e-9
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Propagator:
    """A time-evolution operator together with how it was obtained.

    ``unitary`` is False for truncated series. ``correction`` is the
    Frobenius size of any polar re-unitarization that was applied.
    """

    matrix: np.ndarray
    time: float
    picture: str = "schrodinger"
    generator_label: str = ""
    unitary: bool = True
    correction: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.time) or self.time < 0:
            raise ValidationError(f"time must be finite and non-negative, got {self.time}")
        if self.picture not in ("schrodinger", "interaction"):
            raise ValidationError(f"unknown picture {self.picture!r}")

    def unitarity_defect(self) -> float:
        return unitarity_defect(self.matrix)


def unitarity_defect(u: np.ndarray) -> float:
    """``||U^dag U - I||_F``."""
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])))


def _check_hermitian(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValidationError(f"Hamiltonian must be square, got shape {h.shape}")
    scale = np.max(np.abs(h)) if h.size else 0.0
    if np.max(np.abs(h - h.conj().T), initial=0.0) > HERMITIAN_TOL * scale:
        raise ValidationError("Hamiltonian is not Hermitian")
    return h


class SpectralHamiltonian:
    """Cached eigendecomposition ``H = V diag(w) V^dag`` of a Hermitian matrix."""

    def __init__(self, h: np.ndarray, label: str = ""):
        h = _check_hermitian(h)
        try:
            w, v = np.linalg.eigh(h)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigendecomposition failed: {exc}") from exc
        for arr in (h, w, v):
            arr.setflags(write=False)
        self.matrix = h
        self.eigvals = w
        self.eigvecs = v
        self.label = label

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def expm(self, t: float, sign: int = -1) -> np.ndarray:
        """``exp(sign * i * H * t)``."""
        if t == 0:
            return np.eye(self.dim, dtype=complex)
        phases = np.exp(sign * 1j * self.eigvals * t)
        return (self.eigvecs * phases) @ self.eigvecs.conj().T

    def to_eigenbasis(self, op: np.ndarray) -> np.ndarray:
        return self.eigvecs.conj().T @ op @ self.eigvecs

    def from_eigenbasis(self, op: np.ndarray) -> np.ndarray:
        return self.eigvecs @ op @ self.eigvecs.conj().T

    def rotation_phases(self, t: float) -> np.ndarray:
        """Elementwise factors turning ``A`` into ``exp(iHt) A exp(-iHt)`` in the eigenbasis."""
        return np.exp(1j * np.subtract.outer(self.eigvals, self.eigvals) * t)


def as_spectral(h, label: str = "") -> SpectralHamiltonian:
    return h if isinstance(h, SpectralHamiltonian) else SpectralHamiltonian(h, label)


def _check_time(t: float) -> float:
    t = float(t)
    if not np.isfinite(t) or t < 0:
        raise ValidationError(f"time must be finite and non-negative, got {t}")
    return t


def _assert_unitary(u: np.ndarray, what: str):
    defect = unitarity_defect(u)
    if defect > UNITARITY_TOL:
        raise NumericalError(f"{what} is not unitary: ||U^dag U - I||_F = {defect:.3e}")


def exact_propagator(h, t: float, label: str = "") -> Propagator:
    """``U = exp(-i H t)`` through the Hermitian eigendecomposition of ``H``.

    ``h`` may be a dense Hermitian matrix or a :class:`SpectralHamiltonian`
    whose decomposition is reused.
    """
    t = _check_time(t)
    spec = as_spectral(h, label)
    u = spec.expm(t)
    _assert_unitary(u, "exact propagator")
    return Propagator(u, t, "schrodinger", label or spec.label)


def interaction_propagator(h0, ht, t: float, label: str = "") -> Propagator:
    """``U_I(t) = exp(+i H_0 t) exp(-i H_T t)``.

    This closed form solves ``i dU_I/dt = V(t) U_I`` with
    ``V(t) = exp(i H_0 t) (H_T - H_0) exp(-i H_0 t)`` exactly.
    """
    t = _check_time(t)
    s0, st = as_spectral(h0), as_spectral(ht)
    if s0.dim != st.dim:
        raise ValidationError("H_0 and H_T have different dimensions")
    u = s0.expm(t, sign=+1) @ st.expm(t)
    _assert_unitary(u, "interaction-picture propagator")
    return Propagator(u, t, "interaction", label)


def _simpson_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * h / 3.0


def dyson_truncated(h0, h_int: np.ndarray, t: float, order: int,
                    quadrature_steps: int = 32) -> Propagator:
    """Dyson series of the interaction-picture propagator truncated at ``order``.

    Returns ``1 + sum_{m=1}^{order} (-i)^m I_m(t)`` where ``I_m`` is the
    time-ordered integral of ``V(t_1) ... V(t_m)`` over ``t >= t_1 >= ... >= t_m >= 0``.
    Each nested integral is evaluated with composite Simpson on
    ``quadrature_steps`` subintervals of its own range, so the cost grows like
    ``quadrature_steps ** order``. The result is flagged as non-unitary.
    """
    t = _check_time(t)
    if order not in (1, 2, 3):
        raise ValidationError(f"order must be 1, 2 or 3, got {order}")
    if quadrature_steps < 16 or quadrature_steps % 2:
        raise ValidationError(f"quadrature_steps must be an even number >= 16, got {quadrature_steps}")
    s0 = as_spectral(h0)
    h_int = np.asarray(h_int, dtype=complex)
    if h_int.shape != (s0.dim, s0.dim):
        raise ValidationError("H_I and H_0 have different shapes")
    v_eig = s0.to_eigenbasis(h_int)
    dim = s0.dim
    eye = np.eye(dim, dtype=complex)

    def v_at(s):
        return s0.rotation_phases(s) * v_eig

    def nested(s, depth):
        # [I_1(s), ..., I_depth(s)] with I_m(s) = int_0^s V(u) I_{m-1}(u) du
        if s == 0.0:
            return [np.zeros((dim, dim), dtype=complex) for _ in range(depth)]
        nodes = np.linspace(0.0, s, quadrature_steps + 1)
        weights = _simpson_weights(quadrature_steps, s / quadrature_steps)
        out = [np.zeros((dim, dim), dtype=complex) for _ in range(depth)]
        for u, w in zip(nodes, weights):
            vu = v_at(u)
            lower = [eye] + (nested(u, depth - 1) if depth > 1 else [])
            for m in range(depth):
                out[m] += w * (vu @ lower[m])
        return out

    total = eye.copy()
    for m, integral in enumerate(nested(t, order), start=1):
        total += (-1j) ** m * integral
    return Propagator(s0.from_eigenbasis(total), t, "interaction",
                      f"dyson[order={order}]", unitary=False)


def single_factor_propagator(h0, terms: Sequence[TensorTerm], space: HilbertSpec, t: float,
                             steps: int = 256, tol: float = 1e-6) -> Propagator:
    """Propagator generated by one qubit's share ``V_a(t)`` of the interaction.

    Solves ``i dU/dt = V_a(t) U``, ``U(0) = I`` with
    ``V_a(t) = exp(i H_0 t) (sum of terms) exp(-i H_0 t)`` by classical RK4 on
    ``steps`` equal steps. If the result drifts from unitarity by more than
    1e-9 it is projected back with a polar decomposition and the correction is
    logged and stored on the returned propagator. A drift above ``tol`` raises
    :class:`AccuracyError`.
    """
    t = _check_time(t)
    if steps < 64:
        raise ValidationError(f"steps must be >= 64, got {steps}")
    s0 = as_spectral(h0)
    v = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    for term in terms:
        v += term_matrix(term, space)
    v_eig = s0.to_eigenbasis(v)
    dt = t / steps

    def rhs(s, u):
        return -1j * (s0.rotation_phases(s) * v_eig) @ u

    u = np.eye(space.total_dim, dtype=complex)
    for i in range(steps):
        s = i * dt
        k1 = rhs(s, u)
        k2 = rhs(s + dt / 2, u + dt / 2 * k1)
        k3 = rhs(s + dt / 2, u + dt / 2 * k2)
        k4 = rhs(s + dt, u + dt * k3)
        u = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    u = s0.from_eigenbasis(u) if t else np.eye(space.total_dim, dtype=complex)

    defect = unitarity_defect(u)
    if defect > tol:
        raise AccuracyError(
            f"RK4 with {steps} steps drifted from unitarity by {defect:.3e} (tol {tol:.1e})", defect)
    correction = 0.0
    if defect > REUNITARIZE_TOL:
        projected, _ = scipy.linalg.polar(u)
        correction = float(np.linalg.norm(projected - u))
        logger.warning("re-unitarized single-factor propagator at t=%g: correction %.3e",
                       t, correction)
        u = projected
    label = "+".join(term.label for term in terms) or "zero"
    return Propagator(u, t, "interaction", label, unitary=True, correction=correction)


def factor_propagators(model: HamiltonianSpec, t: float, steps: int = 256,
                       require_condition: bool = True, h0=None) -> list[Propagator]:
    """The per-qubit propagators ``U_I^a(t)`` for ``a = 0 .. n-1``.

    Interaction terms with no non-trivial qubit factor are folded into the
    first qubit's factor. Terms coupling several qubits belong to no factor;
    they raise :class:`ConditionViolatedError` unless ``require_condition``
    is False, in which case they are left out of every factor.
    """
    split = split_interaction(model)
    if split.multi_qubit:
        labels = [term.label for term in split.multi_qubit]
        if require_condition:
            raise ConditionViolatedError(
                f"model {model.name!r} has multi-qubit interaction terms: {labels}")
        logger.info("leaving multi-qubit terms out of the factorization: %s", labels)
    h0 = as_spectral(assemble_part(model, "free") if h0 is None else h0)
    groups = [list(g) for g in split.per_qubit]
    groups[0] = list(split.env_only) + groups[0]
    return [single_factor_propagator(h0, g, model.space, t, steps) for g in groups]


def factorization_residual(model: HamiltonianSpec, t: float, steps: int = 256,
                           order: Sequence[int] | None = None,
                           require_condition: bool = True) -> float:
    """``||U_I(t) - U_I^{a_1}(t) U_I^{a_2}(t) ... ||_F``.

    Factors are multiplied left to right in ``order`` (default ascending
    qubit index).
    """
    t = _check_time(t)
    n = model.space.n_qubits
    order = list(range(n)) if order is None else list(order)
    if sorted(order) != list(range(n)):
        raise ValidationError(f"order must be a permutation of 0..{n - 1}, got {order}")
    h0 = as_spectral(assemble_part(model, "free"))
    factors = factor_propagators(model, t, steps, require_condition, h0=h0)
    product = np.eye(model.space.total_dim, dtype=complex)
    for a in order:
        product = product @ factors[a].matrix
    u_int = interaction_propagator(h0, assemble(model), t).matrix
    return float(np.linalg.norm(u_int - product))
