"""
Pauli-string decomposition of a joint qubit-environment operator.

Any operator on ``(C^2)^n ⊗ H_env`` can be written uniquely as
``U = sum_k sigma^k ⊗ E_k`` with ``E_k = 2^-n Tr_qubits[(sigma^k ⊗ I)^dag U]``.
Acting on an environment state ``|e>`` gives the (unnormalized, generally
non-orthogonal) environment vectors ``|e_k> = E_k |e>``. The weight of a
string is its number of non-identity factors.

Labels follow ``0 = I, 1 = X, 2 = Y, 3 = Z``. The default basis uses the
Hermitian ``sigma_y``; ``convention="antihermitian_y"`` uses ``-i sigma_y``
instead, which changes only the phase of the ``Y`` components.
"""

from __future__ import annotations

import csv
import itertools
import string
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import ValidationError
from .models import SIGMA_I, SIGMA_X, SIGMA_Y, SIGMA_Z, HilbertSpec

NORMALIZATION_TOL = 1e-12
COMPLETENESS_TOL = 1e-9

_BASES = {
    "standard": np.stack([SIGMA_I, SIGMA_X, SIGMA_Y, SIGMA_Z]),
    "antihermitian_y": np.stack([SIGMA_I, SIGMA_X, -1j * SIGMA_Y, SIGMA_Z]),
}


def pauli_basis(convention: str = "standard") -> np.ndarray:
    try:
        return _BASES[convention]
    except KeyError:
        raise ValidationError(f"unknown Pauli convention {convention!r}") from None


@dataclass(frozen=True)
class PauliString:
    labels: tuple[int, ...]

    def __post_init__(self):
        labels = tuple(int(k) for k in self.labels)
        if any(k not in (0, 1, 2, 3) for k in labels):
            raise ValidationError(f"Pauli labels must be in 0..3, got {self.labels}")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_text(cls, text: str) -> "PauliString":
        """Parse ``"XIZ"`` or ``"103"``."""
        table = {"I": 0, "X": 1, "Y": 2, "Z": 3}
        return cls(tuple(table[c] if c in table else int(c) for c in text.upper()))

    @property
    def weight(self) -> int:
        return sum(1 for k in self.labels if k)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def k_string(self) -> str:
        return "".join(str(k) for k in self.labels)

    def __str__(self):
        return "".join("IXYZ"[k] for k in self.labels)

    def matrix(self, convention: str = "standard") -> np.ndarray:
        basis = pauli_basis(convention)
        out = np.ones((1, 1), dtype=complex)
        for k in self.labels:
            out = np.kron(out, basis[k])
        return out


@dataclass(frozen=True, eq=False)
class ErrorComponent:
    string: PauliString
    env_operator: np.ndarray
    env_vector: np.ndarray
    norm: float

    @property
    def weight(self) -> int:
        return self.string.weight

    @property
    def normalized_vector(self) -> np.ndarray | None:
        if self.norm == 0.0:
            return None
        return self.env_vector / self.norm

    @property
    def max_env_amp(self) -> float:
        return float(np.max(np.abs(self.env_vector), initial=0.0))


@dataclass(frozen=True)
class WeightSpectrum:
    """Root-sum-square amplitude per error weight at one time.

    ``amplitudes[m] = sqrt(sum of norm^2 over strings of weight m)``;
    ``max_norms[m]`` is the largest single-string norm in that class.
    """

    time: float
    amplitudes: dict[int, float]
    counts: dict[int, int]
    max_norms: dict[int, float]

    def amplitude(self, m: int) -> float:
        return self.amplitudes.get(m, 0.0)

    @property
    def total(self) -> float:
        return float(sum(a * a for a in self.amplitudes.values()))


def env_operators(u: np.ndarray, space: HilbertSpec, convention: str = "standard") -> np.ndarray:
    """All ``E_k`` as an array of shape ``(4**n, d_env, d_env)``.

    The leading index enumerates strings in base 4 with qubit 0 as the most
    significant digit.
    """
    u = np.asarray(u, dtype=complex)
    n, d = space.n_qubits, space.env_dim
    if u.shape != (space.total_dim, space.total_dim):
        raise ValidationError(f"operator shape {u.shape} does not match space dimension {space.total_dim}")
    if n > 7:
        raise ValidationError("Pauli decomposition is limited to n_qubits <= 7")
    basis_conj = pauli_basis(convention).conj()
    letters = iter(string.ascii_letters)
    rows = [next(letters) for _ in range(n)]
    cols = [next(letters) for _ in range(n)]
    ks = [next(letters) for _ in range(n)]
    er, ec = next(letters), next(letters)
    # Tr[(P^dag ⊗ I) U] = sum_{ij} conj(P)_{ji} U_{(j,e),(i,f)}
    operands = [f"{k}{r}{c}" for k, r, c in zip(ks, rows, cols)]
    tensor = u.reshape((2,) * n + (d,) + (2,) * n + (d,))
    spec = ",".join(operands + ["".join(rows) + er + "".join(cols) + ec])
    spec += "->" + "".join(ks) + er + ec
    e = np.einsum(spec, *([basis_conj] * n), tensor, optimize=True)
    return e.reshape(4 ** n, d, d) / 2 ** n


def reconstruct(env_ops: np.ndarray, space: HilbertSpec, convention: str = "standard") -> np.ndarray:
    """``sum_k sigma^k ⊗ E_k``."""
    n, d = space.n_qubits, space.env_dim
    basis = pauli_basis(convention)
    letters = iter(string.ascii_letters)
    rows = [next(letters) for _ in range(n)]
    cols = [next(letters) for _ in range(n)]
    ks = [next(letters) for _ in range(n)]
    er, ec = next(letters), next(letters)
    operands = [f"{k}{r}{c}" for k, r, c in zip(ks, rows, cols)]
    spec = ",".join(operands + ["".join(ks) + er + ec])
    spec += "->" + "".join(rows) + er + "".join(cols) + ec
    tensor = np.einsum(spec, *([basis] * n), env_ops.reshape((4,) * n + (d, d)), optimize=True)
    return tensor.reshape(space.total_dim, space.total_dim)


def _matrix_of(u) -> np.ndarray:
    return getattr(u, "matrix", u)


def pauli_components(u, space: HilbertSpec, env_init: np.ndarray,
                     convention: str = "standard") -> list[ErrorComponent]:
    """Decompose ``u`` (a matrix or :class:`Propagator`) into all ``4**n`` components."""
    env_init = np.asarray(env_init, dtype=complex).reshape(-1)
    if env_init.shape != (space.env_dim,):
        raise ValidationError(f"env_init has length {env_init.size}, environment dimension is {space.env_dim}")
    if abs(np.linalg.norm(env_init) - 1.0) > NORMALIZATION_TOL:
        raise ValidationError("env_init must be normalized")
    ops = env_operators(_matrix_of(u), space, convention)
    vecs = ops @ env_init
    norms = np.linalg.norm(vecs, axis=1)
    out = []
    for idx, labels in enumerate(itertools.product(range(4), repeat=space.n_qubits)):
        out.append(ErrorComponent(PauliString(labels), ops[idx], vecs[idx], float(norms[idx])))
    return out


def weight_spectrum(components: Sequence[ErrorComponent], time: float,
                    check_completeness: bool = False) -> WeightSpectrum:
    """Aggregate component norms by weight.

    With ``check_completeness`` the squared amplitudes must sum to one
    (which holds for a unitary source and a normalized environment state).
    """
    if not components:
        raise ValidationError("empty component list")
    n = components[0].string.n
    if len(components) != 4 ** n or len({c.string.labels for c in components}) != 4 ** n:
        raise ValidationError(f"expected all {4 ** n} Pauli strings, got {len(components)}")
    sq = {m: 0.0 for m in range(n + 1)}
    counts = {m: 0 for m in range(n + 1)}
    max_norms = {m: 0.0 for m in range(n + 1)}
    for c in components:
        m = c.weight
        sq[m] += c.norm ** 2
        counts[m] += 1
        max_norms[m] = max(max_norms[m], c.norm)
    spectrum = WeightSpectrum(float(time), {m: float(np.sqrt(v)) for m, v in sq.items()},
                              counts, max_norms)
    if check_completeness and abs(spectrum.total - 1.0) > COMPLETENESS_TOL:
        raise ValidationError(f"weight amplitudes are not complete: sum A^2 = {spectrum.total!r}")
    return spectrum


def mixed_weight_spectrum(u, space: HilbertSpec, env_states: Sequence[np.ndarray],
                          probabilities: Sequence[float], time: float) -> WeightSpectrum:
    """Weight spectrum for an environment mixture ``sum_p w_p |e_p><e_p|``.

    Squared amplitudes are averaged with the mixture weights.
    """
    probabilities = np.asarray(probabilities, dtype=float)
    if len(env_states) != len(probabilities) or np.any(probabilities < 0):
        raise ValidationError("need one non-negative weight per environment state")
    if abs(probabilities.sum() - 1.0) > 1e-12:
        raise ValidationError("mixture weights must sum to one")
    n = space.n_qubits
    sq = {m: 0.0 for m in range(n + 1)}
    max_norms = {m: 0.0 for m in range(n + 1)}
    counts: dict[int, int] = {}
    for w, state in zip(probabilities, env_states):
        spec = weight_spectrum(pauli_components(u, space, state), time)
        counts = spec.counts
        for m in sq:
            sq[m] += w * spec.amplitudes[m] ** 2
            max_norms[m] = max(max_norms[m], spec.max_norms[m])
    return WeightSpectrum(float(time), {m: float(np.sqrt(v)) for m, v in sq.items()},
                          counts, max_norms)


def completeness_residual(components: Sequence[ErrorComponent]) -> float:
    """``||sum_k E_k^dag E_k - I_env||_F``; zero for a unitary source."""
    d = components[0].env_operator.shape[0]
    acc = np.zeros((d, d), dtype=complex)
    for c in components:
        acc += c.env_operator.conj().T @ c.env_operator
    return float(np.linalg.norm(acc - np.eye(d)))


def reconstruction_residual(u, components: Sequence[ErrorComponent], space: HilbertSpec,
                            convention: str = "standard") -> float:
    ops = np.stack([c.env_operator for c in components])
    return float(np.linalg.norm(_matrix_of(u) - reconstruct(ops, space, convention)))


COMPONENT_COLUMNS = ("t", "k_string", "weight", "norm", "max_env_amp")


def write_components_csv(path, rows: Iterable[tuple[float, Sequence[ErrorComponent]]]):
    """Dump ``(t, components)`` pairs, one CSV row per Pauli string."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COMPONENT_COLUMNS)
        for t, components in rows:
            for c in components:
                writer.writerow([f"{t:.17g}", c.string.k_string, c.weight,
                                 f"{c.norm:.17g}", f"{c.max_env_amp:.17g}"])
