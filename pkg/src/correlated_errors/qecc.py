"""
Small stabilizer codes run against the model Hamiltonians.

The pipeline is encode -> joint evolution with the environment -> perfect
projective syndrome measurement -> table-lookup recovery -> fidelity of the
reduced qubit state with the ideal codeword. The baseline is one bare qubit
under the same preset, coupling and environment.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .evolution import exact_propagator
from .exceptions import ValidationError
from .models import HamiltonianSpec, TermKind, assemble, env_ground_state, preset_model
from .pauli_decomp import PauliString
from .scaling import ScalingFit, Verdict, check_exponent, resolve_model_kind

CODE_TOL = 1e-12
PROB_TOL = 1e-9
# squared round-off of a unit amplitude; branches below this are numerical zeros
BRANCH_FLOOR = 1e-30

DEFAULT_LOGICAL = np.array([np.cos(np.pi / 8), np.exp(1j * np.pi / 4) * np.sin(np.pi / 8)])


def _anticommutes(p: PauliString, q: PauliString) -> bool:
    clashes = sum(1 for a, b in zip(p.labels, q.labels) if a and b and a != b)
    return clashes % 2 == 1


@dataclass(frozen=True, eq=False)
class CodeSpec:
    """A stabilizer code with two explicit codewords and a recovery table.

    ``correctable`` lists the single-qubit error letters the code is built to
    correct; the distance check runs over those.
    """

    name: str
    n_physical: int
    stabilizer_generators: tuple[PauliString, ...]
    logical_basis: np.ndarray
    recovery_table: Mapping[tuple[int, ...], PauliString]
    correctable: tuple[str, ...] = ("x", "y", "z")

    def __post_init__(self):
        basis = np.array(self.logical_basis, dtype=complex)
        basis.setflags(write=False)
        object.__setattr__(self, "logical_basis", basis)
        self.validate()

    def syndrome(self, error: PauliString) -> tuple[int, ...]:
        return tuple(int(_anticommutes(error, s)) for s in self.stabilizer_generators)

    def stabilizer_matrices(self) -> list[np.ndarray]:
        return [s.matrix() for s in self.stabilizer_generators]

    def codespace_projector(self) -> np.ndarray:
        return self.logical_basis.T @ self.logical_basis.conj()

    def single_qubit_errors(self) -> list[PauliString]:
        out = []
        for q in range(self.n_physical):
            for letter in self.correctable:
                labels = [0] * self.n_physical
                labels[q] = "ixyz".index(letter)
                out.append(PauliString(tuple(labels)))
        return out

    def validate(self):
        n, dim = self.n_physical, 2 ** self.n_physical
        if self.logical_basis.shape != (2, dim):
            raise ValidationError(f"{self.name}: logical basis must have shape (2, {dim})")
        gens = self.stabilizer_generators
        for a, b in itertools.combinations(gens, 2):
            if _anticommutes(a, b):
                raise ValidationError(f"{self.name}: generators {a} and {b} anticommute")
        gram = self.logical_basis.conj() @ self.logical_basis.T
        if np.max(np.abs(gram - np.eye(2))) > CODE_TOL:
            raise ValidationError(f"{self.name}: codewords are not orthonormal")
        for s in self.stabilizer_matrices():
            for word in self.logical_basis:
                if np.linalg.norm(s @ word - word) > CODE_TOL:
                    raise ValidationError(f"{self.name}: a codeword is not fixed by every generator")
        syndromes = set(itertools.product((0, 1), repeat=len(gens)))
        if set(self.recovery_table) != syndromes:
            raise ValidationError(f"{self.name}: recovery table does not cover all syndromes")
        proj = self.codespace_projector()
        for err in self.single_qubit_errors():
            fixed = self.recovery_table[self.syndrome(err)].matrix() @ err.matrix()
            # corrected error must act as a scalar on the code space
            block = proj @ fixed @ proj
            c = np.trace(block) / 2
            if abs(abs(c) - 1) > CODE_TOL or np.max(np.abs(block - c * proj)) > CODE_TOL:
                raise ValidationError(f"{self.name}: single-qubit error {err} is not corrected")


def _recovery_table(gens: Sequence[PauliString], n: int,
                    correctable: Sequence[str]) -> dict[tuple[int, ...], PauliString]:
    """Lowest-weight correction per syndrome among single-qubit Paulis.

    Candidate order: identity, then letters in ``correctable`` order, qubit
    ascending. Syndromes left unreached get the identity.
    """
    def syn(p):
        return tuple(int(_anticommutes(p, s)) for s in gens)

    table = {syn(PauliString((0,) * n)): PauliString((0,) * n)}
    for letter in list(correctable) + [c for c in "xzy" if c not in correctable]:
        for q in range(n):
            labels = [0] * n
            labels[q] = "ixyz".index(letter)
            p = PauliString(tuple(labels))
            table.setdefault(syn(p), p)
    for s in itertools.product((0, 1), repeat=len(gens)):
        table.setdefault(s, PauliString((0,) * n))
    return table


def _stabilizer_state(gens: Sequence[PauliString], seed_state: np.ndarray) -> np.ndarray:
    v = seed_state.astype(complex)
    for g in gens:
        v = (v + g.matrix() @ v) / 2
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        raise ValidationError("seed state has no overlap with the code space")
    return v / norm


def _product_state(single: np.ndarray, n: int) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for _ in range(n):
        out = np.kron(out, single)
    return out


@lru_cache(maxsize=None)
def get_code(name: str) -> CodeSpec:
    """Return ``bitflip3``, ``phaseflip3`` or ``perfect5``."""
    if name == "bitflip3":
        gens = tuple(map(PauliString.from_text, ("ZZI", "IZZ")))
        zero, one = _product_state(np.array([1, 0]), 3), _product_state(np.array([0, 1]), 3)
        correctable = ("x",)
    elif name == "phaseflip3":
        gens = tuple(map(PauliString.from_text, ("XXI", "IXX")))
        plus, minus = np.array([1, 1]) / np.sqrt(2), np.array([1, -1]) / np.sqrt(2)
        zero, one = _product_state(plus, 3), _product_state(minus, 3)
        correctable = ("z",)
    elif name == "perfect5":
        gens = tuple(map(PauliString.from_text, ("XZZXI", "IXZZX", "XIXZZ", "ZXIXZ")))
        seed = np.zeros(32)
        seed[0] = 1
        zero = _stabilizer_state(gens, seed)
        one = PauliString.from_text("XXXXX").matrix() @ zero
        correctable = ("x", "y", "z")
    else:
        raise ValidationError(f"unknown code {name!r}; choose bitflip3, phaseflip3 or perfect5")
    n = gens[0].n
    table = _recovery_table(gens, n, correctable)
    return CodeSpec(name, n, gens, np.stack([zero, one]), table, correctable)


# -- pipeline -----------------------------------------------------------------------

def _normalized_logical(logical) -> np.ndarray:
    v = DEFAULT_LOGICAL if logical is None else np.asarray(logical, dtype=complex).reshape(-1)
    if v.shape != (2,):
        raise ValidationError("logical state must be a 2-vector")
    if abs(np.linalg.norm(v) - 1) > 1e-12:
        raise ValidationError("logical state must be normalized")
    return v


def encode(code: CodeSpec, logical) -> np.ndarray:
    """``a |0_L> + b |1_L>`` for ``logical = (a, b)``."""
    a, b = _normalized_logical(logical)
    return a * code.logical_basis[0] + b * code.logical_basis[1]


def _check_model(model: HamiltonianSpec, n: int, allow_free_qubit: bool):
    if model.space.n_qubits != n:
        raise ValidationError(f"model has {model.space.n_qubits} qubits, code needs {n}")
    if not allow_free_qubit and any(t.kind is TermKind.FREE_QUBIT and t.coefficient
                                    for t in model.terms):
        raise ValidationError("free qubit Hamiltonians must be off for code experiments")


def decohere(code: CodeSpec, model: HamiltonianSpec, state: np.ndarray,
             env_init: np.ndarray | None = None, t: float = 0.0, *,
             allow_free_qubit: bool = False, h=None) -> np.ndarray:
    """Evolve ``state ⊗ env_init`` under the full model for time ``t``.

    ``h`` may carry a precomputed Hamiltonian (dense or spectral).
    """
    _check_model(model, code.n_physical, allow_free_qubit)
    state = np.asarray(state, dtype=complex).reshape(-1)
    if state.shape != (2 ** code.n_physical,):
        raise ValidationError("encoded state has the wrong dimension")
    env = env_ground_state(model) if env_init is None else np.asarray(env_init, dtype=complex)
    if env.shape != (model.space.env_dim,):
        raise ValidationError("environment state has the wrong dimension")
    u = exact_propagator(assemble(model) if h is None else h, t).matrix
    return u @ np.kron(state, env)


@dataclass(frozen=True, eq=False)
class Branch:
    syndrome: tuple[int, ...]
    probability: float
    state: np.ndarray

    @property
    def key(self) -> str:
        return "".join(map(str, self.syndrome))


def syndrome_recover(code: CodeSpec, joint: np.ndarray) -> list[Branch]:
    """Measure every generator, then apply the table correction to each outcome.

    Returns the normalized, corrected joint state of each syndrome outcome
    whose probability exceeds the round-off floor.
    """
    dq = 2 ** code.n_physical
    psi = np.asarray(joint, dtype=complex).reshape(dq, -1)
    if abs(np.linalg.norm(psi) - 1) > 1e-9:
        raise ValidationError("joint state must be normalized")
    stabs = code.stabilizer_matrices()
    eye = np.eye(dq)
    branches = []
    for s in itertools.product((0, 1), repeat=len(stabs)):
        proj = eye
        for bit, stab in zip(s, stabs):
            proj = proj @ (eye + (-1) ** bit * stab) / 2
        part = proj @ psi
        p = float(np.vdot(part, part).real)
        if p <= BRANCH_FLOOR:
            continue
        fixed = code.recovery_table[s].matrix() @ part / np.sqrt(p)
        branches.append(Branch(s, p, fixed.reshape(-1)))
    return branches


@dataclass(frozen=True)
class FidelityReport:
    time: float
    protected_infidelity: float
    unprotected_infidelity: float
    syndrome_distribution: dict[str, float]

    def to_dict(self) -> dict:
        return {"t": self.time, "protected": self.protected_infidelity,
                "unprotected": self.unprotected_infidelity,
                "syndromes": dict(self.syndrome_distribution)}


def _infidelity(target: np.ndarray, joint: np.ndarray) -> float:
    """``1 - <target| Tr_env rho |target>`` for a normalized joint state.

    Computed as the squared norm of the component orthogonal to ``target``,
    which avoids cancellation when the infidelity is tiny.
    """
    psi = joint.reshape(target.size, -1)
    orth = psi - np.outer(target, target.conj() @ psi)
    return float(np.vdot(orth, orth).real)


def baseline_model(model: HamiltonianSpec) -> HamiltonianSpec:
    """Single-qubit version of ``model`` with identical parameters."""
    if model.params is None or model.preset is None:
        raise ValidationError("a baseline needs a preset-built model; pass one explicitly")
    return preset_model(model.preset, replace(model.params, n_qubits=1))


def unprotected_infidelity(model: HamiltonianSpec, logical, t: float,
                           baseline: HamiltonianSpec | None = None) -> float:
    """Infidelity of one bare qubit under the single-qubit version of ``model``."""
    bare = baseline_model(model) if baseline is None else baseline
    _check_model(bare, 1, False)
    psi = _normalized_logical(logical)
    env = env_ground_state(bare)
    joint = exact_propagator(assemble(bare), t).matrix @ np.kron(psi, env)
    return _infidelity(psi, joint)


def logical_fidelity_experiment(code: CodeSpec, model: HamiltonianSpec, logical, t: float, *,
                                env_init: np.ndarray | None = None,
                                baseline: HamiltonianSpec | None = None) -> FidelityReport:
    """Protected and unprotected logical infidelity at time ``t``.

    ``protected = 1 - sum_s p_s F_s`` with ``F_s`` the fidelity of the
    recovered branch (environment traced out) with the ideal encoded state.
    """
    target = encode(code, logical)
    joint = decohere(code, model, target, env_init, t)
    branches = syndrome_recover(code, joint)
    total = sum(b.probability for b in branches)
    if abs(total - 1) > PROB_TOL:
        raise ValidationError(f"syndrome probabilities sum to {total!r}")
    protected = sum(b.probability * _infidelity(target, b.state) for b in branches)
    dist = {"".join(map(str, s)): 0.0
            for s in itertools.product((0, 1), repeat=len(code.stabilizer_generators))}
    for b in branches:
        dist[b.key] = b.probability
    return FidelityReport(float(t), float(protected),
                          unprotected_infidelity(model, logical, t, baseline), dist)


def qecc_scaling_verdict(code: CodeSpec | str, model_kind: str, fits: Mapping[str, ScalingFit],
                         tolerance_scale: float = 1.0) -> Verdict:
    """Judge the infidelity exponents of a code experiment.

    Models obeying the no-qubits-interaction condition pass when the
    protected exponent is at least 3.6 and the unprotected one is 2 +- 0.2.
    The violating model passes (as a negative control) when the protected
    exponent stays at or below 2.4.
    """
    name = code if isinstance(code, str) else code.name
    kind = resolve_model_kind(model_kind)
    if "protected" not in fits:
        raise ValidationError("missing 'protected' fit")
    if kind == "violating":
        return check_exponent(fits["protected"], "custom", 2.0 + 0.4 * tolerance_scale, "<=",
                              observable=f"qecc_infidelity({name})",
                              note="no quartic gain without the no-qubits-interaction condition")
    if "unprotected" not in fits:
        raise ValidationError("missing 'unprotected' fit")
    band = 0.2 * tolerance_scale
    bare = fits["unprotected"].exponent
    verdict = check_exponent(fits["protected"], "custom", 4.0 - 0.4 * tolerance_scale, ">=",
                             observable=f"qecc_infidelity({name})",
                             note=f"unprotected exponent {bare:.4f} must lie in 2 +- {band:g}")
    return replace(verdict, passed=verdict.passed and abs(bare - 2.0) <= band)
