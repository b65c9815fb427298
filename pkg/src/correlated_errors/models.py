"""
Hilbert spaces, tensor-product Hamiltonians and model presets.

Slot convention
---------------
Slots are numbered from 0. Qubits occupy slots ``0 .. n_qubits - 1`` and the
environment factors follow in order. Dense matrices use qubit-0-major
Kronecker order, i.e. the operator on slot 0 is the leftmost factor of the
``np.kron`` chain and environments come last.

A Hamiltonian is a list of :class:`TensorTerm` objects, each a real
coefficient times a product of local operators on distinct slots. Terms are
tagged ``free_qubit``, ``free_env`` or ``interaction``; the free terms make up
``H_0`` and the interaction terms ``H_I`` so that ``H_T = H_0 + H_I``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from os import PathLike
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import CapacityError, ModelDefinitionError, ValidationError

DEFAULT_DIM_CAP = 4096
IDENTITY_TOL = 1e-12
HERMITIAN_TOL = 1e-12

SIGMA_I = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_BY_NAME = {"i": SIGMA_I, "x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


# -- spaces -------------------------------------------------------------------

@dataclass(frozen=True)
class HilbertSpec:
    """Dimensions of the qubit register and the environment factors."""

    n_qubits: int
    env_dims: tuple[int, ...]
    cap: int = DEFAULT_DIM_CAP

    def __post_init__(self):
        object.__setattr__(self, "env_dims", tuple(int(d) for d in self.env_dims))
        if int(self.n_qubits) != self.n_qubits or self.n_qubits < 1:
            raise ValidationError(f"n_qubits must be a positive integer, got {self.n_qubits!r}")
        if not self.env_dims:
            raise ValidationError("env_dims must contain at least one entry")
        if any(d < 1 for d in self.env_dims):
            raise ValidationError(f"environment dimensions must be >= 1, got {self.env_dims}")
        if self.total_dim > self.cap:
            raise CapacityError(
                f"total dimension {self.total_dim} exceeds the cap of {self.cap}")

    @property
    def qubit_dim(self) -> int:
        return 2 ** self.n_qubits

    @property
    def env_dim(self) -> int:
        return math.prod(self.env_dims)

    @property
    def total_dim(self) -> int:
        return self.qubit_dim * self.env_dim

    @property
    def slot_dims(self) -> tuple[int, ...]:
        return (2,) * self.n_qubits + self.env_dims

    @property
    def n_slots(self) -> int:
        return self.n_qubits + len(self.env_dims)

    def is_qubit_slot(self, slot: int) -> bool:
        return 0 <= slot < self.n_qubits

    def env_slot(self, index: int) -> int:
        """Global slot number of the ``index``-th environment factor."""
        if not 0 <= index < len(self.env_dims):
            raise ValidationError(f"environment index {index} out of range")
        return self.n_qubits + index

    def check_slot(self, slot: int) -> int:
        if not 0 <= slot < self.n_slots:
            raise ValidationError(f"slot {slot} out of range for {self.n_slots} slots")
        return self.slot_dims[slot]


def build_space(n_qubits: int, env_dims: Sequence[int],
                cap: int = DEFAULT_DIM_CAP) -> HilbertSpec:
    """Return a validated :class:`HilbertSpec`.

    Raises :class:`CapacityError` when ``2**n_qubits * prod(env_dims)``
    exceeds ``cap``.
    """
    return HilbertSpec(n_qubits, tuple(env_dims), cap)


# -- operators and terms --------------------------------------------------------

def _frozen_array(matrix) -> np.ndarray:
    arr = np.array(matrix, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LocalOperator:
    """A square matrix acting on one tensor factor."""

    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        arr = _frozen_array(self.matrix)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValidationError(f"operator {self.label!r} must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError(f"operator {self.label!r} has non-finite entries")
        object.__setattr__(self, "matrix", arr)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_scalar_identity(self, tol: float = IDENTITY_TOL) -> bool:
        """True if the matrix is ``c * I``, with the scalar absorbed."""
        m = self.matrix
        scale = np.max(np.abs(m)) if m.size else 0.0
        if scale == 0.0:
            return True
        c = np.trace(m) / self.dim
        return bool(np.max(np.abs(m - c * np.eye(self.dim))) <= tol * scale)


def pauli(name: str) -> LocalOperator:
    return LocalOperator(PAULI_BY_NAME[name.lower()], f"sigma_{name.lower()}")


class TermKind(str, Enum):
    FREE_QUBIT = "free_qubit"
    FREE_ENV = "free_env"
    INTERACTION = "interaction"

    @property
    def is_free(self) -> bool:
        return self is not TermKind.INTERACTION


@dataclass(frozen=True, eq=False)
class TensorTerm:
    """``coefficient * prod(factors)``; slots missing from ``factors`` are identity."""

    factors: Mapping[int, LocalOperator]
    coefficient: float
    kind: TermKind
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "factors", MappingProxyType(dict(sorted(self.factors.items()))))
        object.__setattr__(self, "kind", TermKind(self.kind))
        coeff = float(self.coefficient)
        if not math.isfinite(coeff):
            raise ValidationError(f"term {self.label!r} has non-finite coefficient")
        object.__setattr__(self, "coefficient", coeff)

    def qubit_factors(self, space: HilbertSpec) -> dict[int, LocalOperator]:
        return {s: op for s, op in self.factors.items() if space.is_qubit_slot(s)}

    def nontrivial_qubits(self, space: HilbertSpec, tol: float = IDENTITY_TOL) -> list[int]:
        return [s for s, op in self.qubit_factors(space).items()
                if not op.is_scalar_identity(tol)]

    def scaled(self, factor: float) -> "TensorTerm":
        return replace(self, coefficient=self.coefficient * factor)


@dataclass(frozen=True)
class ModelParams:
    """Parameters shared by all presets.

    ``g_prime`` is the strength of the term that distinguishes a preset from
    its parent: env-env hopping for ``incomplete_independent`` and the direct
    qubit-qubit coupling for ``qubit_coupled_violating``. ``None`` means
    "same as ``g``".
    """

    n_qubits: int
    env_dim: int = 3
    g: float = 0.1
    g_prime: float | None = None
    omega: float = 1.0
    delta: float = 0.0
    env_kind: str = "boson"
    qubit_couplings: tuple[str, ...] | None = None

    def __post_init__(self):
        if isinstance(self.n_qubits, bool) or int(self.n_qubits) != self.n_qubits or self.n_qubits < 1:
            raise ValidationError(f"n_qubits must be a positive integer, got {self.n_qubits!r}")
        if isinstance(self.env_dim, bool) or int(self.env_dim) != self.env_dim or self.env_dim < 2:
            raise ValidationError(f"env_dim must be an integer >= 2, got {self.env_dim!r}")
        object.__setattr__(self, "n_qubits", int(self.n_qubits))
        object.__setattr__(self, "env_dim", int(self.env_dim))
        for name in ("g", "omega", "delta"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.g_prime is not None and not math.isfinite(self.g_prime):
            raise ValidationError("g_prime must be finite")
        if self.env_kind not in ("boson", "spin"):
            raise ValidationError(f"env_kind must be 'boson' or 'spin', got {self.env_kind!r}")
        if self.env_kind == "spin" and self.env_dim != 2:
            raise ValidationError("a spin environment has env_dim 2")
        if self.qubit_couplings is not None:
            couplings = tuple(c.lower() for c in self.qubit_couplings)
            if not couplings or any(c not in ("x", "y", "z") for c in couplings):
                raise ValidationError(f"qubit_couplings must be drawn from x, y, z: {self.qubit_couplings!r}")
            object.__setattr__(self, "qubit_couplings", couplings)

    @property
    def coupling_prime(self) -> float:
        return self.g if self.g_prime is None else self.g_prime


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    space: HilbertSpec
    terms: tuple[TensorTerm, ...]
    name: str = ""
    preset: str | None = None
    params: ModelParams | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            for slot, op in term.factors.items():
                dim = self.space.check_slot(slot)
                if op.dim != dim:
                    raise ValidationError(
                        f"term {term.label!r}: factor on slot {slot} has dim {op.dim}, slot has {dim}")
            qubit_slots = [s for s in term.factors if self.space.is_qubit_slot(s)]
            if term.kind is TermKind.FREE_ENV and qubit_slots:
                raise ModelDefinitionError(f"free_env term {term.label!r} acts on qubit slots {qubit_slots}")
            if term.kind is TermKind.FREE_QUBIT and len(qubit_slots) != len(term.factors):
                raise ModelDefinitionError(f"free_qubit term {term.label!r} acts on environment slots")

    def part(self, which: str) -> tuple[TensorTerm, ...]:
        if which == "free":
            return tuple(t for t in self.terms if t.kind.is_free)
        if which == "interaction":
            return tuple(t for t in self.terms if t.kind is TermKind.INTERACTION)
        raise ValidationError(f"unknown part {which!r}; use 'free' or 'interaction'")

    def with_terms(self, terms: Iterable[TensorTerm], name: str | None = None) -> "HamiltonianSpec":
        return replace(self, terms=tuple(terms), name=self.name if name is None else name)


# -- dense assembly -----------------------------------------------------------------

def _kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def term_matrix(term: TensorTerm, space: HilbertSpec, dims: Sequence[int] | None = None,
                slots: Sequence[int] | None = None) -> np.ndarray:
    """Dense matrix of ``coefficient * prod(factors)``.

    ``slots`` restricts the Kronecker chain to a subset of slots (used to
    build environment-only operators); factors outside it are rejected.
    """
    slots = list(range(space.n_slots)) if slots is None else list(slots)
    if not set(term.factors) <= set(slots):
        raise ValidationError(f"term {term.label!r} acts outside slots {slots}")
    mats = []
    for s in slots:
        op = term.factors.get(s)
        mats.append(op.matrix if op is not None else np.eye(space.slot_dims[s], dtype=complex))
    return term.coefficient * _kron_all(mats)


def embed_local(op: LocalOperator, slot: int, space: HilbertSpec) -> np.ndarray:
    """Return ``I ⊗ ... ⊗ op ⊗ ... ⊗ I`` with ``op`` on ``slot``."""
    dim = space.check_slot(slot)
    if op.dim != dim:
        raise ValidationError(f"operator {op.label!r} has dim {op.dim}, slot {slot} has {dim}")
    return term_matrix(TensorTerm({slot: op}, 1.0, TermKind.INTERACTION), space)


def _sum_terms(terms: Sequence[TensorTerm], space: HilbertSpec) -> np.ndarray:
    out = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    for term in terms:
        out += term_matrix(term, space)
    return out


def _check_hermitian(h: np.ndarray, terms: Sequence[TensorTerm], space: HilbertSpec, what: str):
    scale = np.max(np.abs(h)) if h.size else 0.0
    if np.max(np.abs(h - h.conj().T), initial=0.0) <= HERMITIAN_TOL * scale:
        return
    culprits = []
    for term in terms:
        m = term_matrix(term, space)
        s = np.max(np.abs(m))
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL * max(s, 1e-300):
            culprits.append(term.label or repr(term))
    raise ModelDefinitionError(f"{what} is not Hermitian; non-Hermitian terms: {culprits}")


def assemble_part(spec: HamiltonianSpec, which: str) -> np.ndarray:
    """Dense ``H_0`` (``which='free'``) or ``H_I`` (``which='interaction'``)."""
    terms = spec.part(which)
    h = _sum_terms(terms, spec.space)
    _check_hermitian(h, terms, spec.space, f"{spec.name or 'model'} [{which}]")
    return h


def assemble(spec: HamiltonianSpec) -> np.ndarray:
    """Dense ``H_T = H_0 + H_I``, summed part by part in term order."""
    h = assemble_part(spec, "free") + assemble_part(spec, "interaction")
    _check_hermitian(h, spec.terms, spec.space, spec.name or "model")
    return h


def env_free_hamiltonian(spec: HamiltonianSpec) -> np.ndarray:
    """Free environment Hamiltonian on the environment factors alone."""
    space = spec.space
    env_slots = [space.env_slot(i) for i in range(len(space.env_dims))]
    h = np.zeros((space.env_dim, space.env_dim), dtype=complex)
    for term in spec.terms:
        if term.kind is TermKind.FREE_ENV:
            h += term_matrix(term, space, slots=env_slots)
    return h


def env_ground_state(spec: HamiltonianSpec) -> np.ndarray:
    """Lowest eigenvector of the free environment Hamiltonian.

    The phase is fixed so the largest-magnitude entry is real and positive.
    """
    h = env_free_hamiltonian(spec)
    _, vecs = np.linalg.eigh(h)
    v = vecs[:, 0]
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


# -- no-qubits-interaction condition ---------------------------------------------

@dataclass(frozen=True)
class Violation:
    index: int
    label: str
    qubits: tuple[int, ...]


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of :func:`verify_no_qubit_interaction`; truthy iff the condition holds."""

    holds: bool
    violations: tuple[Violation, ...]
    n_interaction_terms: int

    def __bool__(self):
        return self.holds

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "n_interaction_terms": self.n_interaction_terms,
            "violations": [
                {"index": v.index, "label": v.label, "qubits": list(v.qubits)}
                for v in self.violations
            ],
        }


def verify_no_qubit_interaction(spec: HamiltonianSpec, tol: float = IDENTITY_TOL) -> ConditionReport:
    """Check that every interaction term touches at most one qubit non-trivially.

    Qubit factors proportional to the identity count as identity. Terms with
    no non-trivial qubit factor (pure environment drives) are allowed.
    """
    violations = []
    n_int = 0
    for i, term in enumerate(spec.terms):
        if term.kind is not TermKind.INTERACTION:
            continue
        n_int += 1
        qubits = term.nontrivial_qubits(spec.space, tol)
        if len(qubits) > 1:
            violations.append(Violation(i, term.label, tuple(qubits)))
    return ConditionReport(not violations, tuple(violations), n_int)


@dataclass(frozen=True)
class InteractionSplit:
    """Interaction terms sorted by the single qubit they act on.

    ``env_only`` holds terms with no non-trivial qubit factor and
    ``multi_qubit`` those that break the no-qubits-interaction condition.
    """

    per_qubit: tuple[tuple[TensorTerm, ...], ...]
    env_only: tuple[TensorTerm, ...]
    multi_qubit: tuple[TensorTerm, ...]


def split_interaction(spec: HamiltonianSpec, tol: float = IDENTITY_TOL) -> InteractionSplit:
    per_qubit: list[list[TensorTerm]] = [[] for _ in range(spec.space.n_qubits)]
    env_only, multi = [], []
    for term in spec.part("interaction"):
        qubits = term.nontrivial_qubits(spec.space, tol)
        if not qubits:
            env_only.append(term)
        elif len(qubits) == 1:
            per_qubit[qubits[0]].append(term)
        else:
            multi.append(term)
    return InteractionSplit(tuple(map(tuple, per_qubit)), tuple(env_only), tuple(multi))


def per_qubit_groups(spec: HamiltonianSpec) -> dict[int, tuple[TensorTerm, ...]]:
    """Group terms of an independent-environment model by qubit.

    Group ``a`` holds every term whose slots lie in ``{a, env slot a}``.
    Raises if some term fits no group, i.e. the model is not of the
    independent form.
    """
    space = spec.space
    if len(space.env_dims) != space.n_qubits:
        raise ModelDefinitionError("independent grouping needs one environment factor per qubit")
    groups: dict[int, list[TensorTerm]] = {a: [] for a in range(space.n_qubits)}
    for term in spec.terms:
        slots = set(term.factors)
        owners = [a for a in groups if slots <= {a, space.env_slot(a)}]
        if not owners:
            raise ModelDefinitionError(f"term {term.label!r} couples different qubit groups")
        groups[owners[0]].append(term)
    return {a: tuple(ts) for a, ts in groups.items()}


# -- environments and presets ----------------------------------------------------

@dataclass(frozen=True)
class EnvOperators:
    free: LocalOperator
    coupling: LocalOperator
    quadrature: LocalOperator


def environment_operators(kind: str, dim: int) -> EnvOperators:
    """Free term, coupling operator and conjugate quadrature of one environment.

    ``boson``: truncated oscillator with ``b^dag b``, ``b + b^dag`` and
    ``i (b^dag - b)``. ``spin``: two-level system with ``sigma_z / 2``,
    ``sigma_x`` and ``sigma_y``.
    """
    if kind == "boson":
        b = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
        bd = b.conj().T
        return EnvOperators(
            LocalOperator(bd @ b, "boson_n"),
            LocalOperator(b + bd, "boson_x"),
            LocalOperator(1j * (bd - b), "boson_p"),
        )
    if kind == "spin":
        if dim != 2:
            raise ValidationError("a spin environment has dimension 2")
        return EnvOperators(
            LocalOperator(SIGMA_Z / 2, "spin_z/2"),
            LocalOperator(SIGMA_X, "spin_x"),
            LocalOperator(SIGMA_Y, "spin_y"),
        )
    raise ValidationError(f"unknown environment kind {kind!r}")


PRESETS = (
    "independent",
    "incomplete_independent",
    "collective_dephasing",
    "collective_general",
    "qubit_coupled_violating",
)

# preset -> model kind used by the verdict logic
MODEL_KINDS = {
    "independent": "independent",
    "incomplete_independent": "no_qubit_interaction",
    "collective_dephasing": "no_qubit_interaction",
    "collective_general": "no_qubit_interaction",
    "qubit_coupled_violating": "violating",
}


def _free_qubit_terms(p: ModelParams) -> list[TensorTerm]:
    if p.delta == 0.0:
        return []
    return [TensorTerm({a: pauli("z")}, p.delta, TermKind.FREE_QUBIT, f"delta*z[q{a}]")
            for a in range(p.n_qubits)]


def _env_hopping(space: HilbertSpec, env: EnvOperators, strength: float) -> list[TensorTerm]:
    # b1^dag b2 + h.c. = (X1 X2 + P1 P2) / 2 keeps every term Hermitian
    terms = []
    for i in range(len(space.env_dims) - 1):
        s1, s2 = space.env_slot(i), space.env_slot(i + 1)
        terms.append(TensorTerm({s1: env.coupling, s2: env.coupling}, strength / 2,
                                TermKind.FREE_ENV, f"hop_x[e{i},e{i + 1}]"))
        terms.append(TensorTerm({s1: env.quadrature, s2: env.quadrature}, strength / 2,
                                TermKind.FREE_ENV, f"hop_p[e{i},e{i + 1}]"))
    return terms


def preset_model(name: str, params: ModelParams | None = None, *,
                 cap: int = DEFAULT_DIM_CAP, **kwargs) -> HamiltonianSpec:
    """Build one of the named model Hamiltonians.

    Parameters are given either as a :class:`ModelParams` or as keyword
    arguments of the same names, e.g.
    ``preset_model("collective_dephasing", n_qubits=3, env_dim=3, g=0.1)``.
    """
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; choose from {PRESETS}")
    if params is None:
        params = ModelParams(**kwargs)
    elif kwargs:
        params = replace(params, **kwargs)
    p = params
    env = environment_operators(p.env_kind, p.env_dim)
    n = p.n_qubits
    couplings = p.qubit_couplings or (("z", "x") if name == "collective_general" else ("z",))

    terms = _free_qubit_terms(p)
    if name in ("independent", "incomplete_independent"):
        space = build_space(n, [p.env_dim] * n, cap)
        for a in range(n):
            terms.append(TensorTerm({space.env_slot(a): env.free}, p.omega, TermKind.FREE_ENV,
                                    f"omega*{env.free.label}[e{a}]"))
        if name == "incomplete_independent":
            terms += _env_hopping(space, env, p.coupling_prime)
        for a in range(n):
            for c in couplings:
                terms.append(TensorTerm({a: pauli(c), space.env_slot(a): env.coupling}, p.g,
                                        TermKind.INTERACTION, f"g*{c}[q{a}]*{env.coupling.label}[e{a}]"))
    else:
        space = build_space(n, [p.env_dim], cap)
        e = space.env_slot(0)
        terms.append(TensorTerm({e: env.free}, p.omega, TermKind.FREE_ENV,
                                f"omega*{env.free.label}[e0]"))
        for a in range(n):
            for c in couplings:
                terms.append(TensorTerm({a: pauli(c), e: env.coupling}, p.g, TermKind.INTERACTION,
                                        f"g*{c}[q{a}]*{env.coupling.label}[e0]"))
        if name == "qubit_coupled_violating":
            for a in range(n):
                for b in range(a + 1, n):
                    terms.append(TensorTerm({a: pauli("z"), b: pauli("z")}, p.coupling_prime,
                                            TermKind.INTERACTION, f"g'*z[q{a}]*z[q{b}]"))
    return HamiltonianSpec(space, tuple(terms), name=name, preset=name, params=p)


CONFIG_KEYS = frozenset({"preset", "n_qubits", "env_dim", "g", "g_prime", "omega", "delta", "env_kind"})


def load_model_config(doc: Mapping | str | PathLike, cap: int = DEFAULT_DIM_CAP) -> HamiltonianSpec:
    """Build a preset from a JSON document (mapping, JSON text or file path).

    Accepted keys: preset, n_qubits, env_dim, g, g_prime, omega, delta,
    env_kind. Unknown keys are rejected.
    """
    if not isinstance(doc, Mapping):
        text = str(doc)
        if text.lstrip().startswith("{"):
            doc = json.loads(text)
        else:
            with open(doc, encoding="utf-8") as fh:
                doc = json.load(fh)
    unknown = set(doc) - CONFIG_KEYS
    if unknown:
        raise ValidationError(f"unknown model config keys: {sorted(unknown)}")
    if "preset" not in doc:
        raise ValidationError("model config needs a 'preset' key")
    kwargs = {k: v for k, v in doc.items() if k != "preset"}
    if "n_qubits" not in kwargs:
        raise ValidationError("model config needs 'n_qubits'")
    for key in ("g", "g_prime", "omega", "delta"):
        if kwargs.get(key) is not None:
            kwargs[key] = float(kwargs[key])
    return preset_model(doc["preset"], cap=cap, **kwargs)


def model_to_config(spec: HamiltonianSpec) -> dict:
    """Inverse of :func:`load_model_config` for preset-built models."""
    if spec.params is None or spec.preset is None:
        raise ValidationError("model was not built from a preset")
    p = spec.params
    return {"preset": spec.preset, "n_qubits": p.n_qubits, "env_dim": p.env_dim, "g": p.g,
            "g_prime": p.g_prime, "omega": p.omega, "delta": p.delta, "env_kind": p.env_kind}
