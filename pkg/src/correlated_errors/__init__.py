"""Correlated-error analysis for qubits coupled to quantum environments.

Build a model with :func:`preset_model`, evolve it with the propagators in
:mod:`.evolution`, split the joint unitary into Pauli-string components with
:func:`pauli_components`, and fit how each error weight grows with time.
"""

from .evolution import (Propagator, SpectralHamiltonian, dyson_truncated, exact_propagator,
                        factorization_residual, interaction_propagator,
                        single_factor_propagator)
from .exceptions import (AccuracyError, CapacityError, ConditionViolatedError,
                         InsufficientDataError, ModelDefinitionError, NumericalError,
                         ValidationError)
from .models import (HamiltonianSpec, HilbertSpec, LocalOperator, ModelParams, TensorTerm,
                     TermKind, assemble, assemble_part, build_space, embed_local,
                     env_ground_state, load_model_config, preset_model,
                     verify_no_qubit_interaction)
from .pauli_decomp import (ErrorComponent, PauliString, WeightSpectrum, completeness_residual,
                           pauli_components, weight_spectrum)
from .qecc import (CodeSpec, FidelityReport, decohere, encode, get_code,
                   logical_fidelity_experiment, qecc_scaling_verdict, syndrome_recover)
from .scaling import (ScalingFit, SweepTable, Verdict, default_times, fit_exponent, fit_power_law,
                      independence_verdict, time_sweep)

__version__ = "0.1.0"
