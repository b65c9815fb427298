"""
Per-qubit factorization of the interaction-picture propagator
=============================================================

When every interaction term touches a single qubit, U_I(t) is close to a
product of per-qubit factors U_I^a(t), each generated by only the terms of
qubit a. The mismatch is a commutator effect, so it starts at order t^2 or
higher (here t^3). The truncated Dyson series gives the same picture: the
order-m truncation misses U_I by O(t^(m+1)).
"""

import numpy as np

from correlated_errors import (assemble, assemble_part, default_times, dyson_truncated,
                               factorization_residual, fit_power_law, interaction_propagator,
                               preset_model)

g = 0.1
times = default_times(g)
model = preset_model("collective_dephasing", n_qubits=3, env_dim=2, g=g)

forward = [factorization_residual(model, t) for t in times]
backward = [factorization_residual(model, t, order=(2, 1, 0)) for t in times]
print("factorization residual exponent:", round(fit_power_law(times, forward).exponent, 3))
print("same, factors reversed:         ", round(fit_power_law(times, backward).exponent, 3))

# a qubit-qubit coupling breaks the product structure at first order
bad = preset_model("qubit_coupled_violating", n_qubits=3, env_dim=2, g=g)
res = [factorization_residual(bad, t, require_condition=False) for t in times]
print("with sigma_z sigma_z coupling:  ", round(fit_power_law(times, res).exponent, 3))

h0, hi, ht = assemble_part(model, "free"), assemble_part(model, "interaction"), assemble(model)
for order in (1, 2, 3):
    defect = [np.linalg.norm(interaction_propagator(h0, ht, t).matrix
                             - dyson_truncated(h0, hi, t, order).matrix) for t in times]
    print(f"Dyson order {order}: defect ~ t^{fit_power_law(times, defect).exponent:.2f}")
