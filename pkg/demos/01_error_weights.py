"""
How fast do multi-qubit errors grow?
====================================

Decompose the interaction-picture propagator of three qubits into Pauli
strings and watch the per-weight amplitudes A(m) as time grows. With one
shared bath and no direct qubit-qubit coupling, A(1) ~ t while every A(m>=2)
starts at t^2 or later. Adding a sigma_z sigma_z coupling drags A(2) back
down to first order.
"""

import numpy as np

from correlated_errors import default_times, fit_power_law, preset_model, time_sweep

g = 0.1
times = default_times(g)  # g*t from 1e-3 to 1e-2

for preset in ("independent", "collective_dephasing", "incomplete_independent",
               "qubit_coupled_violating"):
    env_dim = 2 if preset == "independent" else 3
    model = preset_model(preset, n_qubits=3, env_dim=env_dim, g=g)
    exps = []
    for m in (1, 2, 3):
        table = time_sweep(model, times, f"weight_amplitude({m})")
        exps.append(fit_power_law(times, table.values).exponent)
    print(f"{preset:26s}", "  ".join(f"A{m} ~ t^{p:.2f}" for m, p in zip((1, 2, 3), exps)))

# the raw spectrum at one time, for a feel of the magnitudes
model = preset_model("collective_dephasing", n_qubits=3, env_dim=3, g=g)
table = time_sweep(model, times, "weight_amplitude(2)")
print("\nA(2) along the sweep:")
for t, v in table.points:
    print(f"  g*t = {g * t:.1e}   A(2) = {v:.3e}   A(2)/t^2 = {v / t ** 2:.4f}")
print("ratio is flat, so A(2) is quadratic:", np.ptp(table.values / times ** 2) < 1e-3)
