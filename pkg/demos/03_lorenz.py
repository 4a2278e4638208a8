"""
Lorenz model, classical and quantized
=====================================

The friction-oscillator family with the Lorenz coefficients has the Lorenz
system as its flow on (p1, p2, p3).  The two-mode Lorenz-type operator is
quantized and its expectations compared with the classical flow at small times.
"""
import numpy as np

from dynquant import (ClassicalState, QuantizationContext, coherent_state,
                      dynop_friction_oscillator, integrate_classical, lorenz_coefficients,
                      lorenz_type_dynop, vector_field)
from dynquant.evolve import EvolutionSpec, ehrenfest_compare
from dynquant.symbol import trajectory_arrays

vf = vector_field(dynop_friction_oscillator(lorenz_coefficients()))
states = integrate_classical(vf, ClassicalState(np.zeros(3), np.ones(3)), 1e-3, 30_000)
_, _, p = trajectory_arrays(states)
print("classical Lorenz, t <= 30")
print(f"  max|x|={np.abs(p[:, 0]).max():.2f}  max|y|={np.abs(p[:, 1]).max():.2f}  "
      f"z in [{p[:, 2].min():.2f}, {p[:, 2].max():.2f}]")

# two nearby starts on the attractor separate exponentially
a, b = states[10_000].p, states[10_000].p + np.array([1e-8, 0, 0])
pa = trajectory_arrays(integrate_classical(vf, ClassicalState(np.zeros(3), a), 1e-3, 25_000))[2]
pb = trajectory_arrays(integrate_classical(vf, ClassicalState(np.zeros(3), b), 1e-3, 25_000))[2]
sep = np.linalg.norm(pa - pb, axis=1)
for t in (0, 5, 10, 15, 20, 25):
    print(f"  t={t:2d}  separation {sep[t * 1000]:.2e}")

# quantum Lorenz-type operator: deviation from the classical flow is linear in hbar
l = lorenz_type_dynop()
print("\nquantum Lorenz-type, N=12 per mode, t <= 0.02")
for hbar in (0.2, 0.1, 0.05):
    ctx = QuantizationContext(hbar=hbar, dim=12, n=2)
    rho = coherent_state(ctx, [0.2, 0.0], [0.2, 0.2])
    r = ehrenfest_compare(l, ctx, rho, EvolutionSpec(0.002, 10, "heisenberg"),
                          columns=["q1", "p1", "p2"])
    print(f"  hbar={hbar:<5}  max deviation {r.max_deviation:.2e}")
