"""
Oscillators: Hamiltonian and with linear friction
==================================================

Quantize the classical generator of an oscillator, evolve <q>, <p> in the
Heisenberg picture and compare with the classical flow.
"""
import math

import numpy as np

from dynquant import (FrictionCoefficients, QuantizationContext, coherent_state,
                      dynop_friction_oscillator, quantize_dynop)
from dynquant.evolve import EvolutionSpec, ehrenfest_compare

ctx = QuantizationContext(hbar=1.0, dim=40)
rho = coherent_state(ctx, 1.0, 0.0)

# frictionless: the generator is quadratic, expectations follow cos t exactly
l = dynop_friction_oscillator(FrictionCoefficients(1, m=1.0, omega=1.0))
spec = EvolutionSpec(dt=2 * math.pi / 2000, steps=2000, picture="heisenberg", record_every=200)
r = ehrenfest_compare(l, ctx, rho, spec)
print("frictionless, one period")
for t, q, qc in zip(r.times, r.quantum[:, 0], r.classical[:, 0]):
    print(f"  t={t:5.2f}  <q>={q:+.10f}  classical={qc:+.10f}")

# linear friction alpha = 0.2: exact in the untruncated algebra, but the
# truncation edge leaks into the interior and grows
l = dynop_friction_oscillator(FrictionCoefficients(1, 1.0, 1.0, [[0.2]]))
L = quantize_dynop(l, ctx)
spec = EvolutionSpec(dt=0.01, steps=2500, picture="heisenberg", record_every=250)
r = ehrenfest_compare(l, ctx, rho, spec, generator=L)
print("\nlinear friction alpha=0.2, N=40")
for t, d in zip(r.times, r.deviation):
    print(f"  t={t:5.1f}  max |quantum - classical| = {d:.2e}")

# spectrum of the generator: every eigenvalue has real part alpha/2
ev = np.linalg.eigvals(L.dense())
print(f"\nRe spectrum in [{ev.real.min():.6f}, {ev.real.max():.6f}]")
