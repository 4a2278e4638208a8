"""
Fokker-Planck generator: three routes to one superoperator
===========================================================

Lindblad form from extracted jump operators, explicit double-commutator form,
and generic quantization of the second-order differential operator.
"""
import numpy as np

from dynquant import QuantizationContext, coherent_state
from dynquant.evolve import EvolutionSpec, evolve_state
from dynquant.lindblad import (FokkerPlanckCoeffs, build_explicit_superop, build_lindblad_superop,
                               derive_params, generic_superop, solve_lindblad_ops, stated_h)
from dynquant.superop import interior_vec_indices, superop_max_diff

c = FokkerPlanckCoeffs(d_qq=0.1, d_qp=0.0, d_pp=0.1, c_qq=0.0, c_qp=1.0, c_pq=-1.0, c_pp=0.2)
ctx = QuantizationContext(hbar=1.0, dim=30)
print(derive_params(c))

model = solve_lindblad_ops(c, ctx)
print("jump operators V = a p + b q:")
for a, b in zip(model.a, model.b):
    print(f"  a={a:.4f}  b={b:.4f}")

lind = build_lindblad_superop(model, ctx)
expl = build_explicit_superop(c, ctx)
gen, h = generic_superop(c, ctx)
rows = interior_vec_indices(ctx, 2)
print(f"calibrated h = {h:.6f}  (alternative closed form: {stated_h(c):.6f})")
print(f"|lindblad - explicit|            = {superop_max_diff(lind, expl):.2e}")
print(f"|generic - explicit| on interior = {superop_max_diff(gen, expl, rows):.2e}")

rho = coherent_state(ctx, 1.0, 0.0)
rec = evolve_state(lind, rho, [ctx.q(), ctx.p()], EvolutionSpec(0.01, 2000, record_every=250),
                   ["q", "p"])
print("\n  t      <q>       <p>     trace-1    min eig")
for t, (q, p), tr, me in zip(rec.times, rec.expectations, rec.trace, rec.min_eigenvalue):
    print(f"{t:5.1f} {q:+.5f} {p:+.5f} {tr - 1:+.1e} {me:+.1e}")
