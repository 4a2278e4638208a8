"""Numerical identity suite: every algebraic relation the library relies on, with residuals.

Each check returns a residual and tolerance; truncation-sensitive identities are
evaluated on the interior subspace.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
import numpy as np

from .hilbert import (MatrixOperator, QuantizationContext, WeylBasisParams, build_weyl_operator,
                      commutator, hs_inner, interior_block, jordan, weyl_quantize)
from .lindblad import (FokkerPlanckCoeffs, build_explicit_superop, build_lindblad_superop,
                       generic_superop, solve_lindblad_ops)
from .superop import (_corrupted_atom, build_P1, build_P2, build_Q1, build_Q2,
                      build_weyl_superop_basis, commutator_superop, hamiltonian_superop,
                      identity_superop, interior_vec_indices, jordan_superop, quantize_dynop,
                      superop_max_diff)
from .symbol import (DynOpSymbol, FrictionCoefficients, MultiIndex, PolySymbol,
                     dynop_friction_oscillator, dynop_from_hamiltonian, pvar, qvar)

__all__ = ["CheckResult", "DEFAULT_SEED", "verify_all", "random_symbol", "random_hermitian",
           "friction_hand_assembled", "report_json"]

DEFAULT_SEED = 0xD15517A7


@dataclass
class CheckResult:
    name: str
    residual: float
    tolerance: float
    passed: bool


def random_hermitian(ctx: QuantizationContext, rng: np.random.Generator) -> MatrixOperator:
    d = ctx.size
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return MatrixOperator(ctx, 0.5 * (x + x.conj().T), hermitian=True)


def random_operator(ctx: QuantizationContext, rng: np.random.Generator) -> MatrixOperator:
    d = ctx.size
    return MatrixOperator(ctx, rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))


def random_symbol(n: int, degree: int, rng: np.random.Generator, nterms: int = 4) -> PolySymbol:
    """Random polynomial with small integer coefficients and total degree <= ``degree``."""
    terms = {}
    for _ in range(nterms):
        exps = np.zeros(2 * n, dtype=int)
        for _ in range(int(rng.integers(0, degree + 1))):
            exps[rng.integers(0, 2 * n)] += 1
        terms[MultiIndex(tuple(exps[:n]), tuple(exps[n:]))] = float(rng.integers(-3, 4) or 1)
    return PolySymbol(n, terms)


def friction_hand_assembled(c: FrictionCoefficients, ctx: QuantizationContext):
    """(i/hbar)[H, .] + (i/hbar) a_km p_m o [q_k, .] + (i/hbar) b_kms p_m o (p_s o [q_k, .])."""
    n = c.n
    h = sum((pvar(k, n) ** 2 * (0.5 / c.m) + qvar(k, n) ** 2 * (0.5 * c.m * c.omega ** 2)
             for k in range(1, n + 1)), PolySymbol(n))
    out = hamiltonian_superop(weyl_quantize(h, ctx))
    f = 1j / ctx.hbar
    J = [jordan_superop(ctx.p(k)) for k in range(1, n + 1)]
    C = [commutator_superop(ctx.q(k)) for k in range(1, n + 1)]
    for k in range(n):
        for m in range(n):
            if c.alpha[k, m]:
                out = out + (J[m] @ C[k]) * (f * c.alpha[k, m])
            for s in range(n):
                if c.beta[k, m, s]:
                    out = out + (J[m] @ J[s] @ C[k]) * (f * c.beta[k, m, s])
    return out


def _max(x) -> float:
    x = x.data if isinstance(x, MatrixOperator) else np.asarray(x)
    return float(np.abs(x).max()) if x.size else 0.0


def _scale(*ops) -> float:
    return float(np.prod([max(1.0, _max(o)) for o in ops]))


def _checks(ctx: QuantizationContext, rng: np.random.Generator, samples: int):
    """Yield (name, residual, tolerance) triples."""
    hb = ctx.hbar
    I = ctx.identity()
    guard = max(ctx.guard, 2)
    rows = interior_vec_indices(ctx, guard)
    idsup = identity_superop(ctx)
    ks = range(1, ctx.n + 1)

    # basis superoperators on the identity
    for k in ks:
        yield f"basis.on_identity.Q1[{k}]", _max(build_Q1(ctx, k).apply(I) - ctx.q(k)), 1e-14 * _scale(ctx.q(k))
        yield f"basis.on_identity.Q2[{k}]", _max(build_Q2(ctx, k).apply(I) - ctx.p(k)), 1e-14 * _scale(ctx.p(k))
        yield f"basis.on_identity.P1[{k}]", _max(build_P1(ctx, k).apply(I)), 1e-14
        yield f"basis.on_identity.P2[{k}]", _max(build_P2(ctx, k).apply(I)), 1e-14

    pairs = [(random_hermitian(ctx, rng), random_hermitian(ctx, rng)) for _ in range(samples)]
    for name, builder in (("Q1", build_Q1), ("Q2", build_Q2), ("P1", build_P1), ("P2", build_P2)):
        for k in ks:
            # <S A, B> = <A, S B>
            s = builder(ctx, k)
            res = max(abs(hs_inner(s.apply(a), b) - hs_inner(a, s.apply(b))) for a, b in pairs)
            sc = max(_scale(s.apply(a), b) for a, b in pairs)
            yield f"basis.selfadjoint.{name}[{k}]", res, 1e-10 * sc
    for name, builder in (("P1", build_P1), ("P2", build_P2)):
        for k in ks:
            s = builder(ctx, k)
            res = 0.0
            sc = 1.0
            for a, b in pairs:
                lhs = s.apply(jordan(a, b))
                rhs = jordan(s.apply(a), b) + jordan(a, s.apply(b))
                res = max(res, _max(lhs - rhs))
                sc = max(sc, _scale(lhs))
            yield f"basis.leibniz.{name}[{k}]", res, 1e-12 * sc

    def comm(a, b):
        return a @ b - b @ a

    for k in ks:
        for m in ks:
            d = 1.0 if k == m else 0.0
            for qn, qb in (("Q1", build_Q1), ("Q2", build_Q2)):
                for pn, pb in (("P1", build_P1), ("P2", build_P2)):
                    c = comm(qb(ctx, k), pb(ctx, m))
                    diag = (qn[1] == pn[1]) and k == m
                    target = idsup * (1j * d) if diag else idsup * 0.0
                    yield (f"basis.ccr.[{qn}[{k}],{pn}[{m}]]", superop_max_diff(c, target, rows),
                           1e-10 * max(1.0, d))
            if k <= m:
                yield (f"basis.commuting.[Q1[{k}],Q2[{m}]]",
                       superop_max_diff(comm(build_Q1(ctx, k), build_Q2(ctx, m)), idsup * 0.0, rows),
                       1e-10)
                yield (f"basis.commuting.[P1[{k}],P2[{m}]]",
                       superop_max_diff(comm(build_P1(ctx, k), build_P2(ctx, m)), idsup * 0.0, rows),
                       1e-10)
                if k < m:
                    for nm, b in (("Q1", build_Q1), ("Q2", build_Q2), ("P1", build_P1), ("P2", build_P2)):
                        yield (f"basis.commuting.[{nm}[{k}],{nm}[{m}]]",
                               superop_max_diff(comm(b(ctx, k), b(ctx, m)), idsup * 0.0), 1e-10)

    # reduction to ordinary Weyl quantization on multiplication operators
    res, sc = 0.0, 1.0
    for _ in range(samples):
        a = random_symbol(ctx.n, 4, rng)
        lhs = quantize_dynop(DynOpSymbol.multiplication(a), ctx).apply(I)
        rhs = weyl_quantize(a, ctx)
        res = max(res, _max(lhs - rhs))
        sc = max(sc, _scale(rhs))
    yield "reduction.weyl", res, 1e-12 * sc

    # Hamiltonian reduction for quadratic H
    res = 0.0
    for _ in range(max(1, samples // 2)):
        h = PolySymbol(ctx.n)
        for k in ks:
            h = h + pvar(k, ctx.n) ** 2 * float(rng.uniform(0.5, 2)) \
                + qvar(k, ctx.n) ** 2 * float(rng.uniform(0.5, 2)) \
                + qvar(k, ctx.n) * pvar(k, ctx.n) * float(rng.uniform(-1, 1))
        lq = quantize_dynop(dynop_from_hamiltonian(h), ctx)
        res = max(res, superop_max_diff(lq, hamiltonian_superop(weyl_quantize(h, ctx))))
    yield "reduction.hamiltonian", res, 1e-10

    # friction oscillator against the nested Jordan form, on the interior
    n = ctx.n
    alpha = rng.uniform(-1, 1, size=(n, n))
    beta = rng.uniform(-1, 1, size=(n, n, n))
    c = FrictionCoefficients(n, 1.0, 1.0, alpha, beta)
    yield ("friction.nested_jordan",
           superop_max_diff(quantize_dynop(dynop_friction_oscillator(c), ctx),
                            friction_hand_assembled(c, ctx), rows), 1e-10)

    # Jordan associator and the nested-product identities
    res_assoc = res_nm = res_ex = res_qa = 0.0
    sc_assoc = sc_nm = sc_qp = 1.0
    for _ in range(samples):
        a, b, cc = (random_hermitian(ctx, rng) for _ in range(3))
        lhs = jordan(jordan(a, b), cc) - jordan(a, jordan(b, cc))
        res_assoc = max(res_assoc, _max(lhs + commutator(b, commutator(cc, a)) * 0.25))
        sc_assoc = max(sc_assoc, _scale(a, b, cc))
        km = rng.integers(1, n + 1, size=4)
        pm, ps, qk = ctx.p(int(km[0])), ctx.p(int(km[1])), ctx.q(int(km[2]))
        x = commutator(qk, a)
        lhs_nm = jordan(pm, jordan(ps, x)) - jordan(jordan(pm, ps), x)
        res_nm = max(res_nm, _max(lhs_nm + commutator(ps, commutator(pm, x)) * 0.25))
        sc_nm = max(sc_nm, _scale(pm, ps, x))
        ql, pl = ctx.q(int(km[3])), ctx.p(int(km[0]))
        lhs_ex = jordan(ql, jordan(pl, x)) - jordan(pl, jordan(ql, x))
        rhs_ex = commutator(commutator(ql, pl), x) * 0.25
        res_ex = max(res_ex, _max(lhs_ex - rhs_ex))
        assoc = jordan(jordan(ql, pl), x) - jordan(ql, jordan(pl, x))
        res_qa = max(res_qa, _max(assoc + commutator(pl, commutator(x, ql)) * 0.25))
        sc_qp = max(sc_qp, _scale(ql, pl, x))
    yield "jordan.associator", res_assoc, 1e-12 * sc_assoc
    yield "jordan.nested_momentum", res_nm, 1e-12 * sc_nm
    yield "jordan.qp_exchange", res_ex, 1e-12 * sc_qp
    yield "jordan.qp_associator", res_qa, 1e-12 * sc_qp

    # Weyl basis superoperator against the Weyl operator
    a = rng.uniform(-0.5, 0.5, size=n)
    b = rng.uniform(-0.5, 0.5, size=n)
    v = build_weyl_superop_basis(a / hb, b / hb, np.zeros(n), np.zeros(n), ctx).apply(I)
    w = build_weyl_operator(WeylBasisParams(a, b), ctx)
    yield "weyl_basis.on_identity", _max(interior_block(v - w, guard)), 1e-8

    # Fokker-Planck pathway (single mode)
    c1 = QuantizationContext(hb, ctx.dim, 1, ctx.scale_mass, ctx.scale_omega)
    rows1 = interior_vec_indices(c1, guard)
    fp = _random_feasible_fp(rng, hb)
    lind = build_lindblad_superop(solve_lindblad_ops(fp, c1), c1)
    expl = build_explicit_superop(fp, c1)
    gen, h = generic_superop(fp, c1)
    yield "fokker_planck.lindblad_vs_explicit", superop_max_diff(lind, expl), 1e-10
    yield "fokker_planck.generic_vs_explicit", superop_max_diff(gen, expl, rows1), 1e-10
    yield "fokker_planck.h_calibration", abs(h - (fp.c_qq + fp.c_pp)), 1e-10
    res_l = res_g = 0.0
    ix = np.arange(c1.dim) < c1.dim - guard
    for _ in range(samples):
        r = random_operator(c1, rng)
        res_l = max(res_l, abs(lind.apply(r).trace()) / max(1.0, _max(r)))
        rd = r.data * np.outer(ix, ix)
        res_g = max(res_g, abs(np.trace(gen.apply(rd))) / max(1.0, _max(rd)))
    yield "fokker_planck.trace_lindblad", res_l, 1e-11
    yield "fokker_planck.trace_generic_interior", res_g, 1e-11


def _random_feasible_fp(rng: np.random.Generator, hbar: float) -> FokkerPlanckCoeffs:
    """Random drift with diffusion safely inside the complete-positivity region."""
    c_qq, c_pp = rng.uniform(-0.5, 0.5, size=2)
    lam = 0.5 * (c_qq + c_pp)
    d_qp = rng.uniform(-0.2, 0.2)
    d_qq = rng.uniform(0.1, 1.0)
    need = (hbar ** 2 * lam ** 2 / 4 + d_qp ** 2) / d_qq
    d_pp = need * rng.uniform(1.1, 2.0) + 1e-3
    return FokkerPlanckCoeffs(d_qq=d_qq, d_qp=d_qp, d_pp=d_pp, c_qq=c_qq,
                              c_qp=rng.uniform(0.5, 2.0), c_pq=-rng.uniform(0.5, 2.0), c_pp=c_pp)


def verify_all(ctx: QuantizationContext | None = None, seed: int = DEFAULT_SEED,
               samples: int = 5, corrupt: str | None = None) -> dict:
    """Run the identity suite; ``corrupt`` doubles one basis atom ('Q1', ...) as a fault injection."""
    ctx = ctx or QuantizationContext()
    rng = np.random.default_rng(seed)

    def run():
        return [CheckResult(name, float(r), float(t), bool(r <= t))
                for name, r, t in _checks(ctx, rng, samples)]

    if corrupt:
        with _corrupted_atom(corrupt, 2.0):
            checks = run()
    else:
        checks = run()
    return {
        "ctx": {"hbar": ctx.hbar, "dim": ctx.dim, "n": ctx.n,
                "scale_mass": ctx.scale_mass, "scale_omega": ctx.scale_omega},
        "seed": seed,
        "corrupt": corrupt,
        "checks": [asdict(c) for c in checks],
        "passed": all(c.passed for c in checks),
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=False) + "\n"
