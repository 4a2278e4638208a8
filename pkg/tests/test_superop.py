import numpy as np
import pytest

from dynquant.hilbert import (ContextMismatchError, MatrixOperator, QuantizationContext,
                              WeylBasisParams, build_weyl_operator, commutator, hs_inner,
                              interior_block, jordan, weyl_quantize)
from dynquant.superop import (MAX_DENSE_SIDE, SuperOperator, SuperOpWord, build_P1, build_P2,
                              build_Q1, build_Q2, build_weyl_superop_basis, commutator_superop,
                              dynop_words, hamiltonian_superop, identity_superop,
                              interior_vec_indices, jordan_superop, left_mult, quantize_dynop,
                              right_mult, superop_max_diff, unvec, vec, weyl_symbol)
from dynquant.symbol import (DynOpSymbol, FrictionCoefficients, MultiIndex, PolySymbol,
                             dynop_friction_oscillator, dynop_from_hamiltonian, pvar, qvar)
from dynquant.verify import friction_hand_assembled, random_hermitian, random_operator, random_symbol


@pytest.fixture
def ctx():
    return QuantizationContext(hbar=0.7, dim=8)


def test_vec_convention(rng):
    a, x, b = (rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)) for _ in range(3))
    np.testing.assert_allclose(vec(a @ x @ b), np.kron(b.T, a) @ vec(x), atol=1e-12)
    assert vec(x)[1] == x[1, 0]
    np.testing.assert_array_equal(unvec(vec(x), 4), x)
    batch = np.stack([x, a])
    np.testing.assert_array_equal(unvec(vec(batch), 4), batch)


def test_structured_and_matrix_paths_agree(ctx, rng):
    s = jordan_superop(ctx.p()) @ commutator_superop(ctx.q()) + left_mult(ctx.q()) * 0.5
    x = random_operator(ctx, rng)
    np.testing.assert_allclose(s.apply(x, "structured").data, s.apply(x, "matrix").data,
                               atol=1e-12)
    batch = np.stack([x.data, 2 * x.data])
    np.testing.assert_allclose(s.apply(batch)[1], 2 * s.apply(x).data, atol=1e-12)


def test_matrix_only_superop(ctx, rng):
    s = SuperOperator(ctx, matrix=left_mult(ctx.p()).dense())
    x = random_operator(ctx, rng)
    np.testing.assert_allclose(s(x).data, ctx.p().data @ x.data, atol=1e-12)
    with pytest.raises(ValueError):
        s.apply(x, "structured")
    with pytest.raises(ValueError):
        SuperOperator(ctx, matrix=np.eye(3))
    with pytest.raises(ValueError):
        SuperOperator(ctx)


def test_left_right(ctx, rng):
    x = random_operator(ctx, rng)
    np.testing.assert_allclose(right_mult(ctx.q())(x).data, x.data @ ctx.q().data)
    np.testing.assert_allclose(identity_superop(ctx)(x).data, x.data)


def test_composition_and_arithmetic(ctx, rng):
    a, b = left_mult(ctx.q()), right_mult(ctx.p())
    x = random_operator(ctx, rng)
    np.testing.assert_allclose((a @ b)(x).data, a(b(x)).data, atol=1e-12)
    np.testing.assert_allclose((a - b * 2.0)(x).data, a(x).data - 2 * b(x).data, atol=1e-12)
    np.testing.assert_allclose((-a).dense(), -a.dense())
    np.testing.assert_allclose((a @ b).dense(), a.dense() @ b.dense(), atol=1e-12)


def test_context_mismatch(ctx):
    other = QuantizationContext(hbar=1.0, dim=8)
    with pytest.raises(ContextMismatchError):
        build_Q1(ctx) + build_Q1(other)
    with pytest.raises(ContextMismatchError):
        build_Q1(ctx).apply(other.q())


def test_adjoint_hs(ctx, rng):
    s = jordan_superop(ctx.p()) @ left_mult(random_operator(ctx, rng)) + right_mult(ctx.q()) * 1j
    a, b = random_operator(ctx, rng), random_operator(ctx, rng)
    assert hs_inner(a, s(b)) == pytest.approx(hs_inner(s.adjoint()(a), b), abs=1e-10)
    np.testing.assert_allclose(s.adjoint().dense(), s.dense().conj().T, atol=1e-12)


def test_atom_actions(ctx, rng):
    x = random_operator(ctx, rng).data
    q, p, hb = ctx.q().data, ctx.p().data, ctx.hbar
    np.testing.assert_allclose(build_Q1(ctx)(x), 0.5 * (q @ x + x @ q), atol=1e-12)
    np.testing.assert_allclose(build_Q2(ctx)(x), 0.5 * (p @ x + x @ p), atol=1e-12)
    np.testing.assert_allclose(build_P1(ctx)(x), (p @ x - x @ p) / hb, atol=1e-12)
    np.testing.assert_allclose(build_P2(ctx)(x), -(q @ x - x @ q) / hb, atol=1e-12)


@pytest.mark.parametrize("builder", [build_Q1, build_Q2, build_P1, build_P2])
def test_atoms_self_adjoint(builder, ctx):
    m = builder(ctx).dense()
    np.testing.assert_allclose(m, m.conj().T, atol=1e-12)


def test_atom_mode_range(ctx):
    with pytest.raises(ValueError):
        build_Q1(ctx, 2)
    with pytest.raises(ValueError):
        SuperOpWord((("Q3", 1),))


def test_pair_commutators_two_modes():
    ctx = QuantizationContext(hbar=0.5, dim=6, n=2)
    rows = interior_vec_indices(ctx, 2)
    idsup = identity_superop(ctx)
    c = build_Q1(ctx, 2) @ build_P1(ctx, 2) - build_P1(ctx, 2) @ build_Q1(ctx, 2)
    assert superop_max_diff(c, idsup * 1j, rows) < 1e-10
    c = build_Q2(ctx, 1) @ build_P1(ctx, 2) - build_P1(ctx, 2) @ build_Q2(ctx, 1)
    assert superop_max_diff(c, idsup * 0.0) < 1e-12


def test_hamiltonian_superop(ctx, rng):
    h = random_hermitian(ctx, rng)
    x = random_operator(ctx, rng)
    np.testing.assert_allclose(hamiltonian_superop(h)(x).data,
                               1j / ctx.hbar * commutator(h, x).data, atol=1e-12)
    with pytest.raises(ValueError):
        hamiltonian_superop(random_operator(ctx, rng))


def test_weyl_symbol_conversion():
    # q d/dq  ->  Q1 (i P1) = i W(Q1 P1) + i (i/2)
    l = DynOpSymbol(1, [(qvar(1), MultiIndex((1,), (0,)))])
    sym = weyl_symbol(l)
    assert sym[((1, 0, 1, 0),)] == pytest.approx(1j)
    assert sym[((0, 0, 0, 0),)] == pytest.approx(-0.5)
    assert weyl_symbol(l, "standard") == {((1, 0, 1, 0),): 1j}


def test_dynop_words_average():
    l = DynOpSymbol(1, [(qvar(1), MultiIndex((1,), (0,)))])
    words = dynop_words(l)
    assert sorted(w.atoms for w in words if len(w.atoms) == 2) == [
        (("P1", 1), ("Q1", 1)), (("Q1", 1), ("P1", 1))]
    with pytest.raises(ValueError):
        dynop_words(DynOpSymbol.multiplication(qvar(1) ** 9))
    with pytest.raises(ValueError):
        weyl_symbol(l, "anti")


def test_weyl_and_standard_orderings_agree_in_interior():
    ctx = QuantizationContext(hbar=1.0, dim=24)
    l = DynOpSymbol(1, [(qvar(1) ** 2 * pvar(1), MultiIndex((1,), (1,)))])
    a, b = quantize_dynop(l, ctx), quantize_dynop(l, ctx, ordering="standard")
    assert superop_max_diff(a, b, interior_vec_indices(ctx, 6)) < 1e-9
    assert superop_max_diff(a, b) > 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_multiplication_reduces_to_weyl(seed):
    ctx = QuantizationContext(hbar=0.4, dim=10)
    a = random_symbol(1, 4, np.random.default_rng(seed))
    lhs = quantize_dynop(DynOpSymbol.multiplication(a), ctx).apply(ctx.identity())
    assert (lhs - weyl_quantize(a, ctx)).max_norm() < 1e-12 * max(1, weyl_quantize(a, ctx).max_norm())


def test_quadratic_hamiltonian_reduction():
    ctx = QuantizationContext(hbar=0.3, dim=12, n=2)
    h = pvar(1, 2) ** 2 + qvar(2, 2) ** 2 * 2.0 + qvar(1, 2) * pvar(2, 2) - qvar(1, 2) * pvar(1, 2)
    lq = quantize_dynop(dynop_from_hamiltonian(h), ctx)
    assert superop_max_diff(lq, hamiltonian_superop(weyl_quantize(h, ctx))) < 1e-10


def test_cubic_hamiltonian_has_hbar_squared_correction():
    ctx = QuantizationContext(hbar=1.0, dim=30)
    q, p = qvar(1), pvar(1)
    lq = quantize_dynop(dynop_from_hamiltonian(q ** 3), ctx)
    target = hamiltonian_superop(weyl_quantize(q ** 3, ctx))
    out = (lq - target).apply(weyl_quantize(p ** 3, ctx))
    ib = interior_block(out, 8)
    np.testing.assert_allclose(ib, -1.5 * np.eye(ib.shape[0]), atol=1e-8)


def test_friction_oscillator_matches_nested_jordan():
    ctx = QuantizationContext(hbar=0.5, dim=5, n=2)
    rng = np.random.default_rng(3)
    c = FrictionCoefficients(2, 1.2, 0.8, rng.uniform(-1, 1, (2, 2)), rng.uniform(-1, 1, (2, 2, 2)))
    a = quantize_dynop(dynop_friction_oscillator(c), ctx, ordering="standard")
    assert superop_max_diff(a, friction_hand_assembled(c, ctx)) < 1e-10


def test_nonzero_alpha_breaks_identity_annihilation():
    ctx = QuantizationContext(hbar=1.0, dim=10)
    L = quantize_dynop(dynop_friction_oscillator(FrictionCoefficients(1, omega=1.0, alpha=[[0.3]])), ctx)
    # L(I) = 0 for every operator of this family: trace-preserving in Heisenberg form
    assert interior_block(L.apply(ctx.identity()), 2).max() == pytest.approx(0, abs=1e-12)
    assert L.adjoint().apply(ctx.identity()).max_norm() > 0.1


def test_weyl_superop_basis(rng):
    ctx = QuantizationContext(hbar=1.0, dim=40)
    v = build_weyl_superop_basis(0.3, -0.2, 0.0, 0.0, ctx).apply(ctx.identity())
    w = build_weyl_operator(WeylBasisParams(0.3, -0.2), ctx)
    assert np.abs(interior_block(v - w, 10)).max() < 1e-8
    u = build_weyl_superop_basis(0.1, 0.2, 0.3, -0.1, ctx)
    x = random_operator(ctx, rng)
    # a product of unitary conjugations preserves the HS norm
    assert np.linalg.norm(u(x).data) == pytest.approx(np.linalg.norm(x.data), rel=1e-10)
    with pytest.raises(ValueError):
        build_weyl_superop_basis([0.1, 0.2], 0.0, 0.0, 0.0, ctx)


def test_dense_cap():
    ctx = QuantizationContext(dim=9, n=2)
    s = build_Q1(ctx)
    assert s.side > MAX_DENSE_SIDE
    with pytest.raises(MemoryError):
        s.dense()
    # chunked comparison still works
    assert superop_max_diff(s, s) == 0.0
    assert superop_max_diff(s, s * 1.5) > 0


def test_jordan_superop(ctx, rng):
    a, x = random_hermitian(ctx, rng), random_operator(ctx, rng)
    np.testing.assert_allclose(jordan_superop(a)(x).data, jordan(a, x).data, atol=1e-12)
    assert isinstance(jordan_superop(a)(x), MatrixOperator)
