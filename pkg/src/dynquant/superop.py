"""Superoperators on the truncated operator space and quantization of dynamical operators.

A superoperator is stored in structured form, a list of ``(c, L, R)`` with
action ``X -> sum c L X R``, and densified on demand under the column-stacking
convention ``vec(A X B) = (B^T kron A) vec(X)``.  ``None`` in place of ``L`` or
``R`` stands for the identity.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hilbert import (ContextMismatchError, MatrixOperator, QuantizationContext, _qp,
                      interior_indices)
from .symbol import DynOpSymbol

__all__ = [
    "SuperOperator", "SuperOpWord", "MAX_DENSE_SIDE", "MAX_WORD_LENGTH",
    "vec", "unvec", "left_mult", "right_mult", "identity_superop", "jordan_superop",
    "commutator_superop", "build_Q1", "build_Q2", "build_P1", "build_P2",
    "hamiltonian_superop", "superop_adjoint", "apply", "build_weyl_superop_basis",
    "weyl_symbol", "dynop_words", "quantize_dynop", "superop_max_diff", "interior_vec_indices",
]

MAX_DENSE_SIDE = 4096
MAX_WORD_LENGTH = 8


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization (batched over leading axes)."""
    x = np.asarray(x)
    return np.swapaxes(x, -1, -2).reshape(x.shape[:-2] + (-1,))


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    v = np.asarray(v)
    return np.swapaxes(v.reshape(v.shape[:-1] + (d, d)), -1, -2)


def _mm(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a @ b


def _dag(a):
    return None if a is None else a.conj().T


class SuperOperator:
    """Linear map on operators of a :class:`QuantizationContext`."""

    __array_priority__ = 100

    def __init__(self, ctx: QuantizationContext, terms: list | None = None,
                 matrix: np.ndarray | None = None):
        if terms is None and matrix is None:
            raise ValueError("need a structured form or a matrix")
        self.ctx = ctx
        self.terms = None if terms is None else [(complex(c), L, R) for c, L, R in terms]
        if matrix is not None:
            matrix = np.asarray(matrix, dtype=complex)
            if matrix.shape != (self.side, self.side):
                raise ValueError("superoperator matrix has the wrong shape")
        self._matrix = matrix

    @property
    def side(self) -> int:
        return self.ctx.size ** 2

    @property
    def has_terms(self) -> bool:
        return self.terms is not None

    def dense(self, allow_large: bool = False) -> np.ndarray:
        if self._matrix is None:
            if self.side > MAX_DENSE_SIDE and not allow_large:
                raise MemoryError(f"dense superoperator of side {self.side} exceeds the "
                                  f"cap {MAX_DENSE_SIDE}; use the structured form")
            d = self.ctx.size
            eye = np.eye(d)
            m = np.zeros((self.side, self.side), dtype=complex)
            for c, L, R in self.terms:
                m += c * np.kron(eye if R is None else R.T, eye if L is None else L)
            self._matrix = m
        return self._matrix

    @property
    def matrix(self) -> np.ndarray:
        return self.dense()

    def apply(self, x, path: str = "auto"):
        """Action on an operator (or a batch of raw arrays shaped (..., d, d))."""
        if isinstance(x, MatrixOperator):
            if x.ctx != self.ctx:
                raise ContextMismatchError("operator and superoperator contexts differ")
            return MatrixOperator(self.ctx, self.apply(x.data, path))
        x = np.asarray(x, dtype=complex)
        if path == "auto":
            path = "structured" if self.terms is not None else "matrix"
        if path == "structured":
            if self.terms is None:
                raise ValueError("superoperator has no structured form")
            out = np.zeros_like(x)
            for c, L, R in self.terms:
                y = x if L is None else L @ x
                y = y if R is None else y @ R
                out += c * y
            return out
        if path == "matrix":
            m = self.dense()
            return unvec(vec(x) @ m.T, self.ctx.size)
        raise ValueError(f"unknown path {path!r}")

    __call__ = apply

    def _check(self, other):
        if not isinstance(other, SuperOperator):
            raise TypeError("expected a SuperOperator")
        if other.ctx != self.ctx:
            raise ContextMismatchError("superoperator contexts differ")

    def __add__(self, other):
        self._check(other)
        if self.terms is not None and other.terms is not None:
            return SuperOperator(self.ctx, self.terms + other.terms)
        return SuperOperator(self.ctx, matrix=self.dense() + other.dense())

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, s):
        if not np.isscalar(s):
            return NotImplemented
        if self.terms is not None:
            return SuperOperator(self.ctx, [(s * c, L, R) for c, L, R in self.terms])
        return SuperOperator(self.ctx, matrix=s * self._matrix)

    __rmul__ = __mul__

    def __matmul__(self, other):
        """Composition (self after other)."""
        self._check(other)
        if self.terms is not None and other.terms is not None:
            terms = [(c1 * c2, _mm(L1, L2), _mm(R2, R1))
                     for c1, L1, R1 in self.terms for c2, L2, R2 in other.terms]
            return SuperOperator(self.ctx, terms)
        return SuperOperator(self.ctx, matrix=self.dense() @ other.dense())

    def adjoint(self) -> "SuperOperator":
        """Adjoint with respect to the Hilbert-Schmidt inner product."""
        if self.terms is not None:
            return SuperOperator(self.ctx, [(np.conj(c), _dag(L), _dag(R))
                                            for c, L, R in self.terms])
        return SuperOperator(self.ctx, matrix=self._matrix.conj().T)

    def columns(self, j: int) -> np.ndarray:
        """Dense columns for input matrix units E_{i j}, i = 0..d-1, as a (d^2, d) block."""
        return self.column_blocks([j])[0]

    def column_blocks(self, js: Sequence[int]) -> np.ndarray:
        """Stack of :meth:`columns` for several j, shape (len(js), d^2, d)."""
        d = self.ctx.size
        js = np.asarray(js, dtype=int)
        if self.terms is None:
            return np.stack([self._matrix[:, j * d:(j + 1) * d] for j in js])
        eye = np.eye(d)
        # block_j[a + b d, i] = sum_t c_t L_t[a, i] R_t[j, b], one GEMM over the terms
        rs = np.stack([c * (eye if R is None else R)[js] for c, _, R in self.terms], axis=-1)
        ls = np.stack([(eye if L is None else L).reshape(-1) for _, L, _ in self.terms])
        out = (rs.reshape(-1, len(self.terms)) @ ls).reshape(len(js), d * d, d)
        return out

    def __repr__(self):
        form = f"{len(self.terms)} terms" if self.terms is not None else "dense"
        return f"SuperOperator(side={self.side}, {form})"


def interior_vec_indices(ctx: QuantizationContext, guard: int | None = None) -> np.ndarray:
    """Vectorized indices of matrix entries (i, j) with both i and j interior."""
    ix = interior_indices(ctx, guard)
    d = ctx.size
    return (ix[:, None] + d * ix[None, :]).T.reshape(-1)


def superop_max_diff(a: SuperOperator, b: SuperOperator, rows: np.ndarray | None = None) -> float:
    """Max-norm of ``a - b``, optionally restricted to output rows; computed column-block wise."""
    a._check(b)
    diff = a - b
    if diff.terms is None or diff.side <= MAX_DENSE_SIDE:
        m = diff.dense(allow_large=True)
        m = m if rows is None else m[rows]
        return float(np.abs(m).max())
    d = a.ctx.size
    chunk = max(1, MAX_DENSE_SIDE ** 2 // (4 * d ** 3))
    worst = 0.0
    for j0 in range(0, d, chunk):
        block = diff.column_blocks(range(j0, min(d, j0 + chunk)))
        if rows is not None:
            block = block[:, rows]
        worst = max(worst, float(np.abs(block).max()))
    return worst


def left_mult(a: MatrixOperator) -> SuperOperator:
    return SuperOperator(a.ctx, [(1.0, a.data, None)])


def right_mult(a: MatrixOperator) -> SuperOperator:
    return SuperOperator(a.ctx, [(1.0, None, a.data)])


def identity_superop(ctx: QuantizationContext) -> SuperOperator:
    return SuperOperator(ctx, [(1.0, None, None)])


def jordan_superop(a: MatrixOperator) -> SuperOperator:
    """X -> a o X."""
    return SuperOperator(a.ctx, [(0.5, a.data, None), (0.5, None, a.data)])


def commutator_superop(a: MatrixOperator) -> SuperOperator:
    """X -> [a, X]."""
    return SuperOperator(a.ctx, [(1.0, a.data, None), (-1.0, None, a.data)])


# ---------------------------------------------------------------------------
# symbolic atoms: each basis superoperator is  cl * x^l + cr * x^r

_ATOM_VAR = {"Q1": "q", "Q2": "p", "P1": "p", "P2": "q"}
_ATOM_SCALE = {"Q1": 1.0, "Q2": 1.0, "P1": 1.0, "P2": 1.0}


@contextmanager
def _corrupted_atom(kind: str, factor: float):
    """Temporarily rescale one basis superoperator (fault injection for self-tests)."""
    old = _ATOM_SCALE[kind]
    _ATOM_SCALE[kind] = old * factor
    try:
        yield
    finally:
        _ATOM_SCALE[kind] = old


def _atom_coeffs(kind: str, hbar: float) -> tuple[float, float]:
    s = _ATOM_SCALE[kind]
    if kind in ("Q1", "Q2"):
        return 0.5 * s, 0.5 * s
    if kind == "P1":
        return s / hbar, -s / hbar
    if kind == "P2":
        return -s / hbar, s / hbar
    raise ValueError(f"unknown atom {kind!r}")


def _canon(word: tuple) -> tuple:
    # factors of different modes commute exactly; stable sort keeps same-mode order
    return tuple(sorted(word, key=lambda t: t[1]))


def _expand_atom(kind: str, k: int, hbar: float) -> dict:
    cl, cr = _atom_coeffs(kind, hbar)
    tok = ((_ATOM_VAR[kind], k),)
    return {(tok, ()): cl, ((), tok): cr}


def _expand_product(e1: dict, e2: dict) -> dict:
    out: dict = defaultdict(complex)
    for (L1, R1), c1 in e1.items():
        for (L2, R2), c2 in e2.items():
            out[(_canon(L1 + L2), _canon(R2 + R1))] += c1 * c2
    return out


def _word_matrix(ctx: QuantizationContext, word: tuple, cache: dict):
    if not word:
        return None
    if word not in cache:
        m = _qp(ctx, *word[0])
        for tok in word[1:]:
            m = m @ _qp(ctx, *tok)
        cache[word] = m
    return cache[word]


def _materialize(ctx: QuantizationContext, expansion: dict, tol: float = 0.0) -> SuperOperator:
    """Turn a symbolic {(left word, right word): c} expansion into a SuperOperator.

    Terms are grouped by right word so the action costs one product pair per group.
    """
    cache: dict = {}
    groups: dict = defaultdict(list)
    for (L, R), c in expansion.items():
        if abs(c) > tol:
            groups[R].append((c, L))
    terms = []
    for R, items in sorted(groups.items(), key=lambda kv: (len(kv[0]), kv[0])):
        if len(items) == 1 and not items[0][1]:
            terms.append((items[0][0], None, _word_matrix(ctx, R, cache)))
            continue
        left = np.zeros((ctx.size, ctx.size), dtype=complex)
        for c, L in items:
            m = _word_matrix(ctx, L, cache)
            if m is None:
                left[np.diag_indices(ctx.size)] += c
            else:
                left += c * m
        terms.append((1.0, left, _word_matrix(ctx, R, cache)))
    if not terms:
        terms = [(0.0, None, None)]
    return SuperOperator(ctx, terms)


def _check_mode(ctx, k):
    if not 1 <= k <= ctx.n:
        raise ValueError(f"mode index {k} outside 1..{ctx.n}")


def _atom_superop(kind: str, ctx: QuantizationContext, k: int) -> SuperOperator:
    _check_mode(ctx, k)
    return _materialize(ctx, _expand_atom(kind, k, ctx.hbar))


def build_Q1(ctx: QuantizationContext, k: int = 1) -> SuperOperator:
    """X -> q_k o X."""
    return _atom_superop("Q1", ctx, k)


def build_Q2(ctx: QuantizationContext, k: int = 1) -> SuperOperator:
    """X -> p_k o X."""
    return _atom_superop("Q2", ctx, k)


def build_P1(ctx: QuantizationContext, k: int = 1) -> SuperOperator:
    """X -> (1/hbar) [p_k, X]."""
    return _atom_superop("P1", ctx, k)


def build_P2(ctx: QuantizationContext, k: int = 1) -> SuperOperator:
    """X -> -(1/hbar) [q_k, X]."""
    return _atom_superop("P2", ctx, k)


def hamiltonian_superop(h: MatrixOperator, tol: float = 1e-10) -> SuperOperator:
    """(i/hbar)(H^l - H^r), the Heisenberg generator of a Hamiltonian H."""
    if not h.is_hermitian(tol):
        raise ValueError("Hamiltonian must be Hermitian")
    f = 1j / h.ctx.hbar
    return SuperOperator(h.ctx, [(f, h.data, None), (-f, None, h.data)])


def superop_adjoint(s: SuperOperator) -> SuperOperator:
    return s.adjoint()


def apply(s: SuperOperator, x: MatrixOperator, path: str = "auto") -> MatrixOperator:
    return s.apply(x, path)


def build_weyl_superop_basis(a1, a2, b1, b2, ctx: QuantizationContext) -> SuperOperator:
    """exp(i(a1.Q1 + a2.Q2 + b1.P1 + b2.P2)).

    Left and right parts of the generator commute, so the exponential factors
    into a single term  X -> exp(i K_l) X exp(i K_r).
    """
    vs = [np.atleast_1d(np.asarray(v, dtype=float)) for v in (a1, a2, b1, b2)]
    if any(v.shape != (ctx.n,) for v in vs) or not all(np.all(np.isfinite(v)) for v in vs):
        raise ValueError("basis parameters must be finite vectors of length n")
    a1, a2, b1, b2 = vs
    d = ctx.size
    kl = np.zeros((d, d), dtype=complex)
    kr = np.zeros((d, d), dtype=complex)
    for k in range(ctx.n):
        for kind, coef in (("Q1", a1[k]), ("Q2", a2[k]), ("P1", b1[k]), ("P2", b2[k])):
            cl, cr = _atom_coeffs(kind, ctx.hbar)
            x = _qp(ctx, _ATOM_VAR[kind], k + 1)
            kl += coef * cl * x
            kr += coef * cr * x

    def expi(h):
        w, v = np.linalg.eigh(h)
        return (v * np.exp(1j * w)) @ v.conj().T

    return SuperOperator(ctx, [(1.0, expi(kl), expi(kr))])


# ---------------------------------------------------------------------------
# quantization of dynamical operators

@dataclass(frozen=True)
class SuperOpWord:
    """Ordered product of basis superoperators, e.g. ((\"Q2\", 1), (\"P2\", 1))."""

    atoms: tuple[tuple[str, int], ...]
    prefactor: complex = 1.0

    def __post_init__(self):
        for kind, k in self.atoms:
            if kind not in _ATOM_VAR or k < 1:
                raise ValueError(f"bad atom {(kind, k)}")

    def expansion(self, hbar: float) -> dict:
        out = {((), ()): complex(self.prefactor)}
        for kind, k in self.atoms:
            out = _expand_product(out, _expand_atom(kind, k, hbar))
        return out

    def to_superop(self, ctx: QuantizationContext) -> SuperOperator:
        for _, k in self.atoms:
            _check_mode(ctx, k)
        return _materialize(ctx, self.expansion(ctx.hbar))


def _standard_to_weyl(a: int, c: int) -> list[tuple[complex, int, int]]:
    """Weyl symbol of X^a Y^c for a canonical pair with [X, Y] = i.

    X^a Y^c = sum_j j! C(a,j) C(c,j) (i/2)^j  W(X^{a-j} Y^{c-j}).
    """
    return [(math.factorial(j) * math.comb(a, j) * math.comb(c, j) * (0.5j) ** j, a - j, c - j)
            for j in range(min(a, c) + 1)]


def weyl_symbol(l: DynOpSymbol, ordering: str = "weyl") -> dict[tuple, complex]:
    """Symbol of ``l`` as a polynomial in the commuting variables (Q1, Q2, P1, P2).

    Keys are per-mode exponent tuples ((a, b, c, d), ...) of (Q1, Q2, P1, P2).
    With ``ordering='weyl'`` the standard-ordered operator (coefficients left of
    derivatives) is converted to its Weyl symbol using [Q1, P1] = [Q2, P2] = i.
    With ``'standard'`` no reordering correction is applied.
    """
    if ordering not in ("weyl", "standard"):
        raise ValueError("ordering must be 'weyl' or 'standard'")
    out: dict = defaultdict(complex)
    for coeff, d in l.terms:
        for idx, c in coeff.items():
            # d/dq = i P1, d/dp = i P2
            pref = c * 1j ** d.order
            per_mode = []
            for k in range(l.n):
                a, b = idx.q_exponents[k], idx.p_exponents[k]
                cq, cp = d.q_exponents[k], d.p_exponents[k]
                if ordering == "standard":
                    per_mode.append([(1.0, (a, b, cq, cp))])
                    continue
                opts = []
                for f1, a1, c1 in _standard_to_weyl(a, cq):
                    for f2, b2, d2 in _standard_to_weyl(b, cp):
                        opts.append((f1 * f2, (a1, b2, c1, d2)))
                per_mode.append(opts)
            for combo in itertools.product(*per_mode):
                f = pref
                for g, _ in combo:
                    f *= g
                out[tuple(e for _, e in combo)] += f
    return {k: v for k, v in out.items() if v != 0}


def _arrangements(x: str, a: int, y: str, c: int, k: int) -> list[tuple]:
    """All distinct orderings of a copies of atom x and c copies of atom y (mode k)."""
    out = []
    for pos in itertools.combinations(range(a + c), a):
        s = set(pos)
        out.append(tuple((x if i in s else y, k) for i in range(a + c)))
    return out


def dynop_words(l: DynOpSymbol, ordering: str = "weyl") -> list[SuperOpWord]:
    """Superoperator words of the quantized operator.

    ``'weyl'``: Weyl symbol, each canonical pair (Q1_k, P1_k), (Q2_k, P2_k)
    averaged over all its orderings; ideally-commuting factors in canonical
    order (mode by mode, Q1-pair before Q2-pair).  ``'standard'``: substitute
    in the written order, all Q atoms left of all P atoms.
    """
    words = []
    for key, coef in weyl_symbol(l, ordering).items():
        length = sum(sum(e) for e in key)
        if length > MAX_WORD_LENGTH:
            raise ValueError(f"superoperator word of length {length} exceeds cap {MAX_WORD_LENGTH}")
        if ordering == "standard":
            qs = tuple(at for k, (a, b, _, _) in enumerate(key, 1)
                       for at in [("Q1", k)] * a + [("Q2", k)] * b)
            ps = tuple(at for k, (_, _, c, d) in enumerate(key, 1)
                       for at in [("P1", k)] * c + [("P2", k)] * d)
            words.append(SuperOpWord(qs + ps, coef))
            continue
        blocks = []
        for k, (a, b, c, d) in enumerate(key, 1):
            blocks.append(_arrangements("Q1", a, "P1", c, k))
            blocks.append(_arrangements("Q2", b, "P2", d, k))
        count = math.prod(len(bl) for bl in blocks)
        for combo in itertools.product(*blocks):
            words.append(SuperOpWord(tuple(itertools.chain.from_iterable(combo)), coef / count))
    return words


def quantize_dynop(l: DynOpSymbol, ctx: QuantizationContext,
                   ordering: str = "weyl") -> SuperOperator:
    """Generalized Weyl quantization of a polynomial dynamical operator.

    Substitutes q_k -> Q1_k, p_k -> Q2_k, d/dq_k -> i P1_k, d/dp_k -> i P2_k in
    the Weyl symbol of ``l`` with symmetric ordering of each monomial.
    """
    if l.n != ctx.n:
        raise ContextMismatchError(f"operator has {l.n} modes, context has {ctx.n}")
    total: dict = defaultdict(complex)
    for w in dynop_words(l, ordering):
        for key, c in w.expansion(ctx.hbar).items():
            total[key] += c
    return _materialize(ctx, total)
