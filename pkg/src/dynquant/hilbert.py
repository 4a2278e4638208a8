"""Truncated Fock-space operator algebra.

Canonical operators are built from the ladder operators of an auxiliary
oscillator with mass ``scale_mass`` and frequency ``scale_omega``.  Multi-mode
spaces use a tensor product with mode 1 as the slowest index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .symbol import MultiIndex, PolySymbol

__all__ = [
    "QuantizationContext", "MatrixOperator", "WeylBasisParams", "TruncationError",
    "ContextMismatchError", "annihilation", "build_q", "build_p", "identity",
    "weyl_quantize", "build_weyl_operator", "commutator", "jordan", "hs_inner",
    "coherent_state", "expectation", "interior_indices", "interior_block",
]


class ContextMismatchError(ValueError):
    pass


class TruncationError(ValueError):
    """Raised when a state does not fit in the truncated space; increase dim."""


@dataclass(frozen=True)
class QuantizationContext:
    hbar: float = 1.0
    dim: int = 16
    n: int = 1
    scale_mass: float = 1.0
    scale_omega: float = 1.0

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        if self.dim < 2:
            raise ValueError("truncation dimension must be >= 2")
        if self.n < 1:
            raise ValueError("mode count must be >= 1")
        if not (self.scale_mass > 0 and self.scale_omega > 0):
            raise ValueError("oscillator scales must be positive")

    @property
    def size(self) -> int:
        """Total Hilbert dimension dim**n."""
        return self.dim ** self.n

    @property
    def guard(self) -> int:
        return math.ceil(self.dim / 8)

    def q(self, k: int = 1) -> "MatrixOperator":
        return build_q(self, k)

    def p(self, k: int = 1) -> "MatrixOperator":
        return build_p(self, k)

    def identity(self) -> "MatrixOperator":
        return identity(self)


def _tol(scale: float, base: float = 1e-12) -> float:
    return base * max(1.0, scale)


class MatrixOperator:
    """Dense operator on the truncated space of ``ctx``."""

    __slots__ = ("ctx", "data")
    __array_priority__ = 100

    def __init__(self, ctx: QuantizationContext, data, hermitian: bool = False):
        data = np.asarray(data, dtype=complex)
        if data.shape != (ctx.size, ctx.size):
            raise ValueError(f"operator shape {data.shape} does not match context size {ctx.size}")
        self.ctx = ctx
        self.data = data
        if hermitian:
            res = self.hermiticity_residual()
            if res > _tol(self.max_norm()):
                raise ValueError(f"operator flagged Hermitian has residual {res:.3e}")

    def _same(self, other: "MatrixOperator"):
        if other.ctx != self.ctx:
            raise ContextMismatchError("operators belong to different contexts")

    def __add__(self, other):
        if isinstance(other, MatrixOperator):
            self._same(other)
            return MatrixOperator(self.ctx, self.data + other.data)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, MatrixOperator):
            self._same(other)
            return MatrixOperator(self.ctx, self.data - other.data)
        return NotImplemented

    def __neg__(self):
        return MatrixOperator(self.ctx, -self.data)

    def __mul__(self, s):
        if np.isscalar(s):
            return MatrixOperator(self.ctx, self.data * s)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, s):
        return MatrixOperator(self.ctx, self.data / s)

    def __matmul__(self, other):
        if isinstance(other, MatrixOperator):
            self._same(other)
            return MatrixOperator(self.ctx, self.data @ other.data)
        return NotImplemented

    def dag(self) -> "MatrixOperator":
        return MatrixOperator(self.ctx, self.data.conj().T)

    def max_norm(self) -> float:
        return float(np.abs(self.data).max()) if self.data.size else 0.0

    def hermiticity_residual(self) -> float:
        return float(np.abs(self.data - self.data.conj().T).max())

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return self.hermiticity_residual() <= tol * max(1.0, self.max_norm())

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def interior(self, guard: int | None = None) -> np.ndarray:
        return interior_block(self, guard)

    def __repr__(self):
        return f"MatrixOperator(size={self.ctx.size}, hbar={self.ctx.hbar})"


@dataclass(frozen=True)
class WeylBasisParams:
    a: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self):
        a = tuple(float(x) for x in np.atleast_1d(self.a))
        b = tuple(float(x) for x in np.atleast_1d(self.b))
        if len(a) != len(b) or not all(map(math.isfinite, a + b)):
            raise ValueError("Weyl parameters must be finite vectors of equal length")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)


def _embed(ctx: QuantizationContext, single: np.ndarray, k: int) -> np.ndarray:
    if not 1 <= k <= ctx.n:
        raise ValueError(f"mode index {k} outside 1..{ctx.n}")
    out = np.ones((1, 1))
    eye = np.eye(ctx.dim)
    for j in range(1, ctx.n + 1):
        out = np.kron(out, single if j == k else eye)
    return out


@lru_cache(maxsize=256)
def _qp(ctx: QuantizationContext, var: str, k: int) -> np.ndarray:
    a = annihilation(ctx.dim)
    mw = ctx.scale_mass * ctx.scale_omega
    if var == "q":
        single = math.sqrt(ctx.hbar / (2 * mw)) * (a + a.T)
    else:
        single = 1j * math.sqrt(ctx.hbar * mw / 2) * (a.T - a)
    m = _embed(ctx, single.astype(complex), k)
    m.setflags(write=False)
    return m


def build_q(ctx: QuantizationContext, k: int = 1) -> MatrixOperator:
    return MatrixOperator(ctx, _qp(ctx, "q", k))


def build_p(ctx: QuantizationContext, k: int = 1) -> MatrixOperator:
    return MatrixOperator(ctx, _qp(ctx, "p", k))


def identity(ctx: QuantizationContext) -> MatrixOperator:
    return MatrixOperator(ctx, np.eye(ctx.size, dtype=complex))


def _jordan(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return 0.5 * (a @ b + b @ a)


def monomial_factors(idx: MultiIndex) -> list[tuple[str, int]]:
    """Canonical factor order used for peeling: mode by mode, q factors before p factors.

    The first factor in the list is the outermost Jordan multiplication.
    """
    out = []
    for k in range(idx.n):
        out += [("q", k + 1)] * idx.q_exponents[k]
        out += [("p", k + 1)] * idx.p_exponents[k]
    return out


def _peel(ctx: QuantizationContext, factors) -> np.ndarray:
    x = np.eye(ctx.size, dtype=complex)
    for var, k in reversed(factors):
        x = _jordan(_qp(ctx, var, k), x)
    return x


def weyl_quantize(sym: PolySymbol, ctx: QuantizationContext, order: str = "qp") -> MatrixOperator:
    """Weyl quantization by recursive Jordan peeling, pi(x A) = x o pi(A).

    ``order='qp'`` peels q-factors outermost (the canonical order that
    matches :func:`dynquant.superop.quantize_dynop`); ``'pq'`` peels p-factors
    outermost.  The two agree away from the truncation edge.
    """
    if sym.n != ctx.n:
        raise ContextMismatchError(f"symbol has {sym.n} modes, context has {ctx.n}")
    out = np.zeros((ctx.size, ctx.size), dtype=complex)
    for idx, c in sym.items():
        factors = monomial_factors(idx)
        if order == "pq":
            factors = sorted(factors, key=lambda f: (f[1], f[0] != "p"))
        elif order != "qp":
            raise ValueError("order must be 'qp' or 'pq'")
        out += c * _peel(ctx, factors)
    return MatrixOperator(ctx, out)


def _expm_hermitian_generator(h: np.ndarray, factor: complex) -> np.ndarray:
    """exp(factor * h) for Hermitian h."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(factor * w)) @ v.conj().T


def build_weyl_operator(params: WeylBasisParams, ctx: QuantizationContext) -> MatrixOperator:
    """exp((i/hbar)(a.q + b.p))."""
    if len(params.a) != ctx.n:
        raise ContextMismatchError("Weyl parameters do not match mode count")
    gen = np.zeros((ctx.size, ctx.size), dtype=complex)
    for k in range(ctx.n):
        gen += params.a[k] * _qp(ctx, "q", k + 1) + params.b[k] * _qp(ctx, "p", k + 1)
    return MatrixOperator(ctx, _expm_hermitian_generator(gen, 1j / ctx.hbar))


def commutator(a: MatrixOperator, b: MatrixOperator) -> MatrixOperator:
    a._same(b)
    return MatrixOperator(a.ctx, a.data @ b.data - b.data @ a.data)


def jordan(a: MatrixOperator, b: MatrixOperator) -> MatrixOperator:
    a._same(b)
    return MatrixOperator(a.ctx, _jordan(a.data, b.data))


def hs_inner(a: MatrixOperator, b: MatrixOperator) -> complex:
    """Hilbert-Schmidt inner product Tr(a^dag b)."""
    a._same(b)
    return complex(np.vdot(a.data, b.data))


def _coherent_ket(dim: int, alpha: complex) -> tuple[np.ndarray, float]:
    n = np.arange(dim)
    logfact = np.array([math.lgamma(k + 1) for k in n])
    if alpha == 0:
        amp = np.zeros(dim, dtype=complex)
        amp[0] = 1.0
        return amp, 0.0
    amp = np.exp(-abs(alpha) ** 2 / 2 + n * np.log(abs(alpha)) - 0.5 * logfact) \
        * np.exp(1j * n * np.angle(alpha))
    loss = max(0.0, 1.0 - float(np.vdot(amp, amp).real))
    return amp, loss


def coherent_state(ctx: QuantizationContext, q0, p0, max_loss: float = 1e-6) -> MatrixOperator:
    """Pure coherent-state density operator centred at (q0, p0), renormalized after truncation."""
    q0 = np.atleast_1d(np.asarray(q0, dtype=float))
    p0 = np.atleast_1d(np.asarray(p0, dtype=float))
    if q0.shape != (ctx.n,) or p0.shape != (ctx.n,):
        raise ContextMismatchError("initial point does not match mode count")
    if not (np.all(np.isfinite(q0)) and np.all(np.isfinite(p0))):
        raise ValueError("non-finite coherent-state centre")
    mw = ctx.scale_mass * ctx.scale_omega
    ket = np.ones(1, dtype=complex)
    for k in range(ctx.n):
        alpha = (math.sqrt(mw / (2 * ctx.hbar)) * q0[k]
                 + 1j * p0[k] / math.sqrt(2 * ctx.hbar * mw))
        amp, loss = _coherent_ket(ctx.dim, alpha)
        if loss > max_loss:
            raise TruncationError(
                f"coherent state of mode {k + 1} loses {loss:.2e} of its norm at dim={ctx.dim}; "
                "increase dim")
        ket = np.kron(ket, amp)
    ket /= np.linalg.norm(ket)
    return MatrixOperator(ctx, np.outer(ket, ket.conj()))


def expectation(rho: MatrixOperator, a: MatrixOperator, tol: float = 1e-10) -> float:
    """Re Tr(rho a) for Hermitian a."""
    rho._same(a)
    if not a.is_hermitian(tol):
        raise ValueError("observable is not Hermitian")
    val = complex(np.sum(rho.data * a.data.T))
    scale = max(1.0, abs(val))
    if abs(val.imag) > tol * scale and rho.is_hermitian(tol):
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}")
    return val.real


def interior_indices(ctx: QuantizationContext, guard: int | None = None) -> np.ndarray:
    """Flat indices whose Fock level is below dim - guard in every mode."""
    g = ctx.guard if guard is None else guard
    keep = np.arange(ctx.dim) < ctx.dim - g
    mask = np.ones(1, dtype=bool)
    for _ in range(ctx.n):
        mask = np.kron(mask, keep).astype(bool)
    return np.flatnonzero(mask)


def interior_block(op: MatrixOperator | np.ndarray, guard: int | None = None,
                   ctx: QuantizationContext | None = None) -> np.ndarray:
    """Restriction of an operator to the interior subspace."""
    if isinstance(op, MatrixOperator):
        ctx, data = op.ctx, op.data
    else:
        data = np.asarray(op)
    ix = interior_indices(ctx, guard)
    return data[np.ix_(ix, ix)]
