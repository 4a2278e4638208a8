"""Classical phase-space layer.

Polynomial symbols A(q, p), Poisson brackets, classical dynamical operators
L(q, p, d/dq, d/dp), the ODE vector field of first-order operators and a
fixed-step RK4 reference integrator.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "MultiIndex", "PolySymbol", "DynOpSymbol", "FrictionCoefficients",
    "ClassicalState", "VectorField", "DivergenceError", "NotADerivationError",
    "qvar", "pvar", "poisson_bracket", "dynop_from_hamiltonian", "dynop_apply",
    "dynop_friction_oscillator", "lorenz_coefficients", "rossler_coefficients",
    "leipnik_newton_coefficients", "lorenz_type_dynop", "vector_field",
    "integrate_classical", "trajectory_arrays", "write_trajectory_csv",
]


class NotADerivationError(ValueError):
    """The dynamical operator is not a first-order derivation."""


class DivergenceError(ArithmeticError):
    """A non-finite value appeared while integrating; ``step`` is the step index."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


@dataclass(frozen=True)
class MultiIndex:
    """Exponents of q_1..q_n and p_1..p_n (or derivative orders)."""

    q_exponents: tuple[int, ...]
    p_exponents: tuple[int, ...]

    def __post_init__(self):
        q = tuple(int(e) for e in self.q_exponents)
        p = tuple(int(e) for e in self.p_exponents)
        if len(q) != len(p) or len(q) < 1:
            raise ValueError("q and p exponent lists must have equal length >= 1")
        if any(e < 0 for e in q + p):
            raise ValueError("exponents must be non-negative")
        object.__setattr__(self, "q_exponents", q)
        object.__setattr__(self, "p_exponents", p)

    @property
    def n(self) -> int:
        return len(self.q_exponents)

    @property
    def order(self) -> int:
        return sum(self.q_exponents) + sum(self.p_exponents)

    @classmethod
    def zero(cls, n: int) -> "MultiIndex":
        return cls((0,) * n, (0,) * n)

    @classmethod
    def unit(cls, n: int, var: str, k: int) -> "MultiIndex":
        """Index with a single 1 at mode ``k`` (1-based) of ``var`` in {'q', 'p'}."""
        if not 1 <= k <= n:
            raise ValueError(f"mode {k} out of range 1..{n}")
        e = [0] * n
        e[k - 1] = 1
        if var == "q":
            return cls(tuple(e), (0,) * n)
        if var == "p":
            return cls((0,) * n, tuple(e))
        raise ValueError(f"unknown variable {var!r}")

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        return MultiIndex(tuple(a + b for a, b in zip(self.q_exponents, other.q_exponents)),
                          tuple(a + b for a, b in zip(self.p_exponents, other.p_exponents)))

    def __str__(self) -> str:
        parts = []
        for var, exps in (("q", self.q_exponents), ("p", self.p_exponents)):
            for k, e in enumerate(exps, 1):
                if e == 1:
                    parts.append(f"{var}{k}")
                elif e > 1:
                    parts.append(f"{var}{k}^{e}")
        return "*".join(parts) or "1"


def _check_n(a, b):
    if a.n != b.n:
        raise ValueError(f"mode-count mismatch: {a.n} != {b.n}")


class PolySymbol:
    """Real polynomial in q_1..q_n, p_1..p_n, stored sparsely as {MultiIndex: coeff}."""

    __slots__ = ("n", "_terms", "_compiled")

    def __init__(self, n: int, terms: Mapping[MultiIndex, float] | None = None):
        if n < 1:
            raise ValueError("mode count must be >= 1")
        self.n = n
        clean: dict[MultiIndex, float] = {}
        for idx, c in (terms or {}).items():
            if idx.n != n:
                raise ValueError("monomial mode count does not match symbol")
            c = float(c)
            if c != 0.0:
                clean[idx] = clean.get(idx, 0.0) + c
        self._terms = {k: v for k, v in clean.items() if v != 0.0}
        self._compiled = None

    # construction helpers
    @classmethod
    def constant(cls, n: int, c: float) -> "PolySymbol":
        return cls(n, {MultiIndex.zero(n): c})

    @classmethod
    def monomial(cls, q_exponents: Sequence[int], p_exponents: Sequence[int],
                 c: float = 1.0) -> "PolySymbol":
        idx = MultiIndex(tuple(q_exponents), tuple(p_exponents))
        return cls(idx.n, {idx: c})

    @property
    def terms(self) -> dict[MultiIndex, float]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __iter__(self) -> Iterator[tuple[MultiIndex, float]]:
        return iter(sorted(self._terms.items(), key=lambda kv: (kv[0].order, kv[0].q_exponents,
                                                               kv[0].p_exponents)))

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        return max((idx.order for idx in self._terms), default=0)

    # arithmetic
    def _coerce(self, other) -> "PolySymbol":
        if isinstance(other, PolySymbol):
            _check_n(self, other)
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return PolySymbol.constant(self.n, float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for idx, c in other._terms.items():
            out[idx] = out.get(idx, 0.0) + c
        return PolySymbol(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return PolySymbol(self.n, {k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[MultiIndex, float] = {}
        for i1, c1 in self._terms.items():
            for i2, c2 in other._terms.items():
                idx = i1 + i2
                out[idx] = out.get(idx, 0.0) + c1 * c2
        return PolySymbol(self.n, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = PolySymbol.constant(self.n, 1.0)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, float)):
            other = PolySymbol.constant(self.n, other)
        if not isinstance(other, PolySymbol):
            return NotImplemented
        return self.n == other.n and self._terms == other._terms

    def __hash__(self):
        return hash((self.n, frozenset(self._terms.items())))

    def __repr__(self):
        if not self._terms:
            return "PolySymbol(0)"
        body = " + ".join(f"{c:g}*{idx}" for idx, c in self)
        return f"PolySymbol({body})"

    def derivative(self, var: str, k: int, order: int = 1) -> "PolySymbol":
        """Partial derivative with respect to q_k or p_k (k is 1-based)."""
        out: dict[MultiIndex, float] = {}
        j = k - 1
        for idx, c in self._terms.items():
            q, p = list(idx.q_exponents), list(idx.p_exponents)
            e = q if var == "q" else p
            if e[j] < order:
                continue
            c = c * math.perm(e[j], order)
            e[j] -= order
            new = MultiIndex(tuple(q), tuple(p))
            out[new] = out.get(new, 0.0) + c
        return PolySymbol(self.n, out)

    def apply_derivative(self, d: MultiIndex) -> "PolySymbol":
        out = self
        for k, e in enumerate(d.q_exponents, 1):
            if e:
                out = out.derivative("q", k, e)
        for k, e in enumerate(d.p_exponents, 1):
            if e:
                out = out.derivative("p", k, e)
        return out

    def _compile(self):
        if self._compiled is None:
            idxs = list(self._terms)
            exps = np.array([i.q_exponents + i.p_exponents for i in idxs], dtype=float)
            coeffs = np.array([self._terms[i] for i in idxs], dtype=float)
            self._compiled = (exps.reshape(len(idxs), 2 * self.n), coeffs)
        return self._compiled

    def evaluate(self, q, p) -> float | np.ndarray:
        """Evaluate at phase-space point(s); trailing axis of q, p is the mode axis."""
        exps, coeffs = self._compile()
        x = np.concatenate([np.asarray(q, dtype=float), np.asarray(p, dtype=float)], axis=-1)
        if len(coeffs) == 0:
            return np.zeros(x.shape[:-1]) if x.ndim > 1 else 0.0
        mons = np.prod(x[..., None, :] ** exps, axis=-1)
        return mons @ coeffs


def qvar(k: int, n: int = 1) -> PolySymbol:
    """The coordinate q_k as a symbol."""
    return PolySymbol(n, {MultiIndex.unit(n, "q", k): 1.0})


def pvar(k: int, n: int = 1) -> PolySymbol:
    """The momentum p_k as a symbol."""
    return PolySymbol(n, {MultiIndex.unit(n, "p", k): 1.0})


def poisson_bracket(a: PolySymbol, b: PolySymbol) -> PolySymbol:
    _check_n(a, b)
    out = PolySymbol(a.n)
    for k in range(1, a.n + 1):
        out = out + a.derivative("q", k) * b.derivative("p", k) \
            - a.derivative("p", k) * b.derivative("q", k)
    return out


class DynOpSymbol:
    """Classical dynamical operator  sum_j f_j(q, p) * d^{alpha_j}.

    Each derivative multi-index acts to the right of its coefficient polynomial.
    """

    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: Iterable[tuple[PolySymbol, MultiIndex]] = ()):
        self.n = n
        acc: dict[MultiIndex, PolySymbol] = {}
        for coeff, d in terms:
            if coeff.n != n or d.n != n:
                raise ValueError("mode-count mismatch in dynamical operator term")
            acc[d] = acc[d] + coeff if d in acc else coeff
        self._terms = {d: c for d, c in acc.items() if not c.is_zero()}

    @classmethod
    def multiplication(cls, a: PolySymbol) -> "DynOpSymbol":
        return cls(a.n, [(a, MultiIndex.zero(a.n))])

    @classmethod
    def derivative(cls, n: int, var: str, k: int) -> "DynOpSymbol":
        return cls(n, [(PolySymbol.constant(n, 1.0), MultiIndex.unit(n, var, k))])

    @property
    def terms(self) -> list[tuple[PolySymbol, MultiIndex]]:
        return [(c, d) for d, c in sorted(self._terms.items(),
                                          key=lambda kv: (kv[0].order, kv[0].q_exponents,
                                                          kv[0].p_exponents))]

    def coefficient(self, d: MultiIndex) -> PolySymbol:
        return self._terms.get(d, PolySymbol(self.n))

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def max_order(self) -> int:
        return max((d.order for d in self._terms), default=0)

    def __add__(self, other: "DynOpSymbol") -> "DynOpSymbol":
        _check_n(self, other)
        return DynOpSymbol(self.n, self.terms + other.terms)

    def __neg__(self):
        return DynOpSymbol(self.n, [(-c, d) for c, d in self.terms])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, s: float) -> "DynOpSymbol":
        return DynOpSymbol(self.n, [(c * s, d) for c, d in self.terms])

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, DynOpSymbol):
            return NotImplemented
        return self.n == other.n and self._terms == other._terms

    def __call__(self, a: PolySymbol) -> PolySymbol:
        return dynop_apply(self, a)

    def __repr__(self):
        body = " + ".join(f"({c!r})*D[{d}]" for c, d in self.terms) or "0"
        return f"DynOpSymbol({body})"


def dynop_apply(l: DynOpSymbol, a: PolySymbol) -> PolySymbol:
    _check_n(l, a)
    out = PolySymbol(a.n)
    for coeff, d in l.terms:
        out = out + coeff * a.apply_derivative(d)
    return out


def dynop_from_hamiltonian(h: PolySymbol) -> DynOpSymbol:
    """Operator L with L A = {A, H}."""
    n = h.n
    terms = []
    for k in range(1, n + 1):
        terms.append((h.derivative("p", k), MultiIndex.unit(n, "q", k)))
        terms.append((-h.derivative("q", k), MultiIndex.unit(n, "p", k)))
    return DynOpSymbol(n, terms)


@dataclass(eq=False)
class FrictionCoefficients:
    """n-mode oscillator with linear (alpha_km) and quadratic (beta_kms) friction.

    ``beta`` is symmetrized in its last two indices on construction.
    """

    n: int
    m: float = 1.0
    omega: float = 0.0
    alpha: np.ndarray = None
    beta: np.ndarray = None

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError(f"mass must be positive, got {self.m}")
        if self.omega < 0:
            raise ValueError("omega must be non-negative")
        n = self.n
        self.alpha = np.zeros((n, n)) if self.alpha is None else np.array(self.alpha, dtype=float)
        beta = np.zeros((n, n, n)) if self.beta is None else np.array(self.beta, dtype=float)
        if self.alpha.shape != (n, n) or beta.shape != (n, n, n):
            raise ValueError("alpha must be n x n and beta n x n x n")
        self.beta = 0.5 * (beta + beta.transpose(0, 2, 1))

    def restricted(self, modes: Sequence[int]) -> "FrictionCoefficients":
        """Sub-block on the given 1-based modes."""
        ix = np.asarray(modes) - 1
        return FrictionCoefficients(len(ix), self.m, self.omega,
                                    self.alpha[np.ix_(ix, ix)], self.beta[np.ix_(ix, ix, ix)])


def _coeffs3(alpha_entries, beta_entries) -> FrictionCoefficients:
    alpha = np.zeros((3, 3))
    beta = np.zeros((3, 3, 3))
    for (k, m), v in alpha_entries.items():
        alpha[k - 1, m - 1] = v
    for (k, m, s), v in beta_entries.items():
        beta[k - 1, m - 1, s - 1] = v
    return FrictionCoefficients(3, 1.0, 0.0, alpha, beta)


def lorenz_coefficients() -> FrictionCoefficients:
    """Lorenz system in (x, y, z) = (p_1, p_2, p_3)."""
    return _coeffs3({(1, 1): 10.0, (1, 2): -10.0, (2, 1): -28.0, (2, 2): 1.0, (3, 3): 8.0 / 3.0},
                    {(2, 1, 3): 0.5, (2, 3, 1): 0.5, (3, 1, 2): -0.5, (3, 2, 1): -0.5})


def rossler_coefficients() -> FrictionCoefficients:
    return _coeffs3({(1, 2): 1.0, (1, 3): 1.0, (2, 1): -1.0, (2, 2): -0.2, (3, 1): -0.2,
                     (3, 3): 5.7},
                    {(3, 1, 3): -0.5, (3, 3, 1): -0.5})


def leipnik_newton_coefficients() -> FrictionCoefficients:
    return _coeffs3({(1, 1): 0.4, (1, 2): -1.0, (2, 1): 1.0, (2, 2): 0.4, (3, 3): -0.175},
                    {(1, 2, 3): -5.0, (1, 3, 2): -5.0, (2, 1, 3): -2.5, (2, 3, 1): -2.5,
                     (3, 1, 2): 2.5, (3, 2, 1): 2.5})


def dynop_friction_oscillator(c: FrictionCoefficients) -> DynOpSymbol:
    """(1/m) p_k d/dq_k - m w^2 q_k d/dp_k - (alpha_km p_m + beta_kms p_m p_s) d/dp_k."""
    if c.m <= 0:
        raise ValueError("mass must be positive")
    n = c.n
    P = [pvar(k, n) for k in range(1, n + 1)]
    terms = []
    for k in range(n):
        terms.append((P[k] * (1.0 / c.m), MultiIndex.unit(n, "q", k + 1)))
        force = qvar(k + 1, n) * (c.m * c.omega ** 2)
        for m in range(n):
            force = force + P[m] * c.alpha[k, m]
            for s in range(n):
                if c.beta[k, m, s]:
                    force = force + P[m] * P[s] * c.beta[k, m, s]
        terms.append((-force, MultiIndex.unit(n, "p", k + 1)))
    return DynOpSymbol(n, terms)


def lorenz_type_dynop(sigma: float = 10.0, r: float = 28.0, b: float = 8.0 / 3.0) -> DynOpSymbol:
    """Two-mode operator whose flow on (q_1, p_1, p_2) is the Lorenz model."""
    q1, p1, p2 = qvar(1, 2), pvar(1, 2), pvar(2, 2)
    u = MultiIndex.unit
    return DynOpSymbol(2, [
        (-sigma * (q1 - p1), u(2, "q", 1)),
        (sigma * p2, u(2, "q", 2)),
        (r * q1 - p1 - q1 * p2, u(2, "p", 1)),
        (-(b * p2 - q1 * p1), u(2, "p", 2)),
    ])


@dataclass(frozen=True)
class ClassicalState:
    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if q.shape != p.shape:
            raise ValueError("q and p must have the same length")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("classical state has non-finite entries")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)


class VectorField:
    """Right-hand side dq_k/dt = L q_k, dp_k/dt = L p_k of a first-order operator."""

    def __init__(self, l: DynOpSymbol):
        bad = [d for _, d in l.terms if d.order != 1]
        if bad:
            raise NotADerivationError(
                f"not a derivation: terms with derivative order {sorted({d.order for d in bad})}")
        n = l.n
        self.n = n
        self.dq = [l.coefficient(MultiIndex.unit(n, "q", k)) for k in range(1, n + 1)]
        self.dp = [l.coefficient(MultiIndex.unit(n, "p", k)) for k in range(1, n + 1)]

    def derivatives(self, q, p) -> tuple[np.ndarray, np.ndarray]:
        dq = np.array([f.evaluate(q, p) for f in self.dq], dtype=float)
        dp = np.array([f.evaluate(q, p) for f in self.dp], dtype=float)
        return dq, dp

    def __call__(self, state: ClassicalState) -> tuple[np.ndarray, np.ndarray]:
        return self.derivatives(state.q, state.p)


def vector_field(l: DynOpSymbol) -> VectorField:
    return VectorField(l)


def integrate_classical(rhs: Callable, x0: ClassicalState, dt: float,
                        steps: int) -> list[ClassicalState]:
    """Fixed-step RK4; returns ``steps + 1`` states including ``x0``.

    ``rhs`` is a VectorField or any callable ClassicalState -> (dq, dp).
    """
    if dt <= 0 or steps < 1:
        raise ValueError("need dt > 0 and steps >= 1")
    if isinstance(rhs, VectorField):
        f = rhs.derivatives
    else:
        def f(q, p):
            if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
                return np.full_like(q, np.nan), np.full_like(p, np.nan)
            dq, dp = rhs(ClassicalState(q, p))
            return np.asarray(dq, dtype=float), np.asarray(dp, dtype=float)
    n = len(x0.q)
    y = np.concatenate([x0.q, x0.p])

    def g(y):
        dq, dp = f(y[:n], y[n:])
        return np.concatenate([dq, dp])

    out = [x0]
    t0 = x0.t
    for i in range(1, steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = g(y)
            k2 = g(y + 0.5 * dt * k1)
            k3 = g(y + 0.5 * dt * k2)
            k4 = g(y + dt * k3)
            y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise DivergenceError(i)
        out.append(ClassicalState(y[:n].copy(), y[n:].copy(), t0 + i * dt))
    return out


def trajectory_arrays(states: Sequence[ClassicalState]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack a trajectory into (t, q, p) arrays."""
    t = np.array([s.t for s in states])
    q = np.array([s.q for s in states])
    p = np.array([s.p for s in states])
    return t, q, p


def write_trajectory_csv(path, states: Sequence[ClassicalState]) -> None:
    """CSV with header ``t,q1..qn,p1..pn`` and 17 significant digits."""
    n = len(states[0].q)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"q{k}" for k in range(1, n + 1)] + [f"p{k}" for k in range(1, n + 1)])
        for s in states:
            w.writerow([f"{v:.17g}" for v in (s.t, *s.q, *s.p)])
