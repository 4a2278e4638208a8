"""Fokker-Planck-type Liouville operators and their Markovian (Lindblad) quantization.

Three constructions of the same generator are provided: the Lindblad form
built from extracted jump operators, an explicit double-commutator form, and
generic quantization of the second-order differential operator.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .hilbert import MatrixOperator, QuantizationContext, interior_indices
from .superop import (SuperOperator, commutator_superop, jordan_superop,
                      quantize_dynop)
from .symbol import DynOpSymbol, MultiIndex, PolySymbol, pvar, qvar

__all__ = [
    "FokkerPlanckCoeffs", "DerivedParams", "LindbladModel", "NoKineticTermError",
    "InfeasibleDiffusionError", "fokker_planck_dynop", "derive_params", "drift_from_params",
    "diffusion_matrix", "solve_lindblad_ops", "kossakowski_matrix", "build_lindblad_superop",
    "build_explicit_superop", "stated_h", "calibrate_h", "generic_superop",
]

PSD_SLACK = 1e-12


class NoKineticTermError(ValueError):
    """c_pq = 0: the drift has no kinetic term, so the mass is undefined."""


class InfeasibleDiffusionError(ValueError):
    """Diffusion too weak for the friction: no completely positive generator exists."""

    def __init__(self, min_eig: float, message: str = ""):
        self.min_eig = min_eig
        super().__init__(message or "unphysical diffusion: complete positivity unattainable "
                                    f"(diffusion matrix eigenvalue {min_eig:.6g} < 0)")


@dataclass(frozen=True)
class FokkerPlanckCoeffs:
    d_qq: float = 0.0
    d_qp: float = 0.0
    d_pp: float = 0.0
    c_qq: float = 0.0
    c_qp: float = 0.0
    c_pq: float = 0.0
    c_pp: float = 0.0
    h: float | None = None

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None and not np.isfinite(v):
                raise ValueError(f"{f.name} must be finite")
        if self.d_qq < 0 or self.d_pp < 0:
            raise ValueError("d_qq and d_pp must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "FokkerPlanckCoeffs":
        names = {f.name for f in fields(cls)}
        extra = set(d) - names
        if extra:
            raise ValueError(f"unknown coefficient keys: {sorted(extra)}")
        return cls(**{k: (None if v is None else float(v)) for k, v in d.items()})

    def to_dict(self) -> dict:
        return asdict(self)

    def with_h(self, h: float | None) -> "FokkerPlanckCoeffs":
        d = self.to_dict()
        d["h"] = h
        return FokkerPlanckCoeffs(**d)


@dataclass(frozen=True)
class DerivedParams:
    m: float
    omega_sq: float
    lam: float
    mu: float


@dataclass
class LindbladModel:
    H: MatrixOperator
    V: list
    a: np.ndarray
    b: np.ndarray
    hbar: float


def fokker_planck_dynop(c: FokkerPlanckCoeffs) -> DynOpSymbol:
    """d_qq dq^2 + 2 d_qp dq dp + d_pp dp^2 + (c_qq q + c_pq p) dq + (c_qp q + c_pp p) dp + h."""
    one = PolySymbol.constant(1, 1.0)
    q, p = qvar(1), pvar(1)
    mi = lambda nq, np_: MultiIndex((nq,), (np_,))
    return DynOpSymbol(1, [
        (one * c.d_qq, mi(2, 0)),
        (one * (2 * c.d_qp), mi(1, 1)),
        (one * c.d_pp, mi(0, 2)),
        (q * c.c_qq + p * c.c_pq, mi(1, 0)),
        (q * c.c_qp + p * c.c_pp, mi(0, 1)),
        (one * (c.h or 0.0), mi(0, 0)),
    ])


def derive_params(c: FokkerPlanckCoeffs) -> DerivedParams:
    if c.c_pq == 0:
        raise NoKineticTermError("c_pq = 0: no kinetic term, mass undefined")
    return DerivedParams(m=-1.0 / c.c_pq, omega_sq=-c.c_qp * c.c_pq,
                         lam=0.5 * (c.c_pp + c.c_qq), mu=0.5 * (c.c_pp - c.c_qq))


def drift_from_params(d: DerivedParams) -> dict:
    """Inverse of :func:`derive_params` on the drift coefficients."""
    return {"c_pq": -1.0 / d.m, "c_qp": d.omega_sq * d.m,
            "c_pp": d.lam + d.mu, "c_qq": d.lam - d.mu}


def diffusion_matrix(c: FokkerPlanckCoeffs, hbar: float) -> np.ndarray:
    """G = (hbar/2) sum_j conj(v_j) v_j^T with v_j = (a_j, b_j); must be PSD."""
    lam = 0.5 * (c.c_pp + c.c_qq)
    off = -c.d_qp - 0.5j * hbar * lam
    return np.array([[c.d_qq, off], [np.conj(off), c.d_pp]], dtype=complex)


def _hamiltonian(c: FokkerPlanckCoeffs, ctx: QuantizationContext) -> MatrixOperator:
    dp = derive_params(c)
    q, p = ctx.q().data, ctx.p().data
    h1 = p @ p / (2 * dp.m) + dp.m * dp.omega_sq * (q @ q) / 2
    h = h1 + 0.5 * dp.mu * (p @ q + q @ p)
    return MatrixOperator(ctx, 0.5 * (h + h.conj().T), hermitian=True)


def solve_lindblad_ops(c: FokkerPlanckCoeffs, ctx: QuantizationContext) -> LindbladModel:
    """Jump operators V_j = a_j p + b_j q and Hamiltonian reproducing the drift and diffusion.

    Uses the eigendecomposition of the diffusion matrix, so at most two V_j.
    """
    if ctx.n != 1:
        raise ValueError("Fokker-Planck pathway is single-mode")
    g = diffusion_matrix(c, ctx.hbar)
    w, u = np.linalg.eigh(g)
    scale = max(float(np.trace(g).real), 0.0)
    if w[0] < -PSD_SLACK * max(scale, 1e-300) or (scale == 0 and w[0] < 0):
        raise InfeasibleDiffusionError(float(w[0]))
    h = _hamiltonian(c, ctx)
    a, b, vs = [], [], []
    q, p = ctx.q().data, ctx.p().data
    for e, col in zip(w, u.T):
        if e <= PSD_SLACK * max(scale, 1e-300):
            continue
        v = np.sqrt(2 * e / ctx.hbar) * np.conj(col)
        a.append(v[0])
        b.append(v[1])
        vs.append(MatrixOperator(ctx, v[0] * p + v[1] * q))
    return LindbladModel(H=h, V=vs, a=np.array(a, dtype=complex), b=np.array(b, dtype=complex),
                         hbar=ctx.hbar)


def kossakowski_matrix(model: LindbladModel) -> np.ndarray:
    """Coefficient matrix of the dissipator in the (p, q) operator basis."""
    v = np.stack([model.a, model.b], axis=1) if len(model.a) else np.zeros((0, 2))
    return 0.5 * model.hbar * (v.conj().T @ v).T


def build_lindblad_superop(model: LindbladModel, ctx: QuantizationContext) -> SuperOperator:
    """rho -> -(i/hbar)[H, rho] + (1/2hbar) sum_j ([V_j rho, V_j^+] + [V_j, rho V_j^+])."""
    hb = ctx.hbar
    h = model.H.data
    terms = [(-1j / hb, h, None), (1j / hb, None, h)]
    for v in model.V:
        vd = v.data.conj().T
        vdv = vd @ v.data
        terms += [(1.0 / hb, v.data, vd), (-0.5 / hb, vdv, None), (-0.5 / hb, None, vdv)]
    return SuperOperator(ctx, terms)


def build_explicit_superop(c: FokkerPlanckCoeffs, ctx: QuantizationContext) -> SuperOperator:
    """Double-commutator form of the Markovian generator, assembled term by term.

    The d_qp term is taken in its symmetric form (d_qp/hbar^2)([p,[q,.]] + [q,[p,.]]).
    """
    d = derive_params(c)
    hb = ctx.hbar
    q, p = ctx.q(), ctx.p()
    Cq, Cp = commutator_superop(q), commutator_superop(p)
    Jq, Jp = jordan_superop(q), jordan_superop(p)
    h1 = MatrixOperator(ctx, p.data @ p.data / (2 * d.m) + d.m * d.omega_sq * (q.data @ q.data) / 2)
    out = commutator_superop(h1) * (-1j / hb)
    out = out + (Cp @ Jq) * (1j * (d.lam - d.mu) / hb)
    out = out + (Cq @ Jp) * (-1j * (d.lam + d.mu) / hb)
    out = out + (Cq @ Cq) * (-c.d_pp / hb ** 2) + (Cp @ Cp) * (-c.d_qq / hb ** 2)
    out = out + (Cp @ Cq + Cq @ Cp) * (c.d_qp / hb ** 2)
    return out


def stated_h(c: FokkerPlanckCoeffs) -> float:
    """Alternative closed form -2(c_pp + c_qq) for h, kept for comparison with :func:`calibrate_h`."""
    return -2.0 * (c.c_pp + c.c_qq)


def calibrate_h(c: FokkerPlanckCoeffs, ctx: QuantizationContext) -> float:
    """Constant h making the generic quantization annihilate the trace functional.

    Tr((L0 + h) rho) = 0 for all rho  <=>  L0^+(I) = -h I.  Solved on the
    interior, where the truncation does not disturb the adjoint's action on I.
    """
    l0 = quantize_dynop(fokker_planck_dynop(c.with_h(0.0)), ctx)
    y = l0.adjoint().apply(np.eye(ctx.size, dtype=complex))
    ix = interior_indices(ctx)
    return float(-np.mean(np.diag(y)[ix]).real)


def generic_superop(c: FokkerPlanckCoeffs, ctx: QuantizationContext,
                    h: float | None = None) -> tuple[SuperOperator, float]:
    """quantize_dynop of the Fokker-Planck operator; h defaults to the calibrated value."""
    if h is None:
        h = c.h if c.h is not None else calibrate_h(c, ctx)
    return quantize_dynop(fokker_planck_dynop(c.with_h(h)), ctx), h
