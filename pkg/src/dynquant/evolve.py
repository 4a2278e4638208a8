"""Time evolution of operators and density matrices under a superoperator generator."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .hilbert import MatrixOperator, QuantizationContext
from .superop import SuperOperator, quantize_dynop, unvec, vec
from .symbol import (ClassicalState, DivergenceError, DynOpSymbol, integrate_classical,
                     trajectory_arrays, vector_field)

__all__ = ["EvolutionSpec", "TrajectoryRecord", "EhrenfestResult", "propagate",
           "evolve_state", "evolve_observable", "evolve_observables", "ehrenfest_compare"]

TRACE_DRIFT_FLAG = 1e-6


@dataclass(frozen=True)
class EvolutionSpec:
    dt: float
    steps: int
    picture: str = "schroedinger"
    method: str = "rk4"
    record_every: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValueError("dt must be positive")
        if self.steps < 1 or self.record_every < 1:
            raise ValueError("steps and record_every must be >= 1")
        if self.picture not in ("heisenberg", "schroedinger"):
            raise ValueError(f"unknown picture {self.picture!r}")
        if self.method not in ("rk4", "exponential"):
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def times(self) -> np.ndarray:
        idx = np.arange(0, self.steps + 1, self.record_every)
        return idx * self.dt


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    expectations: np.ndarray
    names: list[str]
    trace: np.ndarray
    min_eigenvalue: np.ndarray
    hermiticity_residual: np.ndarray
    flags: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.expectations.shape != (len(self.times), len(self.names)):
            raise ValueError("expectation columns do not match observable names")

    def column(self, name: str) -> np.ndarray:
        return self.expectations[:, self.names.index(name)]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", *self.names, "trace", "min_eig", "herm_res"])
            for i, t in enumerate(self.times):
                row = [t, *self.expectations[i], self.trace[i], self.min_eigenvalue[i],
                       self.hermiticity_residual[i]]
                w.writerow([format(float(x), ".17g") for x in row])


def propagate(L: SuperOperator, x0: np.ndarray, spec: EvolutionSpec):
    """Yield (step, x) every ``record_every`` steps, starting with step 0.

    ``x0`` may be a single (d, d) array or a batch (..., d, d).
    """
    x = np.array(x0, dtype=complex)
    d = L.ctx.size
    if spec.method == "exponential":
        prop = expm(spec.dt * L.dense())
        step = lambda y: unvec(vec(y) @ prop.T, d)
    else:
        f = L.apply
        h = spec.dt

        def step(y):
            k1 = f(y)
            k2 = f(y + 0.5 * h * k1)
            k3 = f(y + 0.5 * h * k2)
            k4 = f(y + h * k3)
            return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    yield 0, x
    for i in range(1, spec.steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            x = step(x)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(i, f"non-finite values at step {i}")
        if i % spec.record_every == 0:
            yield i, x


def _herm_res(x: np.ndarray) -> float:
    return float(np.abs(x - x.conj().T).max())


def evolve_state(L: SuperOperator, rho0: MatrixOperator, observables: Sequence[MatrixOperator],
                 spec: EvolutionSpec, names: Sequence[str] | None = None) -> TrajectoryRecord:
    """Integrate d rho/dt = L rho and record expectations and state monitors."""
    if abs(rho0.trace() - 1) > 1e-10:
        raise ValueError("initial state must have unit trace")
    if not rho0.is_hermitian():
        raise ValueError("initial state must be Hermitian")
    names = list(names) if names is not None else [f"obs{i}" for i in range(len(observables))]
    obs = np.stack([o.data for o in observables]) if observables else np.zeros((0,) + rho0.data.shape)
    exps, tr, mins, herm = [], [], [], []
    flags = []
    for i, rho in propagate(L, rho0.data, spec):
        # Re Tr(rho A) for each observable
        exps.append(np.einsum("ij,kji->k", rho, obs).real)
        t = np.trace(rho)
        tr.append(t.real)
        mins.append(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
        herm.append(_herm_res(rho))
        if abs(t - 1) > TRACE_DRIFT_FLAG and not flags:
            flags.append(f"trace drift {abs(t - 1):.3e} at step {i}")
    return TrajectoryRecord(spec.times, np.array(exps).reshape(len(tr), len(names)), names,
                            np.array(tr), np.array(mins), np.array(herm), flags)


def evolve_observables(L: SuperOperator, ops: Sequence[MatrixOperator], spec: EvolutionSpec,
                       rho: MatrixOperator | None = None) -> tuple[np.ndarray, list[np.ndarray]]:
    """Heisenberg evolution of several operators at once.

    Returns (times, snapshots) with snapshots[t] of shape (len(ops), d, d), or,
    if ``rho`` is given, expectations Tr(rho A_t) of shape (len(times), len(ops)).
    """
    x0 = np.stack([o.data for o in ops])
    out = []
    for _, x in propagate(L, x0, spec):
        out.append(np.einsum("ij,kji->k", rho.data, x).real if rho is not None else x)
    return spec.times, (np.array(out) if rho is not None else out)


def evolve_observable(L: SuperOperator, a0: MatrixOperator, spec: EvolutionSpec,
                      states: Sequence[MatrixOperator] = (),
                      names: Sequence[str] | None = None) -> TrajectoryRecord:
    """Integrate dA/dt = L A.  Expectation columns are Tr(rho A_t) for each given state.

    The trace column holds Tr(A_t); min_eig is not meaningful for observables and is NaN.
    """
    if not a0.is_hermitian():
        raise ValueError("observable must be Hermitian")
    names = list(names) if names is not None else [f"state{i}" for i in range(len(states))]
    rhos = np.stack([s.data for s in states]) if states else np.zeros((0,) + a0.data.shape)
    exps, tr, herm = [], [], []
    for _, a in propagate(L, a0.data, spec):
        exps.append(np.einsum("kij,ji->k", rhos, a).real)
        tr.append(np.trace(a).real)
        herm.append(_herm_res(a))
    n = len(tr)
    return TrajectoryRecord(spec.times, np.array(exps).reshape(n, len(names)), names,
                            np.array(tr), np.full(n, np.nan), np.array(herm))


@dataclass
class EhrenfestResult:
    times: np.ndarray
    quantum: np.ndarray
    classical: np.ndarray
    names: list[str]
    deviation: np.ndarray

    @property
    def max_deviation(self) -> float:
        return float(self.deviation.max())


def ehrenfest_compare(l_classical: DynOpSymbol, ctx: QuantizationContext, rho0: MatrixOperator,
                      spec: EvolutionSpec, columns: Sequence[str] | None = None,
                      generator: SuperOperator | None = None) -> EhrenfestResult:
    """Quantum expectations of q_k, p_k against the classical flow from matched initial values.

    Heisenberg picture evolves the coordinate operators under the quantized
    generator; Schroedinger picture evolves rho under its adjoint.  ``columns``
    restricts the deviation to a subset such as ['q1', 'p1', 'p2'].
    """
    vf = vector_field(l_classical)
    L = generator if generator is not None else quantize_dynop(l_classical, ctx)
    n = ctx.n
    ops = [ctx.q(k) for k in range(1, n + 1)] + [ctx.p(k) for k in range(1, n + 1)]
    names = [f"q{k}" for k in range(1, n + 1)] + [f"p{k}" for k in range(1, n + 1)]
    if spec.picture == "heisenberg":
        _, quantum = evolve_observables(L, ops, spec, rho0)
    else:
        rec = evolve_state(L.adjoint(), rho0, ops, spec, names)
        quantum = rec.expectations
    x0 = quantum[0]
    states = integrate_classical(vf, ClassicalState(x0[:n], x0[n:], 0.0), spec.dt, spec.steps)
    _, qs, ps = trajectory_arrays(states[::spec.record_every])
    classical = np.hstack([qs, ps])
    sel = [names.index(c) for c in columns] if columns else list(range(2 * n))
    dev = np.abs(quantum[:, sel] - classical[:, sel]).max(axis=1)
    return EhrenfestResult(spec.times, quantum, classical, names, dev)
