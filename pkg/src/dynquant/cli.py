"""Command-line front end: ``quantize run|verify|sweep``."""
from __future__ import annotations

import argparse
import copy
import itertools
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import SCENARIOS, ConfigError, load_config_file, resolve
from .evolve import EvolutionSpec, TrajectoryRecord, evolve_observables, evolve_state
from .hilbert import QuantizationContext, TruncationError, coherent_state
from .lindblad import (FokkerPlanckCoeffs, InfeasibleDiffusionError, NoKineticTermError,
                       build_explicit_superop, build_lindblad_superop, derive_params,
                       generic_superop, solve_lindblad_ops, stated_h)
from .superop import interior_vec_indices, quantize_dynop, superop_max_diff
from .symbol import (ClassicalState, DivergenceError, DynOpSymbol, FrictionCoefficients,
                     MultiIndex, PolySymbol, dynop_friction_oscillator, integrate_classical,
                     leipnik_newton_coefficients, lorenz_coefficients, lorenz_type_dynop,
                     rossler_coefficients, vector_field, write_trajectory_csv)
from .verify import DEFAULT_SEED, friction_hand_assembled, report_json, verify_all

log = logging.getLogger("dynquant")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_INFEASIBLE, EXIT_VERIFY = 0, 2, 3, 4, 5
LARGE_DIM = 8
FAMILIES = {"lorenz": lorenz_coefficients, "rossler": rossler_coefficients,
            "leipnik_newton": leipnik_newton_coefficients}


class ScenarioError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def _custom_dynop(system: dict) -> DynOpSymbol:
    n = system["n"]
    terms = []
    for t in system["terms"]:
        coeff = {}
        for c in t["coefficient"]:
            if len(c["q"]) != n or len(c["p"]) != n:
                raise ConfigError("system.terms: exponent lists must have length n")
            idx = MultiIndex(tuple(c["q"]), tuple(c["p"]))
            coeff[idx] = coeff.get(idx, 0.0) + c["c"]
        d = t["derivative"]
        if len(d["q"]) != n or len(d["p"]) != n:
            raise ConfigError("system.terms: derivative lists must have length n")
        terms.append((PolySymbol(n, coeff), MultiIndex(tuple(d["q"]), tuple(d["p"]))))
    return DynOpSymbol(n, terms)


def _friction(system: dict, n: int = 1) -> FrictionCoefficients:
    alpha = np.atleast_2d(np.asarray(system.get("alpha", 0.0), dtype=float))
    if alpha.shape == (1, 1) and n > 1:
        alpha = alpha[0, 0] * np.eye(n)
    beta = system.get("beta")
    if beta is not None:
        beta = np.asarray(beta, dtype=float).reshape(n, n, n)
    return FrictionCoefficients(n, system.get("m", 1.0), system.get("omega", 0.0), alpha, beta)


def build_dynop(cfg: dict) -> DynOpSymbol:
    scen, system = cfg["scenario"], cfg["system"]
    if scen == "harmonic":
        return dynop_friction_oscillator(FrictionCoefficients(
            1, system.get("m", 1.0), system.get("omega", 1.0)))
    if scen == "damped":
        return dynop_friction_oscillator(_friction(system))
    if scen in FAMILIES:
        return dynop_friction_oscillator(FAMILIES[scen]().restricted(system.get("modes", [1, 2, 3])))
    if scen == "quantum_lorenz":
        return lorenz_type_dynop(system.get("sigma", 10.0), system.get("r", 28.0),
                                 system.get("b", 8.0 / 3.0))
    if scen == "custom":
        return _custom_dynop(system)
    raise ConfigError(f"scenario {scen} has no classical dynamical operator")


def _context(cfg: dict, n: int) -> QuantizationContext:
    c = cfg["ctx"]
    return QuantizationContext(c["hbar"], c["dim"], n, c["scale_mass"], c["scale_omega"])


def _initial(cfg: dict, n: int) -> tuple[np.ndarray, np.ndarray]:
    init = cfg["initial"]
    q0 = np.broadcast_to(np.asarray(init["q0"], dtype=float), (n,)).copy() \
        if np.ndim(init["q0"]) == 0 else np.asarray(init["q0"], dtype=float)
    p0 = np.broadcast_to(np.asarray(init["p0"], dtype=float), (n,)).copy() \
        if np.ndim(init["p0"]) == 0 else np.asarray(init["p0"], dtype=float)
    if q0.shape != (n,) or p0.shape != (n,):
        raise ConfigError(f"initial: q0 and p0 must be scalars or length-{n} lists")
    return q0, p0


def _spec(cfg: dict) -> EvolutionSpec:
    e = cfg["evolution"]
    return EvolutionSpec(e["dt"], e["steps"], e["picture"], e["method"], e["record_every"])


def _names(n: int) -> list[str]:
    return [f"q{k}" for k in range(1, n + 1)] + [f"p{k}" for k in range(1, n + 1)]


def _heisenberg_record(L, ctx, rho, spec) -> TrajectoryRecord:
    """Expectations of q_k, p_k plus the identity, whose evolution monitors the trace."""
    ops = [ctx.q(k) for k in range(1, ctx.n + 1)] + [ctx.p(k) for k in range(1, ctx.n + 1)]
    ops.append(ctx.identity())
    times, vals = evolve_observables(L, ops, spec, rho)
    nt = len(times)
    return TrajectoryRecord(times, vals[:, :-1], _names(ctx.n), vals[:, -1], np.full(nt, np.nan),
                            np.zeros(nt))


def _run_dynop(cfg: dict, out: Path, manifest: dict) -> list[str]:
    l = build_dynop(cfg)
    n = l.n
    q0, p0 = _initial(cfg, n)
    spec = _spec(cfg)
    files = []
    if cfg["classical_only"]:
        states = integrate_classical(vector_field(l), ClassicalState(q0, p0), spec.dt, spec.steps)
        write_trajectory_csv(out / "classical.csv", states[::spec.record_every])
        files.append("classical.csv")
        arr = np.array([np.concatenate([s.q, s.p]) for s in states])
        manifest["derived"]["classical_max_abs"] = float(np.abs(arr).max())
        return files
    if n >= 3 and not cfg["allow_large"]:
        raise ScenarioError(EXIT_CONFIG, f"{n}-mode quantum run needs --allow-large "
                                         "(or system.modes with at most two modes)")
    if n >= 3 and cfg["ctx"]["dim"] > LARGE_DIM:
        raise ScenarioError(EXIT_CONFIG, f"{n}-mode quantum runs are limited to dim <= {LARGE_DIM}")
    ctx = _context(cfg, n)
    rho = coherent_state(ctx, q0, p0)
    L = quantize_dynop(l, ctx)
    if spec.picture == "heisenberg":
        rec = _heisenberg_record(L, ctx, rho, spec)
    else:
        ops = [ctx.q(k) for k in range(1, n + 1)] + [ctx.p(k) for k in range(1, n + 1)]
        rec = evolve_state(L.adjoint(), rho, ops, spec, _names(n))
    rec.write_csv(out / "trajectory.csv")
    files.append("trajectory.csv")
    x0 = rec.expectations[0]
    states = integrate_classical(vector_field(l), ClassicalState(x0[:n], x0[n:]), spec.dt, spec.steps)
    write_trajectory_csv(out / "classical.csv", states[::spec.record_every])
    files.append("classical.csv")
    cl = np.array([np.concatenate([s.q, s.p]) for s in states[::spec.record_every]])
    manifest["derived"]["ehrenfest_max_deviation"] = float(np.abs(cl - rec.expectations).max())
    manifest["flags"] = rec.flags
    if cfg["verify"]:
        report = verify_all(ctx if ctx.size <= 64 else QuantizationContext(ctx.hbar, 16),
                            cfg["seed"])
        if cfg["scenario"] in ("harmonic", "damped") or cfg["scenario"] in FAMILIES:
            c = (FAMILIES[cfg["scenario"]]().restricted(cfg["system"].get("modes", [1, 2, 3]))
                 if cfg["scenario"] in FAMILIES else _friction(cfg["system"]))
            res = superop_max_diff(L, friction_hand_assembled(c, ctx), interior_vec_indices(ctx))
            report["checks"].append({"name": "scenario.nested_jordan_form", "residual": res,
                                     "tolerance": 1e-10, "passed": res <= 1e-10})
            report["passed"] = report["passed"] and res <= 1e-10
        _write_report(out, report, files)
        manifest["verified"] = report["passed"]
    return files


def _run_fokker_planck(cfg: dict, out: Path, manifest: dict) -> list[str]:
    c = FokkerPlanckCoeffs.from_dict(cfg["system"])
    ctx = _context(cfg, 1)
    try:
        d = derive_params(c)
        model = solve_lindblad_ops(c, ctx)
    except InfeasibleDiffusionError as e:
        raise ScenarioError(EXIT_INFEASIBLE, str(e)) from None
    except NoKineticTermError as e:
        raise ScenarioError(EXIT_CONFIG, f"system.c_pq: {e}") from None
    lind = build_lindblad_superop(model, ctx)
    gen, h_cal = generic_superop(c.with_h(None), ctx)
    manifest["derived"].update({"m": d.m, "omega_sq": d.omega_sq, "lambda": d.lam, "mu": d.mu,
                                "h_calibrated": h_cal, "h_stated": stated_h(c),
                                "lindblad_a": [[z.real, z.imag] for z in model.a],
                                "lindblad_b": [[z.real, z.imag] for z in model.b]})
    q0, p0 = _initial(cfg, 1)
    rho = coherent_state(ctx, q0, p0)
    spec = _spec(cfg)
    if spec.picture == "heisenberg":
        rec = _heisenberg_record(lind.adjoint(), ctx, rho, spec)
    else:
        rec = evolve_state(lind, rho, [ctx.q(), ctx.p()], spec, _names(1))
    rec.write_csv(out / "trajectory.csv")
    files = ["trajectory.csv"]
    manifest["flags"] = rec.flags
    if cfg["verify"]:
        expl = build_explicit_superop(c, ctx)
        rows = interior_vec_indices(ctx)
        checks = [("lindblad_vs_explicit", superop_max_diff(lind, expl), 1e-10),
                  ("generic_vs_explicit_interior", superop_max_diff(gen, expl, rows), 1e-10),
                  ("generic_vs_lindblad_interior", superop_max_diff(gen, lind, rows), 1e-10)]
        rng = np.random.default_rng(cfg["seed"])
        worst = 0.0
        for _ in range(20):
            r = rng.normal(size=(ctx.size,) * 2) + 1j * rng.normal(size=(ctx.size,) * 2)
            worst = max(worst, abs(np.trace(lind.apply(r))) / np.abs(r).max())
        checks.append(("lindblad_trace_preservation", worst, 1e-11))
        report = {"ctx": {"hbar": ctx.hbar, "dim": ctx.dim, "n": 1}, "seed": cfg["seed"],
                  "checks": [{"name": nm, "residual": float(r), "tolerance": t, "passed": bool(r <= t)}
                             for nm, r, t in checks]}
        report["passed"] = all(x["passed"] for x in report["checks"])
        _write_report(out, report, files)
        manifest["verified"] = report["passed"]
    return files


def _write_report(out: Path, report: dict, files: list):
    (out / "verification.json").write_text(report_json(report))
    files.append("verification.json")


def run_scenario(config: dict) -> tuple[int, str]:
    """Run one resolved scenario config; returns (exit code, message)."""
    cfg = copy.deepcopy(config)
    out = Path(cfg["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"version": __version__, "config": config, "derived": {}}
    t0 = time.perf_counter()
    try:
        if cfg["scenario"] == "fokker_planck":
            files = _run_fokker_planck(cfg, out, manifest)
        else:
            files = _run_dynop(cfg, out, manifest)
    except ScenarioError as e:
        return e.code, str(e)
    except (ConfigError, TruncationError) as e:
        return EXIT_CONFIG, str(e)
    except DivergenceError as e:
        return EXIT_DIVERGENCE, f"divergence at step {e.step}: {e}"
    manifest["wall_time_s"] = time.perf_counter() - t0
    manifest["outputs"] = files
    manifest["tolerances"] = {"trace_drift_flag": 1e-6, "identity_default": 1e-10}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    if cfg["verify"] and not manifest.get("verified", True):
        return EXIT_VERIFY, "verification failed; see verification.json"
    return EXIT_OK, f"wrote {', '.join(files)} to {out}"


def _overrides(args) -> dict:
    o: dict = {}
    if args.scenario:
        o["scenario"] = args.scenario
    for flag, key in (("hbar", "hbar"), ("dim", "dim")):
        if getattr(args, flag, None) is not None:
            o.setdefault("ctx", {})[key] = getattr(args, flag)
    for flag in ("dt", "steps"):
        if getattr(args, flag, None) is not None:
            o.setdefault("evolution", {})[flag] = getattr(args, flag)
    if getattr(args, "out", None):
        o["output"] = {"dir": args.out}
    for flag in ("verify", "classical_only", "allow_large"):
        if getattr(args, flag, False):
            o[flag] = True
    if getattr(args, "seed", None) is not None:
        o["seed"] = args.seed
    return o


def _load(args) -> dict:
    raw = load_config_file(args.config, args.scenario) if args.config else {}
    return resolve(raw, _overrides(args))


def cmd_run(args) -> int:
    try:
        cfg = _load(args)
    except ConfigError as e:
        print(e, file=sys.stderr)
        return EXIT_CONFIG
    log.info("scenario %s, seed %d", cfg["scenario"], cfg["seed"])
    code, msg = run_scenario(cfg)
    print(msg, file=sys.stderr if code else sys.stdout)
    return code


def cmd_verify(args) -> int:
    ctx = QuantizationContext(args.hbar or 1.0, args.dim or 16, args.modes)
    seed = DEFAULT_SEED if args.seed is None else args.seed
    log.info("verify with seed %d", seed)
    report = verify_all(ctx, seed, samples=args.samples, corrupt=args.corrupt)
    text = report_json(report)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def _set_dotted(d: dict, key: str, value):
    parts = key.split(".")
    for p in parts[:-1]:
        d = d.setdefault(p, {})
    d[parts[-1]] = value


def _sweep_one(item):
    i, cfg = item
    code, msg = run_scenario(cfg)
    return i, code, msg


def cmd_sweep(args) -> int:
    if not args.config:
        print("sweep needs --config with 'base' and 'grid'", file=sys.stderr)
        return EXIT_CONFIG
    try:
        spec = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as e:
        print(f"{args.config}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if set(spec) - {"base", "grid"} or "base" not in spec or not isinstance(spec.get("grid", {}), dict):
        print("sweep config must contain 'base' and optionally 'grid' only", file=sys.stderr)
        return EXIT_CONFIG
    grid = spec.get("grid", {})
    keys = sorted(grid)
    root = Path(args.out or "sweep")
    items = []
    try:
        for i, combo in enumerate(itertools.product(*(grid[k] for k in keys))):
            raw = copy.deepcopy(spec["base"])
            for k, v in zip(keys, combo):
                _set_dotted(raw, k, v)
            raw["output"] = {"dir": str(root / f"run_{i:03d}")}
            items.append((i, resolve(raw, _overrides(argparse.Namespace(
                scenario=None, hbar=None, dim=None, dt=None, steps=None, out=None,
                verify=args.verify, classical_only=False, allow_large=False, seed=args.seed)))))
    except ConfigError as e:
        print(e, file=sys.stderr)
        return EXIT_CONFIG
    jobs = max(1, args.jobs)
    if jobs == 1:
        results = [_sweep_one(it) for it in items]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_sweep_one, items))
    root.mkdir(parents=True, exist_ok=True)
    index = [{"run": f"run_{i:03d}", "params": dict(zip(keys, combo)), "exit": code, "message": msg}
             for (i, code, msg), combo in zip(sorted(results),
                                              itertools.product(*(grid[k] for k in keys)))]
    (root / "sweep_index.json").write_text(json.dumps(index, indent=1) + "\n")
    codes = [r["exit"] for r in index if r["exit"]]
    print(f"{len(index)} runs, {len(codes)} failed; index at {root / 'sweep_index.json'}")
    return codes[0] if codes else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quantize", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("--scenario", choices=SCENARIOS)
    run.add_argument("--config")
    run.add_argument("--hbar", type=float)
    run.add_argument("--dim", type=int)
    run.add_argument("--dt", type=float)
    run.add_argument("--steps", type=int)
    run.add_argument("--out")
    run.add_argument("--verify", action="store_true")
    run.add_argument("--classical-only", action="store_true")
    run.add_argument("--allow-large", action="store_true")
    run.add_argument("--seed", type=int)
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="run the identity suite")
    ver.add_argument("--hbar", type=float)
    ver.add_argument("--dim", type=int)
    ver.add_argument("--modes", type=int, default=1)
    ver.add_argument("--samples", type=int, default=5)
    ver.add_argument("--seed", type=int)
    ver.add_argument("--out")
    ver.add_argument("--corrupt", choices=["Q1", "Q2", "P1", "P2"],
                     help="fault injection: double one basis superoperator")
    ver.set_defaults(func=cmd_verify)

    sw = sub.add_parser("sweep", help="run a parameter grid")
    sw.add_argument("--config", required=True)
    sw.add_argument("--out")
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--verify", action="store_true")
    sw.add_argument("--seed", type=int)
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
