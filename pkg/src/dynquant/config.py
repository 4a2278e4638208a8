"""Scenario configuration: JSON schema, defaults and flag overrides."""
from __future__ import annotations

import copy
import json
from pathlib import Path

import jsonschema

from .verify import DEFAULT_SEED

SCENARIOS = ("harmonic", "damped", "lorenz", "rossler", "leipnik_newton", "fokker_planck",
             "quantum_lorenz", "custom")
FP_KEYS = ("d_qq", "d_qp", "d_pp", "c_qq", "c_qp", "c_pq", "c_pp")

_num = {"type": "number"}
_vec = {"oneOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}, "minItems": 1}]}
_exps = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


CONFIG_SCHEMA = _obj({
    "scenario": {"enum": list(SCENARIOS)},
    "ctx": _obj({
        "hbar": {"type": "number", "exclusiveMinimum": 0},
        "dim": {"type": "integer", "minimum": 2},
        "scale_mass": {"type": "number", "exclusiveMinimum": 0},
        "scale_omega": {"type": "number", "exclusiveMinimum": 0},
    }),
    "system": {"type": "object"},
    "initial": _obj({"q0": _vec, "p0": _vec}),
    "evolution": _obj({
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "steps": {"type": "integer", "minimum": 1},
        "picture": {"enum": ["heisenberg", "schroedinger"]},
        "method": {"enum": ["rk4", "exponential"]},
        "record_every": {"type": "integer", "minimum": 1},
    }),
    "output": _obj({"dir": {"type": "string"}}),
    "classical_only": {"type": "boolean"},
    "verify": {"type": "boolean"},
    "allow_large": {"type": "boolean"},
    "seed": {"type": "integer", "minimum": 0},
}, required=["scenario"])

_friction_system = _obj({
    "m": {"type": "number", "exclusiveMinimum": 0},
    "omega": {"type": "number", "minimum": 0},
    "alpha": {"oneOf": [{"type": "number"}, {"type": "array"}]},
    "beta": {"type": "array"},
})
_family_system = _obj({
    "modes": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 3},
              "minItems": 1, "maxItems": 3, "uniqueItems": True},
})

SYSTEM_SCHEMAS = {
    "harmonic": _obj({"m": _friction_system["properties"]["m"],
                      "omega": _friction_system["properties"]["omega"]}),
    "damped": {**_friction_system, "required": ["alpha"]},
    "lorenz": _family_system,
    "rossler": _family_system,
    "leipnik_newton": _family_system,
    "fokker_planck": _obj({**{k: _num for k in FP_KEYS}, "h": _num}, required=FP_KEYS),
    "quantum_lorenz": _obj({"sigma": _num, "r": _num, "b": _num}),
    "custom": _obj({
        "n": {"type": "integer", "minimum": 1},
        "terms": {"type": "array", "minItems": 1, "items": _obj({
            "coefficient": {"type": "array", "minItems": 1, "items": _obj(
                {"c": _num, "q": _exps, "p": _exps}, required=["c", "q", "p"])},
            "derivative": _obj({"q": _exps, "p": _exps}, required=["q", "p"]),
        }, required=["coefficient", "derivative"])},
    }, required=["n", "terms"]),
}

_T = 6.283185307179586

DEFAULTS = {
    "harmonic": {"ctx": {"hbar": 1.0, "dim": 40}, "system": {"m": 1.0, "omega": 1.0},
                 "initial": {"q0": 1.0, "p0": 0.0},
                 "evolution": {"dt": _T / 2000, "steps": 2000, "picture": "heisenberg",
                               "record_every": 10}},
    "damped": {"ctx": {"hbar": 1.0, "dim": 40},
               "system": {"m": 1.0, "omega": 1.0, "alpha": 0.2},
               "initial": {"q0": 1.0, "p0": 0.0},
               "evolution": {"dt": 0.005, "steps": 2000, "picture": "heisenberg",
                             "record_every": 10}},
    "lorenz": {"ctx": {"hbar": 0.1, "dim": 10}, "system": {"modes": [1, 2]},
               "initial": {"q0": 0.0, "p0": 0.2},
               "evolution": {"dt": 1e-3, "steps": 20, "picture": "heisenberg"}},
    "fokker_planck": {"ctx": {"hbar": 1.0, "dim": 30},
                      "system": {"d_qq": 0.1, "d_qp": 0.0, "d_pp": 0.1, "c_qq": 0.0,
                                 "c_qp": 1.0, "c_pq": -1.0, "c_pp": 0.2},
                      "initial": {"q0": 1.0, "p0": 0.0},
                      "evolution": {"dt": 0.01, "steps": 1000, "picture": "schroedinger",
                                    "record_every": 10}},
    "quantum_lorenz": {"ctx": {"hbar": 0.1, "dim": 10},
                       "system": {"sigma": 10.0, "r": 28.0, "b": 8.0 / 3.0},
                       "initial": {"q0": [0.2, 0.0], "p0": [0.2, 0.2]},
                       "evolution": {"dt": 1e-3, "steps": 20, "picture": "heisenberg"}},
    "custom": {"ctx": {"hbar": 1.0, "dim": 20}, "initial": {"q0": 0.0, "p0": 0.0},
               "evolution": {"dt": 0.01, "steps": 100, "picture": "heisenberg"}},
}
DEFAULTS["rossler"] = copy.deepcopy(DEFAULTS["lorenz"])
DEFAULTS["leipnik_newton"] = copy.deepcopy(DEFAULTS["lorenz"])

# classical-only runs of the three-mode families start from (x, y, z) = (1, 1, 1)
CLASSICAL_DEFAULTS = {"initial": {"q0": 0.0, "p0": 1.0},
                      "evolution": {"dt": 1e-3, "steps": 25000, "record_every": 10}}

BASE = {"ctx": {"scale_mass": 1.0, "scale_omega": 1.0},
        "evolution": {"picture": "heisenberg", "method": "rk4", "record_every": 1},
        "output": {"dir": "out"}, "classical_only": False, "verify": False,
        "allow_large": False, "seed": DEFAULT_SEED}


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _path(err: jsonschema.ValidationError, prefix: str = "") -> str:
    parts = [prefix] if prefix else []
    parts += [str(p) for p in err.absolute_path]
    return ".".join(parts) or "<root>"


def _validate(instance, schema, prefix=""):
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(instance),
                    key=lambda e: list(e.absolute_path))
    if errors:
        msgs = [f"{_path(e, prefix)}: {e.message}" for e in errors]
        raise ConfigError("invalid config:\n  " + "\n  ".join(msgs))


def load_config_file(path, scenario: str | None = None) -> dict:
    """Read a scenario config, a run manifest (uses its ``config``) or a bare coefficient file."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    if "config" in data and "scenario" not in data:
        data = data["config"]
    elif "scenario" not in data and scenario == "fokker_planck" and set(data) <= set(FP_KEYS) | {"h"}:
        data = {"scenario": "fokker_planck", "system": data}
    return data


def resolve(raw: dict, overrides: dict | None = None) -> dict:
    """Validate ``raw`` (plus flag overrides) and fill defaults."""
    merged = _merge(raw, overrides or {})
    _validate(merged, CONFIG_SCHEMA)
    scen = merged["scenario"]
    defaults = _merge(BASE, DEFAULTS[scen])
    if merged.get("classical_only") and scen in ("lorenz", "rossler", "leipnik_newton"):
        defaults = _merge(defaults, CLASSICAL_DEFAULTS)
        defaults["system"] = {"modes": [1, 2, 3]}
    if "system" in merged:
        # a supplied system block replaces the default one wholesale
        defaults.pop("system", None)
    cfg = _merge(defaults, merged)
    cfg.setdefault("system", {})
    _validate(cfg["system"], SYSTEM_SCHEMAS[scen], "system")
    return cfg
