"""Experiment configuration: YAML documents validated against a strict schema.

Unknown keys are errors, and every error message names the offending key
path (``outputs.seminorms.alpha[0]``). Defaults are filled in after
validation, so the echoed config is complete and re-runs reproduce the run.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from pathlib import Path

import jsonschema
import yaml

from ..errors import ConfigurationError

SCHEMA_VERSION = 1
METHODS = ("pathwise-mild", "euler-maruyama", "scalar-exact", "forward-mild")
EXPERIMENTS = ("simulate", "compare", "regularity", "conditions", "convergence")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_count = {"type": "integer", "minimum": 1}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


SCHEMA = _obj({
    "schema_version": {"const": SCHEMA_VERSION},
    "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
    "experiment": {"enum": list(EXPERIMENTS)},
    "problem": _obj({
        "space": _obj({
            "nodes": _count,
            "length": _pos,
            "boundary": {"enum": ["periodic", "neumann-conormal", "dirichlet"]},
        }),
        "time": _obj({"horizon": _pos, "steps": {"type": "integer", "minimum": 2}}),
        "coefficients": _obj({
            "recipe": {"enum": ["lagged-average", "constant"]},
            "kappa0": _pos,
            "kappa1": _num,
            "lag": _pos,
            "a0": _num,
            "holder_mu": {"type": "number", "exclusiveMinimum": 0.5, "maximum": 1},
            "shift": {"type": ["number", "null"]},
        }),
        "noise": _obj({
            "covariance": {"enum": ["smooth", "white", "identity"]},
            "decay": {"type": "number", "minimum": 0},
            "amplitude": _pos,
            "max_modes": {"type": ["integer", "null"], "minimum": 1},
        }),
        "nonlinearity": _obj({
            "drift": {"enum": ["zero", "linear-damping", "pointwise-sin", "pointwise-tanh"]},
            "drift_scale": _num,
            "noise": {"enum": ["zero", "additive", "multiplicative-noise-scale"]},
            "noise_scale": _num,
        }),
        "initial": _obj({
            "recipe": {"enum": ["zero", "constant", "cosine"]},
            "amplitude": _num,
        }),
    }),
    "method": {"oneOf": [
        {"enum": [*METHODS, "all"]},
        {"type": "array", "items": {"enum": list(METHODS)}, "minItems": 1, "uniqueItems": True},
    ]},
    "quadrature": _obj({
        "rule": {"enum": ["midpoint-excluding-diagonal", "graded-mesh"]},
        "substeps": _count,
        "grading": _pos,
    }),
    "propagator": _obj({
        "scheme": {"enum": ["auto", "exact-exponential", "crank-nicolson", "implicit-euler"]},
    }),
    "euler_maruyama": _obj({"scheme": {"enum": ["semi-implicit", "explicit"]}}),
    "forward": _obj({"n_reg": {"type": ["number", "null"], "exclusiveMinimum": 0}}),
    "picard": _obj({"tol": _pos, "max_iter": _count}),
    "paths": _count,
    "first_path": {"type": "integer", "minimum": 0},
    "master_seed": {"type": "integer", "minimum": 0},
    "threads": {"type": ["integer", "null"], "minimum": 1},
    "outputs": _obj({
        "snapshots": _obj({
            "times": {"type": "array", "items": {"type": "number", "minimum": 0},
                      "minItems": 1},
            "nodes": {"type": "boolean"},
        }),
        "seminorms": _obj({
            "alpha": {"type": "array", "minItems": 1,
                      "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
            "p": {"type": "number", "minimum": 1},
            "norm": {"enum": ["sup-node", "l2-nodes", "h1-difference"]},
            "max_lag_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.5},
        }),
        "residuals": {"type": "array", "uniqueItems": True,
                      "items": {"enum": ["weak", "bounded-A"]}},
        "conditions": _obj({
            "mu": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "probe_radii": {"type": "array", "items": {"type": "number", "minimum": 0},
                            "minItems": 1},
        }),
        "compare": _obj({
            "reference_factor": {"type": ["integer", "null"], "minimum": 2},
            "reference_method": {"enum": ["pathwise-mild", "euler-maruyama", "scalar-exact"]},
        }),
        "convergence": _obj({
            "levels": {"type": "integer", "minimum": 2},
            "reference_factor": {"type": "integer", "minimum": 2},
            "reference_method": {"enum": ["auto", "pathwise-mild", "euler-maruyama",
                                          "scalar-exact"]},
        }),
    }),
}, required=("schema_version",))

DEFAULTS = {
    "name": "experiment",
    "experiment": "simulate",
    "problem": {
        "space": {"nodes": 32, "length": 1.0, "boundary": "neumann-conormal"},
        "time": {"horizon": 1.0, "steps": 256},
        "coefficients": {"recipe": "lagged-average", "kappa0": 1.0, "kappa1": 0.4, "lag": 0.1,
                         "a0": -1.0, "holder_mu": 1.0, "shift": None},
        "noise": {"covariance": "smooth", "decay": 2.0, "amplitude": 1.0, "max_modes": None},
        "nonlinearity": {"drift": "zero", "drift_scale": 1.0, "noise": "additive",
                         "noise_scale": 1.0},
        "initial": {"recipe": "zero", "amplitude": 1.0},
    },
    "method": "pathwise-mild",
    "quadrature": {"rule": "midpoint-excluding-diagonal", "substeps": 2, "grading": 2.0},
    "propagator": {"scheme": "auto"},
    "euler_maruyama": {"scheme": "semi-implicit"},
    "forward": {"n_reg": None},
    "picard": {"tol": 1e-10, "max_iter": 50},
    "paths": 10,
    "first_path": 0,
    "master_seed": 0,
    "threads": None,
    "outputs": {
        "snapshots": {"times": [0.25, 0.5, 0.75, 1.0], "nodes": True},
        "seminorms": {"alpha": [0.25, 0.4], "p": 2.0, "norm": "l2-nodes",
                      "max_lag_fraction": 0.125},
        "residuals": [],
        "conditions": {"mu": 1.0, "probe_radii": [0.0, 1.0, 10.0, 100.0]},
        "compare": {"reference_factor": None, "reference_method": "pathwise-mild"},
        "convergence": {"levels": 4, "reference_factor": 16, "reference_method": "auto"},
    },
}

# keys that do not change any computed number
_NON_NUMERIC = ("threads",)
# keys that may differ between run directories that are merged together
MERGEABLE = ("paths", "first_path", "master_seed", "threads")
SOBOLEV_MAX_STEPS = 2048


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _key_path(error: jsonschema.ValidationError) -> str:
    path = ""
    for part in error.absolute_path:
        path += f"[{part}]" if isinstance(part, int) else (f".{part}" if path else str(part))
    return path or "<root>"


def validate(raw: dict) -> dict:
    """Schema-check ``raw``, fill defaults and run cross-field checks.

    Raises :class:`ConfigurationError` whose ``key`` attribute names the
    offending entry.
    """
    if not isinstance(raw, dict):
        raise _config_error("<root>", "config must be a mapping")
    if "schema_version" in raw and raw["schema_version"] != SCHEMA_VERSION:
        raise _config_error("schema_version",
                            f"unsupported schema_version {raw['schema_version']!r}; "
                            f"this build reads version {SCHEMA_VERSION}")
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        key = _key_path(e)
        if e.validator == "additionalProperties":
            extra = sorted(set(e.instance) - set(e.schema.get("properties", {})))
            key = ".".join(p for p in (key if key != "<root>" else "", extra[0]) if p)
            raise _config_error(key, f"unknown key {extra[0]!r}")
        raise _config_error(key, e.message)
    cfg = _merge(DEFAULTS, raw)
    _cross_checks(cfg)
    return cfg


def _config_error(key: str, message: str) -> ConfigurationError:
    err = ConfigurationError(f"{key}: {message}")
    err.key = key
    return err


def methods_of(cfg: dict) -> list[str]:
    m = cfg["method"]
    if m == "all":
        return [x for x in METHODS if applicable(cfg, x)]
    return [m] if isinstance(m, str) else list(m)


def is_linear(cfg: dict) -> bool:
    nl = cfg["problem"]["nonlinearity"]
    return nl["drift"] == "zero" and nl["noise"] in ("zero", "additive")


def applicable(cfg: dict, method: str) -> bool:
    if method == "scalar-exact":
        return cfg["problem"]["space"]["nodes"] == 1 and is_linear(cfg)
    if method == "forward-mild":
        return is_linear(cfg)
    return True


def _cross_checks(cfg: dict) -> None:
    p = cfg["problem"]
    steps, T = p["time"]["steps"], p["time"]["horizon"]
    co = p["coefficients"]
    if co["kappa0"] - abs(co["kappa1"]) <= 0:
        raise _config_error("problem.coefficients.kappa1",
                            "ellipticity needs kappa0 - |kappa1| > 0")
    for m in methods_of(cfg):
        if not applicable(cfg, m):
            why = ("needs a linear problem on one node" if m == "scalar-exact"
                   else "needs a linear problem (drift zero, additive noise)")
            raise _config_error("method", f"{m} {why}")
    if cfg["outputs"]["residuals"] and not is_linear(cfg):
        raise _config_error("outputs.residuals",
                            "identity residuals need a linear problem (drift zero, additive noise)")
    n_reg = cfg["forward"]["n_reg"]
    if n_reg is not None and 1.0 / n_reg < T / steps * (1 - 1e-12):
        raise _config_error("forward.n_reg", f"window 1/n_reg must be >= dt = {T / steps:g}")
    for i, t in enumerate(cfg["outputs"]["snapshots"]["times"]):
        if t > T * (1 + 1e-12):
            raise _config_error(f"outputs.snapshots.times[{i}]", f"time {t} exceeds horizon {T}")
    if cfg["experiment"] == "regularity" and steps > SOBOLEV_MAX_STEPS:
        raise _config_error("problem.time.steps",
                            f"Sobolev seminorms are O(N^2); steps capped at {SOBOLEV_MAX_STEPS}")
    if cfg["experiment"] == "regularity" and steps + 1 < 32:
        raise _config_error("problem.time.steps", "exponent estimation needs >= 31 steps")
    ref = cfg["outputs"]["convergence"]["reference_method"]
    if cfg["experiment"] == "convergence" and ref == "scalar-exact" and not applicable(cfg, ref):
        raise _config_error("outputs.convergence.reference_method",
                            "scalar-exact needs a linear problem on one node")
    ref = cfg["outputs"]["compare"]["reference_method"]
    if cfg["experiment"] == "compare" and ref == "scalar-exact" and not applicable(cfg, ref):
        raise _config_error("outputs.compare.reference_method",
                            "scalar-exact needs a linear problem on one node")


def load(path: str | os.PathLike) -> dict:
    """Read and validate a YAML config file (``OSError`` propagates)."""
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise _config_error("<root>", f"not valid YAML: {exc}") from exc
    return validate(raw if raw is not None else {})


def apply_overrides(cfg: dict, seed=None, paths=None, threads=None, experiment=None,
                    levels=None) -> dict:
    raw = copy.deepcopy(cfg)
    if seed is not None:
        raw["master_seed"] = seed
    if paths is not None:
        raw["paths"] = paths
    if threads is not None:
        raw["threads"] = threads
    if experiment is not None:
        raw["experiment"] = experiment
    if levels is not None:
        raw["outputs"]["convergence"]["levels"] = levels
    return validate(raw)


def canonical(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def run_id(cfg: dict) -> str:
    """Deterministic id of everything that affects the numbers."""
    numeric = {k: v for k, v in cfg.items() if k not in _NON_NUMERIC}
    return hashlib.sha256(canonical(numeric).encode()).hexdigest()[:12]


def compatibility_key(cfg: dict) -> str:
    """Hash of the config minus the keys allowed to differ between merged runs."""
    core = {k: v for k, v in cfg.items() if k not in MERGEABLE}
    return hashlib.sha256(canonical(core).encode()).hexdigest()[:12]


def dump(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=True, default_flow_style=False)
