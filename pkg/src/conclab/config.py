"""Experiment configuration: JSON schema, strict validation, law and
coefficient sub-schemas, and the canonical config hash stamped onto every
output row."""

from __future__ import annotations

import hashlib
import json

from .coefficients import CoefficientMatrix, arith, ones, random_sphere
from .errors import ConfigError
from .scalar_laws import FiniteLaw, GaussianLaw, UniformLaw, lazy_rademacher, rademacher

SCHEMA_VERSION = 1

_BOUND_PARAMS = {
    "thm1": {"M1", "detN", "d", "alpha"},
    "cor1": {"M1", "detN", "d", "alpha", "D"},
    "cor2": {"detN", "d", "alpha", "D", "tau"},
    "thm2": {"M1", "detN", "d", "alpha", "gamma"},
    "cor3": {"M1", "detN", "d", "alpha", "gamma", "D"},
    "cor4": {"detN", "d", "alpha", "gamma", "D", "tau"},
    "kr": {"lambdas", "q_tildes", "lambda"},
    "siegel": {"lambdas", "m_values", "lambda"},
    "fs": {"p", "detN", "d", "alpha", "D"},
    "rv": {"p", "d", "alpha", "gamma", "D"},
}
# parameters compare() can fill from the instance law/coefficients
_FILLABLE = {"M1", "detN", "d"}


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def canonical_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), allow_nan=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _check_keys(d: dict, allowed: set, where: str):
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def _num(d: dict, key: str, where: str, *, required: bool = True, default=None):
    if key not in d:
        if required:
            raise ConfigError(f"{where}: missing required key {key!r}")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def _int(d: dict, key: str, where: str, *, required: bool = True, default=None):
    if key not in d:
        if required:
            raise ConfigError(f"{where}: missing required key {key!r}")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}.{key}: expected an integer, got {v!r}")
    return v


def law_from_spec(spec) -> FiniteLaw | GaussianLaw | UniformLaw:
    """Law sub-schema: {"kind": "finite"|"gaussian"|"uniform"|"rademacher"|
    "lazy-rademacher", ...kind-specific fields}."""
    if not isinstance(spec, dict):
        raise ConfigError("law: expected an object")
    kind = spec.get("kind")
    if kind == "finite":
        _check_keys(spec, {"kind", "atoms"}, "law")
        atoms = spec.get("atoms")
        if (not isinstance(atoms, list) or not atoms
                or not all(isinstance(p, list) and len(p) == 2 for p in atoms)):
            raise ConfigError("law.atoms: expected a nonempty list of [atom, prob] pairs")
        xs = tuple(float(p[0]) for p in atoms)
        ps = tuple(float(p[1]) for p in atoms)
        order = sorted(range(len(xs)), key=lambda i: xs[i])
        return FiniteLaw(tuple(xs[i] for i in order), tuple(ps[i] for i in order))
    if kind == "gaussian":
        _check_keys(spec, {"kind", "mean", "stddev"}, "law")
        return GaussianLaw(_num(spec, "mean", "law"), _num(spec, "stddev", "law"))
    if kind == "uniform":
        _check_keys(spec, {"kind", "lo", "hi"}, "law")
        return UniformLaw(_num(spec, "lo", "law"), _num(spec, "hi", "law"))
    if kind == "rademacher":
        _check_keys(spec, {"kind"}, "law")
        return rademacher()
    if kind == "lazy-rademacher":
        _check_keys(spec, {"kind", "hold"}, "law")
        return lazy_rademacher(_num(spec, "hold", "law"))
    raise ConfigError(f"law.kind: unknown kind {kind!r}")


def coefficients_from_spec(spec) -> CoefficientMatrix:
    """Coefficient sub-schema: explicit {"rows": [[...]]} or a generator
    {"kind": "ones"|"arith"|"random-sphere", ...}."""
    if not isinstance(spec, dict):
        raise ConfigError("coefficients: expected an object")
    if "rows" in spec:
        _check_keys(spec, {"rows"}, "coefficients")
        rows = spec["rows"]
        if not isinstance(rows, list) or not rows:
            raise ConfigError("coefficients.rows: expected a nonempty list of rows")
        return CoefficientMatrix(rows)
    kind = spec.get("kind")
    if kind == "ones":
        _check_keys(spec, {"kind", "n"}, "coefficients")
        return ones(_int(spec, "n", "coefficients"))
    if kind == "arith":
        _check_keys(spec, {"kind", "n"}, "coefficients")
        return arith(_int(spec, "n", "coefficients"))
    if kind == "random-sphere":
        _check_keys(spec, {"kind", "n", "d", "seed"}, "coefficients")
        return random_sphere(_int(spec, "n", "coefficients"),
                             _int(spec, "d", "coefficients"),
                             _int(spec, "seed", "coefficients"))
    raise ConfigError(f"coefficients.kind: unknown kind {kind!r}")


def _check_schema(cfg: dict):
    if not isinstance(cfg, dict):
        raise ConfigError("config: expected a JSON object")
    if cfg.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"config.schema: expected {SCHEMA_VERSION}, got {cfg.get('schema')!r}")


def validate_estimate_q(cfg: dict) -> dict:
    _check_schema(cfg)
    _check_keys(cfg, {"schema", "law", "coefficients", "lambda", "lambdas",
                      "method", "samples", "seed"}, "config")
    out = {
        "law": law_from_spec(cfg.get("law")),
        "coefficients": coefficients_from_spec(cfg.get("coefficients")),
    }
    if ("lambda" in cfg) == ("lambdas" in cfg):
        raise ConfigError("config: provide exactly one of 'lambda' or 'lambdas'")
    if "lambda" in cfg:
        out["lambdas"] = [_num(cfg, "lambda", "config")]
    else:
        lams = cfg["lambdas"]
        if not isinstance(lams, list) or not lams:
            raise ConfigError("config.lambdas: expected a nonempty list")
        out["lambdas"] = [float(x) for x in lams]
    method = cfg.get("method", "auto")
    if method not in ("auto", "exact", "mc"):
        raise ConfigError(f"config.method: expected auto|exact|mc, got {method!r}")
    out["method"] = method
    out["samples"] = _int(cfg, "samples", "config", required=False, default=100_000)
    out["seed"] = _int(cfg, "seed", "config", required=(method != "exact"))
    return out


def validate_lcd(cfg: dict) -> dict:
    _check_schema(cfg)
    _check_keys(cfg, {"schema", "coefficients", "gamma", "alpha", "scan_radius",
                      "grid_step"}, "config")
    return {
        "coefficients": coefficients_from_spec(cfg.get("coefficients")),
        "gamma": _num(cfg, "gamma", "config"),
        "alpha": _num(cfg, "alpha", "config"),
        "scan_radius": _num(cfg, "scan_radius", "config"),
        "grid_step": _num(cfg, "grid_step", "config", required=False),
    }


def validate_margin(cfg: dict) -> dict:
    _check_schema(cfg)
    _check_keys(cfg, {"schema", "coefficients", "D", "gamma", "scan_points"}, "config")
    return {
        "coefficients": coefficients_from_spec(cfg.get("coefficients")),
        "D": _num(cfg, "D", "config"),
        "gamma": _num(cfg, "gamma", "config", required=False),
        "scan_points": _int(cfg, "scan_points", "config", required=False,
                            default=2**17),
    }


def validate_bounds(cfg: dict) -> dict:
    _check_schema(cfg)
    _check_keys(cfg, {"schema", "law", "coefficients", "requests", "empirical"},
                "config")
    reqs = cfg.get("requests")
    if not isinstance(reqs, list) or not reqs:
        raise ConfigError("config.requests: expected a nonempty list")
    has_instance = "law" in cfg and "coefficients" in cfg
    norm_reqs = []
    for i, req in enumerate(reqs):
        where = f"config.requests[{i}]"
        if not isinstance(req, dict):
            raise ConfigError(f"{where}: expected an object")
        name = req.get("bound")
        if name not in _BOUND_PARAMS:
            raise ConfigError(f"{where}.bound: unknown bound {name!r}")
        allowed = _BOUND_PARAMS[name]
        _check_keys(req, allowed | {"bound"}, where)
        required = allowed - _FILLABLE if has_instance else allowed
        missing = required - set(req)
        if missing:
            raise ConfigError(f"{where}: missing parameters {sorted(missing)}")
        norm = {"bound": name}
        for key in sorted(set(req) - {"bound"}):
            v = req[key]
            if key in ("lambdas", "q_tildes", "m_values"):
                if not isinstance(v, list) or not v:
                    raise ConfigError(f"{where}.{key}: expected a nonempty list")
                norm[key] = [float(x) for x in v]
            elif key == "d":
                norm[key] = _int(req, key, where)
            else:
                norm[key] = _num(req, key, where)
        norm_reqs.append(norm)

    out = {
        "law": law_from_spec(cfg["law"]) if "law" in cfg else None,
        "coefficients": (coefficients_from_spec(cfg["coefficients"])
                         if "coefficients" in cfg else None),
        "requests": norm_reqs,
    }
    if ("law" in cfg) != ("coefficients" in cfg):
        raise ConfigError("config: law and coefficients must be given together")
    emp = cfg.get("empirical")
    if emp is not None:
        if not has_instance:
            raise ConfigError("config.empirical: needs law and coefficients")
        _check_keys(emp, {"method", "samples", "seed"}, "config.empirical")
        method = emp.get("method", "auto")
        if method not in ("auto", "exact", "mc"):
            raise ConfigError(f"config.empirical.method: got {method!r}")
        out["empirical"] = {
            "method": method,
            "samples": _int(emp, "samples", "config.empirical", required=False,
                            default=100_000),
            "seed": _int(emp, "seed", "config.empirical",
                         required=(method != "exact")),
        }
    else:
        out["empirical"] = None
    return out


def validate_rates(cfg: dict) -> dict:
    _check_schema(cfg)
    _check_keys(cfg, {"schema", "family", "law", "n_grid", "lambda"}, "config")
    family = cfg.get("family")
    if family not in ("ones", "arith"):
        raise ConfigError(f"config.family: expected ones|arith, got {family!r}")
    grid = cfg.get("n_grid")
    if not isinstance(grid, list) or len(grid) < 4:
        raise ConfigError("config.n_grid: need at least 4 sizes for a slope fit")
    ns = []
    for v in grid:
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ConfigError(f"config.n_grid: bad entry {v!r}")
        ns.append(v)
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigError("config.n_grid: sizes must be strictly increasing")
    return {
        "family": family,
        "law": law_from_spec(cfg.get("law")),
        "n_grid": ns,
        "lambda": _num(cfg, "lambda", "config"),
    }
