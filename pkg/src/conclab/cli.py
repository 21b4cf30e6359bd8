"""Command-line front end.

Subcommands: estimate-q, lcd, margin, bounds, rates, verify.  Every data
row carries the canonical hash of the effective config and the id of the
constants policy in force.  Numeric output prints 17 significant digits
so files round-trip exactly; reruns with the same config and seed are
byte-identical regardless of --threads.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys

from scipy.stats import t as student_t

from . import config as cfgmod
from .arithmetic_structure import condition_margin, condition_margin_4d, essential_lcd
from .bound_catalog import compare, evaluate_request, load_policy
from .coefficients import arith, gram, ones
from .concentration import exact_q, mc_q
from .errors import CapacityError, ConfigError, DomainError
from .parallel import child_seed
from .scalar_laws import m_of_tau, symmetrize
from .verify import fit_loglog_slope, run_suite

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2


# ---------------------------------------------------------------------------
# Deterministic serialization
# ---------------------------------------------------------------------------


def _fmt_scalar(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    if isinstance(v, int):
        return str(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt_scalar(x) for x in v) + "]"
    return str(v)


def _json_value(v, indent: int) -> str:
    pad = " " * indent
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v) or math.isinf(v):
            return '"' + _fmt_scalar(v) + '"'
        return format(v, ".17g")
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        if not v:
            return "[]"
        inner = ", ".join(_json_value(x, indent) for x in v)
        return "[" + inner + "]"
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [
            f'{pad}  "{k}": ' + _json_value(val, indent + 2) for k, val in v.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _render(columns: list[str], rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        entries = [{c: row.get(c) for c in columns} for row in rows]
        return _json_value(entries, 0) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt_scalar(row.get(c)) for c in columns])
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _effective_config(args) -> dict:
    cfg = cfgmod.load_config(args.config)
    if getattr(args, "seed", None) is not None:
        if not isinstance(cfg, dict):
            raise ConfigError("config: expected a JSON object")
        cfg = dict(cfg)
        cfg["seed"] = args.seed
    return cfg


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_estimate_q(args, threads: int) -> int:
    raw = _effective_config(args)
    cfg = cfgmod.validate_estimate_q(raw)
    policy = load_policy(args.policy)
    chash = cfgmod.canonical_hash(raw)
    law, a = cfg["law"], cfg["coefficients"]
    rows = []
    for i, lam in enumerate(cfg["lambdas"]):
        est = None
        if cfg["method"] in ("exact", "auto"):
            try:
                est = exact_q(law, a, lam)
            except (CapacityError, DomainError):
                if cfg["method"] == "exact":
                    raise
        if est is None:
            est = mc_q(law, a, lam, cfg["samples"], child_seed(cfg["seed"], i),
                       threads=threads)
        rows.append({
            "lambda": lam,
            "value": est.value,
            "stderr": est.stderr,
            "method": est.method,
            "n": a.n,
            "d": a.d,
            "seed": cfg["seed"],
            "config_hash": chash,
            "policy_id": policy.policy_id,
        })
    columns = ["lambda", "value", "stderr", "method", "n", "d", "seed",
               "config_hash", "policy_id"]
    _emit(_render(columns, rows, args.format), args.out)
    return EXIT_OK


def cmd_lcd(args, threads: int) -> int:
    raw = _effective_config(args)
    cfg = cfgmod.validate_lcd(raw)
    policy = load_policy(args.policy)
    a = cfg["coefficients"]
    res = essential_lcd(a, cfg["gamma"], cfg["alpha"], cfg["scan_radius"],
                        grid_step=cfg["grid_step"])
    row = {
        "gamma": res.gamma,
        "alpha": res.alpha,
        "D_hat": res.D_hat,
        "feasible_found": res.feasible_found,
        "witness_t": list(res.witness_t) if res.witness_t is not None else None,
        "scan_radius": res.scan_radius,
        "grid_step": res.grid_step,
        "n": a.n,
        "d": a.d,
        "config_hash": cfgmod.canonical_hash(raw),
        "policy_id": policy.policy_id,
    }
    columns = ["gamma", "alpha", "D_hat", "feasible_found", "witness_t",
               "scan_radius", "grid_step", "n", "d", "config_hash", "policy_id"]
    _emit(_render(columns, [row], args.format), args.out)
    return EXIT_OK


def cmd_margin(args, threads: int) -> int:
    raw = _effective_config(args)
    cfg = cfgmod.validate_margin(raw)
    policy = load_policy(args.policy)
    a = cfg["coefficients"]
    if cfg["gamma"] is None:
        res = condition_margin(a, cfg["D"], scan_points=cfg["scan_points"])
    else:
        res = condition_margin_4d(a, cfg["D"], cfg["gamma"],
                                  scan_points=cfg["scan_points"])
    row = {
        "D": res.D,
        "gamma": cfg["gamma"],
        "alpha_star": res.alpha_star,
        "certified_lower": res.certified_lower,
        "grid_step": res.grid_step,
        "vacuous": res.vacuous,
        "witness_t": list(res.witness_t) if res.witness_t is not None else None,
        "note": res.note,
        "n": a.n,
        "d": a.d,
        "config_hash": cfgmod.canonical_hash(raw),
        "policy_id": policy.policy_id,
    }
    columns = ["D", "gamma", "alpha_star", "certified_lower", "grid_step",
               "vacuous", "witness_t", "note", "n", "d", "config_hash", "policy_id"]
    _emit(_render(columns, [row], args.format), args.out)
    return EXIT_OK


def _bounds_rows(cfg, policy, threads: int) -> list[dict]:
    law, a = cfg["law"], cfg["coefficients"]
    rows = []
    if law is None:
        triples = [(evaluate_request(r, policy), None, None, None) for r in cfg["requests"]]
    elif cfg["empirical"] is None:
        g = gram(a)
        sym = symmetrize(law)
        m1 = m_of_tau(sym, 1.0)
        triples = []
        for r in cfg["requests"]:
            filled = dict(r)
            filled.setdefault("d", a.d)
            if filled["bound"] in ("thm1", "cor1", "thm2", "cor3"):
                filled.setdefault("M1", m1)
            if filled["bound"] in ("thm1", "cor1", "cor2", "thm2", "cor3", "cor4", "fs"):
                filled.setdefault("detN", g.determinant)
            triples.append((evaluate_request(filled, policy, law=law), None, None, None))
    else:
        emp = cfg["empirical"]
        comparison = compare(law, a, cfg["requests"], policy,
                             estimator=emp["method"], samples=emp["samples"],
                             seed=emp["seed"], threads=threads)
        triples = [(row.report, row.radius, row.empirical, row.holds)
                   for row in comparison]
    for report, radius, est, holds in triples:
        inputs = report.inputs
        rows.append({
            "bound": report.bound_name,
            "rhs_raw": report.rhs_raw,
            "rhs_clipped": report.rhs_clipped,
            "vacuous": report.vacuous,
            "prefactor": report.components.get("prefactor"),
            "exponential": report.components.get("exponential"),
            "M": inputs.get("M1", inputs.get("M_tau")),
            "detN": inputs.get("detN"),
            "d": inputs.get("d"),
            "alpha": inputs.get("alpha"),
            "gamma": inputs.get("gamma"),
            "D": inputs.get("D"),
            "tau": inputs.get("tau"),
            "p": inputs.get("p"),
            "lambda": inputs.get("lambda"),
            "radius": radius,
            "empirical_q": est.value if est is not None else None,
            "empirical_stderr": est.stderr if est is not None else None,
            "empirical_method": est.method if est is not None else None,
            "holds": holds,
        })
    return rows


def cmd_bounds(args, threads: int) -> int:
    raw = _effective_config(args)
    cfg = cfgmod.validate_bounds(raw)
    policy = load_policy(args.policy)
    chash = cfgmod.canonical_hash(raw)
    rows = _bounds_rows(cfg, policy, threads)
    for row in rows:
        row["config_hash"] = chash
        row["policy_id"] = policy.policy_id
    columns = ["bound", "rhs_raw", "rhs_clipped", "vacuous", "prefactor",
               "exponential", "M", "detN", "d", "alpha", "gamma", "D", "tau",
               "p", "lambda", "radius", "empirical_q", "empirical_stderr",
               "empirical_method", "holds", "config_hash", "policy_id"]
    _emit(_render(columns, rows, args.format), args.out)
    return EXIT_OK


def cmd_rates(args, threads: int) -> int:
    raw = _effective_config(args)
    cfg = cfgmod.validate_rates(raw)
    policy = load_policy(args.policy)
    chash = cfgmod.canonical_hash(raw)
    law = cfg["law"]
    lam = cfg["lambda"]
    make = ones if cfg["family"] == "ones" else arith
    rows = []
    qs = []
    for n in cfg["n_grid"]:
        est = exact_q(law, make(n), lam)
        qs.append(est.value)
        rows.append({
            "record": "point", "n": n, "lambda": lam, "q": est.value,
            "method": est.method, "config_hash": chash,
            "policy_id": policy.policy_id,
        })
    if any(q <= 0.0 for q in qs):
        raise DomainError("zero concentration value in the grid; slope undefined")
    slope, se = fit_loglog_slope(cfg["n_grid"], qs)
    half = float(student_t.ppf(0.975, len(qs) - 2)) * se if se > 0 else 0.0
    rows.append({
        "record": "fit", "lambda": lam, "slope": slope, "stderr": se,
        "ci_lo": slope - half, "ci_hi": slope + half,
        "config_hash": chash, "policy_id": policy.policy_id,
    })
    columns = ["record", "n", "lambda", "q", "method", "slope", "stderr",
               "ci_lo", "ci_hi", "config_hash", "policy_id"]
    _emit(_render(columns, rows, args.format), args.out)
    return EXIT_OK


def cmd_verify(args, threads: int) -> int:
    results = run_suite(args.suite)
    width = max((len(f"{r.suite}/{r.name}") for r in results), default=10)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{(r.suite + '/' + r.name).ljust(width)}  {status}  {r.detail}")
    failed = sum(1 for r in results if not r.passed)
    print(f"{len(results) - failed} passed, {failed} failed")
    if args.out is not None:
        columns = ["suite", "name", "passed", "detail"]
        rows = [{"suite": r.suite, "name": r.name, "passed": r.passed,
                 "detail": r.detail} for r in results]
        _emit(_render(columns, rows, args.format), args.out)
    return EXIT_OK if failed == 0 else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _add_common(sp, with_config=True):
    if with_config:
        sp.add_argument("--config", required=True, help="experiment config JSON")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
        sp.add_argument("--policy", default=None, help="constants policy JSON")
    sp.add_argument("--out", default=None, help="output path (stdout if omitted)")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--threads", type=int, default=None,
                    help="worker threads (or env ACL_THREADS; results do not depend on it)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conclab",
        description="numerical laboratory for concentration functions of weighted sums",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("estimate-q", cmd_estimate_q), ("lcd", cmd_lcd),
                     ("margin", cmd_margin), ("bounds", cmd_bounds),
                     ("rates", cmd_rates)):
        sp = sub.add_parser(name)
        _add_common(sp)
        sp.set_defaults(fn=fn)
    sp = sub.add_parser("verify", help="run a named verification suite")
    sp.add_argument("suite", help="suite name or 'all'")
    _add_common(sp, with_config=False)
    sp.set_defaults(fn=cmd_verify)
    return parser


def resolve_threads(value: int | None) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get("ACL_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"ACL_THREADS: expected an integer, got {env!r}") from exc
    return 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        threads = resolve_threads(args.threads)
        return args.fn(args, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (DomainError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
