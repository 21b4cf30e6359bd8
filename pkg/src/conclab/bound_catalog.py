"""Right-hand sides of the concentration bounds, under an explicit
constants policy.

All the rate bounds share one skeleton

    C_d(d) * (sqrt(d) / (D * gamma * sqrt(M)))^d / sqrt(det N)
        + exp(-c_exp * alpha^2 * M)

specialized by the choice of M (M(1), M(tau), a tail probability p or its
limit P(Xt != 0)), of D (sqrt(d) or a free radius), and of gamma (1 when
the relative branch is absent).  Evaluating every variant through the one
skeleton makes the reduction chains (free radius at D = sqrt(d), tau = 1)
bit-exact by construction.

Absolute constants are not pinned by the theory; every report records the
policy that supplied them, and a "vacuous" flag replaces errors whenever a
right-hand side carries no information (>= 1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Mapping

import numpy as np

from .coefficients import CoefficientMatrix, gram
from .concentration import ConcentrationEstimate, exact_q, mc_q
from .errors import CapacityError, DomainError
from .scalar_laws import SymmetrizedLaw, m_of_tau, symmetrize


@dataclass(frozen=True)
class ConstantsPolicy:
    """Every absolute constant used when evaluating or asserting a bound.

    ``c_cos`` is the sharp quadratic cosine minorant constant 2/pi^2;
    ``c_exp`` folds it with the shell-weight lower bound beta >= M(1)/4.
    The per-dimension envelope C_d(d) = c0^d and the two-sided
    characteristic-function-integral constants are calibrated once against
    the exact oracle suite and frozen in the default policy file.
    """

    policy_id: str
    provenance: str
    c_cos: float
    c_exp: float
    esseen_up: Mapping[int, float]
    esseen_low: Mapping[int, float]
    c0: float
    c_kr: float
    c_siegel: float

    def __post_init__(self):
        values = [self.c_cos, self.c_exp, self.c0, self.c_kr, self.c_siegel]
        values += list(self.esseen_up.values()) + list(self.esseen_low.values())
        if any(not (v > 0.0 and math.isfinite(v)) for v in values):
            raise DomainError("all policy constants must be finite and positive")

    def C_d(self, d: int) -> float:
        return self.c0**d

    def _per_dim(self, table: Mapping[int, float], d: int) -> float:
        if d in table:
            return table[d]
        # geometric extrapolation from the two largest calibrated dims
        dims = sorted(table)
        if len(dims) == 1:
            return table[dims[0]] ** (d / dims[0])
        d1, d2 = dims[-2], dims[-1]
        growth = (table[d2] / table[d1]) ** (1.0 / (d2 - d1))
        return table[d2] * growth ** (d - d2)

    def C_esseen_up(self, d: int) -> float:
        return self._per_dim(self.esseen_up, d)

    def C_esseen_low(self, d: int) -> float:
        return self._per_dim(self.esseen_low, d)

    def to_dict(self) -> dict:
        return {
            "policy_id": self.policy_id,
            "provenance": self.provenance,
            "c_cos": self.c_cos,
            "c_exp": self.c_exp,
            "esseen_up": {str(k): v for k, v in sorted(self.esseen_up.items())},
            "esseen_low": {str(k): v for k, v in sorted(self.esseen_low.items())},
            "c0": self.c0,
            "c_kr": self.c_kr,
            "c_siegel": self.c_siegel,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConstantsPolicy":
        return cls(
            policy_id=data["policy_id"],
            provenance=data["provenance"],
            c_cos=data["c_cos"],
            c_exp=data["c_exp"],
            esseen_up={int(k): float(v) for k, v in data["esseen_up"].items()},
            esseen_low={int(k): float(v) for k, v in data["esseen_low"].items()},
            c0=data["c0"],
            c_kr=data["c_kr"],
            c_siegel=data["c_siegel"],
        )


@lru_cache(maxsize=1)
def default_policy() -> ConstantsPolicy:
    text = resources.files("conclab").joinpath("data/default_policy.json").read_text()
    return ConstantsPolicy.from_dict(json.loads(text))


def load_policy(path: str | None) -> ConstantsPolicy:
    if path is None:
        return default_policy()
    with open(path, "r", encoding="utf-8") as fh:
        return ConstantsPolicy.from_dict(json.load(fh))


@dataclass(frozen=True)
class BoundReport:
    """One evaluated right-hand side with its term-by-term breakdown."""

    bound_name: str
    inputs: dict
    components: dict
    rhs_raw: float
    rhs_clipped: float
    vacuous: bool
    policy_id: str
    extras: dict = field(default_factory=dict)


def _report(name: str, inputs: dict, components: dict,
            policy: ConstantsPolicy, extras: dict | None = None) -> BoundReport:
    raw = 0.0
    for v in components.values():
        raw += v
    clipped = min(1.0, raw)
    return BoundReport(name, dict(inputs), dict(components), raw, clipped,
                       raw >= 1.0, policy.policy_id, extras or {})


# ---------------------------------------------------------------------------
# Rate-bound skeleton
# ---------------------------------------------------------------------------


def _rate_components(M: float, detN: float, d: int, alpha: float, D: float,
                     gamma: float, policy: ConstantsPolicy) -> dict:
    if not 0.0 < M <= 1.0 + 1e-12:
        raise DomainError(f"degenerate law: truncated second moment {M!r} outside (0, 1]")
    if not detN > 0.0:
        raise DomainError(f"degenerate coefficients: det N = {detN!r} must be positive")
    if alpha < 0.0:
        raise DomainError("alpha must be nonnegative")
    if not D > 0.0:
        raise DomainError("D must be positive")
    if not 0.0 < gamma <= 1.0:
        raise DomainError("gamma must lie in (0, 1]")
    prefactor = (
        policy.C_d(d)
        * (math.sqrt(d) / (D * gamma * math.sqrt(M))) ** d
        / math.sqrt(detN)
    )
    exponential = math.exp(-policy.c_exp * alpha * alpha * M)
    return {"prefactor": prefactor, "exponential": exponential}


def thm1_bound(M1: float, detN: float, d: int, alpha: float,
               policy: ConstantsPolicy) -> BoundReport:
    """Fixed-radius bound on Q(F_a, sqrt(d)) from M(1), det N and the margin alpha."""
    comps = _rate_components(M1, detN, d, alpha, math.sqrt(d), 1.0, policy)
    return _report("thm1", {"M1": M1, "detN": detN, "d": d, "alpha": alpha},
                   comps, policy)


def cor1_bound(M1: float, detN: float, d: int, alpha: float, D: float,
               policy: ConstantsPolicy) -> BoundReport:
    """Free-radius form bounding Q(F_a, d/D); reduces to thm1 at D = sqrt(d)."""
    comps = _rate_components(M1, detN, d, alpha, D, 1.0, policy)
    return _report("cor1", {"M1": M1, "detN": detN, "d": d, "alpha": alpha, "D": D},
                   comps, policy)


def cor2_bound(law, detN: float, d: int, alpha: float, D: float, tau: float,
               policy: ConstantsPolicy) -> BoundReport:
    """Rescaled-weights form: M(tau) in place of M(1), bounding Q(F_a, d tau / D).

    The report also carries the tau -> 0 display, where M(tau) degenerates
    to P(Xt != 0), in ``extras['tau_zero']``.
    """
    if not tau > 0.0:
        raise DomainError("tau must be positive")
    sym = law if isinstance(law, SymmetrizedLaw) else symmetrize(law)
    m_tau = m_of_tau(sym, tau)
    comps = _rate_components(m_tau, detN, d, alpha, D, 1.0, policy)
    extras: dict = {}
    p_nz = sym.prob_nonzero
    if p_nz > 0.0:
        zero_comps = _rate_components(p_nz, detN, d, alpha, D, 1.0, policy)
        zero_raw = zero_comps["prefactor"] + zero_comps["exponential"]
        extras["tau_zero"] = {
            "prob_nonzero": p_nz,
            "rhs_raw": zero_raw,
            "rhs_clipped": min(1.0, zero_raw),
        }
    else:
        extras["tau_zero"] = {"prob_nonzero": 0.0, "rhs_raw": math.inf,
                              "rhs_clipped": 1.0}
    return _report(
        "cor2",
        {"M_tau": m_tau, "detN": detN, "d": d, "alpha": alpha, "D": D, "tau": tau},
        comps, policy, extras,
    )


def thm2_bound(M1: float, detN: float, d: int, alpha: float, gamma: float,
               policy: ConstantsPolicy) -> BoundReport:
    """Fixed-radius bound with the relative margin branch gamma."""
    if not 0.0 < gamma < 1.0:
        raise DomainError("gamma must lie in (0, 1)")
    comps = _rate_components(M1, detN, d, alpha, math.sqrt(d), gamma, policy)
    return _report("thm2",
                   {"M1": M1, "detN": detN, "d": d, "alpha": alpha, "gamma": gamma},
                   comps, policy)


def cor3_bound(M1: float, detN: float, d: int, alpha: float, gamma: float,
               D: float, policy: ConstantsPolicy) -> BoundReport:
    """Free-radius form of thm2; reduces to thm2 at D = sqrt(d)."""
    if not 0.0 < gamma < 1.0:
        raise DomainError("gamma must lie in (0, 1)")
    comps = _rate_components(M1, detN, d, alpha, D, gamma, policy)
    return _report(
        "cor3",
        {"M1": M1, "detN": detN, "d": d, "alpha": alpha, "gamma": gamma, "D": D},
        comps, policy)


def cor4_bound(law, detN: float, d: int, alpha: float, gamma: float, D: float,
               tau: float, policy: ConstantsPolicy) -> BoundReport:
    """Rescaled-weights form of cor3; reduces to cor3 at tau = 1."""
    if not 0.0 < gamma < 1.0:
        raise DomainError("gamma must lie in (0, 1)")
    if not tau > 0.0:
        raise DomainError("tau must be positive")
    sym = law if isinstance(law, SymmetrizedLaw) else symmetrize(law)
    m_tau = m_of_tau(sym, tau)
    comps = _rate_components(m_tau, detN, d, alpha, D, gamma, policy)
    return _report(
        "cor4",
        {"M_tau": m_tau, "detN": detN, "d": d, "alpha": alpha, "gamma": gamma,
         "D": D, "tau": tau},
        comps, policy)


# ---------------------------------------------------------------------------
# Classical comparison bounds
# ---------------------------------------------------------------------------


def kr_bound(lambdas, q_tildes, lam: float, policy: ConstantsPolicy) -> BoundReport:
    """Kolmogorov-Rogozin style bound C * lam / sqrt(sum lam_k^2 (1 - Q~_k))."""
    lams = np.asarray(lambdas, dtype=float)
    qts = np.asarray(q_tildes, dtype=float)
    if lams.shape != qts.shape or lams.ndim != 1 or len(lams) == 0:
        raise DomainError("lambdas and q_tildes must be matching nonempty vectors")
    if np.any(lams <= 0.0) or np.any(lams > lam + 1e-12):
        raise DomainError("each lambda_k must satisfy 0 < lambda_k <= lambda")
    if np.any(qts < -1e-12) or np.any(qts > 1.0 + 1e-12):
        raise DomainError("q_tildes must lie in [0, 1]")
    denom = float(np.sum(lams**2 * (1.0 - qts)))
    inputs = {"lambda": lam, "n": len(lams), "denominator": denom}
    if denom <= 0.0:
        return _report("kr", inputs, {"kr_term": math.inf}, policy)
    return _report("kr", inputs, {"kr_term": policy.c_kr * lam / math.sqrt(denom)},
                   policy)


def siegel_bound(lambdas, m_values, lam: float, policy: ConstantsPolicy) -> BoundReport:
    """Truncated-moment refinement C * lam / sqrt(sum lam_k^2 M_k(lam_k))."""
    lams = np.asarray(lambdas, dtype=float)
    ms = np.asarray(m_values, dtype=float)
    if lams.shape != ms.shape or lams.ndim != 1 or len(lams) == 0:
        raise DomainError("lambdas and m_values must be matching nonempty vectors")
    if np.any(lams <= 0.0) or np.any(lams > lam + 1e-12):
        raise DomainError("each lambda_k must satisfy 0 < lambda_k <= lambda")
    if np.any(ms < -1e-12) or np.any(ms > 1.0 + 1e-12):
        raise DomainError("m_values must lie in [0, 1]")
    denom = float(np.sum(lams**2 * ms))
    inputs = {"lambda": lam, "n": len(lams), "denominator": denom}
    if denom <= 0.0:
        return _report("siegel", inputs, {"siegel_term": math.inf}, policy)
    return _report("siegel", inputs,
                   {"siegel_term": policy.c_siegel * lam / math.sqrt(denom)}, policy)


def fs_bound(p: float, detN: float, d: int, alpha: float, D: float,
             policy: ConstantsPolicy) -> BoundReport:
    """Tail-probability form with prefactor (sqrt(d)/(sqrt(p) D))^d / sqrt(det N).

    p = 0 yields a vacuous report rather than an error: exhibiting where
    this form dies while the truncated-moment forms stay informative is
    the whole point of the comparison.
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError("p must lie in [0, 1]")
    if not detN > 0.0:
        raise DomainError(f"degenerate coefficients: det N = {detN!r} must be positive")
    if alpha < 0.0 or not D > 0.0:
        raise DomainError("alpha must be nonnegative and D positive")
    inputs = {"p": p, "detN": detN, "d": d, "alpha": alpha, "D": D}
    if p == 0.0:
        return _report("fs", inputs,
                       {"prefactor": math.inf, "exponential": 1.0}, policy)
    prefactor = policy.C_d(d) * (math.sqrt(d) / (math.sqrt(p) * D)) ** d / math.sqrt(detN)
    exponential = math.exp(-policy.c_exp * p * alpha * alpha)
    return _report("fs", inputs, {"prefactor": prefactor, "exponential": exponential},
                   policy)


def rv_bound(p: float, d: int, alpha: float, gamma: float, D: float,
             policy: ConstantsPolicy) -> BoundReport:
    """Relative-branch tail form (sqrt(d)/(gamma D sqrt(p)))^d + exp(-2 p alpha^2).

    The exponential constant 2 is part of the stated display, not policy.
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError("p must lie in [0, 1]")
    if not 0.0 < gamma < 1.0:
        raise DomainError("gamma must lie in (0, 1)")
    if alpha < 0.0 or not D > 0.0:
        raise DomainError("alpha must be nonnegative and D positive")
    inputs = {"p": p, "d": d, "alpha": alpha, "gamma": gamma, "D": D}
    if p == 0.0:
        return _report("rv", inputs,
                       {"prefactor": math.inf, "exponential": 1.0}, policy)
    prefactor = policy.C_d(d) * (math.sqrt(d) / (gamma * D * math.sqrt(p))) ** d
    exponential = math.exp(-2.0 * p * alpha * alpha)
    return _report("rv", inputs, {"prefactor": prefactor, "exponential": exponential},
                   policy)


# ---------------------------------------------------------------------------
# Empirical comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    report: BoundReport
    radius: float | None
    empirical: ConcentrationEstimate | None
    holds: bool | None


def _bound_radius(name: str, inputs: dict) -> float | None:
    d = inputs.get("d")
    if name in ("thm1", "thm2"):
        return math.sqrt(d)
    if name in ("cor1", "cor3", "fs", "rv"):
        return d / inputs["D"]
    if name in ("cor2", "cor4"):
        return d * inputs["tau"] / inputs["D"]
    if name in ("kr", "siegel"):
        return inputs["lambda"]
    return None


def evaluate_request(request: dict, policy: ConstantsPolicy, *, law=None) -> BoundReport:
    """Dispatch one bound request dict {'bound': name, ...params} to its evaluator."""
    req = dict(request)
    name = req.pop("bound")
    if name == "thm1":
        return thm1_bound(req["M1"], req["detN"], req["d"], req["alpha"], policy)
    if name == "cor1":
        return cor1_bound(req["M1"], req["detN"], req["d"], req["alpha"], req["D"], policy)
    if name == "cor2":
        if law is None:
            raise DomainError("cor2 needs the instance law to evaluate M(tau)")
        return cor2_bound(law, req["detN"], req["d"], req["alpha"], req["D"],
                          req["tau"], policy)
    if name == "thm2":
        return thm2_bound(req["M1"], req["detN"], req["d"], req["alpha"],
                          req["gamma"], policy)
    if name == "cor3":
        return cor3_bound(req["M1"], req["detN"], req["d"], req["alpha"],
                          req["gamma"], req["D"], policy)
    if name == "cor4":
        if law is None:
            raise DomainError("cor4 needs the instance law to evaluate M(tau)")
        return cor4_bound(law, req["detN"], req["d"], req["alpha"], req["gamma"],
                          req["D"], req["tau"], policy)
    if name == "kr":
        return kr_bound(req["lambdas"], req["q_tildes"], req["lambda"], policy)
    if name == "siegel":
        return siegel_bound(req["lambdas"], req["m_values"], req["lambda"], policy)
    if name == "fs":
        return fs_bound(req["p"], req["detN"], req["d"], req["alpha"], req["D"], policy)
    if name == "rv":
        return rv_bound(req["p"], req["d"], req["alpha"], req["gamma"], req["D"], policy)
    raise DomainError(f"unknown bound name {name!r}")


def compare(law, a: CoefficientMatrix, requests, policy: ConstantsPolicy, *,
            estimator: str = "auto", samples: int = 100_000,
            seed: int | None = None, threads: int = 1) -> list[ComparisonRow]:
    """Evaluate requested bounds for one instance next to an empirical Q.

    Requests may leave ``M1``, ``detN`` and ``d`` out; they are filled from
    the instance (M(1) of the symmetrization, det of the Gram matrix).
    Each row's empirical estimate uses the radius the bound speaks about
    and is computed exactly when capacity allows, by Monte Carlo otherwise.
    """
    g = gram(a)
    sym = symmetrize(law)
    m1 = m_of_tau(sym, 1.0)
    from .scalar_laws import beta as beta_fn

    b = beta_fn(sym)
    filled_requests = []
    for req in requests:
        r = dict(req)
        r.setdefault("d", a.d)
        if r["bound"] in ("thm1", "cor1", "thm2", "cor3"):
            r.setdefault("M1", m1)
        if r["bound"] in ("thm1", "cor1", "cor2", "thm2", "cor3", "cor4", "fs"):
            r.setdefault("detN", g.determinant)
        filled_requests.append(r)

    cache: dict[float, ConcentrationEstimate | None] = {}

    def empirical(radius: float) -> ConcentrationEstimate | None:
        if radius in cache:
            return cache[radius]
        est: ConcentrationEstimate | None
        if estimator in ("exact", "auto"):
            try:
                est = exact_q(law, a, radius)
            except (CapacityError, DomainError):
                est = None
                if estimator == "exact":
                    raise
        else:
            est = None
        if est is None:
            if seed is None:
                raise DomainError("monte carlo comparison needs a seed")
            est = mc_q(law, a, radius, samples, seed, threads=threads)
        cache[radius] = est
        return est

    rows = []
    for req in filled_requests:
        report = evaluate_request(req, policy, law=law)
        extras = dict(report.extras)
        extras.update({"m1": m1, "beta": b, "beta_ge_quarter_m1": b >= m1 / 4.0 - 1e-12})
        report = BoundReport(report.bound_name, report.inputs, report.components,
                             report.rhs_raw, report.rhs_clipped, report.vacuous,
                             report.policy_id, extras)
        radius = _bound_radius(report.bound_name, report.inputs)
        est = empirical(radius) if radius is not None else None
        holds = None
        if est is not None:
            holds = est.value <= report.rhs_clipped + 3.0 * est.stderr + 1e-12
        rows.append(ComparisonRow(report, radius, est, holds))
    return rows
