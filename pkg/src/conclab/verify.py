"""Named verification suites: identities, inequalities and oracle
agreements checked at desk scale.

Each suite returns a list of CheckResult rows; the CLI renders them as a
table and fails the run when any check fails.  The suites are also the
bodies of the package's acceptance tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import calibrate
from .arithmetic_structure import condition_margin
from .bound_catalog import (
    ConstantsPolicy,
    cor1_bound,
    cor2_bound,
    cor3_bound,
    default_policy,
    fs_bound,
    thm1_bound,
    thm2_bound,
)
from .charfn_integrals import cf_H, cf_weighted_sum, dist_to_two_pi_lattice
from .coefficients import CoefficientMatrix, check_identity_4s, gram, ones, random_sphere
from .concentration import exact_q, mc_q
from .errors import ConfigError
from .scalar_laws import (
    FiniteLaw,
    GaussianLaw,
    UniformLaw,
    beta,
    lazy_rademacher,
    m_of_tau,
    point_mass,
    rademacher,
    symmetrize,
)


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str


def _result(suite: str, name: str, passed: bool, detail: str) -> CheckResult:
    return CheckResult(suite, name, bool(passed), detail)


# ---------------------------------------------------------------------------
# identities
# ---------------------------------------------------------------------------


def _random_instance(rng: np.random.Generator) -> tuple[CoefficientMatrix, np.ndarray]:
    n = int(rng.integers(1, 9))
    d = int(rng.integers(1, 4))
    a = CoefficientMatrix(rng.normal(size=(n, d)) * rng.uniform(0.2, 3.0))
    t = rng.normal(size=d)
    proj_max = float(np.max(np.abs(a.array @ t)))
    if proj_max > 0:
        t *= 0.5 * rng.uniform(0.0, 1.0) / proj_max
    return a, t


def check_identity_region(trials: int = 1000, seed: int = 2024) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        a, t = _random_instance(rng)
        lhs, rhs = check_identity_4s(a, t)
        worst = max(worst, abs(lhs - rhs))
    return _result("identities", "squared-lattice-distance-identity", worst <= 1e-12,
                   f"max |lhs - rhs| = {worst:.3e} over {trials} instances")


def check_smoothing_scaling(trials: int = 100, seed: int = 7) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        a, _ = _random_instance(rng)
        t = rng.normal(size=a.d)
        z, y = rng.uniform(0.1, 4.0, size=2)
        g = rng.uniform(0.1, 3.0)
        lhs = cf_H(z, g, a, t)
        worst = max(worst, abs(lhs - cf_H(y, g, a, z * t / y)))
        worst = max(worst, abs(lhs - cf_H(1.0, g, a, z * t)))
        worst = max(worst, abs(lhs - cf_H(z, 1.0, a, t) ** g))
    return _result("identities", "smoothing-law-scaling", worst <= 1e-12,
                   f"max deviation = {worst:.3e} over {trials} draws")


def check_rescaling_substitution() -> CheckResult:
    """Q with coefficients a / tau at radius r equals Q with a at radius
    tau * r, exactly, for dyadic tau on exact fixtures."""
    law = rademacher()
    fixtures = [
        (ones(6), 0.5),
        (CoefficientMatrix(np.arange(1.0, 6.0)[:, None]), 1.0),
        (CoefficientMatrix(np.tile(np.eye(2), (3, 1))), math.sqrt(2)),
    ]
    ok = True
    details = []
    for a, r in fixtures:
        for tau in (0.5, 2.0, 4.0):
            q1 = exact_q(law, a.scaled(1.0 / tau), r).value
            q2 = exact_q(law, a, tau * r).value
            if q1 != q2:
                ok = False
                details.append(f"tau={tau}: {q1!r} != {q2!r}")
    return _result("identities", "coefficient-rescaling-substitution", ok,
                   "exact equality on all dyadic rescalings" if ok else "; ".join(details))


def check_reduction_chains() -> CheckResult:
    pol = default_policy()
    law = rademacher()
    cases = [(0.5, 3.0, 2, 5.0), (0.37, 12.0, 1, 2.0), (0.9, 0.8, 3, 0.0)]
    ok = True
    for m1, det, d, alpha in cases:
        t1 = thm1_bound(m1, det, d, alpha, pol)
        c1 = cor1_bound(m1, det, d, alpha, math.sqrt(d), pol)
        ok &= t1.components == c1.components and t1.rhs_raw == c1.rhs_raw
        t2 = thm2_bound(m1, det, d, alpha, 0.6, pol)
        c3 = cor3_bound(m1, det, d, alpha, 0.6, math.sqrt(d), pol)
        ok &= t2.components == c3.components and t2.rhs_raw == c3.rhs_raw
        c2 = cor2_bound(law, det, d, alpha, 1.7, 1.0, pol)
        c1b = cor1_bound(m_of_tau(symmetrize(law), 1.0), det, d, alpha, 1.7, pol)
        ok &= c2.components == c1b.components
    return _result("identities", "reduction-chains-bit-exact", ok,
                   "cor1(D=sqrt d)=thm1, cor3(D=sqrt d)=thm2, cor2(tau=1)=cor1")


def suite_identities() -> list[CheckResult]:
    return [
        check_identity_region(),
        check_smoothing_scaling(),
        check_rescaling_substitution(),
        check_reduction_chains(),
    ]


# ---------------------------------------------------------------------------
# eq9: shell weight versus truncated second moment
# ---------------------------------------------------------------------------


def law_zoo():
    return [
        ("rademacher", rademacher()),
        ("lazy-0.3", lazy_rademacher(0.3)),
        ("lazy-0.7", lazy_rademacher(0.7)),
        ("point-2", point_mass(2.0)),
        ("skew-finite", FiniteLaw((0.0, 1.0, 3.0), (0.5, 0.25, 0.25))),
        ("dyadic-finite", FiniteLaw((-0.75, 0.25, 1.5), (0.25, 0.5, 0.25))),
        ("two-atom", FiniteLaw((-0.3, 1.1), (0.7, 0.3))),
        ("gaussian-std", GaussianLaw(0.0, 1.0)),
        ("gaussian-shifted", GaussianLaw(2.0, 0.5)),
        ("uniform-sym", UniformLaw(-1.0, 1.0)),
        ("uniform-wide", UniformLaw(0.0, 3.0)),
        ("uniform-narrow", UniformLaw(-0.25, 0.25)),
    ]


def suite_eq9() -> list[CheckResult]:
    rows = []
    for name, law in law_zoo():
        sym = symmetrize(law)
        b = beta(sym)
        m1 = m_of_tau(sym, 1.0)
        tol = 0.0 if law.is_finite else 1e-8
        ok = b >= m1 / 4.0 - tol
        mass_ok = abs(sym.q + math.fsum(s.prob for s in sym.shells) - 1.0) <= 1e-10
        rows.append(_result("eq9", f"shell-weight-{name}", ok and mass_ok,
                            f"beta={b:.12g} M(1)/4={m1 / 4.0:.12g}"))
    return rows


# ---------------------------------------------------------------------------
# cosine minorants
# ---------------------------------------------------------------------------


def suite_cosine(points: int = 100_000) -> list[CheckResult]:
    c = default_policy().c_cos
    x = np.linspace(-math.pi, math.pi, points)
    gap = 1.0 - np.cos(x)
    local = float(np.min(gap - c * x * x))
    xg = np.linspace(-20.0, 20.0, points)
    gapg = 1.0 - np.cos(xg)
    dist = dist_to_two_pi_lattice(xg)
    glob = float(np.min(gapg - c * dist * dist))
    return [
        _result("cosine", "quadratic-minorant-on-pi-interval", local >= -1e-12,
                f"min slack {local:.3e} at c = {c:.12g}"),
        _result("cosine", "lattice-minorant-global", glob >= -1e-12,
                f"min slack {glob:.3e} on |x| <= 20"),
    ]


# ---------------------------------------------------------------------------
# oracle agreement: Monte Carlo versus exact
# ---------------------------------------------------------------------------


def oracle_fixtures():
    skew = FiniteLaw((0.0, 1.0, 3.0), (0.5, 0.25, 0.25))
    fixtures = []
    for n in (4, 6, 8, 12, 16, 20):
        fixtures.append((f"rademacher-ones{n}-l0.5", rademacher(), ones(n), 0.5))
    for n in (4, 8, 12):
        fixtures.append((f"rademacher-ones{n}-l1", rademacher(), ones(n), 1.0))
    for n in (5, 9):
        a = CoefficientMatrix(np.arange(1.0, n + 1.0)[:, None])
        fixtures.append((f"rademacher-arith{n}-l0.5", rademacher(), a, 0.5))
    for n in (4, 10):
        fixtures.append((f"lazy0.5-ones{n}-l0.5", lazy_rademacher(0.5), ones(n), 0.5))
    for n in (3, 6):
        fixtures.append((f"skew-ones{n}-l1", skew, ones(n), 1.0))
    fixtures.append(("rademacher-mixed8-l0.75", rademacher(),
                     CoefficientMatrix([[1.0], [1.0], [0.5], [0.5], [2.0], [0.25],
                                        [1.0], [0.75]]), 0.75))
    fixtures.append(("lazy0.25-ones7-l1.5", lazy_rademacher(0.25), ones(7), 1.5))
    fixtures.append(("rademacher-ones15-l2", rademacher(), ones(15), 2.0))
    fixtures.append(("skew-mixed5-l1", skew,
                     CoefficientMatrix([[1.0], [0.5], [0.5], [0.25], [2.0]]), 1.0))
    fixtures.append(("point-mass-ones4-l0.5", point_mass(1.0), ones(4), 0.5))
    return fixtures


def suite_oracle(samples: int = 100_000, threads: int = 1) -> list[CheckResult]:
    rows = []
    for i, (name, law, a, lam) in enumerate(oracle_fixtures()):
        exact = exact_q(law, a, lam)
        mc = mc_q(law, a, lam, samples, seed=9000 + i, threads=threads)
        gap = abs(mc.value - exact.value)
        ok = gap <= 3.0 * mc.stderr + 1e-12
        rows.append(_result("oracle", name, ok,
                            f"exact={exact.value:.6f} mc={mc.value:.6f} 3se={3 * mc.stderr:.6f}"))
    return rows


# ---------------------------------------------------------------------------
# sandwich: two-sided characteristic-function estimate
# ---------------------------------------------------------------------------


def suite_sandwich(points: int = 2**15, threads: int = 1,
                   policy: ConstantsPolicy | None = None) -> list[CheckResult]:
    pol = policy or default_policy()
    rows = []
    for i, inst in enumerate(calibrate.sandwich_suite()):
        i_abs, i_pos = calibrate.sandwich_integrals(inst, points=points,
                                                    seed=5000 + i, threads=threads)
        lower = pol.C_esseen_low(inst.d) * (i_pos.value - 3.0 * i_pos.stderr)
        upper = pol.C_esseen_up(inst.d) * (i_abs.value + 3.0 * i_abs.stderr)
        ok = lower <= inst.q_lo + 1e-12 and inst.q_hi <= upper + 1e-12
        rows.append(_result("sandwich", inst.label, ok,
                            f"{lower:.6f} <= Q in [{inst.q_lo:.6f}, {inst.q_hi:.6f}] <= {upper:.6f}"))
    return rows


# ---------------------------------------------------------------------------
# classical decay rates
# ---------------------------------------------------------------------------


def fit_loglog_slope(ns, qs) -> tuple[float, float]:
    """(slope, standard error) of log q against log n."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(qs, dtype=float))
    k = len(x)
    coeffs, residuals, *_ = np.polyfit(x, y, 1, full=True)
    slope = float(coeffs[0])
    if k <= 2:
        return slope, 0.0
    ss = float(residuals[0]) if len(residuals) else 0.0
    sxx = float(np.sum((x - x.mean()) ** 2))
    se = math.sqrt(ss / (k - 2) / sxx) if sxx > 0 else 0.0
    return slope, se


def erdos_rate(lam: float = 0.5, powers=range(4, 15)) -> tuple[float, list]:
    law = rademacher()
    ns, qs = [], []
    for p in powers:
        n = 2**p
        ns.append(n)
        qs.append(exact_q(law, ones(n), lam).value)
    slope, _ = fit_loglog_slope(ns, qs)
    return slope, list(zip(ns, qs))


def distinct_coefficient_rate(lam: float = 0.5, ns=(16, 32, 64, 128, 256)) -> tuple[float, list]:
    law = rademacher()
    qs = []
    for n in ns:
        a = CoefficientMatrix(np.arange(1.0, n + 1.0)[:, None])
        qs.append(exact_q(law, a, lam).value)
    slope, _ = fit_loglog_slope(ns, qs)
    return slope, list(zip(ns, qs))


def suite_rates() -> list[CheckResult]:
    s1, _ = erdos_rate()
    s2, _ = distinct_coefficient_rate()
    return [
        _result("rates", "equal-coefficients-slope", -0.65 <= s1 <= -0.35,
                f"slope {s1:.4f}, window [-0.65, -0.35]"),
        _result("rates", "distinct-coefficients-slope", -1.75 <= s2 <= -1.25,
                f"slope {s2:.4f}, window [-1.75, -1.25]"),
    ]


# ---------------------------------------------------------------------------
# stress sweep for the fixed-radius bound
# ---------------------------------------------------------------------------


def thm1_sweep(instances: int = 50, n: int = 32, samples: int = 20_000,
               threads: int = 1) -> list[CheckResult]:
    pol = default_policy()
    law = rademacher()
    m1 = 0.5  # M(1) of the symmetrized fair sign law
    rows = []
    radius = math.sqrt(2.0)
    for i in range(instances):
        a = random_sphere(n, 2, seed=i)
        g = gram(a)
        if not g.determinant > 0.0:
            rows.append(_result("thm1-sweep", f"instance-{i:02d}", False,
                                "degenerate Gram matrix"))
            continue
        margin = condition_margin(a, radius, scan_points=2**16)
        alpha = margin.certified_lower if math.isfinite(margin.certified_lower) else 0.0
        report = thm1_bound(m1, g.determinant, 2, alpha, pol)
        emp = mc_q(law, a, radius, samples, seed=100 + i, threads=threads)
        ok = emp.value <= report.rhs_clipped + 3.0 * emp.stderr + 1e-12
        rows.append(_result("thm1-sweep", f"instance-{i:02d}", ok,
                            f"empirical={emp.value:.5f} rhs={report.rhs_clipped:.5f} alpha={alpha:.4f}"))
    return rows


def suite_thm1_sweep() -> list[CheckResult]:
    return thm1_sweep()


# ---------------------------------------------------------------------------
# refinement demonstration: tail probability versus truncated moment
# ---------------------------------------------------------------------------


def alpha_for_margin(policy: ConstantsPolicy, m1: float, target: float) -> float:
    """Smallest alpha pushing the exponential term below ``target``."""
    return math.sqrt(math.log(1.0 / target) / (policy.c_exp * m1))


def suite_refinement() -> list[CheckResult]:
    pol = default_policy()
    law = rademacher()
    n = 64
    a = ones(n)
    # the base law concentrates: every closed unit interval around 0
    # catches both atoms, so the tail parameter p vanishes
    q_base = exact_q(law, ones(1), 1.0).value
    p = 1.0 - q_base
    m1 = m_of_tau(symmetrize(law), 1.0)
    det = gram(a).determinant
    fs = fs_bound(p, det, 2, 10.0, math.sqrt(2.0), pol)
    alpha = alpha_for_margin(pol, m1, 0.25)
    # same coefficient mass arranged in d = 2 so det N = (n/2)^2
    a2 = CoefficientMatrix(np.tile(np.eye(2), (n // 2, 1)))
    det2 = gram(a2).determinant
    t1 = thm1_bound(m1, det2, 2, alpha, pol)
    ok = fs.vacuous and fs.rhs_clipped == 1.0 and t1.rhs_clipped < 1.0
    return [
        _result("refinement", "tail-parameter-vanishes", p == 0.0 and fs.vacuous,
                f"Q(law,1)={q_base} so p={p}; tail-form rhs clipped to {fs.rhs_clipped}"),
        _result("refinement", "truncated-moment-stays-informative", ok,
                f"M(1)={m1} alpha={alpha:.3f} rhs={t1.rhs_clipped:.5f} < 1"),
    ]


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

SUITES = {
    "identities": suite_identities,
    "eq9": suite_eq9,
    "cosine": suite_cosine,
    "oracle": suite_oracle,
    "sandwich": suite_sandwich,
    "rates": suite_rates,
    "thm1-sweep": suite_thm1_sweep,
    "refinement": suite_refinement,
}


def run_suite(name: str) -> list[CheckResult]:
    if name == "all":
        rows = []
        for key in SUITES:
            rows.extend(SUITES[key]())
        return rows
    if name not in SUITES:
        raise ConfigError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'")
    return SUITES[name]()
