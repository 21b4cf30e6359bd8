"""One-shot calibration of the default constants policy.

The theory pins none of the absolute constants, so the defaults are fixed
empirically, once, against instances whose concentration function is
known exactly (sliding-window values in dimension 1, certified
lower/upper brackets in dimensions 2 and 3, chi-square closed forms for
spherical Gaussian sums) and then frozen into the packaged policy file.
Safety margins of 15 percent make the frozen constants robust to the
Monte Carlo integration noise of later verification runs.

Regenerate with ``python -m conclab.calibrate`` (writes the packaged
default) or ``--out PATH`` for a side file.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .bound_catalog import ConstantsPolicy
from .charfn_integrals import ball_integral, cf_weighted_sum
from .coefficients import CoefficientMatrix, gram, ones
from .concentration import exact_q
from .scalar_laws import (
    FiniteLaw,
    GaussianLaw,
    SymmetrizedLaw,
    lazy_rademacher,
    m_of_tau,
    point_mass,
    rademacher,
    symmetrize,
)

_POINTS = 2**15
_UP_MARGIN = 1.15
_LOW_MARGIN = 0.85
_ENVELOPE_MARGIN = 1.10


def _unit_rows(d: int, copies: int) -> CoefficientMatrix:
    """copies * d rows cycling through the standard basis of R^d."""
    eye = np.eye(d)
    return CoefficientMatrix(np.tile(eye, (copies, 1)))


@dataclass(frozen=True)
class SandwichInstance:
    """A symmetrized-law instance with two-sided oracle values for
    Q(., sqrt(d)): q_lo <= Q <= q_hi."""

    label: str
    sym: SymmetrizedLaw
    a: CoefficientMatrix
    q_lo: float
    q_hi: float

    @property
    def d(self) -> int:
        return self.a.d


def _finite_instance(label: str, base_law, a: CoefficientMatrix) -> SandwichInstance:
    sym = symmetrize(base_law)
    est = exact_q(sym, a, math.sqrt(a.d))
    hi = est.value if est.value_upper is None else est.value_upper
    return SandwichInstance(label, sym, a, est.value, hi)


def _gaussian_instance(label: str, stddev: float, d: int, copies: int) -> SandwichInstance:
    sym = symmetrize(GaussianLaw(0.0, stddev))
    a = _unit_rows(d, copies)
    # S = sum Xt_k a_k is N(0, s^2 I) with s^2 = 2 stddev^2 copies; the
    # best center is the origin, so Q(., sqrt(d)) = P(chi2_d <= d / s^2).
    s2 = 2.0 * stddev * stddev * copies
    q = float(chi2.cdf(d / s2, d))
    return SandwichInstance(label, sym, a, q, q)


def sandwich_suite() -> list[SandwichInstance]:
    """Oracle instances for the two-sided characteristic-function estimate."""
    skew = FiniteLaw((0.0, 1.0, 3.0), (0.5, 0.25, 0.25))
    out = [
        _finite_instance("rademacher-ones1", rademacher(), ones(1)),
        _finite_instance("rademacher-ones2", rademacher(), ones(2)),
        _finite_instance("rademacher-ones4", rademacher(), ones(4)),
        _finite_instance("rademacher-ones8", rademacher(), ones(8)),
        _finite_instance("lazy-half-ones4", lazy_rademacher(0.5), ones(4)),
        _finite_instance("skew-ones2", skew, ones(2)),
        _finite_instance("point-mass", point_mass(0.0), ones(1)),
        _finite_instance("rademacher-d2-n8", rademacher(), _unit_rows(2, 4)),
        _finite_instance("rademacher-d2-n12", rademacher(), _unit_rows(2, 6)),
        _finite_instance("rademacher-d3-n6", rademacher(), _unit_rows(3, 2)),
        _gaussian_instance("gaussian-d1", 1.0, 1, 1),
        _gaussian_instance("gaussian-d2", 1.0, 2, 1),
        _gaussian_instance("gaussian-d3", 1.0, 3, 1),
    ]
    return out


def sandwich_integrals(inst: SandwichInstance, *, points: int = _POINTS,
                       seed: int = 0, threads: int = 1):
    """(|F_hat| integral, F_hat integral) over the ball of radius sqrt(d)."""
    radius = math.sqrt(inst.d)
    i_abs = ball_integral(lambda tp: np.abs(cf_weighted_sum(inst.sym, inst.a, tp)),
                          radius, inst.d, points, seed=seed, mode="pseudo-random",
                          threads=threads)
    i_pos = ball_integral(lambda tp: cf_weighted_sum(inst.sym, inst.a, tp).real,
                          radius, inst.d, points, seed=seed, mode="pseudo-random",
                          threads=threads)
    return i_abs, i_pos


def _calibrate_esseen(points: int) -> tuple[dict, dict]:
    up: dict[int, float] = {}
    low: dict[int, float] = {}
    for i, inst in enumerate(sandwich_suite()):
        i_abs, i_pos = sandwich_integrals(inst, points=points, seed=1000 + i)
        abs_floor = i_abs.value - 3.0 * i_abs.stderr
        pos_ceil = i_pos.value + 3.0 * i_pos.stderr
        if abs_floor <= 0.0 or pos_ceil <= 0.0:
            raise RuntimeError(f"degenerate integral on {inst.label}")
        up[inst.d] = max(up.get(inst.d, 0.0), inst.q_hi / abs_floor)
        low[inst.d] = min(low.get(inst.d, math.inf), inst.q_lo / pos_ceil)
    return (
        {d: _UP_MARGIN * v for d, v in up.items()},
        {d: _LOW_MARGIN * v for d, v in low.items()},
    )


def _envelope_ratios() -> list[tuple[str, float]]:
    """Lower bounds on c0 from instances where the prefactor term binds:
    c0 >= (Q * sqrt(det N))^(1/d) * sqrt(M(1))."""
    rows: list[tuple[str, float]] = []

    for law, tag in ((rademacher(), "rademacher"), (lazy_rademacher(0.5), "lazy")):
        m1 = m_of_tau(symmetrize(law), 1.0)
        for n in (1, 2, 4, 8, 16, 32, 64, 128, 256):
            a = ones(n)
            q = exact_q(law, a, 1.0).value
            det = gram(a).determinant
            rows.append((f"{tag}-ones{n}-d1", (q * math.sqrt(det)) * math.sqrt(m1)))

    m1_gauss = m_of_tau(symmetrize(GaussianLaw(0.0, 1.0)), 1.0)
    for n in (1, 2, 4, 16, 64):
        # S = sum_k X_k with X gaussian: Q(N(0, n), 1) = P(|Z| <= 1/sqrt(n))
        q = float(chi2.cdf(1.0 / n, 1))
        rows.append((f"gaussian-ones{n}-d1", (q * math.sqrt(n)) * math.sqrt(m1_gauss)))

    m1_rad = 0.5
    for d, copies in ((2, 16), (2, 8), (3, 4)):
        a = _unit_rows(d, copies)
        est = exact_q(rademacher(), a, math.sqrt(d))
        q_hi = est.value_upper if est.value_upper is not None else est.value
        det = gram(a).determinant
        rows.append(
            (f"rademacher-d{d}-n{d * copies}",
             (q_hi * math.sqrt(det)) ** (1.0 / d) * math.sqrt(m1_rad))
        )
        q_gauss = float(chi2.cdf(d / (2.0 * copies), d))
        rows.append(
            (f"gaussian-d{d}-n{d * copies}",
             (q_gauss * math.sqrt(det)) ** (1.0 / d) * math.sqrt(m1_gauss))
        )
    return rows


def _classical_ratios() -> tuple[float, float]:
    """Smallest constants making the two classical bounds hold on the
    unit-coefficient sweep, before margin."""
    law = rademacher()
    sym_single = symmetrize(law)  # per-summand symmetrized law, coefficient 1
    q_tilde = exact_q(sym_single, ones(1), 1.0).value
    m_single = m_of_tau(sym_single, 1.0)
    worst_kr = 0.0
    worst_siegel = 0.0
    for n in (1, 2, 4, 8, 16, 32, 64, 128, 256):
        q = exact_q(law, ones(n), 1.0).value
        worst_kr = max(worst_kr, q * math.sqrt(n * (1.0 - q_tilde)))
        worst_siegel = max(worst_siegel, q * math.sqrt(n * m_single))
    return worst_kr, worst_siegel


def calibrate(points: int = _POINTS) -> ConstantsPolicy:
    esseen_up, esseen_low = _calibrate_esseen(points)
    envelope = max(r for _, r in _envelope_ratios())
    kr, siegel = _classical_ratios()
    c_cos = 2.0 / math.pi**2
    return ConstantsPolicy(
        policy_id="default-calibrated-v1",
        provenance="default-calibrated",
        c_cos=c_cos,
        c_exp=c_cos / 4.0,
        esseen_up=esseen_up,
        esseen_low=esseen_low,
        c0=_ENVELOPE_MARGIN * envelope,
        c_kr=_ENVELOPE_MARGIN * kr,
        c_siegel=_ENVELOPE_MARGIN * siegel,
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="recalibrate the default constants policy")
    parser.add_argument("--points", type=int, default=_POINTS)
    parser.add_argument("--out", default=None,
                        help="output path (defaults to the packaged policy file)")
    args = parser.parse_args(argv)
    policy = calibrate(points=args.points)
    if args.out is None:
        from importlib import resources

        target = resources.files("conclab").joinpath("data/default_policy.json")
        out_path = str(target)
    else:
        out_path = args.out
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(policy.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out_path}")
    for d in sorted(policy.esseen_up):
        print(f"  d={d}: C_up={policy.esseen_up[d]:.6f} C_low={policy.esseen_low[d]:.6f}")
    print(f"  c0={policy.c0:.6f} c_kr={policy.c_kr:.6f} c_siegel={policy.c_siegel:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
