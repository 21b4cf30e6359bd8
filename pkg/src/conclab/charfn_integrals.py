"""Characteristic functions of weighted sums and their ball integrals.

The characteristic function of S_a = sum_k X_k a_k factors over the
independent summands as prod_k phi_X(<t, a_k>).  Integrals of |F| and of
nonnegative F over the centered Euclidean ball of radius sqrt(d) sandwich
the concentration function Q(F, sqrt(d)) up to dimension-dependent
constants; this module owns those integrals plus the auxiliary smoothing
laws with characteristic function

    H_hat(z, gamma; t) = exp(-(gamma/2) sum_k (1 - cos(2 z <t, a_k>))).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ndtri
from scipy.stats import qmc

from .coefficients import CoefficientMatrix
from .errors import DomainError
from .parallel import child_seed, ordered_map

_CHUNK_POINTS = 4096
_COLUMN_BLOCK = 512
_NEG_CF_TOL = 1e-9


def vol_ball(dimension: int, radius: float) -> float:
    """Volume of the Euclidean ball of given radius in R^dimension."""
    logv = 0.5 * dimension * math.log(math.pi) - gammaln(0.5 * dimension + 1.0)
    return math.exp(logv) * radius**dimension


def _projections(a: CoefficientMatrix, tpoints: np.ndarray) -> np.ndarray:
    return tpoints @ a.array.T


def _cf_product(law, a: CoefficientMatrix, tpoints: np.ndarray) -> np.ndarray:
    """prod_k phi_X(<t, a_k>) for a batch of directions, blocked over k."""
    m = tpoints.shape[0]
    out = np.ones(m, dtype=complex)
    arr = a.array
    for lo in range(0, a.n, _COLUMN_BLOCK):
        proj = tpoints @ arr[lo : lo + _COLUMN_BLOCK].T
        out *= np.prod(law.charfn(proj), axis=1)
    return out


def cf_weighted_sum(law, a: CoefficientMatrix, t):
    """Characteristic function of S_a at t (a d-vector or batch of them)."""
    tv = np.asarray(t, dtype=float)
    if tv.ndim == 1:
        if tv.shape != (a.d,):
            raise DomainError(f"t has shape {tv.shape}, expected ({a.d},)")
        return complex(_cf_product(law, a, tv[None, :])[0])
    if tv.ndim != 2 or tv.shape[1] != a.d:
        raise DomainError(f"t batch has shape {tv.shape}, expected (m, {a.d})")
    return _cf_product(law, a, tv)


def cf_H(z: float, gamma: float, a: CoefficientMatrix, t):
    """Characteristic function of the smoothing law H(z, gamma); positive.

    Satisfies the scale substitution H_hat(z, g; t) = H_hat(y, g; z t / y)
    and the power identity H_hat(z, g; t) = H_hat(z, 1; t)^g.
    """
    if not gamma > 0.0:
        raise DomainError("gamma must be positive")
    tv = np.asarray(t, dtype=float)
    single = tv.ndim == 1
    if single:
        if tv.shape != (a.d,):
            raise DomainError(f"t has shape {tv.shape}, expected ({a.d},)")
        tv = tv[None, :]
    elif tv.ndim != 2 or tv.shape[1] != a.d:
        raise DomainError(f"t batch has shape {tv.shape}, expected (m, {a.d})")
    proj = _projections(a, tv)
    expo = -0.5 * gamma * np.sum(1.0 - np.cos(2.0 * z * proj), axis=1)
    vals = np.exp(expo)
    return float(vals[0]) if single else vals


# ---------------------------------------------------------------------------
# Ball integration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BallIntegral:
    radius: float
    dimension: int
    value: float
    stderr: float
    point_count: int
    mode: str


def _lowdisc_unit_points(points: int, dims: int) -> np.ndarray:
    """Deterministic low-discrepancy points in [0,1)^dims.

    Sobol when the count is a power of two (its natural balance), Halton
    otherwise.  Coordinates are clamped away from {0, 1} so the inverse
    normal map below stays finite.
    """
    if points >= 8 and points & (points - 1) == 0:
        u = qmc.Sobol(dims, scramble=False).random_base2(int(math.log2(points)))
    else:
        u = qmc.Halton(dims, scramble=False).random(points)
    eps = 2.0**-53
    return np.clip(u, eps, 1.0 - eps)


def _cube_to_ball(u: np.ndarray, radius: float, dimension: int) -> np.ndarray:
    """Map (d+1)-dim unit-cube points to the ball: inverse-normal direction,
    radius proportional to U^(1/d)."""
    z = ndtri(u[:, :dimension])
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    norms[norms < 1e-300] = 1.0
    r = radius * u[:, dimension] ** (1.0 / dimension)
    return z / norms * r[:, None]


def _random_ball_points(rng: np.random.Generator, m: int, radius: float,
                        dimension: int) -> np.ndarray:
    z = rng.standard_normal((m, dimension))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    norms[norms < 1e-300] = 1.0
    r = radius * rng.random(m) ** (1.0 / dimension)
    return z / norms * r[:, None]


def _check_finite(vals: np.ndarray, pts: np.ndarray):
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        i = int(bad[0])
        raise DomainError(f"integrand returned {vals[i]!r} at point {pts[i].tolist()}")


def ball_integral(f, radius: float, dimension: int, points: int,
                  seed: int | None = None, mode: str = "pseudo-random",
                  threads: int = 1) -> BallIntegral:
    """Integral of ``f`` over the centered ball of the given radius.

    ``f`` maps an (m, d) batch of points to m real values.  Sampling is
    uniform in the ball; the estimate is Vol(B) times the sample mean.
    Pseudo-random mode reports the standard error of that mean and needs a
    seed; low-discrepancy mode is deterministic and flags stderr as 0.
    Chunks reduce in index order, so results do not depend on ``threads``.
    """
    if not radius > 0.0:
        raise DomainError("radius must be positive")
    if points < 1000:
        raise DomainError("ball integration needs at least 1000 points")
    if dimension < 1:
        raise DomainError("dimension must be at least 1")
    if mode not in ("pseudo-random", "low-discrepancy"):
        raise DomainError(f"unknown integration mode {mode!r}")
    if mode == "pseudo-random" and seed is None:
        raise DomainError("pseudo-random integration requires a seed")

    vol = vol_ball(dimension, radius)
    bounds = [(lo, min(lo + _CHUNK_POINTS, points)) for lo in range(0, points, _CHUNK_POINTS)]

    if mode == "low-discrepancy":
        all_pts = _cube_to_ball(_lowdisc_unit_points(points, dimension + 1),
                                radius, dimension)

        def task(item):
            idx, (lo, hi) = item
            pts = all_pts[lo:hi]
            vals = np.asarray(f(pts), dtype=float)
            _check_finite(vals, pts)
            return float(vals.sum()), float(np.dot(vals, vals)), hi - lo
    else:

        def task(item):
            idx, (lo, hi) = item
            rng = np.random.Generator(np.random.PCG64(child_seed(seed, idx)))
            pts = _random_ball_points(rng, hi - lo, radius, dimension)
            vals = np.asarray(f(pts), dtype=float)
            _check_finite(vals, pts)
            return float(vals.sum()), float(np.dot(vals, vals)), hi - lo

    parts = ordered_map(task, list(enumerate(bounds)), threads=threads)
    total = 0.0
    total_sq = 0.0
    count = 0
    for s, s2, m in parts:
        total += s
        total_sq += s2
        count += m
    mean = total / count
    value = vol * mean
    if mode == "low-discrepancy" or count < 2:
        stderr = 0.0
    else:
        var = max(total_sq - total * total / count, 0.0) / (count - 1)
        stderr = vol * math.sqrt(var / count)
    return BallIntegral(radius, dimension, value, stderr, count, mode)


def default_integration_mode(dimension: int) -> str:
    """Low-discrepancy for small dimension, pseudo-random (with stderr) above."""
    return "low-discrepancy" if dimension <= 4 else "pseudo-random"


# ---------------------------------------------------------------------------
# Two-sided characteristic-function estimates for Q(F_a, sqrt(d))
# ---------------------------------------------------------------------------


def esseen_upper(law, a: CoefficientMatrix, policy, *, points: int = 2**16,
                 seed: int = 0, mode: str | None = None, threads: int = 1) -> float:
    """Upper estimate C_up(d) * integral of |F_hat| over the ball of radius sqrt(d)."""
    d = a.d
    mode = mode or default_integration_mode(d)
    integral = ball_integral(lambda tp: np.abs(_cf_product(law, a, tp)),
                             math.sqrt(d), d, points, seed=seed, mode=mode,
                             threads=threads)
    return policy.C_esseen_up(d) * integral.value


def esseen_lower(law, a: CoefficientMatrix, policy, *, points: int = 2**16,
                 seed: int = 0, mode: str | None = None, threads: int = 1) -> float:
    """Lower estimate C_low(d) * integral of F_hat over the ball of radius sqrt(d).

    Requires the characteristic function of S_a to be real and nonnegative
    on the ball (true for any symmetrized law, where it is |phi|^2 of the
    base); checked on 1000 sampled points before integrating.
    """
    d = a.d
    radius = math.sqrt(d)
    probe_rng = np.random.Generator(np.random.PCG64(child_seed(seed, 1 << 40)))
    probe = _random_ball_points(probe_rng, 1000, radius, d)
    vals = _cf_product(law, a, probe)
    if float(np.max(np.abs(vals.imag))) > _NEG_CF_TOL:
        raise DomainError("characteristic function is not real on the ball")
    worst = float(np.min(vals.real))
    if worst < -_NEG_CF_TOL:
        raise DomainError(
            f"characteristic function dips to {worst!r} on the ball; lower estimate needs F_hat >= 0"
        )
    mode = mode or default_integration_mode(d)
    integral = ball_integral(lambda tp: _cf_product(law, a, tp).real,
                             radius, d, points, seed=seed, mode=mode,
                             threads=threads)
    return policy.C_esseen_low(d) * integral.value


# ---------------------------------------------------------------------------
# Cosine minorants used by the smoothing-law estimates
# ---------------------------------------------------------------------------


def cosine_gap(x):
    return 1.0 - np.cos(x)


def dist_to_two_pi_lattice(x):
    """min_m |x - 2 pi m|."""
    xx = np.asarray(x, dtype=float)
    return np.abs(xx - 2.0 * math.pi * np.rint(xx / (2.0 * math.pi)))
