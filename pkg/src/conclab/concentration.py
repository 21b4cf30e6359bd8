"""Estimators for the concentration function Q(F_a, lambda).

Q(F, lambda) is the largest probability F places on any closed Euclidean
ball of radius lambda.  For finite-discrete laws the distribution of
S_a = sum_k X_k a_k is computed exactly (integer-lattice dynamic
programming in dimension 1, product enumeration with merging otherwise)
and the supremum over centers is read off a sliding window (d = 1) or
bracketed by candidate-center / covering-grid certificates (d >= 2).
Monte Carlo estimation draws samples in deterministic seeded chunks and
reports the empirical supremum with a binomial standard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree

from .coefficients import CoefficientMatrix
from .errors import CapacityError, DomainError
from .parallel import child_seed, ordered_map
from .scalar_laws import FiniteLaw, SymmetrizedLaw

# Closed-ball membership uses <= with this much slack so exact dyadic
# arithmetic keeps boundary atoms.
WINDOW_SLACK = 1e-12

_MAX_DENOMINATOR = 10**6
_MAX_DP_CELLS = 1 << 26
_MAX_DP_WORK = float(1 << 33)
_MAX_ENUM_POINTS = 1 << 24
_MAX_GRID_POINTS = 2_000_000
_MAX_MASS_WORK = 4e8
_MC_CHUNK_TARGET = 1 << 22
_MC_MAX_CANDIDATES = 30_000


@dataclass(frozen=True)
class ConcentrationEstimate:
    """One estimate of Q(F_a, lambda).

    ``value`` is exact for the exact methods in d = 1; in d >= 2 with
    lambda > 0 it is a certified lower bound and ``value_upper`` a
    covering-grid upper bound.  ``stderr`` is 0 for exact methods.
    """

    lam: float
    value: float
    stderr: float
    method: str
    witness_center: tuple[float, ...]
    value_upper: float | None = None
    note: str = ""

    def __post_init__(self):
        if not -1e-12 <= self.value <= 1.0 + 1e-12:
            raise DomainError(f"estimate {self.value!r} outside [0, 1]")


def _unwrap_finite(law) -> FiniteLaw:
    if isinstance(law, SymmetrizedLaw):
        law = law.base
    if not isinstance(law, FiniteLaw):
        raise DomainError("exact concentration methods need a finite-discrete law")
    return law


# ---------------------------------------------------------------------------
# Exact distribution of S_a, d = 1: integer-lattice dynamic programming
# ---------------------------------------------------------------------------


def _rationalize(values: np.ndarray) -> list[Fraction] | None:
    """Fractions with a common denominator <= 10^6 matching each value to
    1e-12 relative accuracy, or None if any value resists."""
    fracs = []
    lcm = 1
    for v in values:
        fr = Fraction(float(v)).limit_denominator(_MAX_DENOMINATOR)
        if abs(float(fr) - float(v)) > 1e-12 * max(1.0, abs(float(v))):
            return None
        fracs.append(fr)
        lcm = lcm * fr.denominator // math.gcd(lcm, fr.denominator)
        if lcm > _MAX_DENOMINATOR:
            return None
    return [fr * lcm for fr in fracs], lcm  # type: ignore[return-value]


def _exact_dist_dp(law: FiniteLaw, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    """Distribution of sum_k X_k c_k on a scaled integer lattice.

    Returns (support, probs) or None when the products c_k * atom_i do not
    rationalize to a common denominator within capacity.
    """
    atoms = np.asarray(law.atoms)
    products = np.outer(coeffs, atoms).ravel()
    rat = _rationalize(products)
    if rat is None:
        return None
    scaled, lcm = rat
    ints = np.array([fr.numerator for fr in scaled], dtype=np.int64).reshape(len(coeffs), len(atoms))

    spans = ints.max(axis=1) - ints.min(axis=1)
    width = int(spans.sum()) + 1
    if width > _MAX_DP_CELLS:
        raise CapacityError(f"dp lattice needs {width} cells, above the {_MAX_DP_CELLS} cap")
    lengths = np.cumsum(spans) + 1
    work = float(np.sum(lengths * ints.shape[1]))
    if work > _MAX_DP_WORK:
        raise CapacityError("dp convolution work exceeds capacity")

    probs = np.asarray(law.probs)
    cur = np.zeros(width)
    nxt = np.zeros(width)
    cur[0] = 1.0
    length = 1
    origin = 0  # integer value of cell 0
    for k in range(ints.shape[0]):
        offs = ints[k] - ints[k].min()
        new_len = length + int(spans[k])
        nxt[:new_len] = 0.0
        for off, p in zip(offs, probs):
            nxt[off : off + length] += p * cur[:length]
        cur, nxt = nxt, cur
        length = new_len
        origin += int(ints[k].min())
    mass = cur[:length]
    keep = np.flatnonzero(mass > 0.0)
    support = (origin + keep).astype(float) / lcm
    return support, mass[keep]


# ---------------------------------------------------------------------------
# Exact distribution of S_a, any d: product enumeration with merging
# ---------------------------------------------------------------------------


def _exact_dist_nd(law: FiniteLaw, a: CoefficientMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Distribution of S_a by incremental product enumeration.

    Atoms within 1e-12 merge after every summand, so lattice-like supports
    stay small; the capacity guard is on the intermediate point count, not
    on the raw product size.
    """
    atoms = np.asarray(law.atoms)
    probs = np.asarray(law.probs)
    pts = np.zeros((1, a.d))
    mass = np.ones(1)
    for k in range(a.n):
        shifts = atoms[:, None] * a.array[k][None, :]  # (s, d)
        if pts.shape[0] * len(atoms) > _MAX_ENUM_POINTS:
            raise CapacityError(
                f"enumeration support reached {pts.shape[0]} x {len(atoms)} points, above the 2^24 cap"
            )
        new_pts = (pts[:, None, :] + shifts[None, :, :]).reshape(-1, a.d)
        new_mass = (mass[:, None] * probs[None, :]).ravel()
        keys = np.round(new_pts, 12)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        mass = np.bincount(inverse.ravel(), weights=new_mass)
        pts = uniq
    return pts, mass


# ---------------------------------------------------------------------------
# Supremum over centers
# ---------------------------------------------------------------------------


def _window_sup_1d(xs: np.ndarray, ps: np.ndarray, lam: float) -> tuple[float, float]:
    """Max mass of a closed interval of half-width lam over a sorted support."""
    cum = np.concatenate(([0.0], np.cumsum(ps)))
    hi = np.searchsorted(xs, xs + (2.0 * lam + WINDOW_SLACK), side="right")
    masses = cum[hi] - cum[: len(xs)]
    i = int(np.argmax(masses))
    center = 0.5 * (xs[i] + xs[hi[i] - 1])
    return float(masses[i]), float(center)


def _ball_masses(centers: np.ndarray, pts: np.ndarray, ps: np.ndarray,
                 radius: float) -> np.ndarray:
    """Mass within the closed ball of ``radius`` around each center."""
    r2 = (radius + WINDOW_SLACK) ** 2
    out = np.empty(len(centers))
    block = max(1, int(2_000_000 // max(len(pts), 1)))
    for lo in range(0, len(centers), block):
        c = centers[lo : lo + block]
        d2 = ((c[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        out[lo : lo + block] = np.where(d2 <= r2, ps[None, :], 0.0).sum(axis=1)
    return out


def _covering_grid(pts: np.ndarray, lam: float, step: float) -> np.ndarray:
    lo = pts.min(axis=0) - lam
    hi = pts.max(axis=0) + lam
    axes = [np.arange(l, h + step, step) for l, h in zip(lo, hi)]
    count = int(np.prod([len(ax) for ax in axes]))
    if count > _MAX_GRID_POINTS or count * len(pts) > _MAX_MASS_WORK:
        raise CapacityError(
            f"covering grid of {count} points over {len(pts)} atoms exceeds capacity"
        )
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _certify_q_nd(pts: np.ndarray, ps: np.ndarray, lam: float,
                  d: int) -> tuple[float, float, np.ndarray]:
    """Certified (lower, upper, witness) for the sup over ball centers.

    Lower: best center among support points, pairwise midpoints (small
    supports), and the covering grid.  Upper: on a grid of step lam/8 any
    true center is within h*sqrt(d)/2 of a grid point, so inflating the
    radius by that much dominates the supremum.
    """
    step = lam / 8.0
    grid = _covering_grid(pts, lam, step)
    cands = [pts, grid]
    if len(pts) <= 300:
        iu, ju = np.triu_indices(len(pts), k=1)
        cands.append(0.5 * (pts[iu] + pts[ju]))
    centers = np.concatenate(cands, axis=0)
    lower_masses = _ball_masses(centers, pts, ps, lam)
    best = int(np.argmax(lower_masses))
    inflated = lam + 0.5 * step * math.sqrt(d)
    upper = float(np.max(_ball_masses(grid, pts, ps, inflated)))
    return float(lower_masses[best]), min(upper, 1.0), centers[best]


# ---------------------------------------------------------------------------
# Public estimators
# ---------------------------------------------------------------------------


def exact_q(law, a: CoefficientMatrix, lam: float) -> ConcentrationEstimate:
    """Exact Q(F_a, lam) for a finite-discrete law.

    d = 1 gives the exact supremum (sliding window over the full
    distribution).  d >= 2 with lam > 0 reports a certified lower bound in
    ``value`` and a covering-grid upper bound in ``value_upper``; lam = 0
    is exact in any dimension (largest atom).
    """
    flaw = _unwrap_finite(law)
    if lam < 0.0:
        raise DomainError("lambda must be nonnegative")
    if a.d == 1:
        coeffs = a.array[:, 0]
        dist = _exact_dist_dp(flaw, coeffs)
        method = "exact-dp"
        if dist is None:
            pts, ps = _exact_dist_nd(flaw, a)
            dist = (pts[:, 0], ps)
            method = "exact-enum"
        xs, ps = dist
        value, center = _window_sup_1d(xs, ps, lam)
        return ConcentrationEstimate(lam, min(value, 1.0), 0.0, method, (center,))
    pts, ps = _exact_dist_nd(flaw, a)
    if lam == 0.0:
        i = int(np.argmax(ps))
        return ConcentrationEstimate(0.0, float(ps[i]), 0.0, "exact-enum",
                                     tuple(float(x) for x in pts[i]),
                                     value_upper=float(ps[i]))
    lower, upper, witness = _certify_q_nd(pts, ps, lam, a.d)
    return ConcentrationEstimate(lam, min(lower, 1.0), 0.0, "exact-enum",
                                 tuple(float(x) for x in witness), value_upper=upper,
                                 note="value is a certified lower bound; value_upper from covering grid")


def _sample_sums(law, a: CoefficientMatrix, samples: int, seed: int,
                 threads: int) -> np.ndarray:
    """samples x d array of realizations of S_a, chunked deterministically."""
    chunk = max(256, _MC_CHUNK_TARGET // max(a.n, 1))
    bounds = [(lo, min(lo + chunk, samples)) for lo in range(0, samples, chunk)]

    def task(item):
        idx, (lo, hi) = item
        rng = np.random.Generator(np.random.PCG64(child_seed(seed, idx)))
        x = law.sample(rng, (hi - lo) * a.n).reshape(hi - lo, a.n)
        return x @ a.array

    parts = ordered_map(task, list(enumerate(bounds)), threads=threads)
    return np.concatenate(parts, axis=0)


def _mc_candidates_nd(s: np.ndarray, lam: float) -> np.ndarray:
    """Candidate centers: all samples, or samples from the densest cells."""
    if len(s) <= _MC_MAX_CANDIDATES:
        return s
    cells = np.floor(s / lam).astype(np.int64)
    uniq, inverse, counts = np.unique(cells, axis=0, return_inverse=True,
                                      return_counts=True)
    order = np.lexsort(tuple(uniq[:, c] for c in range(uniq.shape[1] - 1, -1, -1)))
    order = order[np.argsort(-counts[order], kind="stable")]
    chosen: list[np.ndarray] = []
    total = 0
    member_order = np.argsort(inverse.ravel(), kind="stable")
    starts = np.searchsorted(inverse.ravel()[member_order], np.arange(len(uniq)))
    ends = np.append(starts[1:], len(s))
    for cell in order:
        members = member_order[starts[cell] : ends[cell]]
        chosen.append(np.sort(members))
        total += len(members)
        if total >= _MC_MAX_CANDIDATES:
            break
    return s[np.concatenate(chosen)]


def mc_q(law, a: CoefficientMatrix, lam: float, samples: int,
         seed: int, threads: int = 1) -> ConcentrationEstimate:
    """Monte Carlo estimate of Q(F_a, lam).

    d = 1 computes the exact empirical supremum (sort plus two-pointer
    window); d >= 2 maximizes the ball count over candidate centers at
    sample points with a local grid refinement of cell lam/4, which is a
    lower-bound-biased estimate of the empirical supremum.
    """
    if samples < 1000:
        raise DomainError("monte carlo needs at least 1000 samples")
    if not lam > 0.0:
        raise DomainError("monte carlo needs lambda > 0")
    sums = _sample_sums(law, a, samples, seed, threads)
    m = len(sums)
    if a.d == 1:
        s = np.sort(sums[:, 0], kind="stable")
        hi = np.searchsorted(s, s + (2.0 * lam + WINDOW_SLACK), side="right")
        counts = hi - np.arange(m)
        i = int(np.argmax(counts))
        value = counts[i] / m
        center = (float(0.5 * (s[i] + s[hi[i] - 1])),)
        note = ""
    else:
        slack_r = lam + WINDOW_SLACK * (1.0 + lam)
        tree = cKDTree(sums)
        cands = _mc_candidates_nd(sums, lam)
        counts = tree.query_ball_point(cands, slack_r, return_length=True)
        best = int(np.argmax(counts))
        offsets = np.arange(-4, 5) * (lam / 4.0)
        mesh = np.meshgrid(*([offsets] * a.d), indexing="ij")
        local = cands[best] + np.stack([g.ravel() for g in mesh], axis=1)
        local_counts = tree.query_ball_point(local, slack_r, return_length=True)
        j = int(np.argmax(local_counts))
        if local_counts[j] > counts[best]:
            value = local_counts[j] / m
            center = tuple(float(x) for x in local[j])
        else:
            value = counts[best] / m
            center = tuple(float(x) for x in cands[best])
        note = "lower-bound-biased empirical supremum over candidate centers"
    stderr = math.sqrt(max(value * (1.0 - value), 0.0) / m)
    return ConcentrationEstimate(lam, float(value), stderr, "monte-carlo",
                                 center, note=note)


@dataclass(frozen=True)
class ScanRow:
    lam: float
    value: float
    stderr: float
    method: str
    ratio_prev: float | None = None
    shape_prev: float | None = None


def q_ratio_scan(law, a: CoefficientMatrix, lambdas, *, method: str = "auto",
                 samples: int = 100_000, seed: int | None = None,
                 threads: int = 1) -> list[ScanRow]:
    """Q(lambda) across a grid plus doubling diagnostics.

    ``ratio_prev`` is Q(mu)/Q(lambda) for consecutive grid radii mu >
    lambda; ``shape_prev`` divides that by (1 + mu/lambda)^d, the shape in
    which the ratio admits a dimension-dependent constant bound.
    """
    lams = [float(x) for x in lambdas]
    if len(lams) == 0 or any(x < 0 for x in lams) or any(
        b <= a_ for a_, b in zip(lams, lams[1:])
    ):
        raise DomainError("lambda grid must be strictly increasing and nonnegative")

    def estimate(lam: float) -> ConcentrationEstimate:
        if method in ("exact", "auto"):
            try:
                return exact_q(law, a, lam)
            except (CapacityError, DomainError):
                if method == "exact":
                    raise
        if seed is None:
            raise DomainError("monte carlo scan needs a seed")
        return mc_q(law, a, lam, samples, seed, threads=threads)

    rows: list[ScanRow] = []
    prev: ConcentrationEstimate | None = None
    for lam in lams:
        est = estimate(lam)
        ratio = shape = None
        if prev is not None and prev.value > 0.0:
            ratio = est.value / prev.value
            shape = ratio / (1.0 + lam / prev.lam) ** a.d
        rows.append(ScanRow(lam, est.value, est.stderr, est.method, ratio, shape))
        prev = est
    return rows
