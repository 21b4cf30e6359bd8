"""Diophantine structure of a coefficient multivector.

Two condition margins and one denominator scan, all built on the same
primitive: how close the projection t.a comes to the integer lattice Z^n
as t ranges over a ball.

* ``condition_margin``: minimal lattice distance over directions with
  ||t|| <= D that see at least one coefficient at scale 1/2
  (max_k |<t, a_k>| >= 1/2).
* ``condition_margin_4d``: the largest alpha for which
  dist(t.a, Z^n) >= min(gamma ||t.a||, alpha) holds on ||t|| <= D, i.e.
  the minimal lattice distance over the binding set dist < gamma ||t.a||.
* ``essential_lcd``: outward annular scan for the smallest ||t|| with
  dist(t.a, Z^n) <= min(gamma ||t.a||, alpha); any witness found gives an
  upper bound on the essential least common denominator of a.

Minimization is heuristic (regular-grid scan plus derivative-free pattern
search) but certified: the grid has a known covering radius, the
objective is Lipschitz with constant sqrt(lambda_max(N)), and the
certified lower bound subtracts the worst-case slack.  Witnesses are
always re-validated by direct evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientMatrix, gram
from .errors import DomainError

_FEAS_SLACK = 1e-12
_EVAL_BLOCK_ELEMS = 4_000_000


@dataclass(frozen=True)
class ConditionMargin:
    """Result of a constrained lattice-distance minimization.

    ``alpha_star`` is the best (smallest) lattice distance found at a
    validated witness; ``certified_lower`` is a grid-plus-Lipschitz lower
    bound on the true minimum, the value safe to use as alpha in the
    concentration bounds.  A vacuous constraint region reports
    ``alpha_star = inf``.
    """

    D: float
    alpha_star: float
    witness_t: tuple[float, ...] | None
    certified_lower: float
    grid_step: float
    vacuous: bool = False
    note: str = ""


@dataclass(frozen=True)
class LcdResult:
    """Smallest-norm witness of near-integer structure found by the scan.

    ``D_hat`` is an upper bound on the essential least common denominator;
    ``feasible_found = False`` means no witness exists within
    ``scan_radius`` at the scan resolution (a coverage statement, not a
    certificate)."""

    gamma: float
    alpha: float
    D_hat: float
    witness_t: tuple[float, ...] | None
    scan_radius: float
    grid_step: float
    feasible_found: bool


# ---------------------------------------------------------------------------
# Shared evaluation helpers
# ---------------------------------------------------------------------------


def _eval_points(a: CoefficientMatrix, pts: np.ndarray):
    """(dist to Z^n, max |<t,a_k>|, ||t.a||) for a batch of directions."""
    m = len(pts)
    dist = np.empty(m)
    maxabs = np.empty(m)
    norm_ta = np.empty(m)
    block = max(1, _EVAL_BLOCK_ELEMS // max(a.n, 1))
    arr_t = a.array.T
    for lo in range(0, m, block):
        proj = pts[lo : lo + block] @ arr_t
        frac = proj - np.rint(proj)
        dist[lo : lo + block] = np.sqrt(np.sum(frac * frac, axis=1))
        maxabs[lo : lo + block] = np.max(np.abs(proj), axis=1)
        norm_ta[lo : lo + block] = np.sqrt(np.sum(proj * proj, axis=1))
    return dist, maxabs, norm_ta


def _eval_single(a: CoefficientMatrix, t: np.ndarray):
    proj = a.array @ t
    frac = proj - np.rint(proj)
    return (
        math.sqrt(float(frac @ frac)),
        float(np.max(np.abs(proj))),
        math.sqrt(float(proj @ proj)),
    )


def _cube_grid(D: float, d: int, target_points: int) -> tuple[np.ndarray, float]:
    """Regular grid on [-D, D]^d with about target_points nodes.

    Returns the nodes and the covering radius h * sqrt(d) / 2 of the cube.
    """
    per_axis = max(3, int(round(target_points ** (1.0 / d))))
    if per_axis % 2 == 0:
        per_axis += 1  # keep 0 and the endpoints on the grid
    axis = np.linspace(-D, D, per_axis)
    h = 2.0 * D / (per_axis - 1)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=1)
    return pts, 0.5 * h * math.sqrt(d)


def _pattern_search(x0: np.ndarray, objective, feasible, step0: float,
                    iters: int = 60, contraction: float = 0.5, clip=None):
    """Axis-aligned pattern search; only feasible moves are accepted."""
    x = np.array(x0, dtype=float)
    if clip is not None:
        x = clip(x)
    fx = objective(x)
    step = step0
    for _ in range(iters):
        moved = False
        for i in range(len(x)):
            for sgn in (1.0, -1.0):
                cand = x.copy()
                cand[i] += sgn * step
                if clip is not None:
                    cand = clip(cand)
                if not feasible(cand):
                    continue
                fc = objective(cand)
                if fc < fx:
                    x, fx = cand, fc
                    moved = True
        if not moved:
            step *= contraction
            if step < 1e-15 * (1.0 + abs(step0)):
                break
    return x, fx


def _clip_to_ball(D: float):
    def clip(t: np.ndarray) -> np.ndarray:
        norm = math.sqrt(float(t @ t))
        return t * (D / norm) if norm > D else t

    return clip


def _half_scale_seeds(a: CoefficientMatrix, D: float) -> np.ndarray:
    """Directions a_k / (2 ||a_k||^2), where |<t, a_k>| = 1/2 exactly."""
    norms = a.row_norms
    ok = norms >= 1.0 / (2.0 * D) - _FEAS_SLACK
    ok &= norms > 0.0
    if not np.any(ok):
        return np.zeros((0, a.d))
    rows = a.array[ok]
    return rows / (2.0 * norms[ok][:, None] ** 2)


# ---------------------------------------------------------------------------
# Condition margins
# ---------------------------------------------------------------------------


def condition_margin(a: CoefficientMatrix, D: float, *, scan_points: int = 2**17,
                     refine_seeds: int = 32, refine_iters: int = 60) -> ConditionMargin:
    """Minimize dist(t.a, Z^n) over ||t|| <= D, max_k |<t, a_k>| >= 1/2.

    Grid scan plus pattern-search refinement; ``certified_lower`` is the
    grid minimum over an inflated region minus the Lipschitz slack
    sqrt(lambda_max) times the covering radius, clamped at zero.
    """
    if not D > 0.0:
        raise DomainError("D must be positive")
    lip = math.sqrt(gram(a).lambda_max)
    row_max = float(np.max(a.row_norms))
    if D * row_max < 0.5 - _FEAS_SLACK:
        # sup over the ball of |<t, a_k>| is D ||a_k|| < 1/2 for every k
        return ConditionMargin(D, math.inf, None, math.inf, math.nan,
                               vacuous=True, note="condition vacuous: region empty")

    pts, cover = _cube_grid(D, a.d, scan_points)
    seeds_extra = _half_scale_seeds(a, D)
    dist, maxabs, _ = _eval_points(a, pts)
    norms = np.linalg.norm(pts, axis=1)

    strict = (norms <= D + _FEAS_SLACK) & (maxabs >= 0.5 - _FEAS_SLACK)
    inflated = (norms <= D + cover + _FEAS_SLACK) & (
        maxabs >= 0.5 - row_max * cover - _FEAS_SLACK
    )
    cert_base = float(np.min(dist[inflated])) if np.any(inflated) else math.inf
    certified = max(cert_base - lip * cover, 0.0)

    def feasible(t: np.ndarray) -> bool:
        dd, ma, _ = _eval_single(a, t)
        return float(t @ t) <= (D + _FEAS_SLACK) ** 2 and ma >= 0.5 - _FEAS_SLACK

    def objective(t: np.ndarray) -> float:
        return _eval_single(a, t)[0]

    starts = [s for s in seeds_extra]
    if np.any(strict):
        idx = np.flatnonzero(strict)
        order = idx[np.argsort(dist[idx], kind="stable")]
        starts.extend(pts[i] for i in order[:refine_seeds])

    best_val = math.inf
    best_t: np.ndarray | None = None
    clip = _clip_to_ball(D)
    for s in starts:
        s = clip(np.array(s, dtype=float))
        if not feasible(s):
            continue
        t_ref, val = _pattern_search(s, objective, feasible, step0=max(cover, 1e-9),
                                     iters=refine_iters, clip=clip)
        if val < best_val:
            best_val, best_t = val, t_ref

    if best_t is None:
        # Region is nonempty analytically but the scan found no strict
        # point: report the inflated-grid certificate only.
        return ConditionMargin(D, math.inf, None, certified, 2 * cover / math.sqrt(a.d),
                               note="no strictly feasible direction located by the scan")
    dd, ma, _ = _eval_single(a, best_t)
    assert ma >= 0.5 - 1e-10 and float(best_t @ best_t) <= (D + 1e-10) ** 2
    certified = min(certified, dd)
    return ConditionMargin(D, dd, tuple(float(x) for x in best_t), certified,
                           2 * cover / math.sqrt(a.d))


def condition_margin_4d(a: CoefficientMatrix, D: float, gamma: float, *,
                        scan_points: int = 2**17, refine_seeds: int = 32,
                        refine_iters: int = 60) -> ConditionMargin:
    """Largest alpha for which dist(t.a, Z^n) >= min(gamma ||t.a||, alpha)
    holds for every ||t|| <= D.

    Equivalently the minimal lattice distance over the binding set
    {dist(t.a) < gamma ||t.a||}; directions with max_k |<t, a_k>| <= 1/2
    can never bind (there dist equals ||t.a||), so the scan skips a
    neighborhood of the origin.
    """
    if not D > 0.0:
        raise DomainError("D must be positive")
    if not 0.0 < gamma < 1.0:
        raise DomainError("gamma must lie in (0, 1)")
    lip = math.sqrt(gram(a).lambda_max)
    row_max = float(np.max(a.row_norms))
    if D * row_max < 0.5 - _FEAS_SLACK:
        return ConditionMargin(D, math.inf, None, math.inf, math.nan,
                               vacuous=True,
                               note="condition vacuous: binding set empty")

    pts, cover = _cube_grid(D, a.d, scan_points)
    dist, maxabs, norm_ta = _eval_points(a, pts)
    norms = np.linalg.norm(pts, axis=1)

    strict = (norms <= D + _FEAS_SLACK) & (dist < gamma * norm_ta)
    inflated = (
        (norms <= D + cover + _FEAS_SLACK)
        & (maxabs >= 0.5 - row_max * cover - _FEAS_SLACK)
        & (dist - gamma * norm_ta < (1.0 + gamma) * lip * cover + _FEAS_SLACK)
    )
    cert_base = float(np.min(dist[inflated])) if np.any(inflated) else math.inf
    certified = max(cert_base - lip * cover, 0.0) if math.isfinite(cert_base) else math.inf

    def feasible(t: np.ndarray) -> bool:
        dd, _, nt = _eval_single(a, t)
        return float(t @ t) <= (D + _FEAS_SLACK) ** 2 and dd < gamma * nt

    def objective(t: np.ndarray) -> float:
        return _eval_single(a, t)[0]

    clip = _clip_to_ball(D)
    starts: list[np.ndarray] = []
    if np.any(strict):
        idx = np.flatnonzero(strict)
        order = idx[np.argsort(dist[idx], kind="stable")]
        starts.extend(pts[i] for i in order[:refine_seeds])
    else:
        # No binding grid point: chase the smallest gap dist - gamma ||t.a||
        # to see whether the binding set is just thinner than the grid.
        gap = np.where(norms <= D + _FEAS_SLACK, dist - gamma * norm_ta, math.inf)
        order = np.argsort(gap, kind="stable")[:refine_seeds]

        def gap_single(t: np.ndarray) -> float:
            dd, _, nt = _eval_single(a, t)
            return dd - gamma * nt

        def in_ball(t: np.ndarray) -> bool:
            return float(t @ t) <= (D + _FEAS_SLACK) ** 2

        for i in order:
            if not math.isfinite(gap[i]):
                continue
            t_ref, g = _pattern_search(pts[i], gap_single, in_ball,
                                       step0=max(cover, 1e-9),
                                       iters=refine_iters, clip=clip)
            if g < 0.0:
                starts.append(t_ref)

    best_val = math.inf
    best_t: np.ndarray | None = None
    for s in starts:
        s = clip(np.array(s, dtype=float))
        if not feasible(s):
            continue
        t_ref, val = _pattern_search(s, objective, feasible, step0=max(cover, 1e-9),
                                     iters=refine_iters, clip=clip)
        if val < best_val:
            best_val, best_t = val, t_ref

    if best_t is None:
        return ConditionMargin(D, math.inf, None, certified,
                               2 * cover / math.sqrt(a.d), vacuous=not np.any(inflated),
                               note="no binding direction found within D")
    dd, _, nt = _eval_single(a, best_t)
    assert dd < gamma * nt + 1e-10
    certified = min(certified, dd)
    return ConditionMargin(D, dd, tuple(float(x) for x in best_t), certified,
                           2 * cover / math.sqrt(a.d))


# ---------------------------------------------------------------------------
# Essential least common denominator
# ---------------------------------------------------------------------------


def _direction_set(d: int) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        angles = np.arange(128) * (2.0 * math.pi / 128)
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
    if d == 3:
        # Fibonacci sphere
        k = np.arange(512) + 0.5
        phi = math.pi * (1.0 + math.sqrt(5.0)) * k
        z = 1.0 - 2.0 * k / 512
        r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    rng = np.random.Generator(np.random.PCG64(0xD1CE))
    dirs = rng.standard_normal((1024, d))
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def essential_lcd(a: CoefficientMatrix, gamma: float, alpha: float,
                  scan_radius: float, *, grid_step: float | None = None,
                  refine_iters: int = 60) -> LcdResult:
    """Annular scan for the smallest ||t|| with
    dist(t.a, Z^n) <= min(gamma ||t.a||, alpha).

    The returned ``D_hat`` (norm of the refined witness) is an upper bound
    on the essential least common denominator.  The scan starts one grid
    step away from the origin: for gamma < 1 directions near zero satisfy
    dist = ||t.a|| > gamma ||t.a|| and cannot be feasible.
    """
    if not 0.0 < gamma < 1.0:
        raise DomainError("gamma must lie in (0, 1)")
    if not alpha > 0.0:
        raise DomainError("alpha must be positive")
    if not scan_radius > 0.0:
        raise DomainError("scan_radius must be positive")
    lip = math.sqrt(gram(a).lambda_max)
    if grid_step is None:
        grid_step = alpha / (10.0 * lip) if lip > 0 else scan_radius / 1000.0
        # keep the annulus count tractable
        grid_step = max(grid_step, scan_radius / 200_000.0)
    n_annuli = int(math.floor(scan_radius / grid_step + 1e-9))
    dirs = _direction_set(a.d)

    def feasible(t: np.ndarray) -> bool:
        dd, _, nt = _eval_single(a, t)
        return dd <= min(gamma * nt, alpha) + _FEAS_SLACK

    witness: np.ndarray | None = None
    block = max(1, 65536 // len(dirs))
    for lo in range(1, n_annuli + 1, block):
        radii = grid_step * np.arange(lo, min(lo + block, n_annuli + 1))
        pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, a.d)
        dist, _, norm_ta = _eval_points(a, pts)
        feas = dist <= np.minimum(gamma * norm_ta, alpha) + _FEAS_SLACK
        if np.any(feas):
            idx = np.flatnonzero(feas)
            # all feasible points of the first feasible annulus in this block
            first_annulus = idx[0] // len(dirs)
            on_first = idx[idx // len(dirs) == first_annulus]
            witness = pts[on_first[np.argmin(dist[on_first])]]
            candidates = [pts[i] for i in on_first[:8]]
            break
    else:
        return LcdResult(gamma, alpha, math.inf, None, scan_radius, grid_step, False)

    def norm_obj(t: np.ndarray) -> float:
        return math.sqrt(float(t @ t))

    best_t = witness
    best_norm = norm_obj(witness)
    for s in candidates:
        t_ref, val = _pattern_search(np.array(s, dtype=float), norm_obj, feasible,
                                     step0=grid_step, iters=refine_iters)
        if val < best_norm:
            best_norm, best_t = val, t_ref
    dd, _, nt = _eval_single(a, best_t)
    assert dd <= min(gamma * nt, alpha) + 1e-10
    return LcdResult(gamma, alpha, best_norm, tuple(float(x) for x in best_t),
                     scan_radius, grid_step, True)
