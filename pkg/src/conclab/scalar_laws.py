"""One-dimensional laws of the i.i.d. weight X and their symmetrizations.

A scalar law is the common distribution of the weights X_k in the sum
sum_k X_k a_k.  Each law exposes a sampler and a characteristic function;
finite-discrete laws additionally expose their exact support.

The symmetrization Xt = X1 - X2 of a law is stored together with its
decomposition into an atom at zero plus dyadic shells

    C_0 = {|x| > 1},    C_j = {2^-j < |x| <= 2^-(j-1)},  j >= 1,

which carries everything needed for the truncated second moment

    M(tau) = E min(Xt^2 / tau^2, 1)

and for the shell weight beta = sum_j 4^-j p_j with its lower bound
beta >= M(1) / 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np
from scipy.integrate import quad
from scipy.special import erf

from .errors import DomainError

# Atoms closer than this merge during convolution; probabilities must sum
# to 1 within the same budget scaled by 100.
ATOM_MERGE_TOL = 1e-12
PROB_SUM_TOL = 1e-12
# Continuous shell decompositions stop once the residual central mass
# falls below this.
SHELL_RESIDUAL_TOL = 1e-12
_MAX_SHELLS = 200


def _as_float_array(t):
    return np.asarray(t, dtype=float)


@dataclass(frozen=True)
class FiniteLaw:
    """Discrete law with finitely many atoms.

    ``atoms`` are strictly increasing; ``probs`` are nonnegative and sum
    to 1 within ``PROB_SUM_TOL`` (they are renormalized on construction).
    """

    atoms: tuple[float, ...]
    probs: tuple[float, ...]
    label: str = "finite"

    def __post_init__(self):
        if len(self.atoms) == 0 or len(self.atoms) != len(self.probs):
            raise DomainError("finite law needs matching, nonempty atoms and probs")
        a = np.asarray(self.atoms, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if not np.all(np.isfinite(a)):
            raise DomainError("atoms must be finite")
        if np.any(p < -PROB_SUM_TOL):
            raise DomainError("probabilities must be nonnegative")
        total = float(p.sum())
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise DomainError(f"probabilities sum to {total!r}, not 1")
        if np.any(np.diff(a) <= 0):
            raise DomainError("atoms must be strictly increasing")
        object.__setattr__(self, "atoms", tuple(float(x) for x in a))
        object.__setattr__(self, "probs", tuple(float(x) / total for x in p))

    @cached_property
    def _atom_arr(self) -> np.ndarray:
        return np.asarray(self.atoms, dtype=float)

    @cached_property
    def _prob_arr(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    @property
    def is_finite(self) -> bool:
        return True

    @property
    def support(self) -> tuple[float, ...]:
        return self.atoms

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = rng.choice(len(self.atoms), size=size, p=self._prob_arr)
        return self._atom_arr[idx]

    def charfn(self, t):
        """E exp(i t X) = sum_k p_k exp(i t x_k)."""
        tt = _as_float_array(t)
        val = np.exp(1j * tt[..., None] * self._atom_arr) @ self._prob_arr
        return complex(val) if np.isscalar(t) or tt.ndim == 0 else val


@dataclass(frozen=True)
class GaussianLaw:
    mean: float
    stddev: float
    label: str = "gaussian"

    def __post_init__(self):
        if not (math.isfinite(self.mean) and self.stddev > 0):
            raise DomainError("gaussian law needs finite mean and stddev > 0")

    @property
    def is_finite(self) -> bool:
        return False

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.normal(self.mean, self.stddev, size=size)

    def charfn(self, t):
        tt = _as_float_array(t)
        val = np.exp(1j * self.mean * tt - 0.5 * (self.stddev * tt) ** 2)
        return complex(val) if np.isscalar(t) or tt.ndim == 0 else val

    def pdf(self, x):
        z = (_as_float_array(x) - self.mean) / self.stddev
        return np.exp(-0.5 * z * z) / (self.stddev * math.sqrt(2.0 * math.pi))

    def prob_abs_le(self, r: float) -> float:
        """P(|X| <= r); only meaningful for the centered symmetrized case."""
        if self.mean != 0.0:
            raise DomainError("prob_abs_le requires a centered law")
        return float(erf(r / (self.stddev * math.sqrt(2.0))))


@dataclass(frozen=True)
class UniformLaw:
    lo: float
    hi: float
    label: str = "uniform"

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise DomainError("uniform law needs lo < hi, both finite")

    @property
    def is_finite(self) -> bool:
        return False

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=size)

    def charfn(self, t):
        tt = _as_float_array(t)
        half_width = 0.5 * (self.hi - self.lo)
        center = 0.5 * (self.hi + self.lo)
        # sin(hw*t)/(hw*t) via np.sinc, which is sin(pi x)/(pi x)
        val = np.exp(1j * center * tt) * np.sinc(half_width * tt / math.pi)
        return complex(val) if np.isscalar(t) or tt.ndim == 0 else val

    def pdf(self, x):
        xx = _as_float_array(x)
        inside = (xx >= self.lo) & (xx <= self.hi)
        return np.where(inside, 1.0 / (self.hi - self.lo), 0.0)


@dataclass(frozen=True)
class TriangularLaw:
    """Symmetric triangular law on [-width, width].

    This is the law of U1 - U2 for independent U_i uniform on an interval
    of length ``width``; it only ever arises as a symmetrization output.
    """

    width: float
    label: str = "triangular"

    def __post_init__(self):
        if not (math.isfinite(self.width) and self.width > 0):
            raise DomainError("triangular law needs width > 0")

    @property
    def is_finite(self) -> bool:
        return False

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(0.0, self.width, size=size) - rng.uniform(0.0, self.width, size=size)

    def charfn(self, t):
        tt = _as_float_array(t)
        val = np.sinc(0.5 * self.width * tt / math.pi) ** 2 + 0j
        return complex(val) if np.isscalar(t) or tt.ndim == 0 else val

    def pdf(self, x):
        xx = np.abs(_as_float_array(x))
        return np.where(xx <= self.width, (self.width - xx) / self.width**2, 0.0)

    def prob_abs_le(self, r: float) -> float:
        if r <= 0.0:
            return 0.0
        if r >= self.width:
            return 1.0
        return 1.0 - (1.0 - r / self.width) ** 2


ScalarLaw = Union[FiniteLaw, GaussianLaw, UniformLaw, TriangularLaw]


def rademacher() -> FiniteLaw:
    """Fair +-1 law."""
    return FiniteLaw((-1.0, 1.0), (0.5, 0.5), label="rademacher")


def lazy_rademacher(hold_prob: float) -> FiniteLaw:
    """+-1 with equal probability, except the walk holds at 0 with ``hold_prob``."""
    if not 0.0 <= hold_prob < 1.0:
        raise DomainError("hold probability must lie in [0, 1)")
    half = 0.5 * (1.0 - hold_prob)
    return FiniteLaw((-1.0, 0.0, 1.0), (half, hold_prob, half), label="lazy-rademacher")


def point_mass(x: float) -> FiniteLaw:
    return FiniteLaw((float(x),), (1.0,), label="point")


# ---------------------------------------------------------------------------
# Symmetrization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Shell:
    """One dyadic shell of a symmetrized law.

    ``conditional`` is the law of Xt restricted to the shell (exact for
    finite-discrete bases; ``None`` for continuous bases, where no closed
    form exists and nothing downstream consumes it).
    """

    index: int
    prob: float
    conditional: FiniteLaw | None = None


@dataclass(frozen=True)
class SymmetrizedLaw:
    """Law of Xt = X1 - X2 with its dyadic shell decomposition.

    ``base`` is the law of Xt itself, ``q`` the atom at 0, and ``shells``
    the nonempty shells.  ``beta`` is sum_j 4^-j p_j.
    """

    base: ScalarLaw
    q: float
    shells: tuple[Shell, ...]
    beta: float = field(init=False)

    def __post_init__(self):
        total = self.q + math.fsum(s.prob for s in self.shells)
        if abs(total - 1.0) > 1e-10:
            raise DomainError(f"atom plus shell masses sum to {total!r}, not 1")
        b = math.fsum(4.0 ** (-s.index) * s.prob for s in self.shells)
        object.__setattr__(self, "beta", b)

    @property
    def prob_nonzero(self) -> float:
        """P(Xt != 0), the tau->0 limit of M(tau)."""
        return 1.0 - self.q

    def charfn(self, t):
        return self.base.charfn(t)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.base.sample(rng, size)


def _merge_atoms(values: np.ndarray, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort atoms and coalesce runs closer than ATOM_MERGE_TOL."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    p = probs[order]
    if len(v) == 1:
        return v, p
    starts = np.flatnonzero(np.concatenate(([True], np.diff(v) > ATOM_MERGE_TOL)))
    merged_p = np.add.reduceat(p, starts)
    return v[starts], merged_p


def _shell_index(abs_x: float) -> int:
    """Dyadic shell of |x| > 0: 0 for |x| > 1, else j with 2^-j < |x| <= 2^-(j-1)."""
    if abs_x > 1.0:
        return 0
    m, e = math.frexp(abs_x)  # abs_x = m * 2^e with m in [0.5, 1)
    return 2 - e if m == 0.5 else 1 - e


def _finite_symmetrized(base: FiniteLaw) -> SymmetrizedLaw:
    a = np.asarray(base.atoms)
    p = np.asarray(base.probs)
    diffs = (a[:, None] - a[None, :]).ravel()
    prob = (p[:, None] * p[None, :]).ravel()
    vals, probs = _merge_atoms(diffs, prob)

    q = 0.0
    buckets: dict[int, tuple[list[float], list[float]]] = {}
    for x, px in zip(vals, probs):
        if abs(x) <= ATOM_MERGE_TOL:
            q += px
            continue
        j = _shell_index(abs(x))
        xs, ps = buckets.setdefault(j, ([], []))
        xs.append(float(x))
        ps.append(float(px))
    shells = []
    for j in sorted(buckets):
        xs, ps = buckets[j]
        mass = math.fsum(ps)
        cond = FiniteLaw(tuple(xs), tuple(pk / mass for pk in ps))
        shells.append(Shell(j, mass, cond))
    sym_base = FiniteLaw(tuple(vals), tuple(probs), label="symmetrized")
    return SymmetrizedLaw(sym_base, q, tuple(shells))


def _continuous_symmetrized(base: GaussianLaw | TriangularLaw) -> SymmetrizedLaw:
    """Shell decomposition by CDF differences, truncated at negligible mass."""
    p0 = 1.0 - base.prob_abs_le(1.0)
    shells = [Shell(0, p0)] if p0 > 0.0 else []
    hi = base.prob_abs_le(1.0)
    for j in range(1, _MAX_SHELLS + 1):
        lo = base.prob_abs_le(2.0**-j)
        pj = hi - lo
        if pj > 0.0:
            shells.append(Shell(j, pj))
        hi = lo
        if lo < SHELL_RESIDUAL_TOL:
            break
    # Residual central mass below SHELL_RESIDUAL_TOL is folded into the
    # innermost shell so the decomposition stays a partition.
    defect = 1.0 - math.fsum(s.prob for s in shells)
    if shells and defect > 0.0:
        last = shells[-1]
        shells[-1] = Shell(last.index, last.prob + defect)
    return SymmetrizedLaw(base, 0.0, tuple(shells))


def symmetrize(law: ScalarLaw) -> SymmetrizedLaw:
    """Law of X1 - X2 for independent copies of ``law``, with shells populated.

    Finite-discrete laws convolve exactly; gaussian and uniform use the
    closed forms (gaussian with stddev scaled by sqrt(2); the symmetric
    triangular law).
    """
    if isinstance(law, FiniteLaw):
        return _finite_symmetrized(law)
    if isinstance(law, GaussianLaw):
        return _continuous_symmetrized(GaussianLaw(0.0, law.stddev * math.sqrt(2.0)))
    if isinstance(law, UniformLaw):
        return _continuous_symmetrized(TriangularLaw(law.hi - law.lo))
    raise DomainError(f"cannot symmetrize law of kind {type(law).__name__}")


def m_of_tau(sym: SymmetrizedLaw, tau: float) -> float:
    """Truncated second moment E min(Xt^2 / tau^2, 1) of a symmetrized law.

    Exact for finite-discrete bases; adaptive quadrature (absolute
    tolerance 1e-10) plus an exact tail otherwise.
    """
    if not tau > 0.0:
        raise DomainError("tau must be positive")
    base = sym.base
    if isinstance(base, FiniteLaw):
        a = np.asarray(base.atoms)
        p = np.asarray(base.probs)
        ratio = np.minimum((a / tau) ** 2, 1.0)
        return float(np.clip(ratio @ p, 0.0, 1.0))
    cut = tau if isinstance(base, GaussianLaw) else min(tau, base.width)
    body, _ = quad(lambda x: x * x * float(base.pdf(x)), -cut, cut,
                   epsabs=1e-12, limit=200)
    tail = 1.0 - base.prob_abs_le(tau)
    return float(np.clip(body / tau**2 + tail, 0.0, 1.0))


def beta(sym: SymmetrizedLaw) -> float:
    """Dyadic shell weight sum_j 4^-j p_j; at least M(1)/4."""
    return math.fsum(4.0 ** (-s.index) * s.prob for s in sym.shells)
