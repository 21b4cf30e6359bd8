"""conclab: a numerical laboratory for concentration functions of weighted sums.

Everything revolves around S_a = sum_k X_k a_k for i.i.d. scalar weights
X_k and coefficient rows a_k in R^d: exact and Monte Carlo estimates of
the concentration function Q(F_a, lambda), the arithmetic-structure
functionals of the coefficient multivector (Gram determinant, lattice
distances, condition margins, essential least common denominator),
characteristic-function ball integrals, and the catalog of concentration
bounds these quantities plug into.
"""

from .arithmetic_structure import (
    ConditionMargin,
    LcdResult,
    condition_margin,
    condition_margin_4d,
    essential_lcd,
)
from .bound_catalog import (
    BoundReport,
    ComparisonRow,
    ConstantsPolicy,
    compare,
    cor1_bound,
    cor2_bound,
    cor3_bound,
    cor4_bound,
    default_policy,
    fs_bound,
    kr_bound,
    load_policy,
    rv_bound,
    siegel_bound,
    thm1_bound,
    thm2_bound,
)
from .charfn_integrals import (
    BallIntegral,
    ball_integral,
    cf_H,
    cf_weighted_sum,
    esseen_lower,
    esseen_upper,
    vol_ball,
)
from .coefficients import (
    CoefficientMatrix,
    GramMatrix,
    arith,
    check_identity_4s,
    gram,
    lattice_dist,
    ones,
    project,
    random_sphere,
)
from .concentration import ConcentrationEstimate, ScanRow, exact_q, mc_q, q_ratio_scan
from .errors import CapacityError, ConfigError, DomainError
from .scalar_laws import (
    FiniteLaw,
    GaussianLaw,
    Shell,
    SymmetrizedLaw,
    TriangularLaw,
    UniformLaw,
    beta,
    lazy_rademacher,
    m_of_tau,
    point_mass,
    rademacher,
    symmetrize,
)

__version__ = "0.1.0"

__all__ = [
    "BallIntegral",
    "BoundReport",
    "CapacityError",
    "CoefficientMatrix",
    "ComparisonRow",
    "ConcentrationEstimate",
    "ConditionMargin",
    "ConfigError",
    "ConstantsPolicy",
    "DomainError",
    "FiniteLaw",
    "GaussianLaw",
    "GramMatrix",
    "LcdResult",
    "ScanRow",
    "Shell",
    "SymmetrizedLaw",
    "TriangularLaw",
    "UniformLaw",
    "arith",
    "ball_integral",
    "beta",
    "cf_H",
    "cf_weighted_sum",
    "check_identity_4s",
    "compare",
    "condition_margin",
    "condition_margin_4d",
    "cor1_bound",
    "cor2_bound",
    "cor3_bound",
    "cor4_bound",
    "default_policy",
    "esseen_lower",
    "esseen_upper",
    "essential_lcd",
    "exact_q",
    "fs_bound",
    "gram",
    "kr_bound",
    "lattice_dist",
    "lazy_rademacher",
    "load_policy",
    "m_of_tau",
    "mc_q",
    "ones",
    "point_mass",
    "project",
    "q_ratio_scan",
    "rademacher",
    "random_sphere",
    "rv_bound",
    "siegel_bound",
    "symmetrize",
    "thm1_bound",
    "thm2_bound",
    "vol_ball",
]
