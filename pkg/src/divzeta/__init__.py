"""divzeta: exact zeta functions of divisors on projective toric varieties.

Counts effective divisors by degree with exact arithmetic, fits the
Riemann-Roch section counts as quasi-polynomials, decomposes the resulting
lattice sums into rational factors plus certified entire p-adic series, and
certifies pole order and special value at T = 1.
"""

from .ehrhart import (
    MultivariateQuasiPolynomial,
    QuasiPolynomial,
    fit_multivariate_qp,
    fit_quasi_polynomial,
    fit_with_period_search,
    qp_from_json,
    qp_to_json,
    validate_qp,
)
from .intlinalg import (
    FinAbGroupPresentation,
    IntMatrix,
    SnfDecomposition,
    cokernel,
    smith_normal_form,
    solve_preimage,
)
from .padic import (
    CertifiedSeries,
    NewtonPolygon,
    PadicScalar,
    check_quadratic_bound,
    eval_entire,
    newton_polygon,
)
from .polynomial import Poly
from .toric import (
    EffectiveClass,
    Fan,
    RationalPolytope,
    TorusDivisor,
    ToricVarietyModel,
    count_lattice_points,
    divisor_class_group,
    effective_generators,
    enumerate_effective_classes,
    make_model,
    polytope_of_divisor,
    sections_dim,
    validate_fan,
)
from .zeta import (
    ConeDecomposition,
    IncreasingPolynomial,
    MeromorphicPart,
    PoleReport,
    ZESeriesTerm,
    ZetaTruncation,
    check_increasing,
    class_count_series,
    cone_decomposition,
    evaluate_meromorphic,
    pole_analysis,
    reduce_to_mero_parts,
    triangular_substitute,
    wan_reduction,
    ze_terms_to_mero,
    zeta_coefficients,
)

__all__ = [name for name in dir() if not name.startswith("_")]
