"""q-integral Kantorovich-type operators on multivariate q-Lagrange polynomials.

Evaluation engines for the operators, their moment bounds, and the
statistical and power-series summability tools used to study convergence.
"""

from .gridfunction import GridFunction, builtin
from .lagrange import coefficient_sequence, generating_function_residual, lagrange_polynomial
from .moments import (
    MomentReport,
    corrected_lemma1_bounds,
    exact_moment,
    gamma_bound,
    lemma1_bounds,
    modulus_of_continuity,
    moment_report,
    rate_bound,
)
from .operators import (
    EvalResult,
    OperatorSpec,
    SequenceSpec,
    Truncation,
    TruncationWarning,
    evaluate_classical,
    evaluate_K,
    evaluate_K_grid,
    evaluate_P_auxiliary,
    evaluate_S,
    node_functional_K,
)
from .qcore import QIntegralBounds, q_integer, q_pochhammer, q_riemann_integral, q_riemann_monomial
from .summability import (
    PowerSeriesMethod,
    SummabilityScheme,
    a_statistical_tail,
    deferred_weighted_A_density,
    deferred_weighted_mean,
    power_series_limit_estimate,
    power_series_transform,
    prefix_density,
    regularity_ratio,
    squares_indicator,
    weighted_statistical_density,
)

__version__ = "0.1.0"
