"""Quadrature with respect to binomial measures on [0, 1]."""

from .composite import (
    CompositeResult,
    ConvergenceHistory,
    DyadicPartition,
    StopConfig,
    composite_eval,
    convergence_history,
    local_apply,
    measure_order,
    run_composite,
)
from .error_model import (
    ErrorConstants,
    gl2_error_constant,
    nc2_k_constants,
    nodal_polynomial,
    peano_constant,
    taylor_error_bound,
)
from .measure import (
    Alpha,
    DyadicInterval,
    MomentCache,
    density_at,
    dyadic_mass,
    dyadic_moment,
    moment,
    ones_count,
    reference_integral,
)
from .rules import (
    FAMILIES,
    DomainError,
    EvaluationError,
    QuadratureRule,
    apply_rule,
    build_rule,
    extrapolated,
    interpolatory_weights,
    verify_degree,
)

__version__ = "0.1.0"
