"""nestquad: full and sparse tensor-product quadrature for nested integrals.

Core pieces: 1-D quadrature rules (``rules1d``), leveled d-dimensional
cubature families (``cubature``), the combined full/sparse tensor-product
quadratures with their balancing plan (``stp``), benchmark integrands
from discrete-choice econometrics (``models``) and the convergence-study
CLI (``harness``).
"""
from .backends import active_backend
from .cubature import (
    CubatureFamily,
    Domain,
    PointSet,
    cc_rules,
    gauss_rules,
    gengauss_rules,
    frolov_points,
    halton_points,
    make_family,
    mc_points,
    optimal_weights,
    product_points,
    smolyak_points,
    sobol_points,
)
from .models import (
    EquiCorrMatrix,
    MixedLogitSpec,
    MixedProbitSpec,
    ProbitSpec,
    genz_factors,
    logit_kernel,
    mixed_logit_integrand,
    mixed_logit_ml_integrand,
    mixed_probit_integrand,
    mnp_gmm_integrand,
    mnp_probability_integrand,
    synthetic_exact_value,
    synthetic_integrand,
    tangens_wrapped,
)
from .rules1d import (
    Psi,
    Rule1D,
    WeightedInterval,
    clenshaw_curtis,
    gauss_rule,
    generalized_gauss,
    normal_cdf,
    normal_icdf,
)
from .stp import (
    IndexSet,
    NestedIntegrand,
    SigmaPlan,
    TensorQuadResult,
    delta2,
    ftp_quadrature,
    index_set,
    inner_eval,
    literal_tensor_sum,
    node_count,
    sigma_plan,
    stp_quadrature,
)

__version__ = "0.1.0"
