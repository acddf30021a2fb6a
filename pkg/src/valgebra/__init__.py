"""Translation-invariant valuations on polytopes.

Mixed volumes, the convolution algebra of mixed-volume valuations, norms,
dynamical degrees of linear maps and a variational Minkowski-type solver.
"""
from .arith import EXACT, FLOAT, MixedArithmeticError, arithmetic, get_mode, set_mode
from .geometry import (
    LinearMap,
    Polytope,
    ReferenceBody,
    apply_linear_map,
    ball_polytope,
    box,
    cross_polytope,
    cube,
    hausdorff_distance,
    minkowski_sum,
    point,
    segment,
    simplex,
)
from .mixed import af_margin, containment_scale, mixed_volume, mixed_volume_by_interpolation, volume_polynomial
from .valuation import (
    PAPER,
    UNIT,
    Valuation,
    certify_strict_positivity,
    cone_norm,
    convolve,
    evaluate,
    even_odd_split,
    group_action,
    p_norm_estimate,
    p_norm_upper,
    polarized_evaluate,
    scalar,
)
from .dynamics import (
    PreconditionError,
    dynamical_degree_empirical,
    dynamical_degree_spectral,
    invariant_valuation,
    log_concavity_report,
    relative_dynamical_degree,
    vanishing_check,
)
from .minkowski import (
    SolverConfig,
    classical_minkowski_2d,
    multistart_solution_set,
    stationarity_residual,
    variational_minimize,
)

__version__ = "0.1.0"
