"""Analytic deep prior solvers for linear ill-posed problems.

Exact reconstructions via the equivalent Ivanov problem, gradient descent
over the forward operator with implicit-function-theorem gradients, deep
image prior with LISTA networks, and constructive checks of which points an
operator can make optimal.
"""

from ._kernels import BACKEND
from .adp_iterative import (
    EarlyStop,
    IftConfig,
    adp_beta_param_solve,
    adp_ift_solve,
    bregman_distance,
    ift_gradient,
    kernel_data_gradient,
    outer_loss,
)
from .dip_lista import ListaNet, dip_lista_inf_solve, dip_lista_solve, lista_backward, lista_forward
from .errors import (
    AdpLabError,
    DivergenceError,
    InconsistentInputError,
    InfeasibleError,
    InvalidDimensionError,
    InvalidInputError,
    InvalidParameterError,
    InvalidSubgradientError,
    NoConvergenceError,
    SingularSystemError,
)
from .lemma_lab import (
    RankTwoOperator,
    check_feasibility,
    construct_rank_two_operator,
    equivalent_tikhonov_parameter,
    nonconvex_feasible_set_demo,
    verify_minimizer,
)
from .operators import (
    KernelParam,
    LinearOp,
    Signal,
    convolution_operator,
    gaussian_kernel,
    make_convolution_operator,
    make_integration_operator,
    operator_norm,
)
from .penalties import (
    ElasticNet,
    SquaredL2,
    min_subgradient,
    penalty_value,
    prox,
    soft_threshold,
    subgradient_pairing,
)
from .variational import (
    AdpProblem,
    IstaConfig,
    SolveReport,
    StopReason,
    adp_exact_solve,
    ivanov_solve,
    solve_inner,
    tikhonov_l2_solve,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "EarlyStop",
    "IftConfig",
    "adp_beta_param_solve",
    "adp_ift_solve",
    "bregman_distance",
    "ift_gradient",
    "kernel_data_gradient",
    "outer_loss",
    "ListaNet",
    "dip_lista_inf_solve",
    "dip_lista_solve",
    "lista_backward",
    "lista_forward",
    "AdpLabError",
    "DivergenceError",
    "InconsistentInputError",
    "InfeasibleError",
    "InvalidDimensionError",
    "InvalidInputError",
    "InvalidParameterError",
    "InvalidSubgradientError",
    "NoConvergenceError",
    "SingularSystemError",
    "RankTwoOperator",
    "check_feasibility",
    "construct_rank_two_operator",
    "equivalent_tikhonov_parameter",
    "nonconvex_feasible_set_demo",
    "verify_minimizer",
    "KernelParam",
    "LinearOp",
    "Signal",
    "convolution_operator",
    "gaussian_kernel",
    "make_convolution_operator",
    "make_integration_operator",
    "operator_norm",
    "ElasticNet",
    "SquaredL2",
    "min_subgradient",
    "penalty_value",
    "prox",
    "soft_threshold",
    "subgradient_pairing",
    "AdpProblem",
    "IstaConfig",
    "SolveReport",
    "StopReason",
    "adp_exact_solve",
    "ivanov_solve",
    "solve_inner",
    "tikhonov_l2_solve",
]
