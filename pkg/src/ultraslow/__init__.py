"""Distributed-order Caputo derivatives and ultraslow relaxation.

The main entry points are re-exported here; see the submodules for the
full interfaces.
"""

__version__ = "0.1.0"

from .exceptions import (
    BelowValidity,
    BracketFailure,
    DegenerateFit,
    InvalidWeight,
    NoConvergence,
    NonIntegrable,
    NotSPD,
    QuadratureDivergence,
    SolveFailure,
    UltraslowError,
    ZeroMass,
)
from .weight import WeightFunction, from_spec
from .laplace import KernelPair, branch_cut_ilt, g_kernel, k_kernel, kernel_pair, phi, sonine_convolution
from .relaxation import (
    L1Operator,
    RelaxationSolution,
    distributed_caputo,
    normalization_check,
    solve_integral,
    solve_l1,
    solve_series,
)
from .decay import DecayBound, evaluate_bound, fit_power_exponent, verify_bound
from .mloracle import mittag_leffler_neg, single_order_limit_gap
from .diffusion import GalerkinState, SpectralProblem, march

__all__ = [name for name in dir() if not name.startswith("_")]
