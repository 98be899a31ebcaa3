"""Joint array self-calibration and sparse DoA estimation.

Lifts the bilinear (calibration, signal) pair of the multi-snapshot
array model Y = diag(Bh) G X + N into a rank-one matrix, recovers it by
constrained group-sparse (l2,1) minimization with an optional SVD
problem reduction, and reads the DoAs off the recovered angular
spectrum.
"""

from .arrays import (
    ArrayConfig,
    MeasurementSet,
    Scene,
    build_dft_basis,
    build_grid_matrix,
    gen_scene,
    simulate,
    steering_vector,
)
from .estimator import LiftedDoAEstimator
from .groups import GroupStructure, group_norm, prox_group_l21
from .lifting import (
    DenseBudgetError,
    LiftedMatrix,
    LiftedOperator,
    PhiMatrix,
    apply_adjoint,
    apply_forward,
    build_phi,
    make_gtilde,
    unvec,
    vec,
)
from .recovery import (
    RecoveryResult,
    ReducedMeasurement,
    pick_doas,
    rank1_factor,
    recover_from_measurements,
    rmse,
    spectrum_from_lift,
    svd_reduce,
)
from .solver import (
    LiftedProblem,
    SolveReport,
    SolverOptions,
    project_ball,
    slow_oracle,
    solve_constrained,
    solve_regularized,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayConfig", "Scene", "MeasurementSet",
    "steering_vector", "build_grid_matrix", "build_dft_basis",
    "simulate", "gen_scene",
    "LiftedMatrix", "LiftedOperator", "PhiMatrix", "DenseBudgetError",
    "make_gtilde", "apply_forward", "apply_adjoint", "build_phi", "vec", "unvec",
    "GroupStructure", "group_norm", "prox_group_l21",
    "LiftedProblem", "SolverOptions", "SolveReport",
    "project_ball", "solve_constrained", "solve_regularized", "slow_oracle",
    "ReducedMeasurement", "RecoveryResult",
    "svd_reduce", "rank1_factor", "spectrum_from_lift", "pick_doas", "rmse",
    "recover_from_measurements",
    "LiftedDoAEstimator",
]
