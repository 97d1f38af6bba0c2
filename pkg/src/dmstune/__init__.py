"""Joint piecewise-smooth denoising and contour detection with
automatic selection of the two regularization weights."""

from .errors import (
    ConfigError,
    DegenerateInputError,
    DivergenceError,
    DmsError,
    InvalidDimensionError,
    JacobianOverflowError,
    ShapeError,
)
from .grid import DifferenceOperator, HyperParams, edge_count, make_difference_operator
from .hyperopt import (
    OptimConfig,
    OptimTrace,
    default_grid,
    grid_search,
    init_hyperparams,
    init_inverse_hessian,
    save_risk_map,
    sugar_descent,
)
from .imageio import read_image, read_pgm, write_image, write_pgm
from .jacobian import DiffSolveResult, JacobianPair, diff_slpam_solve
from .noise import NoiseModel, add_noise, estimate_sigma_mad, psnr, quadratic_error
from .phantoms import Phantom, make_phantom
from .solver import (
    SolveResult,
    SolverConfig,
    grad_u_g,
    objective,
    prox_data,
    slpam_solve,
    soft_threshold,
)
from .stein import (
    MonteCarloSet,
    RiskEval,
    SteinConfig,
    averaged_risk,
    averaged_sure,
    draw_probes,
    fd_step,
    make_diff_solver,
    make_solver,
    sugar_fdmc,
    sure_fdmc,
)

__version__ = "0.1.0"
