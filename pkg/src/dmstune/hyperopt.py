"""Automated hyperparameter selection and the grid-search oracle.

The outer loop minimizes the probe-averaged risk estimate over
(beta, lam) with a projected limited-memory BFGS driven by the averaged
risk gradient.  The descent runs on (log beta, log lam) to respect
positivity and the logarithmic geometry of the risk landscape; the
model-based initial inverse Hessian is formed in the original
coordinates and transported to log coordinates.
"""

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, DivergenceError
from .grid import HyperParams
from .noise import quadratic_error
from .solver import slpam_solve
from .stein import averaged_risk, averaged_sure, draw_probes, make_diff_solver, make_solver

__all__ = [
    "OptimConfig",
    "OptimTrace",
    "init_hyperparams",
    "init_inverse_hessian",
    "sugar_descent",
    "default_grid",
    "grid_search",
    "save_risk_map",
]

THETA_MIN = 1e-12  # box constraint floor for both hyperparameters
THETA_MAX = 1e12  # ceiling keeping exp(log theta) finite during step probing
DEFAULT_BETA_RANGE = (1e-2, 1e3)
DEFAULT_LAMBDA_RANGE = (1e-4, 1e1)


@dataclass(frozen=True)
class OptimConfig:
    t_max: int = 20
    grad_tol: float = 1e-8
    kappa: float = 0.9
    memory: int = 10
    ls_shrink: float = 0.5
    ls_decrease: float = 1e-4
    ls_max_trials: int = 30

    def __post_init__(self):
        if self.t_max <= 0 or self.grad_tol <= 0 or self.memory <= 0:
            raise ValueError("t_max, grad_tol, memory must be positive")
        if not 0 < self.kappa < 1:
            raise ValueError("kappa must lie in (0, 1)")


@dataclass
class OptimTrace:
    """Accepted iterates (theta, risk value, risk gradient) and exit cause."""

    iterates: list = field(default_factory=list)
    termination_reason: str = ""


def init_hyperparams(z, sigma, op):
    """Model-based starting point for the descent.

    beta0 = N * sigma * ||Dz||^2 / 4,  lam0 = beta0 * ||Dz||^2 / (2N).
    """
    dz_sq = float(np.sum(op.apply(z) ** 2))
    if dz_sq == 0.0:
        raise DegenerateInputError("constant image: initialization degenerates")
    n = z.size
    beta0 = n * sigma * dz_sq / 4.0
    lam0 = beta0 * dz_sq / (2.0 * n)
    return HyperParams(beta0, lam0)


def init_inverse_hessian(theta0, grad0, kappa):
    """Initial diagonal inverse Hessian |kappa*theta0_i / grad0_i|.

    A zero gradient component falls back to identity scaling on that
    axis.
    """
    t = np.array([theta0.beta, theta0.lam])
    g = np.asarray(grad0, dtype=float)
    diag = np.where(g != 0.0, np.abs(kappa * t / np.where(g == 0.0, 1.0, g)), 1.0)
    return np.diag(diag)


def _two_loop(grad, s_list, y_list, h0_diag):
    """L-BFGS two-loop recursion; returns a descent direction."""
    q = grad.copy()
    alphas = []
    rhos = [1.0 / float(y @ s) for s, y in zip(s_list, y_list)]
    for s, y, rho in zip(reversed(s_list), reversed(y_list), reversed(rhos)):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    if s_list:
        s, y = s_list[-1], y_list[-1]
        q *= float(s @ y) / float(y @ y)
    else:
        q = h0_diag * q
    for (s, y, rho), a in zip(zip(s_list, y_list, rhos), reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return -q


def sugar_descent(z, cfg, opt_cfg, solver_cfg, op=None, probes=None, risk_fn=None):
    """Minimize the averaged risk estimate over (beta, lam).

    Probes are drawn once from ``cfg.seed`` (unless supplied) and kept
    fixed for the whole run.  Returns the best accepted hyperparameters
    and the trace of accepted iterates.

    ``risk_fn(theta) -> (value, gradient)`` replaces the averaged
    estimator when given (used to exercise the descent loop on
    objectives with known minimizers).
    """
    if op is None:
        from .grid import make_difference_operator

        op = make_difference_operator(*z.shape)
    if probes is None:
        probes = draw_probes(op.height, op.width, cfg.replicates, cfg.seed)

    def evaluate(x):
        theta = HyperParams(float(np.exp(x[0])), float(np.exp(x[1])))
        if risk_fn is not None:
            value, grad = risk_fn(theta)
            grad = np.asarray(grad, dtype=float)
        else:
            diff_solver = make_diff_solver(theta, solver_cfg, op)
            ev = averaged_risk(z, theta, cfg, probes, diff_solver)
            value, grad = ev.sure, ev.sugar
        # chain rule: d/d(log t) = t * d/dt
        return theta, value, grad, grad * theta.as_array()

    theta0 = init_hyperparams(z, cfg.sigma, op)
    x = np.log(theta0.as_array())
    x_min = np.log(THETA_MIN)
    x_max = np.log(THETA_MAX)
    theta, f, sugar, g = evaluate(x)

    h0_theta = np.diag(init_inverse_hessian(theta0, sugar, opt_cfg.kappa))
    h0_diag = h0_theta / theta0.as_array() ** 2  # transport to log coordinates

    trace = OptimTrace(iterates=[(theta, f, sugar.copy())])
    s_list, y_list = [], []
    reason = "tMax"

    def value_at(x_new):
        theta_v = HyperParams(float(np.exp(x_new[0])), float(np.exp(x_new[1])))
        if risk_fn is not None:
            return float(risk_fn(theta_v)[0])
        try:
            return averaged_sure(
                z, theta_v, cfg, probes, make_solver(theta_v, solver_cfg, op)
            )
        except DivergenceError:
            # an extreme probe point is simply a bad trial, not a failure
            return float("inf")

    def escape_probe():
        # Support flips carve micro basins into the surface: every small
        # step looks uphill even when the surface falls away a short
        # distance out.  Probe fixed-length steps in log coordinates
        # (values only, no derivatives) and return the best point that
        # clears the current value by a meaningful margin.
        dirs = [
            np.array([db, dl], dtype=float)
            for db in (-1.0, 0.0, 1.0)
            for dl in (-1.0, 0.0, 1.0)
            if (db, dl) != (0.0, 0.0)
        ]
        dirs = [d / np.linalg.norm(d) for d in dirs]
        gn = np.linalg.norm(g)
        if gn > 0.0:
            dirs.sort(key=lambda d: float(d @ g) / gn)  # downhill first
        for length in (0.5, 1.0, 2.0):
            best = None
            for d in dirs:
                x_try = np.clip(x + length * d, x_min, x_max)
                if np.all(x_try == x):
                    continue
                val = value_at(x_try)
                if val < f - 1e-4 * abs(f) and (best is None or val < best[1]):
                    best = (x_try, val)
            if best is not None:
                d = best[0] - x
                d /= np.linalg.norm(d)
                for longer in (2.0 * length, 4.0 * length):
                    x_try = np.clip(x + longer * d, x_min, x_max)
                    val = value_at(x_try)
                    if val >= best[1]:
                        break
                    best = (x_try, val)
                return best[0]
        return None

    def try_point(p, alpha):
        # trials are screened on values alone; the (far costlier)
        # differentiated solve runs once, at the accepted point
        x_new = np.clip(x + alpha * p, x_min, x_max)
        step = x_new - x
        if np.all(step == 0.0):
            return None
        val = value_at(x_new)
        armijo = val <= f + opt_cfg.ls_decrease * float(g @ step)
        return x_new, val, armijo

    def line_search(p):
        # Armijo backtracking, then step expansion: the risk surface is
        # only piecewise smooth and has long shallow plateaus, so once a
        # step is accepted we keep doubling it while the value drops.
        alpha, fallback = 1.0, None
        for _ in range(opt_cfg.ls_max_trials):
            trial = try_point(p, alpha)
            if trial is None:
                break
            x_new, val, armijo = trial
            if armijo:
                while True:
                    bigger = try_point(p, alpha * 2.0)
                    if bigger is None or not bigger[2] or bigger[1] >= val:
                        break
                    alpha *= 2.0
                    x_new, val, _ = bigger
                return x_new, val
            # best strictly (meaningfully) decreasing trial, kept as a
            # fallback so a kink in the surface does not stall the run
            if val < f - 1e-8 * abs(f) and (fallback is None or val < fallback[1]):
                fallback = (x_new, val)
            alpha *= opt_cfg.ls_shrink
        if fallback is None or fallback[1] > f - 1e-4 * abs(f):
            # the surface is rugged at the scale of small steps (micro
            # minima from contour-support flips); when small steps yield no
            # meaningful decrease, scan outward before settling
            alpha = 2.0
            for _ in range(8):
                trial = try_point(p, alpha)
                if trial is not None and trial[1] < f - 1e-8 * abs(f):
                    if fallback is not None and trial[1] >= fallback[1]:
                        break
                    fallback = (trial[0], trial[1])
                elif fallback is not None:
                    break
                alpha *= 2.0
        return fallback

    escape_budget = 2
    for _ in range(opt_cfg.t_max):
        if np.linalg.norm(sugar) <= opt_cfg.grad_tol:
            reason = "gradTol"
            break
        grad_dir = -h0_diag * g
        p = _two_loop(g, s_list, y_list, h0_diag)
        if (
            float(g @ p) >= 0.0  # not a descent direction
            or np.linalg.norm(p) < 1e-6 * np.linalg.norm(grad_dir)  # degenerate
        ):
            s_list.clear()
            y_list.clear()
            p = grad_dir
        accepted = line_search(p)
        if accepted is None and s_list:
            # stale curvature pairs; restart from the preconditioned gradient
            s_list.clear()
            y_list.clear()
            accepted = line_search(grad_dir)
        stalled = accepted is None
        if accepted is not None:
            x_new = accepted[0]
            theta_new, f_new, sugar_new, g_new = evaluate(x_new)
            stalled = f - f_new < 1e-4 * abs(f)
            s, y = x_new - x, g_new - g
            if np.linalg.norm(s) > 1e-10 and float(
                s @ y
            ) > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
                s_list.append(s)
                y_list.append(y)
                if len(s_list) > opt_cfg.memory:
                    s_list.pop(0)
                    y_list.pop(0)
            x, theta, f, sugar, g = x_new, theta_new, f_new, sugar_new, g_new
            trace.iterates.append((theta, f, sugar.copy()))
        if stalled and escape_budget > 0:
            x_esc = escape_probe()
            if x_esc is None:
                # nothing better within probing range; likely a genuine
                # minimum, so stop probing once this repeats
                escape_budget -= 1
                if accepted is None:
                    reason = "lineSearchFail"
                    break
            else:
                theta_new, f_new, sugar_new, g_new = evaluate(x_esc)
                s_list.clear()
                y_list.clear()
                x, theta, f, sugar, g = x_esc, theta_new, f_new, sugar_new, g_new
                trace.iterates.append((theta, f, sugar.copy()))
        elif accepted is None:
            reason = "lineSearchFail"
            break

    trace.termination_reason = reason
    best = min(trace.iterates, key=lambda it: it[1])
    return best[0], trace


def default_grid(n_beta=40, n_lambda=40):
    """Log-spaced hyperparameter grid over the default ranges."""
    betas = np.logspace(*np.log10(DEFAULT_BETA_RANGE), n_beta)
    lams = np.logspace(*np.log10(DEFAULT_LAMBDA_RANGE), n_lambda)
    return betas, lams


def _grid_node(args):
    (z, beta, lam, objective, solver_cfg, op, stein_cfg, probes, uref) = args
    theta = HyperParams(beta, lam)
    if callable(objective):
        return float(objective(theta))
    if objective == "trueQuadraticError":
        u = slpam_solve(z, theta, solver_cfg, op).u
        return quadratic_error(u, uref)
    return averaged_sure(
        z, theta, stein_cfg, probes, make_solver(theta, solver_cfg, op)
    )


def grid_search(
    z,
    betas,
    lams,
    objective,
    solver_cfg,
    op,
    stein_cfg=None,
    probes=None,
    uref=None,
    jobs=1,
):
    """Evaluate the chosen objective on every grid node.

    ``objective`` is ``"averagedSure"`` (probe-averaged risk estimate;
    needs ``stein_cfg``) or ``"trueQuadraticError"`` (needs the ground
    truth ``uref``).  Returns the argmin HyperParams and the full
    (len(betas), len(lams)) value map.
    """
    if objective == "averagedSure":
        if stein_cfg is None:
            raise ValueError("averagedSure objective needs a SteinConfig")
        if probes is None:
            probes = draw_probes(
                op.height, op.width, stein_cfg.replicates, stein_cfg.seed
            )
    elif objective == "trueQuadraticError":
        if uref is None:
            raise ValueError("trueQuadraticError objective needs uref")
    elif not callable(objective):
        raise ValueError(f"unknown objective {objective!r}")

    tasks = [
        (z, float(b), float(l), objective, solver_cfg, op, stein_cfg, probes, uref)
        for b in betas
        for l in lams
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(_grid_node, tasks, chunksize=4))
    else:
        values = [_grid_node(t) for t in tasks]

    vmap = np.array(values).reshape(len(betas), len(lams))
    i, j = np.unravel_index(np.argmin(vmap), vmap.shape)
    return HyperParams(float(betas[i]), float(lams[j])), vmap


def save_risk_map(path, betas, lams, values):
    """Write a grid map as CSV: header beta,lambda,value; row-major."""
    values = np.asarray(values)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["beta", "lambda", "value"])
        for i, b in enumerate(betas):
            for j, l in enumerate(lams):
                writer.writerow([repr(float(b)), repr(float(l)), repr(float(values[i, j]))])
