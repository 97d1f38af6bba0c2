"""Finite-difference Monte-Carlo risk and risk-gradient estimators.

Given a noisy image z and a parametric denoiser u_hat(z; theta), the
quadratic risk ||u_hat - u_bar||^2 is estimated without ground truth by

    SURE = ||u_hat(z) - z||^2
           + (2/eps) * <u_hat(z + eps*delta) - u_hat(z), sigma^2 * delta>
           - sigma^2 * N,

with delta a standard Gaussian probe and eps = 2*sigma/N^alpha.  Its
exact gradient in the hyperparameters, assembled from the solver
Jacobians, is

    SUGAR = 2 * Jac(z)^T (u_hat(z) - z)
            + (2/eps) * (Jac(z + eps*delta) - Jac(z))^T sigma^2 * delta.

Both are averaged over R frozen probes for variance reduction.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .grid import HyperParams
from .jacobian import diff_slpam_solve
from .solver import slpam_solve

__all__ = [
    "SteinConfig",
    "MonteCarloSet",
    "RiskEval",
    "fd_step",
    "draw_probes",
    "sure_fdmc",
    "sugar_fdmc",
    "averaged_sure",
    "averaged_risk",
]


@dataclass(frozen=True)
class SteinConfig:
    """Noise level, finite-difference step rule, and probe count."""

    sigma: float
    alpha: float = 0.3
    replicates: int = 5
    seed: int = 0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")


@dataclass
class MonteCarloSet:
    """Frozen i.i.d. standard-Gaussian probe images."""

    deltas: list
    seed: int


@dataclass
class RiskEval:
    """Averaged risk estimate with its gradient and per-probe values."""

    sure: float
    sugar: np.ndarray  # (d_beta, d_lambda)
    per_replicate: list = field(default_factory=list)


def fd_step(sigma, n, alpha):
    """Finite-difference step: 2*sigma / n**alpha."""
    return 2.0 * sigma / n**alpha


def draw_probes(height, width, replicates, seed):
    """Draw R probe images from a fixed counter-based generator.

    The Philox bit generator makes the set reproducible across
    platforms; probes are meant to be drawn once and reused.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    deltas = [rng.standard_normal((height, width)) for _ in range(replicates)]
    return MonteCarloSet(deltas=deltas, seed=seed)


def _check_probe(z, delta):
    if np.asarray(delta).shape != np.asarray(z).shape:
        raise ShapeError(
            f"probe shape {np.asarray(delta).shape} != image shape "
            f"{np.asarray(z).shape}"
        )


def sure_fdmc(z, theta, cfg, delta, solver):
    """Single-probe risk estimate; runs the solver at z and z+eps*delta.

    ``solver(x)`` must return the denoised image for input x at the
    fixed hyperparameters theta.  Both calls are independent cold
    starts: warm-starting one from the other would correlate the
    finite-difference pair and bias the divergence term.
    """
    _check_probe(z, delta)
    n = z.size
    eps = fd_step(cfg.sigma, n, cfg.alpha)
    u0 = solver(z)
    u1 = solver(z + eps * delta)
    fidelity = float(np.sum((u0 - z) ** 2))
    dof = (2.0 / eps) * cfg.sigma**2 * float(np.sum((u1 - u0) * delta))
    return fidelity + dof - cfg.sigma**2 * n


def sugar_fdmc(z, theta, cfg, delta, diff_solver):
    """Single-probe gradient of the risk estimate.

    ``diff_solver(x)`` must return ``(u_hat, jac)`` where ``jac`` is a
    JacobianPair for u_hat.  Returns the (d_beta, d_lambda) pair.
    """
    _check_probe(z, delta)
    n = z.size
    eps = fd_step(cfg.sigma, n, cfg.alpha)
    u0, j0 = diff_solver(z)
    u1, j1 = diff_solver(z + eps * delta)
    resid = u0 - z
    out = np.empty(2)
    for i, name in enumerate(("d_beta", "d_lambda")):
        a0 = getattr(j0, name)
        a1 = getattr(j1, name)
        out[i] = 2.0 * float(np.sum(a0 * resid)) + (2.0 / eps) * cfg.sigma**2 * float(
            np.sum((a1 - a0) * delta)
        )
    return out


def make_solver(theta, solver_cfg, op):
    """Plain denoiser x -> u_hat(x; theta)."""
    def run(x):
        return slpam_solve(x, theta, solver_cfg, op).u
    return run


def make_diff_solver(theta, solver_cfg, op):
    """Differentiated denoiser x -> (u_hat, Jacobian pair)."""
    def run(x):
        res = diff_slpam_solve(x, theta, solver_cfg, op)
        return res.primal.u, res.du
    return run


def averaged_sure(z, theta, cfg, deltas, solver):
    """Probe-averaged risk estimate only (no gradient, plain solves).

    Used where the gradient is not needed (grid sweeps), saving the
    Jacobian propagation.  Values coincide with the ``sure`` field of
    :func:`averaged_risk` because the solves are deterministic.
    """
    n = z.size
    eps = fd_step(cfg.sigma, n, cfg.alpha)
    u0 = solver(z)
    fidelity = float(np.sum((u0 - z) ** 2))
    vals = []
    for delta in deltas.deltas:
        _check_probe(z, delta)
        u1 = solver(z + eps * delta)
        vals.append(
            fidelity
            + (2.0 / eps) * cfg.sigma**2 * float(np.sum((u1 - u0) * delta))
            - cfg.sigma**2 * n
        )
    return float(np.mean(vals))


def averaged_risk(z, theta, cfg, deltas, diff_solver):
    """Probe-averaged risk estimate and gradient.

    The solve at z is shared across replicates (the solver is
    deterministic, so per-replicate values are identical to standalone
    evaluations); each probe then costs one extra solve at z+eps*delta.
    """
    if not isinstance(theta, HyperParams):
        theta = HyperParams(*theta)
    n = z.size
    eps = fd_step(cfg.sigma, n, cfg.alpha)
    u0, j0 = diff_solver(z)
    resid = u0 - z
    fidelity = float(np.sum(resid**2))
    base_grad = np.array(
        [2.0 * float(np.sum(j0.d_beta * resid)), 2.0 * float(np.sum(j0.d_lambda * resid))]
    )

    per_replicate = []
    for r, delta in enumerate(deltas.deltas):
        _check_probe(z, delta)
        try:
            u1, j1 = diff_solver(z + eps * delta)
        except Exception as exc:
            raise RuntimeError(f"replicate {r} failed: {exc}") from exc
        scale = (2.0 / eps) * cfg.sigma**2
        sure_r = fidelity + scale * float(np.sum((u1 - u0) * delta)) - cfg.sigma**2 * n
        sugar_r = base_grad + scale * np.array(
            [
                float(np.sum((j1.d_beta - j0.d_beta) * delta)),
                float(np.sum((j1.d_lambda - j0.d_lambda) * delta)),
            ]
        )
        per_replicate.append((sure_r, sugar_r))

    sure = float(np.mean([s for s, _ in per_replicate]))
    sugar = np.mean([g for _, g in per_replicate], axis=0)
    return RiskEval(sure=sure, sugar=sugar, per_replicate=per_replicate)
