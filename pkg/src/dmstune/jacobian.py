"""Forward differentiation of the alternating solver.

Runs the primal iteration and propagates, by the chain rule, the
derivatives of every iterate with respect to the two hyperparameters
(beta, lam).  The derivative recursions mirror the four primal updates:

  d(utilde) = d(u) - t * D*((1-e)^2 . D d(u)) + 2t * D*((1-e) . d(e) . Du)
              with t = 2/(gamma*||D||^2), independent of both parameters;
  d(u_new)  = c/(c+1) * d(utilde) + (utilde - z)/(c+1)^2 * d(c),
              with d_beta(c) = gamma*||D||^2 and d_lam(c) = 0;
  d(etilde) = [2 Du.Ddu * (dbar/2)(1-e)] / (Du^2 + dbar/2)^2
              + (dbar/2) d(e) / (Du^2 + dbar/2);
  d(e_new)  = active * (d(etilde) - sign(etilde) * d(phi)),
              where phi = tau/(2 Du^2 + dbar), tau = lam/beta,
              d(phi) = -4 tau Du.Ddu/(2 Du^2 + dbar)^2
                       + d(tau)/(2 Du^2 + dbar),
              d_beta(tau) = -lam/beta^2, d_lam(tau) = 1/beta,
              and ``active`` is the strict indicator |etilde| > phi.

Outside the active set the edge prox is locally constant, so its
derivative there is exactly zero.  At etilde == 0 the sign factor is 0.

The two parameter chains never read each other, so they are carried as
one stacked array of leading dimension 2 (index 0: beta, 1: lam).
"""

from dataclasses import dataclass

import numpy as np

from .errors import JacobianOverflowError
from .grid import HyperParams
from .solver import SolveResult, slpam_solve

__all__ = [
    "JacobianPair",
    "DiffSolveResult",
    "diff_utilde_step",
    "diff_u_step",
    "diff_etilde_step",
    "diff_e_step",
    "diff_slpam_solve",
]


@dataclass
class JacobianPair:
    """Derivative fields w.r.t. beta and lam, stacked on axis 0."""

    stack: np.ndarray  # shape (2,) + primal shape

    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros((2,) + tuple(shape)))

    @classmethod
    def from_parts(cls, d_beta, d_lambda):
        return cls(np.stack([np.asarray(d_beta, float), np.asarray(d_lambda, float)]))

    @property
    def d_beta(self):
        return self.stack[0]

    @property
    def d_lambda(self):
        return self.stack[1]

    def copy(self):
        return JacobianPair(self.stack.copy())


@dataclass
class DiffSolveResult:
    primal: SolveResult
    du: JacobianPair  # derivatives of the denoised image
    de: JacobianPair  # derivatives of the contour field


def diff_utilde_step(du_pair, de_pair, u, e, du_img, cfg, op):
    """Derivative of the linearized image update."""
    t = 2.0 / (cfg.gamma * op.op_norm_sq)
    one_e = 1.0 - e
    stack = (
        du_pair.stack
        - t * op.apply_adjoint(one_e**2 * op.apply(du_pair.stack))
        + 2.0 * t * op.apply_adjoint(one_e * de_pair.stack * du_img)
    )
    return JacobianPair(stack)


def diff_u_step(dutilde_pair, utilde, z, c, cfg, op):
    """Derivative of the data prox; only beta moves the prox weight."""
    dc = np.array([cfg.gamma * op.op_norm_sq, 0.0])  # (d_beta c, d_lam c)
    stack = c / (c + 1.0) * dutilde_pair.stack + (
        (utilde - z) / (c + 1.0) ** 2
    ) * dc[:, None, None]
    return JacobianPair(stack)


def diff_etilde_step(dunew_pair, de_pair, du_img, du2, e, dbar, op, d_du=None):
    """Derivative of the relaxed edge update."""
    denom = du2 + 0.5 * dbar
    if d_du is None:
        d_du = op.apply(dunew_pair.stack)
    stack = (
        2.0 * du_img * d_du * (0.5 * dbar) * (1.0 - e) / denom**2
        + 0.5 * dbar * de_pair.stack / denom
    )
    return JacobianPair(stack)


def diff_e_step(
    detilde_pair, dunew_pair, du_img, du2, etilde, phi, theta, dbar, op, d_du=None
):
    """Derivative of the per-edge soft threshold, zero off the active set."""
    active = np.abs(etilde) > phi
    sgn = np.sign(etilde)
    tau = theta.lam / theta.beta
    denom = 2.0 * du2 + dbar
    dtau = np.array([-theta.lam / theta.beta**2, 1.0 / theta.beta])
    if d_du is None:
        d_du = op.apply(dunew_pair.stack)
    dphi = -4.0 * tau * du_img * d_du / denom**2 + dtau[:, None] / denom
    stack = active * (detilde_pair.stack - sgn * dphi)
    return JacobianPair(stack)


def diff_slpam_solve(z, theta, cfg, op):
    """Solve and propagate hyperparameter derivatives alongside.

    The primal trajectory is bit-identical to :func:`slpam_solve` under
    the same configuration (the primal updates are shared code).  All
    derivative fields start at zero.

    Raises
    ------
    JacobianOverflowError
        If a propagated derivative field turns non-finite.
    """
    if not isinstance(theta, HyperParams):
        theta = HyperParams(*theta)
    du_pair = JacobianPair.zeros((op.height, op.width))
    de_pair = JacobianPair.zeros((op.n_edges,))

    def propagate(k, u, e, step):
        nonlocal du_pair, de_pair
        dutilde = diff_utilde_step(du_pair, de_pair, u, e, step["du_old"], cfg, op)
        du_new = diff_u_step(dutilde, step["utilde"], z, step["c"], cfg, op)
        d_du = op.apply(du_new.stack)  # shared by the two edge-step derivatives
        detilde = diff_etilde_step(
            du_new, de_pair, step["du"], step["du2"], e, step["dbar"], op, d_du=d_du
        )
        de_new = diff_e_step(
            detilde,
            du_new,
            step["du"],
            step["du2"],
            step["etilde"],
            step["phi"],
            theta,
            step["dbar"],
            op,
            d_du=d_du,
        )
        if not (
            np.all(np.isfinite(du_new.stack)) and np.all(np.isfinite(de_new.stack))
        ):
            raise JacobianOverflowError("non-finite derivative field", k)
        du_pair, de_pair = du_new, de_new

    primal = slpam_solve(z, theta, cfg, op, on_step=propagate)
    return DiffSolveResult(primal=primal, du=du_pair, de=de_pair)
