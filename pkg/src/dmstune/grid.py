"""Pixel grid, edge lattice, and the discrete difference operator.

Images are 2D float arrays of shape ``(height, width)``.  Edge fields are
flat float arrays living on the 4-connectivity forward-difference lattice:
all vertical neighbor edges first (row-major), then all horizontal ones,
for a total of ``(height-1)*width + height*(width-1)`` entries.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError, ShapeError

__all__ = [
    "HyperParams",
    "DifferenceOperator",
    "edge_count",
    "make_difference_operator",
    "check_image",
]


def edge_count(height, width):
    """Number of edges of the 4-connectivity lattice on an HxW grid."""
    return (height - 1) * width + height * (width - 1)


def check_image(u, height, width, name="image"):
    u = np.asarray(u, dtype=float)
    if u.shape != (height, width):
        raise ShapeError(
            f"{name} has shape {u.shape}, expected ({height}, {width})"
        )
    return u


@dataclass(frozen=True)
class HyperParams:
    """Regularization weight pair: smoothing strength and contour sparsity."""

    beta: float
    lam: float

    def __post_init__(self):
        if not (self.beta > 0 and self.lam > 0):
            raise ValueError(f"hyperparameters must be positive, got {self}")

    def as_array(self):
        return np.array([self.beta, self.lam])


class DifferenceOperator:
    """Forward-difference map from pixel values to edge values.

    Neumann boundary handling: no wrap-around edges.  Each edge ``i``
    connects an ordered pixel pair ``(p_i, q_i)`` (flat row-major
    indices) and carries the value ``u[q_i] - u[p_i]``.

    Instances are immutable after construction and safe to share between
    concurrently running solvers.
    """

    def __init__(self, height, width, op_norm_sq):
        if height < 2 or width < 2:
            raise InvalidDimensionError(
                f"grid must be at least 2x2, got {height}x{width}"
            )
        self.height = int(height)
        self.width = int(width)
        self.n_pixels = self.height * self.width
        self.n_edges = edge_count(self.height, self.width)
        self.n_vertical = (self.height - 1) * self.width
        self.op_norm_sq = float(op_norm_sq)

        # Ordered (p_i, q_i) pixel pairs, one row per edge.
        idx = np.arange(self.n_pixels).reshape(self.height, self.width)
        p = np.concatenate([idx[:-1, :].ravel(), idx[:, :-1].ravel()])
        q = np.concatenate([idx[1:, :].ravel(), idx[:, 1:].ravel()])
        self.rows = np.stack([p, q], axis=1)
        self.rows.setflags(write=False)

    def apply(self, u):
        """Edge differences of ``u``: result[i] = u[q_i] - u[p_i].

        Accepts stacked input of shape (..., height, width) and maps it
        to (..., n_edges).
        """
        u = np.asarray(u, dtype=float)
        if u.shape[-2:] != (self.height, self.width):
            raise ShapeError(
                f"image has shape {u.shape}, expected "
                f"(..., {self.height}, {self.width})"
            )
        lead = u.shape[:-2]
        v = u[..., 1:, :] - u[..., :-1, :]
        h = u[..., :, 1:] - u[..., :, :-1]
        return np.concatenate(
            [v.reshape(lead + (self.n_vertical,)),
             h.reshape(lead + (self.n_edges - self.n_vertical,))],
            axis=-1,
        )

    def apply_adjoint(self, w):
        """Adjoint map from an edge field back to the pixel grid.

        Accepts stacked input of shape (..., n_edges).
        """
        w = np.asarray(w, dtype=float)
        if w.shape[-1] != self.n_edges:
            raise ShapeError(
                f"edge field has shape {w.shape}, expected (..., {self.n_edges})"
            )
        lead = w.shape[:-1]
        out = np.zeros(lead + (self.height, self.width))
        v = w[..., : self.n_vertical].reshape(lead + (self.height - 1, self.width))
        h = w[..., self.n_vertical :].reshape(lead + (self.height, self.width - 1))
        out[..., 1:, :] += v
        out[..., :-1, :] -= v
        out[..., :, 1:] += h
        out[..., :, :-1] -= h
        return out


def _power_iteration_norm_sq(op, iters=50, tol=1e-10, seed=0):
    """Largest eigenvalue of D*D by power iteration."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((op.height, op.width))
    u /= np.linalg.norm(u)
    lam = 0.0
    for _ in range(iters):
        v = op.apply_adjoint(op.apply(u))
        lam_new = float(np.vdot(u, v))
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        u = v / nv
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam = lam_new
    return lam


def make_difference_operator(height, width):
    """Build the forward-difference operator for an HxW grid.

    The cached squared operator norm is obtained by power iteration
    (50 iterations, tolerance 1e-10) and then inflated by 1% so it is a
    certified upper bound usable in descent-step constants.
    """
    if height < 2 or width < 2:
        raise InvalidDimensionError(
            f"grid must be at least 2x2, got {height}x{width}"
        )
    op = DifferenceOperator(height, width, op_norm_sq=0.0)
    norm_sq = _power_iteration_norm_sq(op)
    op.op_norm_sq = 1.01 * norm_sq
    return op
