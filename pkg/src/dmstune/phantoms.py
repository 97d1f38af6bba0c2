"""Synthetic piecewise-smooth test images with ground-truth contours.

Two geometries: a centered diamond (rotated square) over a background,
and the same scene with a smaller centered ellipse inside the diamond.
Each region carries its own low-amplitude linear intensity ramp, so the
image is smooth within regions and jumps across region boundaries.

Intensity constants are artifact parameters, chosen so every contour
edge carries a jump of at least 0.3:

    background: 0.2 + 0.1 * ramp      diamond: 0.7 + 0.1 * ramp
    ellipse:    0.30 + 0.05 * ramp

Generation is seed-free and bit-reproducible.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError
from .grid import make_difference_operator

__all__ = ["Phantom", "make_phantom"]

GEOMETRIES = ("diamond", "ellipse")


@dataclass
class Phantom:
    clean: np.ndarray        # piecewise-smooth image, values in [0, 1]
    contours: np.ndarray     # binary edge field marking region boundaries
    descriptor: dict


def _region_labels(geometry, height, width, params):
    r = np.arange(height)[:, None]
    c = np.arange(width)[None, :]
    cr, cc = (height - 1) / 2.0, (width - 1) / 2.0
    a = params.get("diamond_radius", int(round(0.35 * min(height, width))))
    labels = np.zeros((height, width), dtype=int)
    labels[np.abs(r - cr) + np.abs(c - cc) <= a] = 1
    if geometry == "ellipse":
        ea = params.get("ellipse_a", 0.18 * width)
        eb = params.get("ellipse_b", 0.12 * height)
        inside = ((c - cc) / ea) ** 2 + ((r - cr) / eb) ** 2 <= 1.0
        labels[inside] = 2
    return labels


def make_phantom(geometry, height, width, params=None):
    """Build a test scene with its ground-truth contour mask.

    ``contours`` marks every lattice edge whose two endpoint pixels lie
    in different regions.
    """
    if geometry not in GEOMETRIES:
        raise ValueError(f"unknown geometry {geometry!r}; choose from {GEOMETRIES}")
    if height < 16 or width < 16:
        raise DegenerateInputError("phantom needs at least a 16x16 grid")
    params = dict(params or {})

    labels = _region_labels(geometry, height, width, params)
    counts = np.bincount(labels.ravel())
    want = 3 if geometry == "ellipse" else 2
    if len(counts) < want or np.any(counts[:want] == 0):
        raise DegenerateInputError(
            f"{geometry} parameters produce an empty region: {params}"
        )

    r = np.arange(height)[:, None]
    c = np.arange(width)[None, :]
    # Distinct ramp directions per region keep the cross-boundary jump
    # bounded away from the ramp amplitudes.
    ramp_sum = (r + c) / max(height + width - 2, 1)
    ramp_diff = (r - c - (1 - width)) / max(height + width - 2, 1)
    clean = np.where(labels == 1, 0.7 + 0.1 * ramp_diff, 0.2 + 0.1 * ramp_sum)
    if geometry == "ellipse":
        clean = np.where(labels == 2, 0.30 + 0.05 * ramp_sum, clean)

    op = make_difference_operator(height, width)
    flat = labels.ravel()
    contours = (flat[op.rows[:, 0]] != flat[op.rows[:, 1]]).astype(float)

    return Phantom(
        clean=clean,
        contours=contours,
        descriptor={"geometry": geometry, "height": height, "width": width, **params},
    )
