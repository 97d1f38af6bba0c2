"""Synthetic piecewise-smooth scenes and their ground-truth contours."""

import numpy as np
import pytest
from scipy import ndimage

from dmstune import make_difference_operator, make_phantom
from dmstune.errors import DegenerateInputError


def edge_jumps(phantom, op):
    d = op.apply(phantom.clean)
    return np.abs(d)


class TestDiamond:
    def test_values_in_unit_interval(self, diamond64):
        assert diamond64.clean.min() >= 0.0
        assert diamond64.clean.max() <= 1.0

    def test_contours_binary_and_nonempty(self, diamond64):
        vals = np.unique(diamond64.contours)
        assert set(vals) <= {0.0, 1.0}
        assert diamond64.contours.sum() > 0

    def test_contour_edges_jump_at_least_point_three(self, diamond64, op64):
        jumps = edge_jumps(diamond64, op64)
        on = diamond64.contours == 1.0
        assert jumps[on].min() >= 0.3

    def test_within_region_differences_are_small(self, diamond64, op64):
        # inside a region only the low-amplitude ramp varies; one lattice
        # step moves the ramp by at most 0.1 / (h + w - 2)
        jumps = edge_jumps(diamond64, op64)
        off = diamond64.contours == 0.0
        assert jumps[off].max() <= 0.1 / (64 + 64 - 2) + 1e-12

    def test_contour_is_single_connected_loop(self, diamond64, op64):
        # mark every pixel incident to a contour edge; the marked set
        # must form one 8-connected component (a closed curve)
        mask = np.zeros(64 * 64, dtype=bool)
        on = diamond64.contours == 1.0
        mask[op64.rows[on, 0]] = True
        mask[op64.rows[on, 1]] = True
        _, n = ndimage.label(
            mask.reshape(64, 64), structure=np.ones((3, 3), dtype=int)
        )
        assert n == 1

    def test_perimeter_doubles_with_radius(self):
        small = make_phantom("diamond", 64, 64, {"diamond_radius": 11})
        large = make_phantom("diamond", 64, 64, {"diamond_radius": 22})
        assert large.contours.sum() == 2 * small.contours.sum()

    def test_default_radius_scales_with_size(self):
        p32 = make_phantom("diamond", 32, 32)
        p64 = make_phantom("diamond", 64, 64)
        ratio = p64.contours.sum() / p32.contours.sum()
        assert 1.7 <= ratio <= 2.3

    def test_deterministic(self):
        a = make_phantom("diamond", 48, 40)
        b = make_phantom("diamond", 48, 40)
        assert np.array_equal(a.clean, b.clean)
        assert np.array_equal(a.contours, b.contours)

    def test_descriptor_records_inputs(self):
        p = make_phantom("diamond", 32, 48, {"diamond_radius": 10})
        assert p.descriptor["geometry"] == "diamond"
        assert p.descriptor["height"] == 32
        assert p.descriptor["width"] == 48
        assert p.descriptor["diamond_radius"] == 10


class TestEllipse:
    def test_three_regions_three_levels(self):
        p = make_phantom("ellipse", 64, 64)
        # background ~0.2, diamond ~0.7, ellipse ~0.30 (plus small ramps)
        assert np.any(p.clean < 0.35)
        assert np.any(p.clean > 0.65)
        assert np.any((p.clean >= 0.28) & (p.clean <= 0.40))

    def test_contour_edges_jump_at_least_point_three(self, op64):
        p = make_phantom("ellipse", 64, 64)
        op = op64
        jumps = np.abs(op.apply(p.clean))
        assert jumps[p.contours == 1.0].min() >= 0.3

    def test_two_connected_contour_components(self, op64):
        p = make_phantom("ellipse", 64, 64)
        mask = np.zeros(64 * 64, dtype=bool)
        on = p.contours == 1.0
        mask[op64.rows[on, 0]] = True
        mask[op64.rows[on, 1]] = True
        _, n = ndimage.label(
            mask.reshape(64, 64), structure=np.ones((3, 3), dtype=int)
        )
        assert n == 2


class TestValidation:
    def test_unknown_geometry(self):
        with pytest.raises(ValueError):
            make_phantom("square", 64, 64)

    def test_minimum_grid(self):
        with pytest.raises(DegenerateInputError):
            make_phantom("diamond", 15, 64)
        with pytest.raises(DegenerateInputError):
            make_phantom("diamond", 64, 8)

    def test_empty_region_rejected(self):
        with pytest.raises(DegenerateInputError):
            make_phantom("diamond", 64, 64, {"diamond_radius": 0})
        with pytest.raises(DegenerateInputError):
            make_phantom("ellipse", 64, 64, {"ellipse_a": 0.001, "ellipse_b": 0.001})
