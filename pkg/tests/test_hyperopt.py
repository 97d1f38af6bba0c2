"""Hyperparameter initialization, descent loop, and grid search."""

import csv

import numpy as np
import pytest

from dmstune import (
    HyperParams,
    OptimConfig,
    SolverConfig,
    SteinConfig,
    default_grid,
    grid_search,
    init_hyperparams,
    init_inverse_hessian,
    make_difference_operator,
    save_risk_map,
    sugar_descent,
)
from dmstune.errors import DegenerateInputError
from dmstune.hyperopt import THETA_MIN


STEP_Z = np.array([[0.0, 1.0], [0.0, 1.0]])


class TestInitHyperparams:
    def test_exact_formulas_on_step_image(self, op2):
        # ||Dz||^2 = 2, N = 4, sigma = 1 -> beta = 2, lambda = 0.5
        theta = init_hyperparams(STEP_Z, 1.0, op2)
        assert theta.beta == pytest.approx(2.0)
        assert theta.lam == pytest.approx(0.5)

    def test_homogeneity_in_z(self, op2):
        t1 = init_hyperparams(STEP_Z, 1.0, op2)
        t2 = init_hyperparams(2.0 * STEP_Z, 1.0, op2)
        assert t2.beta == pytest.approx(4.0 * t1.beta)
        assert t2.lam == pytest.approx(16.0 * t1.lam)

    def test_constant_input_rejected(self, op2):
        with pytest.raises(DegenerateInputError):
            init_hyperparams(np.full((2, 2), 3.0), 1.0, op2)


class TestInitInverseHessian:
    def test_stated_diagonal(self):
        h = init_inverse_hessian(HyperParams(2.0, 0.5), (4.0, -1.0), 0.9)
        assert np.allclose(np.diag(h), [0.45, 0.45])
        assert h[0, 1] == 0.0 and h[1, 0] == 0.0

    def test_ratio_one_gives_identity(self):
        theta = HyperParams(2.0, 0.5)
        h = init_inverse_hessian(theta, (0.9 * 2.0, 0.9 * 0.5), 0.9)
        assert np.allclose(np.diag(h), [1.0, 1.0])

    def test_gradient_sign_irrelevant(self):
        theta = HyperParams(2.0, 0.5)
        hp = init_inverse_hessian(theta, (4.0, 1.0), 0.9)
        hm = init_inverse_hessian(theta, (-4.0, -1.0), 0.9)
        assert np.array_equal(hp, hm)

    def test_zero_gradient_axis_falls_back_to_identity(self):
        h = init_inverse_hessian(HyperParams(2.0, 0.5), (0.0, 1.0), 0.9)
        assert h[0, 0] == 1.0
        assert h[1, 1] == pytest.approx(0.45)


class TestDescentLoop:
    def test_quadratic_stub_converges(self, op2):
        # target near the initialization theta0 = (2, 0.5)
        target = np.array([2.5, 0.45])

        def risk(theta):
            t = theta.as_array()
            return float(np.sum((t - target) ** 2)), 2.0 * (t - target)

        theta, trace = sugar_descent(
            STEP_Z, SteinConfig(sigma=1.0), OptimConfig(), SolverConfig(),
            op2, risk_fn=risk,
        )
        errs = [np.max(np.abs(t.as_array() - target)) for t, _, _ in trace.iterates]
        hit = next((i for i, e in enumerate(errs) if e <= 1e-6), None)
        assert hit is not None and hit <= 10
        assert trace.termination_reason == "gradTol"

    def test_accepted_iterates_monotone_and_feasible(self, op2):
        target = np.array([0.3, 0.1])

        def risk(theta):
            t = theta.as_array()
            return float(np.sum((t - target) ** 2)), 2.0 * (t - target)

        _, trace = sugar_descent(
            STEP_Z, SteinConfig(sigma=1.0), OptimConfig(), SolverConfig(),
            op2, risk_fn=risk,
        )
        values = [f for _, f, _ in trace.iterates]
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
        for theta, _, _ in trace.iterates:
            assert theta.beta >= THETA_MIN and theta.lam >= THETA_MIN

    def test_determinism(self, op32, diamond32):
        from dmstune import NoiseModel, add_noise

        z = add_noise(diamond32.clean, NoiseModel(0.05, seed=9))
        cfg = SteinConfig(sigma=0.05, replicates=2, seed=4)
        opt = OptimConfig(t_max=3)
        t1, _ = sugar_descent(z, cfg, opt, SolverConfig(), op32)
        t2, _ = sugar_descent(z, cfg, opt, SolverConfig(), op32)
        assert t1.beta == t2.beta and t1.lam == t2.lam


class TestGridSearch:
    def test_stub_objective_argmin_at_smallest_corner(self, op2):
        betas = np.array([1.0, 10.0])
        lams = np.array([0.1, 1.0])
        best, vmap = grid_search(
            STEP_Z, betas, lams,
            lambda theta: theta.beta + theta.lam,
            SolverConfig(), op2,
        )
        assert best.beta == 1.0 and best.lam == 0.1
        assert vmap.shape == (2, 2)
        assert vmap[0, 0] == pytest.approx(1.1)

    def test_unknown_objective_rejected(self, op2):
        with pytest.raises(ValueError):
            grid_search(STEP_Z, [1.0], [1.0], "nope", SolverConfig(), op2)

    def test_missing_inputs_rejected(self, op2):
        with pytest.raises(ValueError):
            grid_search(STEP_Z, [1.0], [1.0], "averagedSure", SolverConfig(), op2)
        with pytest.raises(ValueError):
            grid_search(
                STEP_Z, [1.0], [1.0], "trueQuadraticError", SolverConfig(), op2
            )

    def test_true_error_argmin_is_grid_optimal(self, op32, diamond32):
        from dmstune import NoiseModel, add_noise, psnr, slpam_solve

        z = add_noise(diamond32.clean, NoiseModel(0.05, seed=10))
        betas = np.logspace(-1, 2, 5)
        lams = np.logspace(-3, 0, 5)
        cfg = SolverConfig()
        best, vmap = grid_search(
            z, betas, lams, "trueQuadraticError", cfg, op32,
            uref=diamond32.clean,
        )
        best_psnr = psnr(slpam_solve(z, best, cfg, op32).u, diamond32.clean)
        for b in betas:
            for l in lams:
                u = slpam_solve(z, HyperParams(b, l), cfg, op32).u
                assert psnr(u, diamond32.clean) <= best_psnr + 0.5

    def test_default_grid_spans_documented_ranges(self):
        betas, lams = default_grid()
        assert len(betas) == 40 and len(lams) == 40
        assert betas[0] == pytest.approx(1e-2) and betas[-1] == pytest.approx(1e3)
        assert lams[0] == pytest.approx(1e-4) and lams[-1] == pytest.approx(1e1)


class TestRiskMapCsv:
    def test_round_trip_row_major(self, tmp_path):
        betas = np.array([1.0, 2.0])
        lams = np.array([0.1, 0.2, 0.3])
        values = np.arange(6.0).reshape(2, 3)
        path = tmp_path / "map.csv"
        save_risk_map(path, betas, lams, values)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["beta", "lambda", "value"]
        assert len(rows) == 7
        # row-major: beta varies slowest
        assert [float(x) for x in rows[1]] == [1.0, 0.1, 0.0]
        assert [float(x) for x in rows[4]] == [2.0, 0.1, 3.0]
        assert [float(x) for x in rows[6]] == [2.0, 0.3, 5.0]


class TestOptimConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            OptimConfig(t_max=0)
        with pytest.raises(ValueError):
            OptimConfig(kappa=1.5)
