"""Automatic hyperparameter selection from the noisy image alone.

Runs the gradient-based tuner (probe-averaged risk estimate + L-BFGS in
log coordinates) and compares the result against a small grid search on
the true quadratic error, which the tuner never sees.

Run:  python3 demos/02_auto_tune.py          (about a minute)
"""

import numpy as np

from dmstune import (
    NoiseModel,
    OptimConfig,
    SolverConfig,
    SteinConfig,
    add_noise,
    grid_search,
    make_difference_operator,
    make_phantom,
    psnr,
    slpam_solve,
    sugar_descent,
)


def main():
    size, sigma = 32, 0.05
    phantom = make_phantom("diamond", size, size)
    z = add_noise(phantom.clean, NoiseModel(sigma=sigma, seed=1))
    op = make_difference_operator(size, size)
    cfg = SolverConfig()

    theta, trace = sugar_descent(
        z, SteinConfig(sigma=sigma, replicates=5, seed=0), OptimConfig(), cfg, op
    )
    tuned = psnr(slpam_solve(z, theta, cfg, op).u, phantom.clean)
    print(f"tuned weights  : beta = {theta.beta:.4g}, lambda = {theta.lam:.4g}")
    print(f"tuned PSNR     : {tuned:.2f} dB "
          f"({len(trace.iterates)} accepted iterates, "
          f"stopped on {trace.termination_reason})")

    betas = np.logspace(-1, 2, 10)
    lams = np.logspace(-3, 0, 10)
    best, _ = grid_search(
        z, betas, lams, "trueQuadraticError", cfg, op, uref=phantom.clean
    )
    oracle = psnr(slpam_solve(z, best, cfg, op).u, phantom.clean)
    print(f"oracle weights : beta = {best.beta:.4g}, lambda = {best.lam:.4g}")
    print(f"oracle PSNR    : {oracle:.2f} dB  (gap: {oracle - tuned:.2f} dB)")


if __name__ == "__main__":
    main()
