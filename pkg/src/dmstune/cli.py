"""Command-line front end.

Subcommands: ``synth`` (phantom corpora), ``denoise`` (fixed or
auto-tuned hyperparameters), ``riskmap`` (grid sweeps), and
``reproduce-table`` (PSNR table across geometries, noise levels and
sigma policies).

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import configparser
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib.metadata import version as pkg_version
from pathlib import Path

import numpy as np

from .errors import ConfigError, DmsError
from .grid import HyperParams, make_difference_operator
from .hyperopt import (
    OptimConfig,
    default_grid,
    grid_search,
    save_risk_map,
    sugar_descent,
)
from .imageio import read_image, write_image
from .noise import NoiseModel, add_noise, estimate_sigma_mad, psnr
from .phantoms import make_phantom
from .solver import SolverConfig, slpam_solve
from .stein import SteinConfig

DEFAULT_SIGMAS = (0.01, 0.05, 0.1, 0.2, 0.3)
OVERLAY_THRESHOLD = 0.5  # display threshold on |e|; raw e is always emitted

_CONFIG_KEYS = {
    "solver": {"gamma", "eta", "xi", "max_iter", "fixed_iter"},
    "stein": {"sigma", "alpha", "replicates", "seed"},
    "optim": {"t_max", "grad_tol", "kappa", "memory"},
    "run": {"seed", "jobs"},
}


def _load_config(path):
    """Parse a key = value config file with one section per module."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    out = {}
    for section in parser.sections():
        if section not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _CONFIG_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            out[(section, key)] = parser[section][key]
    return out


def _solver_cfg(args, file_cfg):
    def pick(key, cast, default):
        if getattr(args, key, None) is not None:
            return getattr(args, key)
        if ("solver", key) in file_cfg:
            return cast(file_cfg[("solver", key)])
        return default

    fixed = pick("fixed_iter", int, None)
    return SolverConfig(
        gamma=pick("gamma", float, 1.01),
        eta=pick("eta", float, 1.01e-3),
        xi=pick("xi", float, 1e-4),
        max_iter=pick("max_iter", int, 2000),
        fixed_iter=fixed,
    )


def _optim_cfg(file_cfg):
    casts = {"t_max": int, "grad_tol": float, "kappa": float, "memory": int}
    kwargs = {
        key: cast(file_cfg[("optim", key)])
        for key, cast in casts.items()
        if ("optim", key) in file_cfg
    }
    return OptimConfig(**kwargs)


def _stein_cfg(args, file_cfg, sigma):
    def pick(key, cast, default):
        if getattr(args, key, None) is not None:
            return getattr(args, key)
        if ("stein", key) in file_cfg:
            return cast(file_cfg[("stein", key)])
        return default

    return SteinConfig(
        sigma=sigma,
        alpha=pick("alpha", float, 0.3),
        replicates=pick("replicates", int, 5),
        seed=pick("seed", int, 0),
    )


def _write_manifest(outdir, payload):
    payload = dict(payload)
    payload["versions"] = {
        "dmstune": pkg_version("dmstune"),
        "numpy": np.__version__,
    }
    with open(Path(outdir) / "manifest.json", "w") as fh:
        json.dump(payload, fh, indent=2, default=str)


def _write_edges_csv(path, values):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["edge", "value"])
        for i, v in enumerate(values):
            writer.writerow([i, repr(float(v))])


def _overlay(u, e, op, threshold=OVERLAY_THRESHOLD):
    """Denoised image with endpoint pixels of active edges set to 1."""
    out = np.clip(u, 0.0, 1.0).copy().ravel()
    active = np.abs(e) > threshold
    out[op.rows[active, 0]] = 1.0
    out[op.rows[active, 1]] = 1.0
    return out.reshape(op.height, op.width)


def cmd_synth(args, file_cfg):
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    phantom = make_phantom(args.geometry, args.size, args.size)
    ext = args.format
    write_image(outdir / f"clean.{ext}", phantom.clean)
    sigmas = args.sigmas if args.sigmas else list(DEFAULT_SIGMAS)
    files = [f"clean.{ext}"]
    for s in sigmas:
        noisy = add_noise(phantom.clean, NoiseModel(sigma=s, seed=args.seed))
        name = f"noisy_sigma{s:g}.{ext}"
        write_image(outdir / name, noisy)
        files.append(name)
    _write_edges_csv(outdir / "contours.csv", phantom.contours)
    files.append("contours.csv")
    _write_manifest(
        outdir,
        {
            "command": "synth",
            "geometry": args.geometry,
            "size": args.size,
            "sigmas": sigmas,
            "seed": args.seed,
            "files": files,
        },
    )
    print(f"wrote {len(files)} files + manifest to {outdir}")
    return 0


def cmd_denoise(args, file_cfg):
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    z = read_image(args.input)
    op = make_difference_operator(*z.shape)
    solver_cfg = _solver_cfg(args, file_cfg)

    if args.sigma_policy == "mad":
        sigma = estimate_sigma_mad(z)
    else:
        if args.sigma is not None:
            sigma = args.sigma
        elif ("stein", "sigma") in file_cfg:
            sigma = float(file_cfg[("stein", "sigma")])
        elif args.theta is not None:
            sigma = None  # not needed when hyperparameters are given
        else:
            raise ConfigError("--sigma required with --sigma-policy given")

    sure_value = None
    trace_rows = []
    seed = args.seed if args.seed is not None else 0
    if args.theta is not None:
        beta, lam = (float(t) for t in args.theta.split(","))
        theta = HyperParams(beta, lam)
    else:
        stein_cfg = _stein_cfg(args, file_cfg, sigma)
        seed = stein_cfg.seed
        opt_cfg = _optim_cfg(file_cfg)
        theta, trace = sugar_descent(z, stein_cfg, opt_cfg, solver_cfg, op)
        sure_value = min(f for _, f, _ in trace.iterates)
        trace_rows = [
            (t.beta, t.lam, f, g[0], g[1]) for t, f, g in trace.iterates
        ]

    result = slpam_solve(z, theta, solver_cfg, op)
    ext = "png" if str(args.input).endswith(".png") else "pgm"
    write_image(outdir / f"denoised.{ext}", result.u)
    write_image(outdir / "overlay.png", _overlay(result.u, result.e, op))
    _write_edges_csv(outdir / "edges.csv", result.e)

    if trace_rows:
        with open(outdir / "optimizer_trace.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["beta", "lambda", "sure", "sugar_beta", "sugar_lambda"])
            writer.writerows(trace_rows)

    report = {
        "command": "denoise",
        "input": str(args.input),
        "theta": {"beta": theta.beta, "lambda": theta.lam},
        "sigma": sigma,
        "sigma_policy": args.sigma_policy,
        "sure": sure_value,
        "iterations": result.iterations,
        "seed": seed,
    }
    if args.ground_truth:
        uref = read_image(args.ground_truth)
        report["psnr_db"] = psnr(result.u, uref)
        print(f"PSNR: {report['psnr_db']:.2f} dB")
    _write_manifest(outdir, report)
    print(f"theta* = ({theta.beta:.6g}, {theta.lam:.6g}); outputs in {outdir}")
    return 0


def cmd_riskmap(args, file_cfg):
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    z = read_image(args.input)
    op = make_difference_operator(*z.shape)
    solver_cfg = _solver_cfg(args, file_cfg)
    betas, lams = default_grid(args.n_beta, args.n_lambda)

    kwargs = {}
    seed = args.seed if args.seed is not None else 0
    if args.objective == "averagedSure":
        if args.sigma is not None:
            sigma = args.sigma
        elif ("stein", "sigma") in file_cfg:
            sigma = float(file_cfg[("stein", "sigma")])
        else:
            sigma = estimate_sigma_mad(z)
        kwargs["stein_cfg"] = _stein_cfg(args, file_cfg, sigma)
        seed = kwargs["stein_cfg"].seed
    else:
        if args.ground_truth is None:
            raise ConfigError("--ground-truth required for trueQuadraticError")
        kwargs["uref"] = read_image(args.ground_truth)

    best, vmap = grid_search(
        z, betas, lams, args.objective, solver_cfg, op, jobs=args.jobs, **kwargs
    )
    save_risk_map(outdir / "riskmap.csv", betas, lams, vmap)
    _write_manifest(
        outdir,
        {
            "command": "riskmap",
            "objective": args.objective,
            "argmin": {"beta": best.beta, "lambda": best.lam},
            "value": float(vmap.min()),
            "seed": seed,
        },
    )
    print(f"argmin: beta={best.beta:.6g} lambda={best.lam:.6g}")
    return 0


def _table_cell(job):
    """One table cell realization: synth, tune, solve, score."""
    geometry, sigma, policy, size, seed, solver_cfg, opt_cfg, replicates = job
    try:
        phantom = make_phantom(geometry, size, size)
        z = add_noise(phantom.clean, NoiseModel(sigma=sigma, seed=seed))
        sig = estimate_sigma_mad(z) if policy == "estimated" else sigma
        stein_cfg = SteinConfig(sigma=sig, replicates=replicates, seed=seed + 1)
        op = make_difference_operator(size, size)
        theta, _ = sugar_descent(z, stein_cfg, opt_cfg, solver_cfg, op)
        u = slpam_solve(z, theta, solver_cfg, op).u
        return psnr(u, phantom.clean)
    except (DmsError, FloatingPointError, ValueError):
        return float("nan")  # recorded as a failed realization; the run continues


def cmd_reproduce_table(args, file_cfg):
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    solver_cfg = _solver_cfg(args, file_cfg)
    opt_cfg = _optim_cfg(file_cfg)
    replicates = int(file_cfg.get(("stein", "replicates"), 5))
    size = 256 if args.full else args.size
    realizations = 10 if args.full else args.realizations

    jobs = []
    for geometry in ("diamond", "ellipse"):
        for sigma in DEFAULT_SIGMAS:
            for policy in ("true", "estimated"):
                for r in range(realizations):
                    jobs.append(
                        (
                            geometry,
                            sigma,
                            policy,
                            size,
                            args.seed + 1000 * r,
                            solver_cfg,
                            opt_cfg,
                            replicates,
                        )
                    )

    t0 = time.time()
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_table_cell, jobs))
    else:
        results = [_table_cell(j) for j in jobs]
    elapsed = time.time() - t0

    rows = []
    idx = 0
    for geometry in ("diamond", "ellipse"):
        for sigma in DEFAULT_SIGMAS:
            for policy in ("true", "estimated"):
                vals = results[idx : idx + realizations]
                idx += realizations
                ok = [v for v in vals if np.isfinite(v)]
                mean = float(np.mean(ok)) if ok else float("nan")
                # 95% CI half-width from the normal approximation
                half = (
                    float(1.96 * np.std(ok, ddof=1) / np.sqrt(len(ok)))
                    if len(ok) > 1
                    else 0.0
                )
                rows.append([geometry, sigma, policy, mean, half, len(ok)])

    with open(outdir / "table.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["geometry", "sigma", "policy", "psnr_mean_db", "psnr_ci_halfwidth_db", "n_ok"]
        )
        writer.writerows(rows)
    _write_manifest(
        outdir,
        {
            "command": "reproduce-table",
            "size": size,
            "realizations": realizations,
            "seed": args.seed,
            "wall_clock_s": elapsed,
        },
    )
    print(f"wrote {len(rows)}-cell table to {outdir / 'table.csv'} in {elapsed:.1f}s")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dmstune",
        description="Piecewise-smooth denoising and contour detection with "
        "automatic hyperparameter selection.",
    )
    parser.add_argument("--config", help="declarative run config (INI sections)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_solver_flags(p):
        p.add_argument("--gamma", type=float)
        p.add_argument("--eta", type=float)
        p.add_argument("--xi", type=float)
        p.add_argument("--max-iter", dest="max_iter", type=int)
        p.add_argument("--fixed-iter", dest="fixed_iter", type=int)

    p = sub.add_parser("synth", help="generate a phantom corpus")
    p.add_argument("geometry", choices=("diamond", "ellipse"))
    p.add_argument("size", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigmas", type=float, nargs="*")
    p.add_argument("--format", choices=("pgm", "png"), default="pgm")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("denoise", help="denoise one image")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--theta", help="beta,lambda (skip auto-tuning)")
    p.add_argument("--sigma", type=float)
    p.add_argument("--sigma-policy", choices=("given", "mad"), default="given")
    p.add_argument("--ground-truth")
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    add_solver_flags(p)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("riskmap", help="hyperparameter grid sweep")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument(
        "--objective",
        choices=("averagedSure", "trueQuadraticError"),
        default="averagedSure",
    )
    p.add_argument("--ground-truth")
    p.add_argument("--sigma", type=float)
    p.add_argument("--n-beta", type=int, default=40)
    p.add_argument("--n-lambda", type=int, default=40)
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    add_solver_flags(p)
    p.set_defaults(func=cmd_riskmap)

    p = sub.add_parser("reproduce-table", help="PSNR table across the test matrix")
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--realizations", type=int, default=5)
    p.add_argument("--full", action="store_true", help="256x256, 10 realizations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    add_solver_flags(p)
    p.set_defaults(func=cmd_reproduce_table)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_cfg = _load_config(args.config) if args.config else {}
        return args.func(args, file_cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DmsError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
