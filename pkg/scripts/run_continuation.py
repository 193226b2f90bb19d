#!/usr/bin/env python3
"""Coupled-solver continuation experiment.

Continues the symmetric two-zero configuration in the metric coupling and
prints per-step residuals, the mean-projected constant, and how it tracks
the two topological predictions (4 - 2*alpha*tau*N under the package
conventions, 2 - 2*alpha*tau*N under the alternative normalization).

    python scripts/run_continuation.py --degree 2 --exponent 1 --tau 5 \
        --alpha-max 0.2 --steps 8 --n 129
"""

import argparse
import time

import numpy as np

from gravortex import (
    ContinuationSchedule,
    HiggsConfig,
    NewtonOptions,
    build_grid,
    gravitating_residual,
    solve_gravitating,
)
from gravortex.gravitating import c_from_integral_identity


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--degree", type=int, default=2)
    parser.add_argument("--exponent", type=int, default=1)
    parser.add_argument("--tau", type=float, default=5.0)
    parser.add_argument("--alpha-max", type=float, default=0.2)
    parser.add_argument("--steps", type=int, default=8)
    parser.add_argument("--n", type=int, default=129)
    parser.add_argument("--override-obstruction", action="store_true")
    args = parser.parse_args()

    grid = build_grid(args.n)
    config = HiggsConfig(
        degrees=(args.degree,), exponents=(args.exponent,), tau=args.tau
    )
    alphas = tuple(args.alpha_max * k / args.steps for k in range(args.steps + 1))
    schedule = ContinuationSchedule(alphas=alphas, newton=NewtonOptions(tolerance=1e-10))

    start = time.perf_counter()
    state, report = solve_gravitating(
        config, schedule, grid, override_obstruction=args.override_obstruction
    )
    elapsed = time.perf_counter() - start

    print(f"{'alpha':>9} {'iters':>6} {'residual':>10} {'c_est':>16} {'4-2atN':>10} {'2-2atN':>10}")
    for step in report.steps:
        atn = step.alpha * args.tau * args.degree
        print(
            f"{step.alpha:9.4f} {step.iterations:6d} {step.residual_sup:10.2e} "
            f"{step.c_est:16.12f} {4 - 2 * atn:10.4f} {2 - 2 * atn:10.4f}"
        )
    r1, r2, c_est = gravitating_residual(grid, state, config)
    print(
        f"\nfinal state: alpha={state.alpha}, residuals "
        f"({np.abs(r1).max():.2e}, {np.abs(r2).max():.2e}), "
        f"c_est={c_est:.12f}, c_identity={c_from_integral_identity(grid, state, config):.12f}"
    )
    print(f"converged={report.converged}, wall time {elapsed:.2f}s")


if __name__ == "__main__":
    main()
