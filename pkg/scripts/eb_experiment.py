#!/usr/bin/env python3
"""Zero-constant (Einstein-Bogomol'nyi) coupling experiment.

Runs the secant iteration for the coupling that makes the topological
constant vanish and prints the alpha*tau*N product next to the quoted
prediction (1) and the conventions-derived prediction (2).  The two differ
by the documented curvature-normalization factor; this script reports, it
does not reconcile.

    python scripts/eb_experiment.py --degree 2 --exponent 1 --tau 5 --n 129
"""

import argparse

import numpy as np

from gravortex import HiggsConfig, build_grid, einstein_bogomolnyi_solve, scalar_curvature


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--degree", type=int, default=2)
    parser.add_argument("--exponent", type=int, default=1)
    parser.add_argument("--tau", type=float, default=5.0)
    parser.add_argument("--n", type=int, default=129)
    args = parser.parse_args()

    grid = build_grid(args.n)
    config = HiggsConfig(degrees=(args.degree,), exponents=(args.exponent,), tau=args.tau)
    result = einstein_bogomolnyi_solve(config, grid)

    print("secant history (alpha, c):")
    for alpha, c in result.secant_history:
        print(f"  {alpha:16.12f}  {c:+.3e}")
    print(f"\nconverged      : {result.converged}")
    print(f"alpha*         : {result.alpha_star:.12f}")
    print(f"|c| at alpha*  : {abs(result.c_value):.3e}")
    print(f"alpha* tau N   : {result.alpha_tau_N:.12f}")
    print("predictions    : quoted normalization -> 1, package conventions -> 2")

    curv = scalar_curvature(grid, result.state.metric)
    print(
        f"\ncurvature range of the zero-constant metric: "
        f"[{curv.s_field.min():.4f}, {curv.s_field.max():.4f}] "
        f"(round value 4), total {curv.total:.6f}"
    )
    print(f"metric potential sup |u| = {np.abs(result.state.metric.u).max():.4f}")


if __name__ == "__main__":
    main()
