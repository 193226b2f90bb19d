#!/usr/bin/env python3
"""Obstruction landscape over the rank-2 monomial lattice.

Tabulates, for every monomial pair with degrees up to a bound and a range
of tau values, the solvability window, balancing verdict, and the Futaki
character; writes a CSV suitable for plotting the landscape.

    python scripts/obstruction_landscape.py --max-degree 4 --out landscape.csv
"""

import argparse
from fractions import Fraction

from gravortex import HiggsConfig, stability_check
from gravortex.reporting import atomic_write_text


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-degree", type=int, default=4)
    parser.add_argument("--tau-halves", type=int, default=24,
                        help="sweep tau over k/2 for k = 1..this")
    parser.add_argument("--alpha", type=float, default=1.0)
    parser.add_argument("--out", default="landscape.csv")
    args = parser.parse_args()

    rows = ["n1,n2,l1,l2,tau,window,balanced,futaki,obstructed"]
    kept = 0
    for n1 in range(1, args.max_degree + 1):
        for n2 in range(n1, args.max_degree + 1):
            for l1 in range(n1 + 1):
                for l2 in range(n2 + 1):
                    for k in range(1, args.tau_halves + 1):
                        tau = Fraction(k, 2)
                        if tau == 2 * n1 or tau == 2 * n2:
                            continue
                        cfg = HiggsConfig(
                            degrees=(n1, n2),
                            exponents=(l1, l2),
                            tau=float(tau),
                            alpha=args.alpha,
                        )
                        rep = stability_check(cfg)
                        rows.append(
                            f"{n1},{n2},{l1},{l2},{float(tau):.17g},"
                            f"{rep.nonabelian_window},{rep.balanced},"
                            f"{rep.futaki_value:.17g},{rep.obstructed}"
                        )
                        kept += 1
    atomic_write_text(args.out, "\n".join(rows) + "\n")
    print(f"wrote {kept} rows to {args.out}")


if __name__ == "__main__":
    main()
