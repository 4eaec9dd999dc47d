"""Least-stable eigenvalue of the per-mode linear operator against gamma.

Growth needs Re(mu) < 0 for some mode j, where mu ranges over the eigenvalues of
L_j (u_t = -L_j u).  The clamped x-conditions push the threshold well above the
rectangle constant a.

    python scripts/instability_scan.py --gammas 2 4 8 12 16 20
"""

import argparse
import math

import numpy as np

from blk2d.geometry import build_domain
from blk2d.operators import derivative_set, linear_operator


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--gammas", type=float, nargs="+", default=[2, 4, 8, 10, 12, 16, 17, 20])
    p.add_argument("--nx", type=int, default=128)
    p.add_argument("--modes", type=int, default=4)
    args = p.parse_args()
    s = build_domain("rectangle", math.pi, math.pi, args.nx, args.modes)
    derivs = derivative_set(s.grid)
    print("gamma  " + "  ".join(f"{'j=' + str(j):>9}" for j in range(1, args.modes + 1)))
    for gamma in args.gammas:
        rates = [np.linalg.eigvals(linear_operator(lam, gamma, derivs).toarray()).real.min()
                 for lam in s.basis.lambdas]
        # negative entries are growth rates
        print(f"{gamma:5g}  " + "  ".join(f"{r:9.3f}" for r in rates))


if __name__ == "__main__":
    main()
