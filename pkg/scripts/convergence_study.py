"""Manufactured-solution ladders in space and time, optionally extended.

    python scripts/convergence_study.py --nx 64 128 256 512
"""

import argparse
import json

from blk2d.analysis import mms_convergence


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nx", type=int, nargs="+", default=[64, 128, 256])
    p.add_argument("--dt", type=float, nargs="+", default=[1e-3, 5e-4, 2.5e-4])
    p.add_argument("--gamma", type=float, default=1.0)
    args = p.parse_args()
    rep = mms_convergence(args.nx, args.dt, gamma=args.gamma)
    print(json.dumps(rep.asdict(), indent=2))


if __name__ == "__main__":
    main()
