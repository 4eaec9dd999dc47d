"""Continuous dependence on the data: ||z(t)|| for a ladder of perturbation sizes.

    python scripts/stability_study.py --deltas 1e-4 1e-6 1e-8
"""

import argparse

import numpy as np

from blk2d.analysis import calibrate_gronwall, stability_experiment
from blk2d.cli import preset_config
from blk2d.dynamics import make_initial


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--preset", default="thm61")
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--deltas", type=float, nargs="+", default=[1e-4, 1e-6, 1e-8])
    args = p.parse_args()

    cfg = preset_config(args.preset, t_end=args.t_end)
    setup = cfg.setup()
    init = make_initial(cfg.profile, cfg.amplitude, setup, tuple(cfg.modes), cfg.sigma)
    run_args = (init, setup, cfg.params(), cfg.solver())
    c_hat = calibrate_gronwall(*run_args)
    print(f"C_hat = {c_hat:.4g} (seed 0 calibration pair)")
    for delta in args.deltas:
        rep = stability_experiment(*run_args, delta=delta, c_hat=c_hat)
        r = rep.ratio
        marks = [r[np.searchsorted(rep.t, s)] for s in (0.1, 0.5, args.t_end - 1e-9)]
        print(f"delta={delta:.0e}  sup ratio {rep.sup_ratio:.4f}  ratio at t=0.1/0.5/end "
              + " ".join(f"{m:.3e}" for m in marks) + f"  in envelope {rep.within_envelope}")


if __name__ == "__main__":
    main()
