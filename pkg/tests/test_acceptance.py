"""Acceptance criteria, one test each, with one PASS/FAIL line per criterion.

Run under pytest (lines are echoed in the terminal summary) or directly:
``python tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np

from blk2d.analysis import (calibrate_gronwall, check_poincare_bounds, check_steklov, energy_identity_residual,
                            inequality_sweep, linear_response, mms_convergence, residual_reduction,
                            stability_experiment, verify_theorem, weighted_monitor)
from blk2d.cli import THEOREM_OF, cmd_run, preset_config
from blk2d.dynamics import make_initial, run_simulation
from blk2d.geometry import build_domain

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script from elsewhere
    ACCEPTANCE_LINES = []

# tolerances, fixed by the acceptance criteria
MMS_MIN_ORDER = 1.9
MMS_MAX_SECONDS = 300
ENERGY_MAX_RELATIVE = 1e-3
ENERGY_MIN_REDUCTION = 3.5
ENVELOPE_SLACK = 0.05
THM61_MAX_SECONDS = 120
TRUNCATION_MAX = 1e-8
SWEEP_COUNT = 100
SWEEP_SEED = 1
MARGIN_FLOOR = -1e-8
SHARP_REL = 1e-3
STABILITY_DELTA = 1e-6
LINEAR_RESPONSE_REL = 0.10


def report(tag, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def preset_run(name, **overrides):
    cfg = preset_config(name, **overrides)
    setup = cfg.setup()
    init = make_initial(cfg.profile, cfg.amplitude, setup, tuple(cfg.modes), cfg.sigma)
    return cfg, setup, init, run_simulation(init, cfg.params(), cfg.solver(), setup)


def test_c1_mms_convergence():
    t0 = time.perf_counter()
    rep = mms_convergence()
    secs = time.perf_counter() - t0
    ok = rep.passed(MMS_MIN_ORDER) and secs < MMS_MAX_SECONDS
    report("C1 manufactured-solution convergence", ok,
           f"spatial orders {np.round(rep.spatial_orders, 3).tolist()}, temporal orders "
           f"{np.round(rep.temporal_orders, 3).tolist()} (>= {MMS_MIN_ORDER}), {secs:.1f}s (< {MMS_MAX_SECONDS}s)")


def test_c2_energy_identity():
    res = []
    for nx, dt in ((256, 1e-4), (513, 5e-5)):
        cfg, setup, _, run = preset_run("thm61", nx=nx, dt=dt, t_end=0.2)
        res.append(energy_identity_residual(run.series, cfg.gamma))
    factor = residual_reduction(*res)
    ok = res[0].relative <= ENERGY_MAX_RELATIVE and factor >= ENERGY_MIN_REDUCTION
    report("C2 energy identity", ok,
           f"relative residual {res[0].relative:.3e} at (256, 1e-4) (<= {ENERGY_MAX_RELATIVE:g}), "
           f"reduction {factor:.2f} under halving (>= {ENERGY_MIN_REDUCTION}); window t >= {res[0].window[0]:.3g}; "
           f"full-range relative {res[0].relative_full:.3e} -> {res[1].relative_full:.3e}")


def _envelope(name, extra=""):
    t0 = time.perf_counter()
    cfg, setup, init, run = preset_run(name)
    secs = time.perf_counter() - t0
    rep = verify_theorem(THEOREM_OF[name], run.series, setup, cfg.gamma, tol=ENVELOPE_SLACK)
    detail = (f"chi={rep.chi_theory:g}, max E/(E0 e^(-chi t))={rep.max_ratio:.4f} (<= {1 + ENVELOPE_SLACK}), "
              f"fraction within={rep.pointwise_ok:.3f}, fitted rate {rep.chi_fitted:.2f}, "
              f"t in [0, {cfg.t_end:g}], {secs:.1f}s")
    return cfg, setup, init, run, rep, secs, detail


def test_c3_rectangle_envelope_positive_gamma():
    cfg, _, _, _, rep, secs, detail = _envelope("thm61")
    report("C3 rectangle envelope, gamma=1", rep.passed is True and rep.chi_theory == 4.0
           and secs < THM61_MAX_SECONDS, detail + f" (< {THM61_MAX_SECONDS}s)")


def test_c4_rectangle_envelope_negative_gamma():
    _, _, _, _, rep, _, detail = _envelope("thm62")
    report("C4 rectangle envelope, gamma=-1", rep.passed is True and rep.chi_theory == 12.0, detail)


def _strip_tail(run, setup):
    U = np.abs(run.field.values)
    tail = setup.grid.x >= 0.95 * setup.domain.L
    return float(U[:, tail].max() / U.max())


def test_c5_half_strip_weighted_envelope_positive_gamma():
    _, setup, init, run, rep, _, detail = _envelope("thm63")
    mon = weighted_monitor(run.series, setup)
    tail = _strip_tail(run, setup)
    ok = (rep.passed is True and rep.chi_theory == 8.0 and mon.applicable and mon.passed
          and init.truncation_ratio < TRUNCATION_MAX and tail < TRUNCATION_MAX)
    report("C5 weighted half-strip envelope, gamma=1/8", ok,
           detail + f"; smallness {init.weighted_energy:.4f} < 72; monitor f(t) < f(0): {mon.passed}; "
           f"truncation initial {init.truncation_ratio:.2e}, final {tail:.2e} (< {TRUNCATION_MAX:g})")


def test_c6_half_strip_weighted_envelope_negative_gamma():
    _, _, _, _, rep, _, detail = _envelope("thm64")
    report("C6 weighted half-strip envelope, gamma=-1", rep.passed is True and rep.chi_theory == 40.0, detail)


def test_c7_inequality_suite():
    setup = build_domain("rectangle", math.pi, math.pi, 256, 8)
    sweep = inequality_sweep(setup, SWEEP_COUNT, SWEEP_SEED)
    core = ("steklov", "grad_vs_l2", "lap_vs_l2", "lap_vs_grad", "bilap_vs_lap", "sup_vs_lap", "ladyzhenskaya")
    counts_ok = sweep.all_passed and all(sweep.passes[n] == SWEEP_COUNT for n in core)
    margins_ok = all(sweep.min_margin[n] >= MARGIN_FLOOR for n in core)

    x = setup.grid.x_full
    sharp = [check_steklov(np.sin(math.pi * x / math.pi), math.pi)]
    g = np.zeros((8, setup.grid.nx))
    g[0] = math.sqrt(math.pi / 2) * np.sin(setup.grid.x)
    sharp += check_poincare_bounds(g, setup)
    sharp_rel = max(abs(r.margin) / r.lhs for r in sharp)
    ok = counts_ok and margins_ok and sharp_rel <= SHARP_REL
    passes = ", ".join(f"{n} {sweep.passes[n]}/{SWEEP_COUNT}" for n in sorted(sweep.passes))
    report("C7 inequality suite", ok,
           f"{passes}; min margin {min(sweep.min_margin[n] for n in core):.3e} (>= {MARGIN_FLOOR:g}); "
           f"sharp cases max relative gap {sharp_rel:.2e} (<= {SHARP_REL:g})")


def test_c8_stability():
    cfg = preset_config("thm61", t_end=1.0)
    setup = cfg.setup()
    init = make_initial(cfg.profile, cfg.amplitude, setup)
    args = (init, setup, cfg.params(), cfg.solver())
    c_hat = calibrate_gronwall(*args, delta=STABILITY_DELTA, seed=0)
    full = stability_experiment(*args, delta=STABILITY_DELTA, c_hat=c_hat, seed=1)
    half = stability_experiment(*args, delta=STABILITY_DELTA / 2, c_hat=c_hat, seed=1)
    ratio = linear_response(full, half)
    dev = float(np.max(np.abs(ratio / 2.0 - 1.0)))
    ok = full.conclusive and full.within_envelope and dev <= LINEAR_RESPONSE_REL
    report("C8 continuous dependence", ok,
           f"frozen C_hat={c_hat:.3g}, sup ||z||/||z0||={full.sup_ratio:.4f} within envelope: "
           f"{full.within_envelope}; ||z_d||/||z_d/2|| in [{ratio.min():.4f}, {ratio.max():.4f}] "
           f"(2 +/- {LINEAR_RESPONSE_REL:.0%})")


def test_c9_determinism(tmp_path):
    cfg = preset_config("thm61", t_end=0.2)
    for sub in ("a", "b"):
        assert cmd_run(cfg, tmp_path / sub) == 0
    a = (tmp_path / "a" / "diagnostics.csv").read_bytes()
    b = (tmp_path / "b" / "diagnostics.csv").read_bytes()
    report("C9 determinism", a == b, f"two runs, {len(a)} bytes of diagnostics CSV, identical: {a == b}")


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    failed = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_c"):
            try:
                if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as d:
                        fn(Path(d))
                else:
                    fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
