"""Command-line entry point: run, decay, verify-inequalities, convergence.

Configuration is a flat JSON object whose keys are the fields of
:class:`RunConfig`; unknown keys are rejected.  Exit codes: 0 success,
1 bound violated, 2 configuration error, 3 blow-up, 4 I/O error,
5 decay hypotheses not met.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .analysis import (LadderError, energy_identity_residual, inequality_sweep, mms_convergence,
                       verify_theorem, weighted_monitor)
from .dynamics import BlowUpError, PhysicalParams, SolverConfig, make_initial, run_simulation
from .functionals import DiagnosticsSeries
from .geometry import build_domain

log = logging.getLogger("blk2d")

EXIT_OK, EXIT_BOUND, EXIT_CONFIG, EXIT_BLOWUP, EXIT_IO, EXIT_HYPOTHESIS = 0, 1, 2, 3, 4, 5


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    preset: str | None = None
    kind: str = "rectangle"
    L: float | None = math.pi
    B: float = math.pi
    nx: int = 128
    n_modes: int = 8
    weight_k: float = 0.0
    gamma: float = 1.0
    dt: float = 1e-3
    t_end: float = 1.0
    theta: float = 0.5
    theta_shift: float = 0.0
    diag_every: int = 1
    dealias: bool = True
    nonlinear: bool = True
    nonlinear_form: str = "skew"
    startup_steps: int = 2
    profile: str = "rect_poly"
    amplitude: float = 1.0
    modes: list = field(default_factory=lambda: [1])
    sigma: float = 1.0
    out: str = "out"
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown configuration key {key!r}")
        base = preset_config(data["preset"]) if data.get("preset") else cls()
        cfg = dataclasses.replace(base, **data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as err:
            raise ConfigError(f"cannot read {path}: {err}") from err
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: malformed JSON ({err})") from err
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def validate(self) -> None:
        numeric = ("B", "weight_k", "gamma", "dt", "t_end", "theta", "theta_shift", "amplitude", "sigma")
        for name in numeric:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"key {name!r} must be a finite number, got {v!r}")
        if self.L is not None and (isinstance(self.L, bool) or not isinstance(self.L, (int, float))):
            raise ConfigError(f"key 'L' must be a number or null, got {self.L!r}")
        for name in ("nx", "n_modes", "diag_every", "startup_steps", "seed"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"key {name!r} must be an integer, got {v!r}")
        for name in ("dealias", "nonlinear"):
            if not isinstance(getattr(self, name), bool):
                raise ConfigError(f"key {name!r} must be true or false")
        if not isinstance(self.modes, list) or not all(isinstance(j, int) and not isinstance(j, bool)
                                                       for j in self.modes):
            raise ConfigError(f"key 'modes' must be a list of integers, got {self.modes!r}")
        if self.preset is not None and self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; expected one of {sorted(PRESETS)}")
        # let the constructors reject inconsistent combinations
        try:
            self.setup()
            self.solver()
        except ValueError as err:
            raise ConfigError(str(err)) from err

    def setup(self):
        return build_domain(self.kind, self.L, self.B, self.nx, self.n_modes, self.weight_k)

    def solver(self) -> SolverConfig:
        return SolverConfig(dt=self.dt, t_end=self.t_end, theta=self.theta, theta_shift=self.theta_shift,
                            diag_every=self.diag_every,
                            dealias=self.dealias, nonlinear=self.nonlinear, nonlinear_form=self.nonlinear_form,
                            startup_steps=self.startup_steps)

    def params(self) -> PhysicalParams:
        return PhysicalParams(self.gamma)


# Parameter sets of the four decay results plus a growing regime.  Half-strip
# runs use L = None (truncation at 40 B).  All presets shift the implicit
# weight to 1/2 + 5 dt: plain Crank-Nicolson leaves stiff x-modes, seeded by the
# explicit nonlinearity and by rounding, undamped, and they form a floor near
# 1e-12 of the initial energy that swamps late-time decay and run differences.
_SHIFT = dict(theta=0.5, theta_shift=5.0)
PRESETS: dict[str, dict] = {
    "thm61": dict(kind="rectangle", L=math.pi, B=math.pi, gamma=1.0, profile="rect_poly", amplitude=1.0,
                  nx=128, n_modes=8, dt=1e-3, t_end=2.0, **_SHIFT),
    "thm62": dict(kind="rectangle", L=math.pi, B=math.pi, gamma=-1.0, profile="rect_poly", amplitude=1.0,
                  nx=128, n_modes=8, dt=1e-3, t_end=1.0, **_SHIFT),
    "thm63": dict(kind="half_strip", L=None, B=math.pi / 2, weight_k=0.25, gamma=0.125, profile="strip_exp",
                  amplitude=1.0, sigma=1.0, nx=1023, n_modes=8, dt=1e-3, t_end=1.0, **_SHIFT),
    "thm64": dict(kind="half_strip", L=None, B=math.pi / 2, weight_k=0.25, gamma=-1.0, profile="strip_exp",
                  amplitude=1.0, sigma=1.0, nx=1023, n_modes=8, dt=1e-3, t_end=1.0, **_SHIFT),
    # gamma far above the first eigenvalue: modes 2 and 3 grow at rates near 28 and 32
    "unstable": dict(kind="rectangle", L=math.pi, B=math.pi, gamma=16.0, profile="rect_poly", amplitude=1e-5,
                     modes=[1, 2, 3], nx=128, n_modes=8, dt=1e-3, t_end=2.0, **_SHIFT),
}
THEOREM_OF = {"thm61": "6.1", "thm62": "6.2", "thm63": "6.3", "thm64": "6.4"}


def preset_config(name: str, **overrides) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    cfg = RunConfig(preset=name, **PRESETS[name])
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


# -- commands ----------------------------------------------------------------------

def _ensure_dir(out) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, default=_json_default) + "\n")


def _json_default(obj):
    # numpy scalars and arrays
    if hasattr(obj, "tolist"):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def execute(cfg: RunConfig) -> tuple[DiagnosticsSeries, dict, bool]:
    """Run ``cfg``; returns (series, summary, blew_up)."""
    setup = cfg.setup()
    init = make_initial(cfg.profile, cfg.amplitude, setup, tuple(cfg.modes), cfg.sigma)
    t0 = time.perf_counter()
    blew_up, message = False, ""
    try:
        series = run_simulation(init, cfg.params(), cfg.solver(), setup).series
    except BlowUpError as err:
        series, blew_up, message = err.series, True, str(err)
    final = series.records[-1].asdict() if len(series) else {}
    summary = {
        "config": cfg.to_dict(),
        "wall_time_s": time.perf_counter() - t0,
        "blow_up": blew_up,
        "message": message,
        "samples": len(series),
        "final": final,
        "initial": {"j_w": init.j_w, "weighted": init.weighted_energy,
                    "truncation_ratio": init.truncation_ratio, "compatibility": init.compatibility},
    }
    return series, summary, blew_up


def cmd_run(cfg: RunConfig, out) -> int:
    series, summary, blew_up = execute(cfg)
    path = _ensure_dir(out)
    series.to_csv(path / "diagnostics.csv")
    _write_json(path / "summary.json", summary)
    if blew_up:
        log.error("blow-up: %s", summary["message"])
        return EXIT_BLOWUP
    log.info("run finished in %.2fs, ||u||^2 = %.6g", summary["wall_time_s"], summary["final"]["l2_sq"])
    return EXIT_OK


def cmd_decay(cfg: RunConfig, out) -> int:
    if cfg.preset not in THEOREM_OF:
        raise ConfigError(f"decay needs one of the presets {sorted(THEOREM_OF)}, got {cfg.preset!r}")
    theorem = THEOREM_OF[cfg.preset]
    series, summary, blew_up = execute(cfg)
    path = _ensure_dir(out)
    series.to_csv(path / "diagnostics.csv")
    setup = cfg.setup()
    report = verify_theorem(theorem, series, setup, cfg.gamma)
    payload = {"report": report.asdict(), "run": summary}
    if theorem in ("6.3", "6.4"):
        payload["monitor"] = asdict(weighted_monitor(series, setup))
        payload["truncation_ratio"] = summary["initial"]["truncation_ratio"]
    if theorem in ("6.1", "6.2") and len(series) >= 3:
        res = energy_identity_residual(series, cfg.gamma)
        payload["energy_residual"] = {"relative": res.relative, "relative_full": res.relative_full,
                                      "window": res.window}
    _write_json(path / "decay_report.json", payload)
    log.info("theorem %s: chi=%.6g fitted=%.6g pointwise=%.3f condition_ok=%s",
             theorem, report.chi_theory, report.chi_fitted, report.pointwise_ok, report.condition_ok)
    if not report.condition_ok:
        return EXIT_HYPOTHESIS
    if blew_up:
        return EXIT_BLOWUP
    return EXIT_OK if report.passed else EXIT_BOUND


def cmd_verify_inequalities(seed: int, count: int, out, nx: int = 256, n_modes: int = 8) -> int:
    setup = build_domain("rectangle", math.pi, math.pi, nx, n_modes)
    sweep = inequality_sweep(setup, count, seed)
    path = _ensure_dir(out)
    _write_json(path / "inequalities.json", {
        "seed": seed, "count": count, "passes": sweep.passes,
        "min_margin": sweep.min_margin, "constants": sweep.constants, "all_passed": sweep.all_passed,
    })
    for name, n in sorted(sweep.passes.items()):
        log.info("%-16s %d/%d", name, n, count)
    return EXIT_OK if sweep.all_passed else EXIT_BOUND


def cmd_convergence(out, nx_levels, dt_levels, amplitude: float = 1.0) -> int:
    try:
        rep = mms_convergence(tuple(nx_levels), tuple(dt_levels), amplitude=amplitude)
    except LadderError as err:
        raise ConfigError(str(err)) from err
    path = _ensure_dir(out)
    _write_json(path / "convergence.json", rep.asdict())
    log.info("spatial orders %s, temporal orders %s", rep.spatial_orders, rep.temporal_orders)
    return EXIT_OK if rep.passed() else EXIT_BOUND


# -- argument parsing -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blk2d", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="flat JSON configuration file")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--seed", type=int, help="random seed (overrides the config)")

    r = sub.add_parser("run", help="integrate one configuration")
    common(r)
    r.add_argument("--preset", choices=sorted(PRESETS))

    d = sub.add_parser("decay", help="check a decay envelope on its preset")
    common(d)
    d.add_argument("preset", nargs="?", choices=sorted(THEOREM_OF))
    d.add_argument("--amplitude", type=float)

    v = sub.add_parser("verify-inequalities", help="property sweep over random compatible fields")
    common(v)
    v.add_argument("--count", type=int, default=100)
    v.add_argument("--nx", type=int, default=256)

    c = sub.add_parser("convergence", help="manufactured-solution convergence ladder")
    common(c)
    c.add_argument("--nx", type=int, nargs="+", default=[64, 128, 256])
    c.add_argument("--dt", type=float, nargs="+", default=[1e-3, 5e-4, 2.5e-4])
    c.add_argument("--amplitude", type=float, default=1.0)
    return p


def _config_from_args(args) -> RunConfig:
    preset = getattr(args, "preset", None)
    if args.config:
        cfg = RunConfig.load(args.config)
        if preset and cfg.preset != preset:
            cfg = RunConfig.from_dict({**cfg.to_dict(), "preset": preset})
    elif preset:
        cfg = preset_config(preset)
    else:
        cfg = RunConfig()
    overrides = {}
    if args.out:
        overrides["out"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "amplitude", None) is not None and args.command == "decay":
        overrides["amplitude"] = args.amplitude
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
        cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = _config_from_args(args)
        if args.command == "run":
            return cmd_run(cfg, cfg.out)
        if args.command == "decay":
            return cmd_decay(cfg, cfg.out)
        if args.command == "verify-inequalities":
            return cmd_verify_inequalities(cfg.seed, args.count, cfg.out, nx=args.nx)
        return cmd_convergence(cfg.out, args.nx, args.dt, args.amplitude)
    except ConfigError as err:
        log.error("configuration error: %s", err)
        return EXIT_CONFIG
    except OSError as err:
        log.error("I/O error: %s", err)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
