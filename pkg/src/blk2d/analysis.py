"""Verification tools: functional inequalities, energy balance, decay envelopes,
the weighted-energy comparison monitor, continuous dependence and MMS ladders.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .dynamics import (BlowUpError, InitialData, ManufacturedSolution, PhysicalParams, SolverConfig,
                       run_simulation, smallness_threshold)
from .functionals import (DiagnosticsSeries, compute_record, nodal_derivative, trapezoid)
from .geometry import Setup, build_domain

INEQUALITY_TOL = 1e-8
DECAY_TOL = 0.05
FIT_TOL = 0.10
NIRENBERG_MARGIN = 1.25
GRONWALL_MARGIN = 1.25
THEOREMS = ("6.1", "6.2", "6.3", "6.4")


class PreconditionError(ValueError):
    """Input violates the boundary conditions an inequality assumes."""


class SparseSeriesError(ValueError):
    """Too few samples to form a centered time derivative."""


class LadderError(ValueError):
    """A convergence ladder needs at least three levels."""


@dataclass
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    tol: float = INEQUALITY_TOL
    constants: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tol

    def asdict(self) -> dict:
        return {**asdict(self), "margin": self.margin, "passed": self.passed}


# -- fields --------------------------------------------------------------------

def _as_nodal(f: np.ndarray, n_interior: int, what: str) -> np.ndarray:
    """Interior (.., nx) or full-node (.., nx+2) values -> full-node values."""
    f = np.asarray(f, dtype=float)
    if f.shape[-1] == n_interior:
        out = np.zeros(f.shape[:-1] + (n_interior + 2,))
        out[..., 1:-1] = f
        return out
    if f.shape[-1] != n_interior + 2:
        raise ValueError(f"{what}: expected {n_interior} or {n_interior + 2} x values, got {f.shape[-1]}")
    scale = max(float(np.max(np.abs(f))), 1.0)
    if np.max(np.abs(f[..., [0, -1]])) > 1e-10 * scale:
        raise PreconditionError(f"{what}: field does not vanish at x = 0 and x = L")
    return f


def compatible_profiles(x: np.ndarray, L: float) -> np.ndarray:
    """Three x-profiles meeting every rectangle boundary condition, shape (3, len(x))."""
    return np.stack([x**2 * (L - x) ** 3, x**3 * (L - x) ** 3, x**2 * (L - x) ** 4])


def random_compatible_field(setup: Setup, rng: np.random.Generator) -> np.ndarray:
    """Modal coefficients (N, nx): up to N/2 sine modes times a random profile combination."""
    domain, grid, basis = setup
    P = compatible_profiles(grid.x, domain.L)
    n_active = max(1, basis.n_modes // 2)
    g = np.zeros((basis.n_modes, grid.nx))
    g[:n_active] = rng.uniform(-1.0, 1.0, (n_active, P.shape[0])) @ P
    return g


def random_profile(x: np.ndarray, L: float, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, 3) @ compatible_profiles(x, L)


def _sample_rngs(seed: int, count: int) -> list[np.random.Generator]:
    # one child stream per sample: results do not depend on how a sweep is split
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


# -- inequalities --------------------------------------------------------------

def _norm_sq_1d(v: np.ndarray, order: int, h: float) -> float:
    dv = v if order == 0 else nodal_derivative(order, v.size, h) @ v
    return float(trapezoid(dv * dv, h))


def check_steklov(v: np.ndarray, L: float) -> InequalityReport:
    """(pi/L)^2 ||v||^2 <= ||v_x||^2 for nodal v on [0, L] with v(0) = v(L) = 0.

    tol = 1e-8 + (pi h / L)^2 * lhs: the centered first difference underestimates
    ||v_x||^2 by a relative O(h^2), which matters only in the sharp case.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 8:
        raise ValueError("check_steklov expects a 1-D nodal profile with at least 8 nodes")
    scale = max(float(np.max(np.abs(v))), 1.0)
    if abs(v[0]) > 1e-10 * scale or abs(v[-1]) > 1e-10 * scale:
        raise PreconditionError("profile must vanish at both ends")
    h = L / (v.size - 1)
    c = (math.pi / L) ** 2
    lhs = c * _norm_sq_1d(v, 0, h)
    tol = INEQUALITY_TOL + (math.pi * h / L) ** 2 * lhs
    return InequalityReport("steklov", lhs, _norm_sq_1d(v, 1, h), tol, {"pi2_over_L2": c})


def _norms(f: np.ndarray, setup: Setup):
    G = _as_nodal(f, setup.grid.nx, "field")
    rec = compute_record(G[:, 1:-1], 0.0, setup)
    return rec


def _sharp_tol(setup: Setup, value: float) -> float:
    # relative O(h^2) slack for the first-eigenfunction cases
    h, L = setup.grid.h, setup.domain.L
    return INEQUALITY_TOL + 4.0 * (math.pi * h / L) ** 2 * abs(value)


def check_poincare_bounds(f: np.ndarray, setup: Setup) -> list[InequalityReport]:
    """The four Poincare-type bounds with a = pi^2/L^2 + pi^2/B^2."""
    a = setup.domain.a
    r = _norms(f, setup)
    const = {"a": a}
    return [
        InequalityReport("grad_vs_l2", a * r.l2_sq, r.grad_sq, _sharp_tol(setup, a * r.l2_sq), const),
        InequalityReport("lap_vs_l2", a * a * r.l2_sq, r.lap_sq, _sharp_tol(setup, a * a * r.l2_sq), const),
        InequalityReport("lap_vs_grad", a * r.grad_sq, r.lap_sq, _sharp_tol(setup, a * r.grad_sq), const),
        InequalityReport("bilap_vs_lap", a * a * r.lap_sq, r.bilap_sq, _sharp_tol(setup, a * a * r.lap_sq), const),
    ]


def sup_constant(a: float) -> float:
    return 1.0 + 1.0 / a + 1.0 / a**2


def check_sup_bound(f: np.ndarray, setup: Setup) -> InequalityReport:
    """sup f^2 <= C_s ||Laplacian f||^2, C_s = 1 + 1/a + 1/a^2."""
    a = setup.domain.a
    cs = sup_constant(a)
    r = _norms(f, setup)
    return InequalityReport("sup_vs_lap", r.sup_sq, cs * r.lap_sq, INEQUALITY_TOL, {"a": a, "C_s": cs})


def check_ladyzhenskaya(f: np.ndarray, setup: Setup) -> InequalityReport:
    """||f||_{L4}^2 <= 2 ||f|| ||grad f|| for f vanishing on the boundary."""
    r = _norms(f, setup)
    return InequalityReport("ladyzhenskaya", math.sqrt(r.l4_4), 2.0 * math.sqrt(r.l2_sq * r.grad_sq),
                            INEQUALITY_TOL, {"C": 2.0})


def nirenberg_ratio(u: np.ndarray, L: float, i: int, m: int) -> float:
    """||D^i u|| / (||D^m u||^{i/m} ||u||^{1-i/m}), or 0 for u = 0."""
    h = L / (u.size - 1)
    num = math.sqrt(_norm_sq_1d(u, i, h))
    base = math.sqrt(_norm_sq_1d(u, 0, h))
    top = math.sqrt(_norm_sq_1d(u, m, h))
    if base == 0.0:
        return 0.0
    return num / (top ** (i / m) * base ** (1.0 - i / m))


def fit_nirenberg_constants(L: float, nx: int, i: int, m: int, count: int = 1000, seed: int = 0,
                            margin: float = NIRENBERG_MARGIN) -> dict:
    """Fit A1 (with A2 = 0) as margin * max ratio over a seeded corpus of compatible profiles."""
    if not 0 <= i < m <= 5:
        raise ValueError(f"need 0 <= i < m <= 5, got i={i}, m={m}")
    x = np.linspace(0.0, L, nx + 2)
    worst = max((nirenberg_ratio(random_profile(x, L, rng), L, i, m) for rng in _sample_rngs(seed, count)),
                default=0.0)
    return {"A1": margin * worst, "A2": 0.0, "seed": seed, "count": count, "max_ratio": worst, "i": i, "m": m}


def check_nirenberg(u: np.ndarray, L: float, i: int, m: int, A1: float, A2: float = 0.0,
                    rel_tol: float = 1e-3) -> InequalityReport:
    """||D^i u|| <= A1 ||D^m u||^{i/m} ||u||^{1-i/m} + A2 ||u||; tol = 1e-8 + rel_tol * rhs."""
    if not 0 <= i < m <= 5:
        raise ValueError(f"need 0 <= i < m <= 5, got i={i}, m={m}")
    u = np.asarray(u, dtype=float)
    h = L / (u.size - 1)
    base = math.sqrt(_norm_sq_1d(u, 0, h))
    lhs = math.sqrt(_norm_sq_1d(u, i, h))
    rhs = A1 * math.sqrt(_norm_sq_1d(u, m, h)) ** (i / m) * base ** (1.0 - i / m) + A2 * base
    return InequalityReport(f"nirenberg_{i}_{m}", lhs, rhs, INEQUALITY_TOL + rel_tol * rhs,
                            {"A1": A1, "A2": A2, "i": i, "m": m})


@dataclass
class SweepResult:
    count: int
    passes: dict[str, int]
    min_margin: dict[str, float]
    constants: dict

    @property
    def all_passed(self) -> bool:
        return all(v == self.count for v in self.passes.values())


def inequality_sweep(setup: Setup, count: int, seed: int, nirenberg: Sequence[tuple[int, int]] = ((3, 5), (4, 5)),
                     calibration_seed: int = 12345, calibration_count: int = 1000) -> SweepResult:
    """Run every inequality check on ``count`` seeded random compatible fields."""
    L = setup.domain.L
    x_full = setup.grid.x_full
    consts = {f"nirenberg_{i}_{m}": fit_nirenberg_constants(L, setup.grid.nx, i, m, calibration_count,
                                                             calibration_seed)
              for i, m in nirenberg}
    passes: dict[str, int] = {}
    worst: dict[str, float] = {}

    def tally(rep: InequalityReport):
        passes[rep.name] = passes.get(rep.name, 0) + int(rep.passed)
        worst[rep.name] = min(worst.get(rep.name, math.inf), rep.margin)

    for rng in _sample_rngs(seed, count):
        g = random_compatible_field(setup, rng)
        G = np.zeros((g.shape[0], g.shape[1] + 2))
        G[:, 1:-1] = g
        tally(check_steklov(G[0], L))
        for rep in check_poincare_bounds(g, setup):
            tally(rep)
        tally(check_sup_bound(g, setup))
        tally(check_ladyzhenskaya(g, setup))
        prof = random_profile(x_full, L, rng)
        for i, m in nirenberg:
            c = consts[f"nirenberg_{i}_{m}"]
            tally(check_nirenberg(prof, L, i, m, c["A1"], c["A2"]))
    return SweepResult(count, passes, worst, consts)


# -- energy balance ------------------------------------------------------------

@dataclass
class EnergyResidual:
    t: np.ndarray
    r: np.ndarray
    window: tuple[float, float]
    max_abs: float
    scale: float
    max_abs_full: float
    scale_full: float

    @property
    def relative(self) -> float:
        return self.max_abs / self.scale if self.scale > 0 else 0.0

    @property
    def relative_full(self) -> float:
        return self.max_abs_full / self.scale_full if self.scale_full > 0 else 0.0


def energy_identity_residual(series: DiagnosticsSeries, gamma: float, t_start: float | None = None) -> EnergyResidual:
    """r = d/dt ||u||^2 - 2 gamma ||grad u||^2 + 2 ||Lap u||^2 + int u_xx(0, y)^2 dy.

    The time derivative is a centered difference of the sampled ||u||^2.  The
    reported maximum and its scale max(2 ||Lap u||^2) are taken over
    t >= t_start (default 0.1 * t_end): data that is not compatible to higher
    order starts with a boundary layer that no second-order scheme resolves
    uniformly down to t = 0.  The full-range values are kept alongside.
    """
    if len(series) < 3:
        raise SparseSeriesError(f"need at least 3 samples for a centered derivative, got {len(series)}")
    t = series.t
    l2 = series.column("l2_sq")
    dl2 = (l2[2:] - l2[:-2]) / (t[2:] - t[:-2])
    mid = slice(1, -1)
    lap2 = 2.0 * series.column("lap_sq")[mid]
    r = dl2 - 2.0 * gamma * series.column("grad_sq")[mid] + lap2 + series.column("trace_uxx0")[mid]
    tm = t[mid]
    if t_start is None:
        t_start = t[0] + 0.1 * (t[-1] - t[0])
    sel = tm >= t_start
    if not np.any(sel):
        raise SparseSeriesError(f"no samples after t_start={t_start}")
    return EnergyResidual(tm, r, (float(t_start), float(t[-1])),
                          float(np.max(np.abs(r[sel]))), float(np.max(lap2[sel])),
                          float(np.max(np.abs(r))), float(np.max(lap2)))


def residual_reduction(coarse: EnergyResidual, fine: EnergyResidual) -> float:
    """Factor by which max |r| drops from the coarse to the refined run."""
    return coarse.max_abs / fine.max_abs if fine.max_abs > 0 else math.inf


# -- decay ---------------------------------------------------------------------

def fit_decay(t: np.ndarray, E: np.ndarray, window: tuple[float, float] | None = None) -> float:
    """Least-squares slope of -log E over ``window`` (default [0.1 t_end, t_end])."""
    t = np.asarray(t, dtype=float)
    E = np.asarray(E, dtype=float)
    if window is None:
        window = (t[0] + 0.1 * (t[-1] - t[0]), t[-1])
    sel = (t >= window[0]) & (t <= window[1])
    if sel.sum() < 2:
        raise SparseSeriesError("fewer than two samples in the fit window")
    if np.any(E[sel] <= 0):
        raise ValueError("energy must be positive to fit a log-linear rate")
    slope = np.polyfit(t[sel], np.log(E[sel]), 1)[0]
    return float(-slope)


def decay_rate(theorem: str, L: float, B: float, gamma: float) -> float:
    """Guaranteed rate chi; L is ignored for the half-strip results."""
    if theorem == "6.1":
        a = math.pi**2 / L**2 + math.pi**2 / B**2
        return 2.0 * a * a * (1.0 - gamma / a)
    if theorem == "6.2":
        a = math.pi**2 / L**2 + math.pi**2 / B**2
        return 2.0 * (abs(gamma) / a + 1.0) * a * a
    if theorem == "6.3":
        a = math.pi**2 / B**2
        return 0.5 * a * a
    if theorem == "6.4":
        a = math.pi**2 / B**2
        return 2.0 * (abs(gamma) / a + 1.0) * a * a
    raise ValueError(f"unknown theorem {theorem!r}; expected one of {THEOREMS}")


def hypotheses(theorem: str, setup: Setup, gamma: float, weighted0: float | None = None) -> dict[str, bool]:
    """Each hypothesis of the chosen decay result, evaluated for this run."""
    d = setup.domain
    if theorem in ("6.1", "6.2"):
        out = {"rectangle": d.kind == "rectangle"}
        if theorem == "6.1":
            out["gamma >= 0"] = gamma >= 0
            out["b < 1"] = gamma / d.a < 1.0
        else:
            out["gamma <= 0"] = gamma <= 0
        return out
    if theorem not in ("6.3", "6.4"):
        raise ValueError(f"unknown theorem {theorem!r}; expected one of {THEOREMS}")
    out = {"half_strip": d.kind == "half_strip",
           "0 < k <= 1/4": 0.0 < d.weight_k <= 0.25,
           "a > 1": d.a > 1.0}
    if theorem == "6.3":
        out["0 < gamma <= 1/8"] = 0.0 < gamma <= 0.125
    else:
        out["gamma <= 0"] = gamma <= 0
    if weighted0 is not None:
        out["smallness"] = weighted0 < smallness_threshold(setup)
    return out


@dataclass
class DecayReport:
    theorem: str
    chi_theory: float
    chi_fitted: float
    pointwise_ok: float
    window: tuple[float, float]
    condition_ok: bool
    hypotheses: dict = field(default_factory=dict)
    max_ratio: float = float("nan")
    energy: str = "l2_sq"
    tol: float = DECAY_TOL
    note: str = ""

    @property
    def passed(self) -> bool | None:
        """None when the hypotheses fail (the bound is then not asserted)."""
        if not self.condition_ok:
            return None
        return self.pointwise_ok == 1.0

    @property
    def fitted_ok(self) -> bool:
        # one-sided: the guaranteed rate is a minimum
        return self.chi_fitted >= (1.0 - FIT_TOL) * self.chi_theory

    def asdict(self) -> dict:
        return {**asdict(self), "passed": self.passed, "fitted_ok": self.fitted_ok}


def _envelope(t: np.ndarray, E: np.ndarray, chi: float, tol: float) -> tuple[float, float]:
    bound = E[0] * np.exp(-chi * (t - t[0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, E / bound, np.where(E > 0, np.inf, 0.0))
    return float(np.mean(E <= (1.0 + tol) * bound)), float(np.max(ratio))


def verify_theorem(theorem: str, series: DiagnosticsSeries, setup: Setup, gamma: float,
                   tol: float = DECAY_TOL, window: tuple[float, float] | None = None) -> DecayReport:
    """Check E(t) <= (1 + tol) E(0) exp(-chi t) at every sample.

    E is ||u||^2 for the rectangle results and (e^{kx}, u^2) for the
    half-strip ones.  At gamma = 0 both rectangle rates apply; the larger is
    asserted when it holds, the smaller otherwise.
    """
    d = setup.domain
    energy = "weighted" if theorem in ("6.3", "6.4") else "l2_sq"
    t = series.t
    E = series.column(energy)
    hyp = hypotheses(theorem, setup, gamma, float(E[0]) if energy == "weighted" else None)
    ok = all(hyp.values())
    chi = decay_rate(theorem, d.L, d.B, gamma)
    note = ""
    if theorem in ("6.1", "6.2") and gamma == 0:
        rates = sorted({decay_rate("6.1", d.L, d.B, 0.0), decay_rate("6.2", d.L, d.B, 0.0)}, reverse=True)
        for chi in rates:
            if _envelope(t, E, chi, tol)[0] == 1.0:
                break
        note = f"gamma = 0: candidate rates {rates}, asserted {chi}"
    frac, worst = _envelope(t, E, chi, tol)
    if window is None:
        window = (float(t[0] + 0.1 * (t[-1] - t[0])), float(t[-1]))
    try:
        fitted = fit_decay(t, E, window)
    except (SparseSeriesError, ValueError):
        fitted = float("nan")
    return DecayReport(theorem, chi, fitted, frac, window, ok, hyp, worst, energy, tol, note)


@dataclass
class MonitorReport:
    applicable: bool
    passed: bool
    initial_margin: float
    first_failure: float | None = None


def comparison_monitor(t: np.ndarray, f: np.ndarray, alpha: float, k_c: float, n: int = 1) -> MonitorReport:
    """f(t) < f(0) at every sample t > 0, asserted when alpha - k_c f(0)^n > 0."""
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    margin = alpha - k_c * f[0] ** n
    later = t > t[0]
    bad = np.nonzero(later & ~(f < f[0]))[0]
    first = float(t[bad[0]]) if bad.size else None
    applicable = margin > 0
    return MonitorReport(bool(applicable), bool(applicable and bad.size == 0 and later.any()), float(margin), first)


def weighted_monitor(series: DiagnosticsSeries, setup: Setup) -> MonitorReport:
    """The weighted-energy monitor with alpha = a^2, k_c = 8k/9, n = 1."""
    a, k = setup.domain.a, setup.domain.weight_k
    return comparison_monitor(series.t, series.column("weighted"), a * a, 8.0 * k / 9.0, 1)


# -- continuous dependence -------------------------------------------------------

@dataclass
class StabilityReport:
    delta: float
    c_hat: float
    t: np.ndarray = field(repr=False)
    z_norm: np.ndarray = field(repr=False)
    envelope: np.ndarray = field(repr=False)
    conclusive: bool = True
    message: str = ""

    @property
    def ratio(self) -> np.ndarray:
        return self.z_norm / self.z_norm[0] if self.z_norm[0] > 0 else np.zeros_like(self.z_norm)

    @property
    def sup_ratio(self) -> float:
        return float(np.max(self.ratio))

    @property
    def within_envelope(self) -> bool:
        # ||z||^2 / ||z0||^2 <= envelope, with a roundoff allowance
        return bool(np.all(self.ratio**2 <= self.envelope * (1.0 + 1e-9)))


def _pair_run(initial: InitialData, direction: np.ndarray, delta: float, setup: Setup,
              params: PhysicalParams, config: SolverConfig):
    u0 = initial.coeffs
    r1 = run_simulation(u0, params, config, setup, keep_states=True)
    r2 = run_simulation(u0 + delta * direction, params, config, setup, keep_states=True)
    t = r1.series.t
    h = setup.grid.h
    z = np.array([math.sqrt(h * np.sum((a - b) ** 2)) for a, b in zip(r1.series.states, r2.series.states)])
    forcing = 2.0 + r1.series.column("lap_sq") + r2.series.column("lap_sq")
    integral = cumulative_trapezoid(forcing, t, initial=0.0)
    return t, z, integral


def unit_direction(setup: Setup, seed: int) -> np.ndarray:
    """A seeded compatible field of unit discrete L2 norm."""
    g = random_compatible_field(setup, np.random.default_rng(seed))
    return g / math.sqrt(setup.grid.h * np.sum(g * g))


def calibrate_gronwall(initial: InitialData, setup: Setup, params: PhysicalParams, config: SolverConfig,
                       delta: float = 1e-6, seed: int = 0, margin: float = GRONWALL_MARGIN) -> float:
    """C_hat = margin * max_t log(||z||^2/||z0||^2) / int_0^t sum_i (1 + ||Lap u_i||^2), floored at 0."""
    t, z, integral = _pair_run(initial, unit_direction(setup, seed), delta, setup, params, config)
    sel = integral > 0
    c = np.max(np.log((z[sel] / z[0]) ** 2) / integral[sel]) if sel.any() else 0.0
    return margin * max(float(c), 0.0)


def stability_experiment(initial: InitialData, setup: Setup, params: PhysicalParams, config: SolverConfig,
                         delta: float, c_hat: float, seed: int = 1) -> StabilityReport:
    """Evolve u0 and u0 + delta v, compare ||z||^2 with the frozen Gronwall envelope."""
    if delta == 0:
        r = run_simulation(initial.coeffs, params, config, setup)
        t = r.series.t
        return StabilityReport(0.0, c_hat, t, np.zeros_like(t), np.ones_like(t), True, "identical runs")
    try:
        t, z, integral = _pair_run(initial, unit_direction(setup, seed), delta, setup, params, config)
    except BlowUpError as err:
        return StabilityReport(delta, c_hat, np.array([]), np.array([1.0]), np.array([]), False, str(err))
    return StabilityReport(delta, c_hat, t, z, np.exp(c_hat * integral))


def linear_response(a: StabilityReport, b: StabilityReport) -> np.ndarray:
    """||z_a(t)|| / ||z_b(t)|| sample by sample."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return a.z_norm / b.z_norm


# -- manufactured-solution ladders -------------------------------------------------

@dataclass
class ConvergenceReport:
    nx_levels: tuple
    dt_levels: tuple
    spatial_errors: list
    spatial_orders: list
    temporal_diffs: list
    temporal_orders: list

    @property
    def min_order(self) -> float:
        orders = [o for o in self.spatial_orders + self.temporal_orders if not math.isnan(o)]
        return min(orders) if orders else math.nan

    def passed(self, threshold: float = 1.9) -> bool:
        if all(e == 0 for e in self.spatial_errors + self.temporal_diffs):
            return True
        return all(o >= threshold for o in self.spatial_orders + self.temporal_orders)

    def asdict(self) -> dict:
        return {**asdict(self), "min_order": self.min_order, "passed": self.passed()}


def _order(e_coarse: float, e_fine: float, ratio: float) -> float:
    if e_coarse == 0 or e_fine == 0:
        return math.nan
    return math.log(e_coarse / e_fine) / math.log(ratio)


def _mms_run(nx: int, dt: float, t_end: float, n_modes: int, gamma: float, amplitude: float):
    setup = build_domain("rectangle", math.pi, math.pi, nx, n_modes)
    m = ManufacturedSolution(setup, gamma, amplitude)
    r = run_simulation(m.exact(0.0), PhysicalParams(gamma), SolverConfig(dt=dt, t_end=t_end), setup,
                       forcing=m.forcing, diagnostics=False)
    err = r.state.coeffs - m.exact(r.state.t)
    return math.sqrt(setup.grid.h * np.sum(err**2)), r.state.coeffs, setup.grid.h


def mms_convergence(nx_levels: Sequence[int] = (64, 128, 256), dt_levels: Sequence[float] = (1e-3, 5e-4, 2.5e-4),
                    t_end: float = 0.1, spatial_dt: float = 1e-4, temporal_nx: int = 128,
                    n_modes: int = 4, gamma: float = 1.0, amplitude: float = 1.0) -> ConvergenceReport:
    """Spatial orders from errors against the manufactured solution; temporal
    orders from successive differences at fixed nx (the spatial error cancels)."""
    if len(nx_levels) < 3 or len(dt_levels) < 3:
        raise LadderError("convergence ladders need at least three levels each")
    sp = [_mms_run(nx, spatial_dt, t_end, n_modes, gamma, amplitude) for nx in nx_levels]
    errs = [e for e, _, _ in sp]
    s_orders = [_order(errs[i], errs[i + 1], sp[i][2] / sp[i + 1][2]) for i in range(len(sp) - 1)]
    tm = [_mms_run(temporal_nx, dt, t_end, n_modes, gamma, amplitude)[1] for dt in dt_levels]
    h = math.pi / (temporal_nx + 1)
    diffs = [math.sqrt(h * np.sum((tm[i] - tm[i + 1]) ** 2)) for i in range(len(tm) - 1)]
    t_orders = [_order(diffs[i], diffs[i + 1], dt_levels[i] / dt_levels[i + 1]) for i in range(len(diffs) - 1)]
    return ConvergenceReport(tuple(nx_levels), tuple(dt_levels), errs, s_orders, diffs, t_orders)
