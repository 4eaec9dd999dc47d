"""Time integration of the sine-Galerkin mode system.

Each mode obeys  d/dt g_j + L_j g_j + N_j(g) = F_j  where L_j is the banded
linear operator of :mod:`blk2d.operators`, N_j the projected uu_x and F_j an
optional forcing.  Linear terms are theta-weighted implicit (Crank-Nicolson by
default), N_j is extrapolated with second-order Adams-Bashforth (explicit
Euler on the first step).  The first ``startup_steps`` steps are each taken
as two backward-Euler half steps, which keeps second order for t > 0 while
damping the initial layer of incompatible data.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .functionals import DiagnosticsSeries, compute_record, j_w, weighted_inner
from .geometry import ModalState, PhysicalField, Setup, inverse_sine_transform, triple_product_coefficients
from .operators import build_mode_operator, derivative_set, solve_implicit

log = logging.getLogger(__name__)

BLOWUP_FACTOR = 1e6
PROFILES = ("rect_poly", "strip_exp")
NONLINEAR_FORMS = ("skew", "advective")


class BlowUpError(RuntimeError):
    def __init__(self, message: str, t: float, state: ModalState, series: DiagnosticsSeries | None = None):
        super().__init__(message)
        self.t = t
        self.state = state
        self.series = series


class ConditionWarning(UserWarning):
    """Initial data violates a smallness condition; decay is not guaranteed."""


@dataclass(frozen=True)
class PhysicalParams:
    gamma: float = 1.0


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    theta: float = 0.5
    # effective weight theta + theta_shift * dt: an O(dt) shift keeps second
    # order and damps the stiff x-modes that plain Crank-Nicolson carries along
    theta_shift: float = 0.0
    diag_every: int = 1
    dealias: bool = True
    nonlinear: bool = True
    nonlinear_form: str = "skew"
    # leading full steps replaced by two backward-Euler half steps each; damps
    # the stiff modes excited by data that violates the higher-order corner
    # compatibility conditions, which Crank-Nicolson alone leaves undamped
    startup_steps: int = 2

    def __post_init__(self):
        if not (self.dt > 0 and self.t_end > 0):
            raise ValueError("dt and t_end must be positive")
        if not 0.5 <= self.theta_eff <= 1.0 or self.theta_shift < 0:
            raise ValueError(f"theta + theta_shift*dt must lie in [1/2, 1] with theta_shift >= 0, "
                             f"got {self.theta} + {self.theta_shift}*{self.dt}")
        if self.diag_every < 1:
            raise ValueError("diag_every must be >= 1")
        if self.startup_steps < 0:
            raise ValueError("startup_steps must be >= 0")
        if self.nonlinear_form not in NONLINEAR_FORMS:
            raise ValueError(f"unknown nonlinear form {self.nonlinear_form!r}")

    @property
    def theta_eff(self) -> float:
        return self.theta + self.theta_shift * self.dt

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


# -- initial data ------------------------------------------------------------

def x_profile(profile: str, L: float, sigma: float = 1.0) -> Callable[[np.ndarray, int], np.ndarray]:
    """Return f(x, d) giving the d-th derivative of the x-profile."""
    if profile == "rect_poly":
        x = Polynomial([0.0, 1.0])
        poly = x**2 * (L - x) ** 3
        return lambda xs, d=0: poly.deriv(d)(xs) if d else poly(xs)
    if profile == "strip_exp":
        # x^2 e^{-sigma x}: derivatives via Leibniz on the polynomial factor
        p = Polynomial([0.0, 0.0, 1.0])

        def f(xs, d=0):
            xs = np.asarray(xs, dtype=float)
            total = sum(math.comb(d, r) * (p.deriv(r) if r else p)(xs) * (-sigma) ** (d - r)
                        for r in range(d + 1))
            return total * np.exp(-sigma * xs)
        return f
    raise ValueError(f"unknown profile {profile!r}; expected one of {PROFILES}")


@dataclass
class InitialData:
    profile: str
    amplitude: float
    modes: tuple[int, ...]
    sigma: float
    state: ModalState
    physical: PhysicalField = field(repr=False)
    compatibility: dict[str, float] = field(default_factory=dict)
    truncation_ratio: float = 0.0
    j_w: float = 0.0
    weighted_energy: float = 0.0
    condition_ok: bool | None = None

    @property
    def coeffs(self) -> np.ndarray:
        return self.state.coeffs


def smallness_threshold(setup: Setup) -> float:
    """Right-hand side 9 a^2 / (8k) of the weighted smallness condition."""
    k = setup.domain.weight_k
    if k <= 0:
        return math.inf
    return 9.0 * setup.domain.a**2 / (8.0 * k)


def make_initial(profile: str, amplitude: float, setup: Setup, modes: Sequence[int] = (1,),
                 sigma: float = 1.0, require_smallness: bool = False) -> InitialData:
    """A * phi(x) * sum_j sin(j pi y / B) with phi from ``profile``.

    rect_poly: phi = x^2 (L - x)^3 (all five x-boundary conditions hold exactly);
    strip_exp: phi = x^2 e^{-sigma x} (right conditions hold up to e^{-sigma L}).
    """
    domain, grid, basis = setup
    modes = tuple(int(j) for j in modes)
    if any(j < 1 or j > basis.n_modes for j in modes):
        raise ValueError(f"modes {modes} outside 1..{basis.n_modes}")
    phi = x_profile(profile, domain.L, sigma)
    c = amplitude * math.sqrt(domain.B / 2.0)
    g = np.zeros((basis.n_modes, grid.nx))
    for j in modes:
        g[j - 1] += c * phi(grid.x)
    state = ModalState(g, 0.0)

    amp = abs(amplitude) * len(modes)
    L = domain.L
    compat = {
        "u(0)": amp * abs(float(phi(0.0, 0))),
        "u_x(0)": amp * abs(float(phi(0.0, 1))),
        "u(L)": amp * abs(float(phi(L, 0))),
        "u_x(L)": amp * abs(float(phi(L, 1))),
        "u_xx(L)": amp * abs(float(phi(L, 2))),
    }
    xs = np.linspace(0.0, L, 4001)
    peak = float(np.max(np.abs(phi(xs, 0))))
    tail = xs >= 0.95 * L
    ratio = float(np.max(np.abs(phi(xs[tail], 0))) / peak) if peak > 0 else 0.0

    weighted = float(weighted_inner(domain.weight_k, g, g, setup))
    data = InitialData(profile, float(amplitude), modes, float(sigma), state,
                       inverse_sine_transform(state, basis), compat, ratio,
                       j_w(g, setup, weighted=domain.weight_k > 0), weighted)
    if require_smallness:
        data.condition_ok = weighted < smallness_threshold(setup)
        if not data.condition_ok:
            warnings.warn(
                f"(e^(kx), u0^2) = {weighted:.4g} is not below {smallness_threshold(setup):.4g}; "
                "decay is not guaranteed", ConditionWarning, stacklevel=2)
    return data


# -- nonlinearity ------------------------------------------------------------

def nonlinear_term(coeffs: np.ndarray, setup: Setup, d1, dealias: bool = True, form: str = "skew") -> np.ndarray:
    """Modal projection N_j of u u_x, shape (N, nx).

    ``form="advective"`` projects u * D1 u, which equals the tensor contraction
    sum_{l,k} a_lkj g_l D1 g_k.  ``form="skew"`` projects
    (u D1 u + D1(u^2)) / 3; its discrete cubic flux sum_j (g_j, N_j) vanishes
    identically.  With ``dealias`` the projection of the cosine-polynomial
    product is exact; without it a plain trapezoid sine analysis is used.
    """
    basis = setup.basis
    U = basis.omegas.T @ coeffs
    Ux = d1(U)
    if form == "advective":
        p = U * Ux
    elif form == "skew":
        p = (U * Ux + d1(U * U)) / 3.0
    else:
        raise ValueError(f"unknown nonlinear form {form!r}")
    if dealias:
        return basis.project_product(p)
    return basis.analysis_matrix @ p


# -- stepping ----------------------------------------------------------------

Forcing = Callable[[float], np.ndarray]


class Stepper:
    """theta/AB2 integrator owning the factorized mode operators and AB2 history."""

    def __init__(self, setup: Setup, params: PhysicalParams, config: SolverConfig, forcing: Forcing | None = None):
        self.setup = setup
        self.params = params
        self.config = config
        self.forcing = forcing
        domain, grid, basis = setup
        self.derivs = derivative_set(grid, domain.kind)
        self.ops = self._factorize(config.dt, config.theta_eff)
        self._startup_ops = None
        self.prev_nonlinear: np.ndarray | None = None
        self.steps_taken = 0

    def _factorize(self, dt: float, theta: float) -> list:
        return [build_mode_operator(j + 1, lam, self.params.gamma, self.derivs, dt, theta)
                for j, lam in enumerate(self.setup.basis.lambdas)]

    def nonlinear(self, g: np.ndarray) -> np.ndarray:
        if not self.config.nonlinear:
            return np.zeros_like(g)
        return nonlinear_term(g, self.setup, self.derivs[1], self.config.dealias, self.config.nonlinear_form)

    def _advance(self, g: np.ndarray, t: float, dt: float, theta: float, ops, explicit: np.ndarray) -> np.ndarray:
        # (I - (1-theta) dt L) g = g/theta - ((1-theta)/theta) (I + theta dt L) g, so the
        # stiff product L g is never formed explicitly (it would cost ~eps*|L|*dt of accuracy)
        rhs = g / theta - dt * explicit
        if self.forcing is not None:
            rhs = rhs + dt * ((1.0 - theta) * self.forcing(t) + theta * self.forcing(t + dt))
        new = np.empty_like(g)
        for j, op in enumerate(ops):
            new[j], _ = solve_implicit(op, rhs[j], check=False)
        if theta < 1.0:
            new -= ((1.0 - theta) / theta) * g
        return new

    def step(self, state: ModalState) -> ModalState:
        cfg = self.config
        dt = cfg.dt
        g = state.coeffs
        N = self.nonlinear(g)
        if self.steps_taken < cfg.startup_steps and cfg.theta_eff < 1.0:
            if self._startup_ops is None:
                self._startup_ops = self._factorize(0.5 * dt, 1.0)
            half = self._advance(g, state.t, 0.5 * dt, 1.0, self._startup_ops, N)
            new = self._advance(half, state.t + 0.5 * dt, 0.5 * dt, 1.0, self._startup_ops, self.nonlinear(half))
        else:
            explicit = N if self.prev_nonlinear is None else 1.5 * N - 0.5 * self.prev_nonlinear
            new = self._advance(g, state.t, dt, cfg.theta_eff, self.ops, explicit)
        self.prev_nonlinear = N
        self.steps_taken += 1
        out = ModalState(new, state.t + dt)
        if not out.is_finite:
            raise BlowUpError(f"non-finite state at t={out.t:.6g}", state.t, state)
        return out


def imex_step(state: ModalState, config: SolverConfig, stepper: Stepper) -> ModalState:
    """Advance ``state`` by one step of ``stepper`` (which carries the AB2 history)."""
    if stepper.config is not config and stepper.config != config:
        raise ValueError("stepper was factorized for a different configuration")
    return stepper.step(state)


class RunResult(NamedTuple):
    series: DiagnosticsSeries
    field: PhysicalField
    state: ModalState


def run_simulation(initial, params: PhysicalParams, config: SolverConfig, setup: Setup,
                   forcing: Forcing | None = None, diagnostics: bool = True,
                   keep_states: bool = False) -> RunResult:
    """Integrate to ``config.t_end``, sampling diagnostics every ``diag_every`` steps.

    ``initial`` may be an :class:`InitialData`, a :class:`ModalState` or a raw
    (N, nx) coefficient array.  Raises :class:`BlowUpError` (carrying the
    partial series) on non-finite values or energy growth beyond 1e6 ||u0||^2.
    """
    if isinstance(initial, InitialData):
        state = ModalState(initial.coeffs.copy(), 0.0)
    elif isinstance(initial, ModalState):
        state = ModalState(initial.coeffs.copy(), initial.t)
    else:
        state = ModalState(np.array(initial, dtype=float), 0.0)
    stepper = Stepper(setup, params, config, forcing)
    h = setup.grid.h
    e0 = h * float(np.sum(state.coeffs**2))
    limit = BLOWUP_FACTOR * e0

    series = DiagnosticsSeries(dt=config.dt, stride=config.diag_every)
    prev = None

    def sample(s: ModalState):
        nonlocal prev
        if diagnostics:
            series.append(compute_record(s.coeffs, s.t, setup,
                                         prev.coeffs if prev is not None else None,
                                         prev.t if prev is not None else None))
        if keep_states:
            series.states.append(s.coeffs.copy())
        prev = s

    sample(state)
    for n in range(1, config.n_steps + 1):
        try:
            state = stepper.step(state)
        except BlowUpError as err:
            err.series = series
            raise
        energy = h * float(np.sum(state.coeffs**2))
        if energy > limit:
            raise BlowUpError(f"||u||^2 = {energy:.3e} exceeded {BLOWUP_FACTOR:g} ||u0||^2 at t={state.t:.6g}",
                              state.t, state, series)
        if n % config.diag_every == 0 or n == config.n_steps:
            sample(state)
    return RunResult(series, inverse_sine_transform(state, setup.basis), state)


# -- manufactured solution ---------------------------------------------------

class ManufacturedSolution:
    """u* = A e^{-t} x^2 (L - x)^3 sin(pi y / B) on a rectangle, with modal forcing L[u*]."""

    def __init__(self, setup: Setup, gamma: float, amplitude: float = 1.0, nonlinear: bool = True):
        domain, grid, basis = setup
        self.setup = setup
        self.gamma = gamma
        self.amplitude = amplitude
        L, lam = domain.L, float(basis.lambdas[0])
        x = Polynomial([0.0, 1.0])
        phi = x**2 * (L - x) ** 3
        d = [phi.deriv(p) if p else phi for p in range(6)]
        lin = d[4] - 2 * lam * d[2] + lam**2 * d[0] + gamma * (d[2] - lam * d[0]) + d[3] - lam * d[1] - d[5]
        c = amplitude * math.sqrt(domain.B / 2.0)
        xs = grid.x
        self._phi = c * phi(xs)
        # d/dt term (-phi) plus linear operator, mode 1 only
        self._lin = c * (lin(xs) - phi(xs))
        a11 = triple_product_coefficients(domain.B, basis.n_modes)[0, 0]
        self._nl = np.outer(a11, c * c * (phi * d[1])(xs)) if nonlinear else np.zeros((basis.n_modes, grid.nx))

    def exact(self, t: float) -> np.ndarray:
        g = np.zeros((self.setup.basis.n_modes, self.setup.grid.nx))
        g[0] = math.exp(-t) * self._phi
        return g

    def forcing(self, t: float) -> np.ndarray:
        F = math.exp(-2.0 * t) * self._nl
        F = F.copy()
        F[0] += math.exp(-t) * self._lin
        return F
