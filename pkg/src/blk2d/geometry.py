"""Domains, grids and the sine eigenbasis in y.

The field is stored modally as ``coeffs[j-1, i] = g_j(x_i)`` so that

    u(x_i, y) = sum_j g_j(x_i) * omega_j(y),   omega_j(y) = sqrt(2/B) sin(j pi y / B).

Physical samples live on ``ny_col = 2N + 1`` equispaced y points (endpoints
included).  Products of two band-limited sine series are cosine polynomials of
degree <= 2N, which are determined exactly by those samples; this is what
makes the projected nonlinearity exact (see :meth:`SineBasis.project_product`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

KINDS = ("rectangle", "half_strip")
MAX_WEIGHT_K = 0.25


class GeometryError(ValueError):
    """Nonpositive or otherwise unusable domain dimensions."""


class ParameterError(ValueError):
    """Parameter outside the range a construction supports."""


@dataclass(frozen=True)
class Domain:
    kind: str
    L: float
    B: float
    weight_k: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown domain kind {self.kind!r}")
        if not (self.L > 0 and self.B > 0) or not (math.isfinite(self.L) and math.isfinite(self.B)):
            raise GeometryError(f"domain lengths must be positive, got L={self.L}, B={self.B}")
        if self.kind == "rectangle" and self.weight_k != 0:
            raise ParameterError("rectangle runs use weight_k = 0")
        if self.kind == "half_strip" and not (0.0 <= self.weight_k <= MAX_WEIGHT_K):
            raise ParameterError(f"weight_k must lie in [0, 1/4], got {self.weight_k}")

    @property
    def a(self) -> float:
        """Poincare-type constant pi^2/L^2 + pi^2/B^2 (rectangle) or pi^2/B^2 (half-strip)."""
        if self.kind == "half_strip":
            return math.pi**2 / self.B**2
        return math.pi**2 / self.L**2 + math.pi**2 / self.B**2


@dataclass(frozen=True)
class Grid:
    nx: int
    h: float
    n_modes: int
    ny_col: int

    @property
    def L(self) -> float:
        return self.h * (self.nx + 1)

    @property
    def x(self) -> np.ndarray:
        """Interior nodes x_1..x_nx."""
        return self.h * np.arange(1, self.nx + 1)

    @property
    def x_full(self) -> np.ndarray:
        """All nodes x_0..x_{nx+1}, boundary included."""
        return self.h * np.arange(self.nx + 2)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.nx + 2, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w


def _cos_sin_integrals(q: np.ndarray, j: np.ndarray) -> np.ndarray:
    """int_0^pi cos(q s) sin(j s) ds for integer q >= 0, j >= 1 (broadcast)."""
    q = np.abs(np.asarray(q, dtype=np.int64))
    j = np.asarray(j, dtype=np.int64)
    odd = ((j + q) % 2) == 1
    denom = (j * j - q * q).astype(float)
    out = np.zeros(np.broadcast(q, j).shape)
    np.divide(2.0 * j, denom, out=out, where=odd & (denom != 0))
    return out


@dataclass(frozen=True)
class SineBasis:
    B: float
    n_modes: int
    y: np.ndarray = field(repr=False)
    omegas: np.ndarray = field(repr=False)
    lambdas: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, B: float, n_modes: int) -> "SineBasis":
        ny = 2 * n_modes + 1
        y = np.linspace(0.0, B, ny)
        j = np.arange(1, n_modes + 1)
        omegas = math.sqrt(2.0 / B) * np.sin(np.outer(j, y) * math.pi / B)
        omegas[:, 0] = omegas[:, -1] = 0.0
        lambdas = (j * math.pi / B) ** 2
        for arr in (y, omegas, lambdas):
            arr.setflags(write=False)
        return cls(B, n_modes, y, omegas, lambdas)

    @property
    def ny_col(self) -> int:
        return self.y.size

    @property
    def dy(self) -> float:
        return self.B / (self.ny_col - 1)

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        """omega_j at arbitrary points, shape (N, len(y))."""
        j = np.arange(1, self.n_modes + 1)
        return math.sqrt(2.0 / self.B) * np.sin(np.outer(j, np.asarray(y)) * math.pi / self.B)

    def refined(self, factor: int = 2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(y, omegas, trapezoid weights) on a grid ``factor`` times finer."""
        ny = factor * (self.ny_col - 1) + 1
        y = np.linspace(0.0, self.B, ny)
        om = self.evaluate(y)
        om[:, 0] = om[:, -1] = 0.0
        w = np.full(ny, self.B / (ny - 1))
        w[0] = w[-1] = 0.5 * w[0]
        return y, om, w

    def quadrature_weights(self) -> np.ndarray:
        w = np.full(self.ny_col, self.dy)
        w[0] = w[-1] = 0.5 * self.dy
        return w

    @property
    def analysis_matrix(self) -> np.ndarray:
        """(N, ny_col) matrix taking samples to sine coefficients (trapezoid rule).

        Exact for band-limited sine fields: omega_j * u is a cosine polynomial of
        degree <= 2N and the trapezoid rule on 2N intervals integrates it exactly.
        """
        return self.omegas * self.quadrature_weights()

    @property
    def product_projection(self) -> np.ndarray:
        """(N, ny_col) matrix P with (P p)_j = int_0^B p omega_j dy exactly for
        any cosine polynomial p of degree <= 2N given by its samples."""
        return _product_projection(self.B, self.n_modes)

    def project_product(self, samples: np.ndarray) -> np.ndarray:
        """Exact sine projection of a cosine-polynomial field sampled along axis 0."""
        return np.tensordot(self.product_projection, samples, axes=(1, 0))


_PROJ_CACHE: dict[tuple[float, int], np.ndarray] = {}


def _product_projection(B: float, n_modes: int) -> np.ndarray:
    key = (float(B), int(n_modes))
    if key in _PROJ_CACHE:
        return _PROJ_CACHE[key]
    M = 2 * n_modes
    m = np.arange(M + 1)
    q = np.arange(M + 1)
    # DCT-I: samples -> cosine coefficients c_q
    w = np.ones(M + 1)
    w[0] = w[-1] = 0.5
    T = (2.0 / M) * np.cos(np.pi * np.outer(q, m) / M) * w
    T[0] *= 0.5
    T[-1] *= 0.5
    j = np.arange(1, n_modes + 1)
    C = math.sqrt(2.0 / B) * (B / math.pi) * _cos_sin_integrals(q[None, :], j[:, None])
    P = C @ T
    P.setflags(write=False)
    _PROJ_CACHE[key] = P
    return P


class Setup(NamedTuple):
    domain: Domain
    grid: Grid
    basis: SineBasis


def build_domain(kind: str, L: float | None, B: float, nx: int, n_modes: int, weight_k: float = 0.0) -> Setup:
    """Build a consistent (Domain, Grid, SineBasis) triple.

    For ``kind="half_strip"`` ``L`` is the truncation length; ``None`` selects
    the default 40*B.
    """
    if L is None:
        if kind != "half_strip":
            raise GeometryError("L is required for rectangles")
        L = 40.0 * B
    domain = Domain(kind, float(L), float(B), float(weight_k))
    if int(nx) != nx or nx < 16:
        raise ParameterError(f"nx must be an integer >= 16, got {nx}")
    if int(n_modes) != n_modes or n_modes < 1:
        raise ParameterError(f"n_modes must be a positive integer, got {n_modes}")
    nx, n_modes = int(nx), int(n_modes)
    basis = SineBasis.build(domain.B, n_modes)
    grid = Grid(nx=nx, h=domain.L / (nx + 1), n_modes=n_modes, ny_col=basis.ny_col)
    return Setup(domain, grid, basis)


def triple_product_coefficients(B: float, N: int) -> np.ndarray:
    """a[k-1, l-1, j-1] = int_0^B omega_k omega_l omega_j dy, in closed form."""
    if int(N) != N or N < 1:
        raise ParameterError(f"N must be a positive integer, got {N}")
    idx = np.arange(1, int(N) + 1)
    k = idx[:, None, None]
    l = idx[None, :, None]
    j = idx[None, None, :]
    # sin k sin l = (cos (k-l)s - cos (k+l)s) / 2
    vals = 0.5 * (_cos_sin_integrals(k - l, j) - _cos_sin_integrals(k + l, j))
    return (2.0 / B) ** 1.5 * (B / math.pi) * vals


@dataclass
class ModalState:
    coeffs: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.ndim != 2:
            raise ValueError(f"modal coefficients must be 2-D (modes, nx), got shape {self.coeffs.shape}")

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))


@dataclass
class PhysicalField:
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)


def forward_sine_transform(field: PhysicalField, basis: SineBasis) -> ModalState:
    """Samples u(y_m, x_i) with shape (ny_col, nx) -> modal coefficients (N, nx)."""
    vals = field.values
    if vals.ndim != 2 or vals.shape[0] != basis.ny_col:
        raise ValueError(f"field shape {vals.shape} does not match {basis.ny_col} collocation points")
    return ModalState(basis.analysis_matrix @ vals, field.t)


def inverse_sine_transform(state: ModalState, basis: SineBasis) -> PhysicalField:
    g = state.coeffs
    if g.shape[0] != basis.n_modes:
        raise ValueError(f"state has {g.shape[0]} modes, basis has {basis.n_modes}")
    return PhysicalField(basis.omegas.T @ g, state.t)
