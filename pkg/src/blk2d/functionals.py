"""Scalar functionals of a modal state: norms, traces, suprema, weighted energies.

y-integrals use Parseval on the sine coefficients (exact); x-integrals use the
trapezoid rule on all nodes x_0..x_{nx+1}.  x-derivatives are taken with
nodal second-order stencils that do not assume any boundary condition
(centered inside, one-sided at the ends), so the same code measures
compatible fields and test fields such as sin(pi x/L) alike.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .geometry import Setup
from .operators import fd_weights

OVERFLOW_EXPONENT = 700.0


class InvalidDataError(ValueError):
    pass


@lru_cache(maxsize=64)
def nodal_derivative(order: int, n_nodes: int, h: float) -> sp.csr_matrix:
    """D^order on nodes 0..n_nodes-1 without boundary assumptions."""
    width = order + 1 if order % 2 == 0 else order + 2
    half = width // 2
    one_sided = order + 3
    rows, cols, vals = [], [], []
    for i in range(n_nodes):
        if half <= i <= n_nodes - 1 - half:
            idx = np.arange(i - half, i + half + 1)
        else:
            start = 0 if i < half else n_nodes - one_sided
            idx = np.arange(start, start + one_sided)
        w = fd_weights(idx - i, order) / h**order
        rows.extend([i] * idx.size)
        cols.extend(idx)
        vals.extend(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n_nodes, n_nodes))


def pad(coeffs: np.ndarray) -> np.ndarray:
    """Interior modal values (N, nx) -> nodal values (N, nx+2) with zero ends."""
    g = np.asarray(coeffs, dtype=float)
    out = np.zeros(g.shape[:-1] + (g.shape[-1] + 2,))
    out[..., 1:-1] = g
    return out


def x_derivative(G: np.ndarray, order: int, h: float) -> np.ndarray:
    """Nodal derivative along the last axis of full-node data."""
    if order == 0:
        return G
    D = nodal_derivative(order, G.shape[-1], h)
    return (D @ G.T).T if G.ndim > 1 else D @ G


def trapezoid(F: np.ndarray, h: float) -> np.ndarray:
    """Trapezoid rule along the last axis of full-node data."""
    return h * (F[..., 1:-1].sum(axis=-1) + 0.5 * (F[..., 0] + F[..., -1]))


def uxx_at_left(coeffs: np.ndarray, h: float) -> np.ndarray:
    """u_xx(0) per mode from u(0) = u_x(0) = 0: (8 u_1 - u_2) / (2 h^2), O(h^2)."""
    g = np.asarray(coeffs)
    return (8.0 * g[..., 0] - g[..., 1]) / (2.0 * h * h)


class WeightedInner(NamedTuple):
    """(e^{kx}, f g) = value * exp(log_offset)."""

    value: float
    log_offset: float = 0.0

    def __float__(self) -> float:
        return float(self.value * math.exp(self.log_offset))


def weighted_inner(k: float, f: np.ndarray, g: np.ndarray, setup: Setup) -> WeightedInner:
    """(e^{kx}, f g) for modal fields f, g of shape (N, nx).

    Trapezoid in x, Parseval in y.  When k*L exceeds the overflow threshold the
    weight is evaluated as e^{k(x - L)} and ``log_offset = k L`` is reported.
    """
    if k < 0:
        raise ValueError("weight exponent must be nonnegative")
    grid = setup.grid
    x = grid.x_full
    shift = 0.0
    if k * grid.L > OVERFLOW_EXPONENT:
        shift = k * grid.L
    w = np.exp(k * x - shift)
    F = pad(f) if f.shape[-1] == grid.nx else f
    Gv = pad(g) if g.shape[-1] == grid.nx else g
    integrand = (F * Gv).sum(axis=0) * w
    return WeightedInner(float(trapezoid(integrand, grid.h)), shift)


CSV_COLUMNS = (
    "t", "l2_sq", "grad_sq", "lap_sq", "bilap_sq", "trace_uxx0", "sup_sq",
    "uy_sq", "uyy_sq", "ut_sq", "l4_4", "weighted", "weighted_x", "weighted_y",
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    l2_sq: float
    grad_sq: float
    lap_sq: float
    bilap_sq: float
    trace_uxx0: float
    sup_sq: float
    uy_sq: float
    uyy_sq: float
    ut_sq: float  # nan when no previous state was available
    l4_4: float
    weighted: float
    weighted_x: float
    weighted_y: float

    def as_row(self) -> tuple[float, ...]:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)

    def asdict(self) -> dict:
        return asdict(self)


assert tuple(f.name for f in fields(DiagnosticsRecord)) == CSV_COLUMNS


def physical_refined(coeffs: np.ndarray, setup: Setup, factor: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """u on the (factor x refined y) x (all x nodes) grid, and the y weights."""
    _, om, wy = setup.basis.refined(factor)
    return om.T @ pad(coeffs), wy


def compute_record(coeffs: np.ndarray, t: float, setup: Setup,
                   prev: np.ndarray | None = None, prev_t: float | None = None) -> DiagnosticsRecord:
    """All functionals of the state ``coeffs`` (modal, shape (N, nx)) at time t."""
    g = np.asarray(coeffs, dtype=float)
    if not np.all(np.isfinite(g)):
        raise InvalidDataError(f"non-finite state at t={t}")
    domain, grid, basis = setup
    h = grid.h
    lam = basis.lambdas[:, None]
    G = pad(g)
    Gx = x_derivative(G, 1, h)
    Gxx = x_derivative(G, 2, h)
    G4 = x_derivative(G, 4, h)

    g2 = trapezoid(G * G, h)
    l2_sq = g2.sum()
    gx2 = trapezoid(Gx * Gx, h)
    lap = Gxx - lam * G
    bilap = G4 - 2.0 * lam * Gxx + lam**2 * G

    trace = float(np.sum(uxx_at_left(g, h) ** 2))

    if prev is not None and prev_t is not None and prev_t != t:
        dG = (G - pad(prev)) / (t - prev_t)
        ut_sq = float(trapezoid(dG * dG, h).sum())
    else:
        ut_sq = float("nan")

    U, wy = physical_refined(g, setup)
    sup_sq = float(np.max(U * U)) if U.size else 0.0
    l4_4 = float(trapezoid(wy @ (U**4), h))

    k = domain.weight_k
    if k > 0:
        weighted = float(weighted_inner(k, G, G, setup))
        weighted_x = float(weighted_inner(k, Gx, Gx, setup))
        weighted_y = float(weighted_inner(k, np.sqrt(lam) * G, np.sqrt(lam) * G, setup))
    else:
        weighted = float(l2_sq)
        weighted_x = float(gx2.sum())
        weighted_y = float((basis.lambdas * g2).sum())

    return DiagnosticsRecord(
        t=float(t),
        l2_sq=float(l2_sq),
        grad_sq=float(gx2.sum() + (basis.lambdas * g2).sum()),
        lap_sq=float(trapezoid(lap * lap, h).sum()),
        bilap_sq=float(trapezoid(bilap * bilap, h).sum()),
        trace_uxx0=trace,
        sup_sq=sup_sq,
        uy_sq=float((basis.lambdas * g2).sum()),
        uyy_sq=float((basis.lambdas**2 * g2).sum()),
        ut_sq=ut_sq,
        l4_4=l4_4,
        weighted=weighted,
        weighted_x=weighted_x,
        weighted_y=weighted_y,
    )


def l2_sq_physical(coeffs: np.ndarray, setup: Setup) -> float:
    """||u||^2 from physical samples (independent of Parseval)."""
    U = setup.basis.omegas.T @ pad(coeffs)
    return float(trapezoid(setup.basis.quadrature_weights() @ (U * U), setup.grid.h))


def j_w_components(coeffs: np.ndarray, setup: Setup, weighted: bool = False) -> dict[str, float]:
    """The four integrals making up J_w, optionally weighted by e^{kx}."""
    g = np.asarray(coeffs, dtype=float)
    domain, grid, basis = setup
    h = grid.h
    lam = basis.lambdas[:, None]
    G = pad(g)
    Gx = x_derivative(G, 1, h)
    Gxx = x_derivative(G, 2, h)
    G4 = x_derivative(G, 4, h)
    G5 = x_derivative(G, 5, h)
    w = np.exp(domain.weight_k * grid.x_full) if weighted else np.ones(grid.nx + 2)

    bilap = G4 - 2.0 * lam * Gxx + lam**2 * G
    lap = Gxx - lam * G
    _, om, wy = basis.refined(2)
    U = om.T @ G
    Ux = om.T @ Gx
    out = {
        "bilap": float(trapezoid(w * (bilap * bilap).sum(axis=0), h)),
        "lap": float(trapezoid(w * (lap * lap).sum(axis=0), h)),
        "u2ux2": float(trapezoid(w * (wy @ (U * U * Ux * Ux)), h)),
        "d5x": float(trapezoid(w * (G5 * G5).sum(axis=0), h)),
    }
    if not all(math.isfinite(v) for v in out.values()):
        raise InvalidDataError("J_w is not finite for this initial field")
    return out


def j_w(coeffs: np.ndarray, setup: Setup, weighted: bool = False) -> float:
    return float(sum(j_w_components(coeffs, setup, weighted).values()))


CSV_MAGIC = "# blk2d-diagnostics"
CSV_VERSION = 1


class SchemaError(ValueError):
    pass


@dataclass
class DiagnosticsSeries:
    """Time-ordered diagnostics records plus the sampling metadata."""

    dt: float = float("nan")
    stride: int = 1
    records: list = field(default_factory=list)
    states: list = field(default_factory=list, repr=False)

    def append(self, rec: DiagnosticsRecord) -> None:
        self.records.append(rec)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        if name not in CSV_COLUMNS:
            raise KeyError(name)
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"{CSV_MAGIC} v{CSV_VERSION} dt={self.dt!r} stride={self.stride}\n")
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for rec in self.records:
                fh.write(",".join(repr(float(v)) for v in rec.as_row()) + "\n")

    @classmethod
    def from_csv(cls, path) -> "DiagnosticsSeries":
        with open(path) as fh:
            head = fh.readline().split()
            if len(head) < 3 or " ".join(head[:2]) != CSV_MAGIC:
                raise SchemaError(f"{path}: not a diagnostics file")
            if head[2] != f"v{CSV_VERSION}":
                raise SchemaError(f"{path}: unsupported schema version {head[2]}")
            meta = dict(kv.split("=", 1) for kv in head[3:])
            cols = fh.readline().strip().split(",")
            if tuple(cols) != CSV_COLUMNS:
                raise SchemaError(f"{path}: unexpected columns {cols}")
            out = cls(dt=float(meta.get("dt", "nan")), stride=int(meta.get("stride", 1)))
            for line in fh:
                if line.strip():
                    out.append(DiagnosticsRecord(*map(float, line.split(","))))
        return out
