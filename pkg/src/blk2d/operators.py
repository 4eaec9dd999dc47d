"""Banded finite-difference operators in x and the per-mode implicit operators.

Interior rows use the centered second-order stencils (widths 3, 3, 5, 5, 7 for
orders 1..5).  Stencil points outside [0, L] are ghost values, eliminated in
terms of interior values: at each end we fit the polynomial of degree
``CLOSURE_DEGREE`` that satisfies that end's boundary conditions
(u = u_x = 0 at x = 0; u = u_x = u_xx = 0 at x = L) and interpolates the
nearest interior nodes, then evaluate it at the ghost nodes.  Ghost values are
therefore exact for compatible polynomials of that degree and every row,
closure rows included, stays second-order consistent.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg.lapack import dgbtrf, dgbtrs

from .geometry import Grid

CLOSURE_DEGREE = 6
BC_KINDS = ("rectangle", "half_strip")

# offsets and weights (times h^p) of the centered interior stencils
CENTERED = {
    1: ((-1, 0, 1), (-0.5, 0.0, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 0, 1, 2), (-0.5, 1.0, 0.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
    5: ((-3, -2, -1, 0, 1, 2, 3), (-0.5, 2.0, -2.5, 0.0, 2.5, -2.0, 0.5)),
}


class OperatorError(ValueError):
    pass


class StepSizeError(RuntimeError):
    """The implicit matrix I + theta*dt*L_j could not be factorized."""


def fd_weights(offsets, order: int) -> np.ndarray:
    """Weights w with sum w_k f(x + s_k h) ~ h^order f^(order)(x), exact for
    polynomials of degree < len(offsets)."""
    s = np.asarray(offsets, dtype=float)
    n = s.size
    if order >= n:
        raise OperatorError(f"{n} points cannot approximate derivative order {order}")
    V = np.vander(s, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(V, rhs)


def _ghost_rows(n: int, degree: int = CLOSURE_DEGREE) -> dict[int, np.ndarray]:
    """Map ghost node index -> weights over interior values u_1..u_n."""
    rows: dict[int, np.ndarray] = {}
    powers = np.arange(degree + 1)

    # left end, coordinate s = x/h: p(0) = p'(0) = 0, p(i) = u_i for i = 1..degree-1
    m = degree - 1
    A = np.zeros((degree + 1, degree + 1))
    A[0, 0] = 1.0
    A[1, 1] = 1.0
    A[2:] = np.arange(1, m + 1)[:, None] ** powers
    Ainv = np.linalg.inv(A)
    for g in (-1, -2):
        w = (float(g) ** powers) @ Ainv
        row = np.zeros(n)
        row[:m] = w[2:]
        rows[g] = row

    # right end, s = x/h - (n+1): p(0) = p'(0) = p''(0) = 0, p(-r) = u_{n+1-r}
    m = degree - 2
    A = np.zeros((degree + 1, degree + 1))
    A[0, 0] = 1.0
    A[1, 1] = 1.0
    A[2, 2] = 2.0
    A[3:] = (-np.arange(1, m + 1, dtype=float))[:, None] ** powers
    Ainv = np.linalg.inv(A)
    for g in (1, 2):
        w = (float(g) ** powers) @ Ainv
        row = np.zeros(n)
        row[n - m:] = w[3:][::-1]
        rows[n + 1 + g] = row
    return rows


@dataclass(frozen=True)
class Banded:
    """Square banded matrix in LAPACK/scipy ``ab`` storage: ab[u + i - j, j] = A[i, j]."""

    ab: np.ndarray = field(repr=False)
    lower: int
    upper: int

    @property
    def n(self) -> int:
        return self.ab.shape[1]

    @classmethod
    def from_dense(cls, A: np.ndarray, tol: float = 0.0) -> "Banded":
        n = A.shape[0]
        nz = np.nonzero(np.abs(A) > tol)
        diff = nz[1] - nz[0]
        upper = int(max(diff.max(initial=0), 0))
        lower = int(max(-diff.min(initial=0), 0))
        ab = np.zeros((lower + upper + 1, n))
        for k in range(-lower, upper + 1):
            d = np.diagonal(A, k)
            if k >= 0:
                ab[upper - k, k:] = d
            else:
                ab[upper - k, : n + k] = d
        ab.setflags(write=False)
        return cls(ab, lower, upper)

    def toarray(self) -> np.ndarray:
        n = self.n
        A = np.zeros((n, n))
        for k in range(-self.lower, self.upper + 1):
            if k >= 0:
                A += np.diag(self.ab[self.upper - k, k:], k)
            else:
                A += np.diag(self.ab[self.upper - k, : n + k], k)
        return A

    def diagonal(self, k: int) -> np.ndarray:
        n = self.n
        if k >= 0:
            return self.ab[self.upper - k, k:]
        return self.ab[self.upper - k, : n + k]

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """A @ v along the last axis of ``v`` (batched over leading axes)."""
        v = np.asarray(v, dtype=float)
        n = self.n
        if v.shape[-1] != n:
            raise OperatorError(f"vector length {v.shape[-1]} != operator size {n}")
        out = np.zeros(v.shape)
        for k in range(-self.lower, self.upper + 1):
            d = self.diagonal(k)
            if k >= 0:
                out[..., : n - k] += d * v[..., k:]
            else:
                out[..., -k:] += d * v[..., : n + k]
        return out


def banded_sum(terms, identity: float = 0.0) -> Banded:
    """sum c_i A_i + identity*I for (c_i, A_i) pairs of equal size."""
    terms = list(terms)
    n = terms[0][1].n
    lower = max(t.lower for _, t in terms)
    upper = max(t.upper for _, t in terms)
    ab = np.zeros((lower + upper + 1, n))
    for c, t in terms:
        ab[upper - t.upper: upper + t.lower + 1] += c * t.ab
    ab[upper] += identity
    ab.setflags(write=False)
    return Banded(ab, lower, upper)


@dataclass(frozen=True)
class BandedOperator:
    order: int
    h: float
    matrix: Banded
    bc_closure: dict = field(repr=False, compare=False)

    @property
    def bands(self) -> np.ndarray:
        return self.matrix.ab

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return self.matrix.matvec(v)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def build_derivative(order: int, grid: Grid, bc_spec: str = "rectangle") -> BandedOperator:
    """Banded D^order acting on interior values u_1..u_nx.

    ``bc_spec`` is ``"rectangle"`` (u = u_x = 0 at 0; u = u_x = u_xx = 0 at L)
    or ``"half_strip"`` (same conditions, the right ones imposed artificially at
    the truncation length).
    """
    if order not in CENTERED:
        raise OperatorError(f"unsupported derivative order {order}")
    if bc_spec not in BC_KINDS:
        raise OperatorError(f"unknown boundary specification {bc_spec!r}")
    n, h = grid.nx, grid.h
    if n < CLOSURE_DEGREE + 1:
        raise OperatorError(f"nx={n} is too small for the closure stencils")
    offsets, weights = CENTERED[order]
    ghosts = _ghost_rows(n)
    A = np.zeros((n, n))
    for i in range(1, n + 1):
        for o, w in zip(offsets, weights):
            j = i + o
            if 1 <= j <= n:
                A[i - 1, j - 1] += w
            elif j in ghosts:
                A[i - 1] += w * ghosts[j]
            # j == 0 or j == n+1: boundary node, u = 0
    A /= h**order
    closure = {
        "kind": bc_spec,
        "left": ("u=0", "u_x=0"),
        "right": ("u=0", "u_x=0", "u_xx=0"),
        "ghost_degree": CLOSURE_DEGREE,
    }
    return BandedOperator(order, h, Banded.from_dense(A), closure)


def derivative_set(grid: Grid, bc_spec: str = "rectangle") -> dict[int, BandedOperator]:
    return {p: build_derivative(p, grid, bc_spec) for p in CENTERED}


def linear_operator(lam: float, gamma: float, derivs: dict[int, BandedOperator]) -> Banded:
    """L_j = (D4 - 2 lam D2 + lam^2) + gamma (D2 - lam) + (D3 - lam D1) - D5."""
    D = {p: d.matrix for p, d in derivs.items()}
    return banded_sum(
        [(1.0, D[4]),
        (gamma - 2.0 * lam, D[2]),
        (1.0, D[3]),
        (-lam, D[1]),
        (-1.0, D[5])],
        identity=lam * lam - gamma * lam,
    )


def apply_linear(g: np.ndarray, lambdas: np.ndarray, gamma: float, derivs: dict[int, BandedOperator]) -> np.ndarray:
    """L_j g_j for all modes at once; ``g`` has shape (N, nx)."""
    lam = np.asarray(lambdas)[:, None]
    d1, d2, d3, d4, d5 = (derivs[p](g) for p in (1, 2, 3, 4, 5))
    return d4 - 2.0 * lam * d2 + lam**2 * g + gamma * (d2 - lam * g) + d3 - lam * d1 - d5


@dataclass(frozen=True)
class ModeOperator:
    j: int
    lam: float
    gamma: float
    matrix: Banded
    dt: float
    theta: float
    _lu: np.ndarray = field(repr=False, compare=False)
    _piv: np.ndarray = field(repr=False, compare=False)

    def __call__(self, g: np.ndarray) -> np.ndarray:
        return self.matrix.matvec(g)

    def implicit_matvec(self, g: np.ndarray) -> np.ndarray:
        """(I + theta*dt*L_j) g."""
        return g + self.theta * self.dt * self.matrix.matvec(g)


def build_mode_operator(j: int, lam: float, gamma: float, derivs: dict[int, BandedOperator],
                        dt: float, theta: float = 0.5) -> ModeOperator:
    """Assemble L_j and cache the banded LU factors of I + theta*dt*L_j."""
    if not dt > 0:
        raise StepSizeError(f"dt must be positive, got {dt}")
    L = linear_operator(lam, gamma, derivs)
    M = banded_sum([(theta * dt, L)], identity=1.0)
    kl, ku = M.lower, M.upper
    ab = np.zeros((2 * kl + ku + 1, M.n))
    ab[kl:] = M.ab
    lu, piv, info = dgbtrf(ab, kl, ku)
    if info != 0:
        raise StepSizeError(f"I + theta*dt*L_{j} is singular (info={info}); reduce dt")
    lu.setflags(write=False)
    return ModeOperator(j, float(lam), float(gamma), L, float(dt), float(theta), lu, piv)


def solve_implicit(op: ModeOperator, rhs: np.ndarray, check: bool = True) -> tuple[np.ndarray, float]:
    """Solve (I + theta*dt*L_j) g = rhs; returns (g, residual 2-norm)."""
    rhs = np.asarray(rhs, dtype=float)
    if not np.all(np.isfinite(rhs)):
        raise FloatingPointError(f"non-finite right-hand side in mode {op.j}")
    kl, ku = op.matrix.lower, op.matrix.upper
    g, info = dgbtrs(op._lu, kl, ku, rhs, op._piv)
    if info != 0:
        raise StepSizeError(f"banded solve failed in mode {op.j} (info={info})")
    if not check:
        return g, float("nan")
    res = float(np.linalg.norm(op.implicit_matvec(g.T).T - rhs))
    scale = float(np.linalg.norm(rhs))
    if res > 1e-8 * scale:
        warnings.warn(f"implicit solve residual {res:.3e} exceeds 1e-8*||rhs|| in mode {op.j}", RuntimeWarning)
    return g, res
