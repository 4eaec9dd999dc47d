"""Finite-difference / sine-Galerkin solver for the 2D Benney-Lin-Kawahara
equation u_t + Lap^2 u + gamma Lap u + Lap u_x + u u_x - u_xxxxx = 0 on
rectangles and truncated half-strips, with tools that check its energy
identity, decay envelopes and the functional inequalities behind them.
"""

from .geometry import Domain, Grid, ModalState, PhysicalField, SineBasis, Setup, build_domain
from .dynamics import (BlowUpError, InitialData, ManufacturedSolution, PhysicalParams, SolverConfig,
                       make_initial, run_simulation)
from .functionals import DiagnosticsRecord, DiagnosticsSeries, compute_record

__all__ = [
    "Domain", "Grid", "ModalState", "PhysicalField", "SineBasis", "Setup", "build_domain",
    "BlowUpError", "InitialData", "ManufacturedSolution", "PhysicalParams", "SolverConfig",
    "make_initial", "run_simulation", "DiagnosticsRecord", "DiagnosticsSeries", "compute_record",
]
