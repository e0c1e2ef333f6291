"""l1 minimization by linear programming."""

from .basis_pursuit import (
    OptimalityReport,
    Recovery,
    lp_reformulate,
    lp_reformulate_quantized,
    presolve_rows,
    quantize,
    solve_bp,
    solve_bp_quantized,
    split_real,
    split_variables,
    verify_optimality,
)
from .interior_point import LPSolution, SolverOptions, StandardLP, Status, ip_solve

__all__ = [
    "LPSolution",
    "OptimalityReport",
    "Recovery",
    "SolverOptions",
    "StandardLP",
    "Status",
    "ip_solve",
    "lp_reformulate",
    "lp_reformulate_quantized",
    "presolve_rows",
    "quantize",
    "solve_bp",
    "solve_bp_quantized",
    "split_real",
    "split_variables",
    "verify_optimality",
]
