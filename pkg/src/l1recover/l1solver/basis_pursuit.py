"""Basis pursuit: min ||g||_1 subject to F g = y, solved as a linear program.

The split ``(g, u)`` with ``-u <= g <= u`` is encoded through the two
nonnegative slacks ``v+ = (u + g)/2`` and ``v- = (u - g)/2``: then
``g = v+ - v-``, ``u = v+ + v-`` and ``sum(u)`` becomes ``sum(v+ + v-)``.
This keeps 2N variables and the measurement equalities only; the 2N
inequalities are the nonnegativity of the slacks.

Complex measurement rows are split into real and imaginary rows. Numerically
dependent rows (e.g. conjugate pairs of DFT rows, or the zero imaginary
row of frequency 0) are dropped by a rank-revealing QR before solving.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ensembles import Measurement
from ..errors import InconsistentConstraints, ShapeMismatch
from ..linalg import pivoted_qr_rank
from .interior_point import LPSolution, SolverOptions, StandardLP, Status, ip_solve


@dataclass
class Recovery:
    fsharp: np.ndarray
    l1value: float
    primal_residual: float
    dual_residual: float
    duality_gap: float
    iterations: int
    status: Status
    dual: np.ndarray | None = None  # multipliers on the kept real rows
    rows: np.ndarray | None = None  # indices into the real-split rows

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


def split_real(M: Measurement, y) -> tuple[np.ndarray, np.ndarray]:
    """Real-valued rows and right-hand side ([Re; Im] for complex operators)."""
    y = np.asarray(y)
    if y.shape != (M.n_rows,):
        raise ShapeMismatch(f"measurement vector has shape {y.shape}, expected ({M.n_rows},)")
    A = M.real_rows()
    if M.is_complex:
        yr = np.concatenate([y.real, y.imag]) if np.iscomplexobj(y) else np.concatenate([y, np.zeros_like(y)])
    else:
        if np.iscomplexobj(y):
            if np.any(np.abs(y.imag) > 0):
                raise InconsistentConstraints("complex data for a real operator")
            y = y.real
        yr = np.asarray(y, dtype=np.float64)
    return A, yr


def presolve_rows(A, b, tol: float = 1e-10) -> np.ndarray:
    """Indices of a maximal independent row subset of A.

    Raises InconsistentConstraints when rank([A | b]) exceeds rank(A).
    """
    rank, rows = pivoted_qr_rank(A, tol)
    bn = np.linalg.norm(b)
    if bn > 0 and A.size:
        scale = np.linalg.norm(A) / bn
        rank_aug, _ = pivoted_qr_rank(np.hstack([A, (b * scale)[:, None]]), tol)
        if rank_aug > rank:
            raise InconsistentConstraints(f"rank(A)={rank} < rank([A|b])={rank_aug}")
    elif bn > 0:
        raise InconsistentConstraints("nonzero data for an empty operator")
    return rows


def lp_reformulate(M: Measurement, y, presolve_tol: float = 1e-10) -> StandardLP:
    A, yr = split_real(M, y)
    rows = presolve_rows(A, yr, presolve_tol)
    Ak = A[rows]
    N = M.N
    return StandardLP(
        cost=np.ones(2 * N),
        eq_matrix=np.hstack([Ak, -Ak]),
        eq_rhs=yr[rows],
        meta={
            "signal_length": N,
            "rows": rows,
            "rows_before_presolve": A.shape[0],
            "n_inequalities": 2 * N,
        },
    )


def split_variables(x, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Map the slack pair back to ``(g, u)``."""
    vp, vm = x[:N], x[N : 2 * N]
    return vp - vm, vp + vm


def _recovery(sol: LPSolution, N: int, rows) -> Recovery:
    g, _ = split_variables(sol.x, N)
    return Recovery(
        fsharp=g,
        l1value=float(np.abs(g).sum()),
        primal_residual=sol.primal_residual,
        dual_residual=sol.dual_residual,
        duality_gap=sol.gap,
        iterations=sol.iterations,
        status=sol.status,
        dual=sol.y,
        rows=rows,
    )


def solve_bp(M: Measurement, y, opts: SolverOptions | None = None) -> Recovery:
    """Minimize ||g||_1 subject to F_Omega g = y."""
    opts = opts or SolverOptions()
    lp = lp_reformulate(M, y, opts.presolve_tol)
    return _recovery(ip_solve(lp, opts), M.N, lp.meta["rows"])


def quantize(y, q: float) -> np.ndarray:
    """Round to the nearest multiple of q (real and imaginary parts separately)."""
    y = np.asarray(y)
    if np.iscomplexobj(y):
        return q * np.round(y.real / q) + 1j * q * np.round(y.imag / q)
    return q * np.round(y / q)


def lp_reformulate_quantized(M: Measurement, y_q, q: float) -> StandardLP:
    """LP for min ||g||_1 s.t. |(F g - y_q)_k| <= q/2 on every real row.

    Each real row gets a box variable ``e_k in [0, 1]`` with
    ``(F g)_k - q e_k = y_k - q/2``. Keeping the box at unit width rather
    than ``[0, q]`` stops the barrier terms from blowing up when q is tiny.
    """
    if q <= 0:
        raise ValueError("quantization step must be positive")
    A, yr = split_real(M, y_q)
    m, N = A.shape
    return StandardLP(
        cost=np.concatenate([np.ones(2 * N), np.zeros(m)]),
        eq_matrix=np.hstack([A, -A, -q * np.eye(m)]),
        eq_rhs=yr - q / 2.0,
        upper=np.concatenate([np.full(2 * N, np.inf), np.ones(m)]),
        meta={"signal_length": N, "rows": np.arange(m), "rows_before_presolve": m, "n_inequalities": 2 * N + 2 * m},
    )


def solve_bp_quantized(M: Measurement, y_q, q: float, opts: SolverOptions | None = None) -> Recovery:
    opts = opts or SolverOptions()
    lp = lp_reformulate_quantized(M, y_q, q)
    return _recovery(ip_solve(lp, opts), M.N, lp.meta["rows"])


@dataclass
class OptimalityReport:
    passed: bool
    primal_residual: float
    dual_infeasibility: float
    slack: float
    dual: np.ndarray


def verify_optimality(M: Measurement, y, g, tol: float = 1e-7, opts: SolverOptions | None = None) -> OptimalityReport:
    """Check that g is feasible and matched by a dual certificate.

    A dual vector V with ``||F^T V||_inf <= 1`` gives the lower bound
    ``<y, V> <= ||h||_1`` for every feasible h, so ``<y, V> = ||g||_1``
    certifies g. V is found by solving the program afresh and taking its
    equality multipliers, rescaled to be exactly dual feasible.
    """
    A, yr = split_real(M, y)
    g = np.asarray(g, dtype=np.float64)
    pres = float(np.linalg.norm(A @ g - yr) / (1.0 + np.linalg.norm(yr)))
    rec = solve_bp(M, y, opts)
    V = np.zeros(A.shape[0])
    if rec.dual is not None:
        V[rec.rows] = rec.dual
    corr = np.max(np.abs(A.T @ V)) if A.size else 0.0
    if corr > 1.0:
        V = V / corr
    l1 = float(np.abs(g).sum())
    slack = l1 - float(yr @ V)
    passed = pres <= tol and abs(slack) <= tol * (1.0 + l1)
    return OptimalityReport(passed, pres, float(max(corr - 1.0, 0.0)), slack, V)
