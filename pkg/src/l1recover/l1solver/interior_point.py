"""Dense primal-dual interior-point method for linear programs.

Problem form::

    minimize    c^T x
    subject to  A x = b
                x_i >= 0          (nonnegative variables)
                x_i <= upper_i    (where upper_i is finite)
                x_i free          (where free_i is set)

Free variables are split into a difference of two nonnegative ones before
the iteration starts. Upper bounds are handled natively (slack ``w`` with
dual ``s``), so the normal equations stay ``m x m``. Search directions use
Mehrotra's predictor-corrector scheme; the normal equations are factored
with :func:`l1recover.linalg.cholesky_factor`, falling back to a pivoted QR
when the formed matrix is too ill-conditioned for Cholesky.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..errors import NotPositiveDefinite
from ..linalg import cholesky_factor, cholesky_solve, pivoted_qr, triangular_solve


QR_RANK_TOL = 1e-14


class Status(str, Enum):
    OPTIMAL = "optimal"
    MAX_ITERATIONS = "max_iterations"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class SolverOptions:
    tol: float = 1e-9
    max_iter: int = 200
    presolve_tol: float = 1e-10
    pivot_tol: float = 1e-12
    step_fraction: float = 0.995
    divergence: float = 1e14
    # try a crossover to the nearby vertex once all measures fall below this
    polish_threshold: float = 1e-6


@dataclass
class StandardLP:
    cost: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    free: np.ndarray = None
    upper: np.ndarray = None
    # bookkeeping for problems produced by reformulation
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.cost = np.asarray(self.cost, dtype=np.float64)
        self.eq_matrix = np.atleast_2d(np.asarray(self.eq_matrix, dtype=np.float64))
        self.eq_rhs = np.asarray(self.eq_rhs, dtype=np.float64).ravel()
        n = self.cost.size
        if self.eq_matrix.shape[1] != n and self.eq_matrix.size:
            raise ValueError(f"constraint matrix has {self.eq_matrix.shape[1]} columns, cost has {n}")
        if self.eq_matrix.shape[0] != self.eq_rhs.size:
            raise ValueError("constraint rows and right-hand side disagree")
        self.free = np.zeros(n, bool) if self.free is None else np.asarray(self.free, bool)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=np.float64)
        if np.any(self.free & np.isfinite(self.upper)):
            raise ValueError("free variables cannot carry an upper bound")

    @property
    def n_vars(self) -> int:
        return self.cost.size

    @property
    def n_eq(self) -> int:
        return self.eq_rhs.size


@dataclass
class LPSolution:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    status: Status
    iterations: int
    objective: float
    primal_residual: float
    dual_residual: float
    gap: float

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


class _NormalSolver:
    """Solves (A diag(theta) A^T) dy = r.

    Cholesky of the formed matrix is tried first. When it breaks down (thin
    boxes, or a degenerate optimum) the factor is instead taken from a
    pivoted QR of diag(sqrt(theta)) A^T, which sees only the square root of
    the condition number. Directions beyond the numerical rank are dropped.
    """

    def __init__(self, A, theta, pivot_tol):
        self.M = (A * theta) @ A.T
        self.perm = None
        try:
            self.L = cholesky_factor(self.M, pivot_tol)
            return
        except NotPositiveDefinite:
            pass
        B = np.sqrt(theta)[:, None] * A.T
        _, R, perm, rank = pivoted_qr(B, QR_RANK_TOL, want_q=False)
        if rank == 0:
            raise NotPositiveDefinite("normal matrix is numerically zero")
        self.L = R[:, :rank].T
        self.perm = perm[:rank]

    def _apply(self, r):
        if self.perm is None:
            return cholesky_solve(None, r, L=self.L)
        out = np.zeros_like(r)
        out[self.perm] = cholesky_solve(None, r[self.perm], L=self.L)
        return out

    def solve(self, rhs):
        dy = self._apply(rhs)
        # one guarded step of iterative refinement
        res = rhs - self.M @ dy
        step = self._apply(res)
        if np.linalg.norm(rhs - self.M @ (dy + step)) < np.linalg.norm(res):
            dy = dy + step
        return dy


def _min_norm_correction(mat, r):
    """Smallest d with ``mat @ d = r`` on the rows that pivoted QR finds independent."""
    if mat.shape[1] == 0:
        return np.zeros(0)
    Q, R, perm, rank = pivoted_qr(mat.T, QR_RANK_TOL)
    if rank == 0:
        return np.zeros(mat.shape[1])
    u = triangular_solve(R[:, :rank].T, r[perm[:rank]], lower=True)
    return Q @ u


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    with np.errstate(over="ignore"):  # huge ratios are capped at 1 anyway
        return float(min(1.0, np.min(-v[neg] / dv[neg])))


def ip_solve(lp: StandardLP, opts: SolverOptions | None = None) -> LPSolution:
    opts = opts or SolverOptions()
    A0, b, c0 = lp.eq_matrix, lp.eq_rhs, lp.cost
    n0 = lp.n_vars
    free = lp.free
    # split free columns x = x+ - x-
    if free.any():
        A = np.hstack([A0, -A0[:, free]])
        c = np.concatenate([c0, -c0[free]])
        upper = np.concatenate([lp.upper, np.full(int(free.sum()), np.inf)])
    else:
        A, c, upper = A0, c0, lp.upper
    m, n = A.shape
    B = np.isfinite(upper)
    uB = upper[B]

    def unsplit(x):
        out = x[:n0].copy()
        out[free] -= x[n0:]
        return out

    if m == 0:
        # no equality rows: optimum at a bound (or unbounded)
        x = np.where(c < 0, np.where(B, upper, np.inf), 0.0)
        status = Status.OPTIMAL if np.all(np.isfinite(x)) else Status.INFEASIBLE
        x = np.where(np.isfinite(x), x, 0.0)
        return LPSolution(unsplit(x), np.zeros(0), np.maximum(c, 0.0)[:n0], status, 0,
                          float(c @ x), 0.0, 0.0, 0.0)

    # ---- starting point (Mehrotra's heuristic, with floors) ----
    try:
        start = _NormalSolver(A, np.ones(n), opts.pivot_tol)
    except NotPositiveDefinite:
        return LPSolution(np.zeros(n0), np.zeros(m), np.zeros(n0), Status.NUMERICAL_FAILURE, 0,
                          np.nan, np.inf, np.inf, np.inf)
    x = A.T @ start.solve(b)
    y = start.solve(A @ c)
    z = c - A.T @ y
    x = x + max(-1.5 * float(x.min()), 0.0)
    z = z + max(-1.5 * float(z.min()), 0.0)
    xz = float(x @ z)
    if x.sum() > 0 and z.sum() > 0 and xz > 0:
        x = x + 0.5 * xz / z.sum()
        z = z + 0.5 * xz / x.sum()
    x = np.maximum(x, 1e-2 * max(1.0, float(np.max(np.abs(x)))))
    z = np.maximum(z, 1e-2 * max(1.0, float(np.max(np.abs(z)))))
    if B.any():
        xB = x[B]
        x[B] = np.where(xB >= uB, 0.5 * uB, xB)
    w = uB - x[B]
    s = np.full(int(B.sum()), max(float(np.mean(z)), 1e-2))

    nb = int(B.sum())
    bnorm = 1.0 + np.linalg.norm(b)
    unorm = 1.0 + np.linalg.norm(uB) if nb else 1.0
    cnorm = 1.0 + np.linalg.norm(c)
    eta = opts.step_fraction

    def measures(x, y, z, w, s):
        r_b = b - A @ x
        r_c = c - A.T @ y - z
        if nb:
            r_c[B] += s
            r_u = uB - x[B] - w
        else:
            r_u = np.zeros(0)
        pobj = float(c @ x)
        dobj = float(b @ y - (uB @ s if nb else 0.0))
        pres = max(np.linalg.norm(r_b) / bnorm, np.linalg.norm(r_u) / unorm if nb else 0.0)
        dres = np.linalg.norm(r_c) / cnorm
        gap = abs(pobj - dobj) / (1.0 + abs(pobj))
        return pres, dres, gap, r_b, r_c, r_u

    def polish(x, y, z, w, s):
        """Snap to the vertex (or face) the iterate is heading for.

        Variables are split into those at their lower bound, those at their
        upper bound and the rest; the equality rows are then solved for the
        rest, and y is corrected so their reduced costs vanish.
        """
        at_lower = x < z
        at_upper = np.zeros(n, bool)
        if nb:
            boxed = np.flatnonzero(B)
            at_upper[boxed] = (w < s) & ~at_lower[boxed]
        basic = ~(at_lower | at_upper)
        xp = np.where(at_upper, upper, 0.0)
        xp[basic] = x[basic]
        AB = A[:, basic]
        xp[basic] += _min_norm_correction(AB, b - A @ xp)
        if nb:
            xp[B] = np.minimum(xp[B], uB)
        xp = np.maximum(xp, 0.0)
        yp = y + _min_norm_correction(AB.T, c[basic] - AB.T @ y)
        zfull = c - A.T @ yp
        zp = np.where(at_lower, np.maximum(zfull, 0.0), 0.0)
        if nb:
            wp = uB - xp[B]
            sp = np.where(at_upper[B], np.maximum(-zfull[B], 0.0), 0.0)
        else:
            wp = sp = np.zeros(0)
        return xp, yp, zp, wp, sp

    def solve_newton(normal, theta, r_b, r_c, r_u, r_xz, r_ws):
        rhat = r_c - r_xz / x
        if nb:
            rhat[B] += (r_ws - s * r_u) / w
        rhs = r_b + A @ (theta * rhat)
        dy = normal.solve(rhs)
        dx = theta * (A.T @ dy - rhat)
        dz = (r_xz - z * dx) / x
        if nb:
            dw = r_u - dx[B]
            ds = (r_ws - s * dw) / w
        else:
            dw = ds = np.zeros(0)
        return dx, dy, dz, dw, ds

    def converged(pres, dres, gap):
        return pres <= opts.tol and dres <= opts.tol and gap <= opts.tol

    status = Status.MAX_ITERATIONS
    it = 0
    pres = dres = gap = np.inf
    best_score, best = np.inf, None
    for it in range(opts.max_iter + 1):
        pres, dres, gap, r_b, r_c, r_u = measures(x, y, z, w, s)
        if converged(pres, dres, gap):
            status = Status.OPTIMAL
            break
        if max(pres, dres, gap) < best_score:
            best_score, best = max(pres, dres, gap), (x, y, z, w, s)
        if max(pres, dres, gap) <= opts.polish_threshold:
            candidate = polish(x, y, z, w, s)
            scores = measures(*candidate)[:3]
            if converged(*scores):
                x, y, z, w, s = candidate
                pres, dres, gap = scores
                status = Status.OPTIMAL
                break
        if it == opts.max_iter:
            break
        if max(np.max(x), np.max(z)) > opts.divergence:
            status = Status.INFEASIBLE
            break

        mu = (x @ z + (w @ s if nb else 0.0)) / (n + nb)
        with np.errstate(over="ignore", divide="ignore"):
            theta_inv = z / x
            if nb:
                theta_inv[B] += s / w
            theta = 1.0 / theta_inv
        if not np.all(np.isfinite(theta)):
            status = Status.NUMERICAL_FAILURE
            break
        try:
            normal = _NormalSolver(A, theta, opts.pivot_tol)
        except NotPositiveDefinite:
            status = Status.NUMERICAL_FAILURE
            break

        # predictor
        dx, dy, dz, dw, ds = solve_newton(normal, theta, r_b, r_c, r_u, -x * z, -w * s)
        ap = min(_max_step(x, dx), _max_step(w, dw) if nb else 1.0)
        ad = min(_max_step(z, dz), _max_step(s, ds) if nb else 1.0)
        mu_aff = ((x + ap * dx) @ (z + ad * dz) + ((w + ap * dw) @ (s + ad * ds) if nb else 0.0)) / (n + nb)
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0

        # corrector
        r_xz = sigma * mu - x * z - dx * dz
        r_ws = sigma * mu - w * s - dw * ds if nb else np.zeros(0)
        dx, dy, dz, dw, ds = solve_newton(normal, theta, r_b, r_c, r_u, r_xz, r_ws)
        ap = min(1.0, eta * min(_max_step(x, dx), _max_step(w, dw) if nb else 1.0))
        ad = min(1.0, eta * min(_max_step(z, dz), _max_step(s, ds) if nb else 1.0))
        if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dy))):
            status = Status.NUMERICAL_FAILURE
            break
        x = x + ap * dx
        y = y + ad * dy
        z = z + ad * dz
        if nb:
            w = w + ap * dw
            s = s + ad * ds

    if status is not Status.OPTIMAL and best is not None and best_score <= opts.polish_threshold:
        # late iterations can drift once roundoff dominates; the best iterate
        # seen may still polish to an optimal vertex
        candidate = polish(*best)
        scores = measures(*candidate)[:3]
        if converged(*scores):
            x, y, z, w, s = candidate
            pres, dres, gap = scores
            status = Status.OPTIMAL

    zfull = z.copy()
    if nb:
        zfull[B] -= s  # reduced cost of the original variable
    return LPSolution(
        x=unsplit(x),
        y=y,
        z=zfull[:n0],
        status=status,
        iterations=it,
        objective=float(c @ x),
        primal_residual=float(pres),
        dual_residual=float(dres),
        gap=float(gap),
    )
