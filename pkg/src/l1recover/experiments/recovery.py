"""Monte-Carlo recovery experiments: exact recovery, error scaling, stability,
quantized decoding."""

from __future__ import annotations

import math

import numpy as np

from ..ensembles import Measurement, make_ensemble, measure
from ..errors import InvalidShape
from ..l1solver import SolverOptions, quantize, solve_bp, solve_bp_quantized
from ..seeding import Seed, as_seed
from ..signals import best_k_term, best_k_term_error, sparse_signal, weak_lp_magnitudes, weak_lp_signal
from .harness import ResultTable, TrialGrid, binomial_stderr, fit_slope, median_stderr, run_tasks

EXACT_TOL = 1e-6
FEASIBILITY_SLACK = 1e-7

SUCCESS, MISS, SOLVER_FAILURE = 1, 0, -1


# ---------------------------------------------------------------------------
# exact recovery
# ---------------------------------------------------------------------------


def _exact_trial(task):
    kind, N, K, sparsities, mseed, sseed, tol, opts = task
    M = make_ensemble(kind, N, K, mseed)
    out = []
    for s in sparsities:
        f, _ = sparse_signal(N, s, sseed)
        rec = solve_bp(M, measure(M, f), opts)
        if not rec.ok:
            out.append(SOLVER_FAILURE)
        else:
            out.append(SUCCESS if np.max(np.abs(rec.fsharp - f), initial=0.0) <= tol else MISS)
    return out


def exact_recovery_curve(grid: TrialGrid, workers: int = 1, tol: float = EXACT_TOL,
                         opts: SolverOptions | None = None) -> ResultTable:
    """Empirical probability of exact recovery per (K, sparsity) cell.

    Trials reuse the same seeds in every cell, so supports are nested across
    sparsities and Gaussian/binary matrices are nested across K.
    """
    if not grid.sparsities:
        raise InvalidShape("sparsity grid is empty")
    tasks = [
        (grid.ensemble, grid.N, K, grid.sparsities, grid.measurement_seed(t), grid.signal_seed(t), tol, opts)
        for K in grid.K_values
        for t in range(grid.trials)
    ]
    outcomes = np.array(run_tasks(_exact_trial, tasks, workers)).reshape(len(grid.K_values), grid.trials, -1)
    table = ResultTable()
    for i, K in enumerate(grid.K_values):
        transition = float("nan")
        for j, s in enumerate(grid.sparsities):
            o = outcomes[i, :, j]
            prob = float(np.mean(o == SUCCESS))
            cell = {"ensemble": grid.ensemble, "N": grid.N, "K": K, "sparsity": s}
            table.add(cell, "success_probability", prob, binomial_stderr(prob, grid.trials))
            table.add(cell, "solver_failures", int(np.sum(o == SOLVER_FAILURE)))
            if prob < 0.5 and math.isnan(transition):
                transition = float(s)
        table.add({"ensemble": grid.ensemble, "N": grid.N, "K": K}, "phase_transition_sparsity", transition)
    return table


# ---------------------------------------------------------------------------
# error scaling for weak-lp signals
# ---------------------------------------------------------------------------


def oversampling(N: int, abscissa: str = "log") -> float:
    if abscissa == "log":
        return math.log(N)
    if abscissa == "log6":
        return math.log(N) ** 6
    raise ValueError(f"unknown abscissa {abscissa!r}")


def _scaling_trial(task):
    kind, N, K, p_values, R, mseed, sseed, opts = task
    M = make_ensemble(kind, N, K, mseed)
    errs, l1_violations = [], []
    for p in p_values:
        f = weak_lp_signal(N, p, R, sseed)
        rec = solve_bp(M, measure(M, f), opts)
        if not rec.ok:
            errs.append(float("nan"))
            l1_violations.append(False)
            continue
        errs.append(float(np.linalg.norm(f - rec.fsharp)) / R)
        l1_violations.append(bool(rec.l1value > np.abs(f).sum() + FEASIBILITY_SLACK))
    return errs, l1_violations


def error_scaling(grid: TrialGrid, workers: int = 1, abscissa: str = "log",
                  opts: SolverOptions | None = None) -> ResultTable:
    """Median reconstruction error of weak-lp signals against K, with a
    log-log slope fit per p.

    The abscissa is log(K / lambda), lambda = log N (or (log N)^6 with
    ``abscissa="log6"``). The best k-term error at k = floor(K / log N) is
    reported alongside as the benchmark curve.
    """
    if not grid.p_values:
        raise InvalidShape("p grid is empty")
    if len(set(grid.K_values)) < 4:
        raise InvalidShape("error scaling needs at least 4 distinct K values")
    N, R = grid.N, grid.R
    lam = oversampling(N, abscissa)
    tasks = [
        (grid.ensemble, N, K, grid.p_values, R, grid.measurement_seed(t), grid.signal_seed(t), opts)
        for K in grid.K_values
        for t in range(grid.trials)
    ]
    results = run_tasks(_scaling_trial, tasks, workers)
    errs = np.array([r[0] for r in results]).reshape(len(grid.K_values), grid.trials, -1)
    viol = np.array([r[1] for r in results]).reshape(len(grid.K_values), grid.trials, -1)

    table = ResultTable()
    for j, p in enumerate(grid.p_values):
        mags = weak_lp_magnitudes(N, p, R)
        xs, ys = [], []
        for i, K in enumerate(grid.K_values):
            e = errs[i, :, j]
            finite = e[np.isfinite(e)]
            med = float(np.median(finite)) if finite.size else float("nan")
            k = max(1, int(math.floor(K / math.log(N))))
            oracle = float(np.sqrt(np.sum(mags[k:] ** 2))) / R
            cell = {"ensemble": grid.ensemble, "N": N, "K": K, "p": p}
            table.add(cell, "median_error", med, median_stderr(finite))
            table.add(cell, "oracle_error", oracle)
            table.add(cell, "error_to_oracle_ratio", med / oracle if oracle > 0 else float("nan"))
            table.add(cell, "solver_failures", int(np.sum(~np.isfinite(e))))
            table.add(cell, "l1_feasibility_violations", int(np.sum(viol[i, :, j])))
            if np.isfinite(med) and med > 0:
                xs.append(math.log(K / lam))
                ys.append(math.log(med))
        slope, se, _ = fit_slope(xs, ys) if len(xs) >= 2 else (float("nan"),) * 3
        pcell = {"ensemble": grid.ensemble, "N": N, "p": p}
        table.add(pcell, "fitted_slope", slope, se)
        table.add(pcell, "target_slope", -(1.0 / p - 0.5))
    return table


# ---------------------------------------------------------------------------
# l1 stability
# ---------------------------------------------------------------------------


def l1_stability_check(M: Measurement, f, T, opts: SolverOptions | None = None) -> dict:
    """Compare the mass the decoder puts off T with four times the tail of f.

    Also reports, for m = 2|T| + 1, the m-th largest decoded magnitude
    against ||f# 1_{T^c}||_1 / |T|, which bounds it whenever m <= N.
    """
    f = np.asarray(f, dtype=np.float64)
    T = np.unique(np.asarray(T, dtype=np.int64))
    rec = solve_bp(M, measure(M, f), opts)
    off = np.ones(M.N, bool)
    off[T] = False
    lhs = float(np.abs(rec.fsharp[off]).sum())
    h1 = float(np.abs(f[off]).sum())
    rhs = 4.0 * h1
    out = {
        "status": rec.status.value,
        "lhs": lhs,
        "rhs": rhs,
        "ratio": lhs / rhs if rhs > 0 else (0.0 if lhs <= FEASIBILITY_SLACK else float("inf")),
        "holds": bool(lhs <= rhs + FEASIBILITY_SLACK),
        "l1_fsharp": rec.l1value,
        "l1_f": float(np.abs(f).sum()),
    }
    m = 2 * T.size + 1
    if T.size and m <= M.N:
        mags = np.sort(np.abs(rec.fsharp))[::-1]
        bound = lhs / T.size
        out["tail_entry"] = float(mags[m - 1])
        out["tail_bound"] = bound
        out["tail_ratio"] = float(mags[m - 1] / bound) if bound > 0 else 0.0
    return out


def _stability_trial(task):
    kind, N, K, T_size, p, R, mseed, sseed, opts = task
    M = make_ensemble(kind, N, K, mseed)
    f = weak_lp_signal(N, p, R, sseed)
    T = np.flatnonzero(best_k_term(f, T_size))
    return l1_stability_check(M, f, T, opts)


def l1_stability_experiment(N: int, K: int, T_size: int, p: float, R: float = 1.0, trials: int = 100,
                            base_seed: int = 0, ensemble: str = "gaussian", workers: int = 1,
                            opts: SolverOptions | None = None) -> ResultTable:
    grid = TrialGrid(ensemble, N, (K,), trials=trials, base_seed=base_seed)
    tasks = [(ensemble, N, K, T_size, p, R, grid.measurement_seed(t), grid.signal_seed(t), opts)
             for t in range(trials)]
    reports = run_tasks(_stability_trial, tasks, workers)
    holds = np.array([r["holds"] and r["status"] == "optimal" for r in reports])
    ratios = np.array([r["ratio"] for r in reports])
    tails = np.array([r.get("tail_ratio", np.nan) for r in reports])
    cell = {"ensemble": ensemble, "N": N, "K": K, "T_size": T_size, "p": p}
    table = ResultTable()
    frac = float(holds.mean())
    table.add(cell, "holds_fraction", frac, binomial_stderr(frac, trials))
    table.add(cell, "median_ratio", float(np.median(ratios)), median_stderr(ratios))
    table.add(cell, "max_ratio", float(np.max(ratios)))
    table.add(cell, "max_tail_ratio", float(np.nanmax(tails)) if np.isfinite(tails).any() else float("nan"))
    return table


# ---------------------------------------------------------------------------
# quantized decoding
# ---------------------------------------------------------------------------


def _quant_trial(task):
    kind, N, K, s, q_values, mseed, sseed, opts = task
    M = make_ensemble(kind, N, K, mseed)
    f, _ = sparse_signal(N, s, sseed)
    y = measure(M, f)
    rec = solve_bp(M, y, opts)
    errs = [float(np.linalg.norm(rec.fsharp - f)) if rec.ok else float("nan")]
    for q in q_values:
        rq = solve_bp_quantized(M, quantize(y, q), q, opts)
        errs.append(float(np.linalg.norm(rq.fsharp - f)) if rq.ok else float("nan"))
    return errs


def quantization_sweep(N: int, K: int, sparsity: int, q_values, trials: int = 50, base_seed: int = 0,
                       ensemble: str = "gaussian", workers: int = 1,
                       opts: SolverOptions | None = None) -> ResultTable:
    """Median error of the quantized decoder per step size q, paired across q.

    ``q = 0`` rows hold the unquantized basis-pursuit error on the same trials.
    """
    q_values = tuple(float(q) for q in q_values)
    grid = TrialGrid(ensemble, N, (K,), trials=trials, base_seed=base_seed)
    tasks = [(ensemble, N, K, sparsity, q_values, grid.measurement_seed(t), grid.signal_seed(t), opts)
             for t in range(trials)]
    errs = np.array(run_tasks(_quant_trial, tasks, workers))
    table = ResultTable()
    for col, q in enumerate((0.0,) + q_values):
        e = errs[:, col]
        finite = e[np.isfinite(e)]
        cell = {"ensemble": ensemble, "N": N, "K": K, "sparsity": sparsity, "q": q}
        table.add(cell, "median_error", float(np.median(finite)) if finite.size else float("nan"),
                  median_stderr(finite))
        table.add(cell, "solver_failures", int(np.sum(~np.isfinite(e))))
    return table


def encode_decode(f, K: int, q: float, seed=0, loss: float = 0.0, ensemble: str = "gaussian",
                  opts: SolverOptions | None = None) -> dict:
    """Measure with a shared seed, quantize, optionally drop a fraction of the
    (index, value) pairs, and decode.

    With ``q == 0`` the measurements are kept exact and decoded by plain
    basis pursuit.
    """
    if not 0.0 <= loss < 1.0:
        raise InvalidShape("loss must lie in [0, 1)")
    f = np.asarray(f, dtype=np.float64)
    seed = as_seed(seed)
    M = make_ensemble(ensemble, f.size, K, seed)
    y = measure(M, f)
    yq = quantize(y, q) if q > 0 else y
    kept = np.arange(M.n_rows)
    if loss > 0:
        n_keep = max(1, int(round((1.0 - loss) * M.n_rows)))
        rng = Seed(seed.base, seed.stream + 1).generator()
        kept = np.sort(rng.permutation(M.n_rows)[:n_keep])
        M = M.restrict_rows(kept)
        yq = yq[kept]
    rec = solve_bp_quantized(M, yq, q, opts) if q > 0 else solve_bp(M, yq, opts)
    err = rec.fsharp - f
    return {
        "fsharp": rec.fsharp,
        "status": rec.status.value,
        "rows_sent": int(len(y)),
        "rows_received": int(len(kept)),
        "distortion": float(err @ err),
        "relative_distortion": float(err @ err / (f @ f)) if f @ f > 0 else float("nan"),
        "best_k_term_distortion": best_k_term_error(f, min(len(kept), f.size)) ** 2,
        "l1value": rec.l1value,
        "duality_gap": rec.duality_gap,
    }
