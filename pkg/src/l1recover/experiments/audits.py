"""Monte-Carlo batches of certificate audits over random supports and signs."""

from __future__ import annotations

import numpy as np

from ..certificates import erp_audit, erp_certificate, werp_audit
from ..ensembles import make_ensemble
from ..errors import SingularGram
from ..seeding import random_signs
from .harness import ResultTable, TrialGrid, binomial_stderr, run_tasks


def _random_support(seed, N: int, size: int) -> tuple[np.ndarray, np.ndarray]:
    rng = seed.generator()
    T = np.sort(rng.permutation(N)[:size])
    return T, random_signs(rng, size)


def _erp_trial(task):
    kind, N, K, size, threshold, mseed, sseed = task
    M = make_ensemble(kind, N, K, mseed)
    T, sigma = _random_support(sseed, N, size)
    try:
        cert = erp_certificate(M, T, sigma)
    except SingularGram:
        return None
    passed, _ = erp_audit(cert, threshold)
    return cert.off_support_max, cert.interpolation_error(), passed


def erp_batch(N: int, K: float, support_size: int, trials: int = 200, base_seed: int = 0,
              ensemble: str = "gaussian", threshold: float = 0.5, workers: int = 1) -> ResultTable:
    """Build the least-squares certificate on random (T, sigma) and audit it.

    Per-trial rows carry the off-support maximum and the interpolation
    error; singular Gram matrices count as failed trials.
    """
    grid = TrialGrid(ensemble, N, (K,), trials=trials, base_seed=base_seed)
    tasks = [(ensemble, N, K, support_size, threshold, grid.measurement_seed(t), grid.signal_seed(t))
             for t in range(trials)]
    results = run_tasks(_erp_trial, tasks, workers)
    table = ResultTable()
    cell = {"ensemble": ensemble, "N": N, "K": K, "support_size": support_size}
    passes, interp = [], []
    for t, r in enumerate(results):
        if r is None:
            table.add({**cell, "trial": t}, "singular_gram", True)
            passes.append(False)
            continue
        off, err, ok = r
        table.add({**cell, "trial": t}, "off_support_max", off)
        table.add({**cell, "trial": t}, "interpolation_error", err)
        passes.append(ok)
        interp.append(err)
    rate = float(np.mean(passes))
    table.add(cell, "pass_rate", rate, binomial_stderr(rate, trials))
    table.add(cell, "threshold", threshold)
    table.add(cell, "max_interpolation_error", max(interp) if interp else float("nan"))
    table.add(cell, "singular_trials", sum(r is None for r in results))
    return table


def _werp_trial(task):
    kind, N, K, size, gamma, mseed, sseed = task
    M = make_ensemble(kind, N, K, mseed)
    T, _ = _random_support(sseed, N, size)
    return werp_audit(M, T, gamma)


def werp_batch(N: int, K: float, support_size: int, gamma: float = 1.0, trials: int = 100,
               base_seed: int = 0, ensemble: str = "gaussian", workers: int = 1) -> ResultTable:
    grid = TrialGrid(ensemble, N, (K,), trials=trials, base_seed=base_seed)
    tasks = [(ensemble, N, K, support_size, gamma, grid.measurement_seed(t), grid.signal_seed(t))
             for t in range(trials)]
    results = run_tasks(_werp_trial, tasks, workers)
    table = ResultTable()
    cell = {"ensemble": ensemble, "N": N, "K": K, "support_size": support_size, "gamma": gamma}
    for t, (_, ratio, index) in enumerate(results):
        table.add({**cell, "trial": t}, "worst_ratio", ratio)
        table.add({**cell, "trial": t}, "worst_index", index)
    rate = float(np.mean([ok for ok, _, _ in results]))
    table.add(cell, "pass_rate", rate, binomial_stderr(rate, trials))
    ratios = np.array([r for _, r, _ in results])
    table.add(cell, "median_worst_ratio", float(np.median(ratios)))
    return table
