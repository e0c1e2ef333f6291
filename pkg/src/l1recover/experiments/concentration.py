"""Concentration suites for the random objects behind the recovery results."""

from __future__ import annotations

import math

import numpy as np

from ..ensembles import draw_omega
from ..errors import InvalidShape
from ..linalg import batched_eigvalsh, dft
from ..seeding import Seed, random_signs, standard_normals
from .harness import ResultTable, binomial_stderr

R_VALUES = (0.1, 0.25, 0.5)
XNORM_BOUND = 10.0


def _tail_rows(table: ResultTable, cell: dict, name: str, hits: np.ndarray, bound: float) -> None:
    trials = hits.size
    freq = float(hits.mean())
    # the 3-sigma band uses the bound as the null success probability
    band = bound + 3.0 * binomial_stderr(min(bound, 1.0), trials)
    table.add(cell, f"{name}_frequency", freq, binomial_stderr(freq, trials))
    table.add(cell, f"{name}_bound", bound)
    table.add(cell, f"{name}_pass", bool(freq <= band))


def singular_value_concentration(n: int, p: int, trials: int, seed=0, r_values=R_VALUES,
                                 chunk: int = 250) -> ResultTable:
    """Tails of the extreme singular values of an n x p matrix with N(0, 1/n) entries.

    For each r the frequency of s_max > 1 + sqrt(p/n) + r and of
    s_min < 1 - sqrt(p/n) - r is compared with exp(-n r^2 / 2).
    Trial t draws its matrix from ``Seed(seed, t)``.
    """
    if not 1 <= p <= n:
        raise InvalidShape("need 1 <= p <= n")
    base = int(seed)
    smin = np.empty(trials)
    smax = np.empty(trials)
    for start in range(0, trials, chunk):
        idx = range(start, min(start + chunk, trials))
        X = np.stack([
            standard_normals(Seed(base, t).generator(), n * p).reshape(n, p) for t in idx
        ]) / math.sqrt(n)
        gram = np.einsum("bki,bkj->bij", X, X)
        w = batched_eigvalsh(gram) if p > 1 else gram[:, :, 0]
        w = np.sqrt(np.clip(w, 0.0, None))
        smin[start:start + len(idx)] = w[:, 0]
        smax[start:start + len(idx)] = w[:, -1]

    table = ResultTable()
    edge = math.sqrt(p / n)
    for r in r_values:
        cell = {"n": n, "p": p, "r": r, "trials": trials}
        bound = math.exp(-n * r * r / 2.0)
        _tail_rows(table, cell, "upper_tail", smax > 1.0 + edge + r, bound)
        _tail_rows(table, cell, "lower_tail", smin < 1.0 - edge - r, bound)
    return table


def omega_concentration(N: int, tau: float, trials: int, seed=0) -> ResultTable:
    """Frequency of |Omega| outside [K/2, 2K], K = tau N, against the Bernstein-type bound
    4 exp(-lam^2 / (4 (sigma^2 + lam / (3 sqrt 2)))) with lam = K/2, sigma^2 = N tau (1 - tau)."""
    if not 0.0 < tau < 1.0:
        raise InvalidShape("tau must lie in (0, 1)")
    base = int(seed)
    sizes = np.array([draw_omega(N, tau, Seed(base, t)).size for t in range(trials)], dtype=np.float64)
    K = tau * N
    var = N * tau * (1.0 - tau)
    lam = K / 2.0
    bound = min(1.0, 4.0 * math.exp(-lam * lam / (4.0 * (var + lam / (3.0 * math.sqrt(2.0))))))
    outside = (sizes < K / 2.0) | (sizes > 2.0 * K)

    table = ResultTable()
    cell = {"N": N, "tau": tau, "trials": trials}
    _tail_rows(table, cell, "outside", outside, bound)
    sd = math.sqrt(var)
    mean = float(sizes.mean())
    table.add(cell, "mean_size", mean, sd / math.sqrt(trials))
    table.add(cell, "expected_size", K, sd)
    table.add(cell, "mean_within_3sigma", bool(abs(mean - K) <= 3.0 * sd))
    return table


def xnorm_concentration(f, trials: int, seed=0, chunk: int = 500) -> ResultTable:
    """Mean of ||Z f||_X / (sqrt(log N) ||f||_2) for Gaussian and random-sign Z.

    ``Z f`` is the entrywise product of f with i.i.d. multipliers and
    ``||g||_X = sqrt(N) ||dft(g)||_inf``.
    """
    f = np.asarray(f, dtype=np.float64)
    N = f.size
    fn = float(np.linalg.norm(f))
    if fn == 0:
        raise InvalidShape("f must be nonzero")
    denom = math.sqrt(max(math.log(N), 1e-300)) * fn if N > 1 else fn
    base = int(seed)
    table = ResultTable()
    for stream, (name, draw) in enumerate((("gaussian", standard_normals), ("bernoulli", random_signs))):
        ratios = np.empty(trials)
        for start in range(0, trials, chunk):
            idx = range(start, min(start + chunk, trials))
            Z = np.stack([draw(Seed(base, 2 * t + stream).generator(), N) for t in idx])
            spec = dft(Z * f)
            ratios[start:start + len(idx)] = math.sqrt(N) * np.abs(spec).max(axis=-1) / denom
        cell = {"N": N, "multiplier": name, "trials": trials}
        mean = float(ratios.mean())
        se = float(ratios.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
        table.add(cell, "mean_ratio", mean, se)
        table.add(cell, "bounded", bool(mean <= XNORM_BOUND))
    return table


def kashin_reference(N: int, K: int) -> float:
    """sqrt((log(N/K) + 1) / K): the Gelfand-width shape with unit constant."""
    if not 1 <= K <= N:
        raise InvalidShape("need 1 <= K <= N")
    return math.sqrt((math.log(N / K) + 1.0) / K)
