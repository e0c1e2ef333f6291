"""Sparse and weak-lp signal models, norms and best K-term truncation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidShape
from .linalg import dft
from .seeding import as_seed, random_signs, standard_normals

AMPLITUDE_FLOOR = 0.1


@dataclass(frozen=True)
class SparsityProfile:
    """Weak-lp ball parameters: ``|f|_(n) <= R * n**(-1/p)``."""

    p: float
    R: float

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise InvalidShape(f"p must lie in (0, 1], got {self.p}")
        if self.R < 0:
            raise InvalidShape("R must be nonnegative")

    @property
    def r(self) -> float:
        """Approximation exponent 1/p - 1/2."""
        return 1.0 / self.p - 0.5


def sparse_signal(N: int, support_size: int, seed=0) -> tuple[np.ndarray, np.ndarray]:
    """Random spikes on a uniformly random support.

    Amplitudes are standard normal, redrawn while ``|a| < 0.1``. Positions
    and amplitudes come from one prefix-consistent stream, so signals with
    the same seed and growing ``support_size`` are nested.
    """
    if not 0 <= support_size <= N:
        raise InvalidShape(f"need 0 <= support_size <= N, got {support_size}, N={N}")
    rng = as_seed(seed).generator()
    order = rng.permutation(N)
    amps: list[float] = []
    while len(amps) < support_size:
        z = standard_normals(rng, 2 * N + 16)  # chunk size independent of support_size
        amps.extend(z[np.abs(z) >= AMPLITUDE_FLOOR][: support_size - len(amps)].tolist())
    f = np.zeros(N)
    support = order[:support_size]
    f[support] = amps
    return f, np.sort(support)


def weak_lp_magnitudes(N: int, p: float, R: float) -> np.ndarray:
    return R * np.arange(1, N + 1, dtype=np.float64) ** (-1.0 / p)


def weak_lp_signal(N: int, p: float, R: float, seed=0) -> np.ndarray:
    """Extremal member of the weak-lp ball: sorted magnitudes equal R n^(-1/p).

    Positions are a random permutation and signs are random.
    """
    SparsityProfile(p, R)
    if N < 1 or R <= 0:
        raise InvalidShape("need N >= 1 and R > 0")
    rng = as_seed(seed).generator()
    order = rng.permutation(N)
    signs = random_signs(rng, N)
    f = np.empty(N)
    f[order] = weak_lp_magnitudes(N, p, R) * signs
    return f


def weak_lp_radius(f, p: float) -> float:
    """Smallest R with ``|f|_(n) <= R n^(-1/p)`` for every n."""
    if p <= 0:
        raise ValueError("p must be positive")
    mags = np.sort(np.abs(np.asarray(f, dtype=np.float64)))[::-1]
    if mags.size == 0:
        return 0.0
    n = np.arange(1, mags.size + 1, dtype=np.float64)
    return float(np.max(mags * n ** (1.0 / p)))


def best_k_term(f, K: int) -> np.ndarray:
    """Keep the K largest-magnitude entries (ties: lower index first)."""
    f = np.asarray(f, dtype=np.float64)
    if not 0 <= K <= f.size:
        raise InvalidShape(f"need 0 <= K <= N, got K={K}, N={f.size}")
    keep = np.argsort(-np.abs(f), kind="stable")[:K]
    out = np.zeros_like(f)
    out[keep] = f[keep]
    return out


def best_k_term_error(f, K: int) -> float:
    return float(np.linalg.norm(np.asarray(f, dtype=np.float64) - best_k_term(f, K)))


def xnorm(f) -> float:
    """sqrt(N) times the largest DFT coefficient magnitude."""
    f = np.asarray(f)
    return float(np.sqrt(f.shape[-1]) * np.max(np.abs(dft(f))))


def norms(f) -> dict[str, float]:
    f = np.asarray(f)
    a = np.abs(f)
    return {
        "l0": int(np.count_nonzero(f)),
        "l1": float(a.sum()),
        "l2": float(np.sqrt((a * a).sum())),
        "linf": float(a.max()) if a.size else 0.0,
        "xnorm": xnorm(f) if f.size else 0.0,
    }
