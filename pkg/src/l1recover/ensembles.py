"""Random measurement ensembles and measurement operators.

Three ensembles are provided, each producing a dense ``|Omega| x N`` matrix:

* Gaussian: i.i.d. N(0, 1/N) entries, ``|Omega| = K`` rows.
* Binary: i.i.d. entries ``+-1/sqrt(N)`` with equal probability.
* Fourier: rows of the unitary N-point DFT matrix, each frequency kept
  independently with probability ``tau``; the expected row count
  ``tau * N`` plays the role of K.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateDraw, IndexOutOfRange, InvalidShape, ShapeMismatch
from .seeding import Seed, as_seed, random_signs, standard_normals

MAX_EMPTY_RETRIES = 64


class EnsembleKind(str, Enum):
    GAUSSIAN = "gaussian"
    BINARY = "binary"
    FOURIER = "fourier"
    EXTERNAL = "external"  # matrix loaded from disk


@dataclass(frozen=True, eq=False)
class Measurement:
    kind: EnsembleKind
    N: int
    matrix: np.ndarray
    omega: np.ndarray
    expected_K: float
    seed: Seed | None = None

    def __post_init__(self):
        self.matrix.setflags(write=False)
        self.omega.setflags(write=False)
        if self.matrix.shape != (len(self.omega), self.N):
            raise InvalidShape(f"matrix shape {self.matrix.shape} does not match |Omega|={len(self.omega)}, N={self.N}")

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.matrix)

    def real_rows(self) -> np.ndarray:
        """Real-valued row stack: the matrix itself, or [Re; Im] if complex."""
        if self.is_complex:
            return np.vstack([self.matrix.real, self.matrix.imag])
        return np.asarray(self.matrix, dtype=np.float64)

    def restrict_rows(self, keep) -> "Measurement":
        """Measurement made of a subset of rows (by position)."""
        keep = np.sort(np.asarray(keep, dtype=np.int64))
        if self.kind is EnsembleKind.FOURIER:
            K = self.expected_K * len(keep) / max(self.n_rows, 1)
        else:
            K = float(len(keep))
        return Measurement(self.kind, self.N, self.matrix[keep].copy(), self.omega[keep].copy(), K, self.seed)


def _check_shape(N: int, K: int) -> None:
    if N < 1 or K < 1 or K > N:
        raise InvalidShape(f"need 1 <= K <= N, got N={N}, K={K}")


def gaussian_ensemble(N: int, K: int, seed=0) -> Measurement:
    _check_shape(N, K)
    seed = as_seed(seed)
    z = standard_normals(seed.generator(), K * N).reshape(K, N)
    return Measurement(EnsembleKind.GAUSSIAN, N, z / np.sqrt(N), np.arange(K), float(K), seed)


def binary_ensemble(N: int, K: int, seed=0) -> Measurement:
    _check_shape(N, K)
    seed = as_seed(seed)
    x = random_signs(seed.generator(), K * N).reshape(K, N)
    return Measurement(EnsembleKind.BINARY, N, x / np.sqrt(N), np.arange(K), float(K), seed)


def dft_rows(N: int, omega) -> np.ndarray:
    """Rows ``k in omega`` of the unitary DFT matrix."""
    omega = np.asarray(omega, dtype=np.int64)
    t = np.arange(N)
    phase = (np.outer(omega, t) % N) * (-2.0 * np.pi / N)
    return np.exp(1j * phase) / np.sqrt(N)


def draw_omega(N: int, tau: float, seed=0) -> np.ndarray:
    """Random frequency set: each k kept independently with probability tau.

    An empty draw is retried on a fresh substream; gives up with
    DegenerateDraw after MAX_EMPTY_RETRIES attempts.
    """
    if not 0.0 < tau < 1.0:
        raise InvalidShape(f"tau must lie in (0, 1), got {tau}")
    seed = as_seed(seed)
    for attempt in range(MAX_EMPTY_RETRIES):
        keep = seed.generator(attempt).random(N) < tau
        if keep.any():
            return np.flatnonzero(keep)
    raise DegenerateDraw(f"empty frequency set after {MAX_EMPTY_RETRIES} draws (N={N}, tau={tau})")


def fourier_ensemble(N: int, tau: float, seed=0) -> Measurement:
    if N < 1:
        raise InvalidShape("N must be >= 1")
    seed = as_seed(seed)
    omega = draw_omega(N, tau, seed)
    return Measurement(EnsembleKind.FOURIER, N, dft_rows(N, omega), omega, tau * N, seed)


def fourier_from_omega(N: int, omega, expected_K: float | None = None) -> Measurement:
    """Fourier measurement with a prescribed frequency set (e.g. all of Z_N)."""
    omega = np.unique(np.asarray(omega, dtype=np.int64))
    if omega.size and (omega[0] < 0 or omega[-1] >= N):
        raise IndexOutOfRange(f"frequencies must lie in [0, {N})")
    K = float(len(omega)) if expected_K is None else float(expected_K)
    return Measurement(EnsembleKind.FOURIER, N, dft_rows(N, omega), omega, K, None)


def from_matrix(matrix, kind: EnsembleKind | str = EnsembleKind.EXTERNAL, omega=None,
                expected_K: float | None = None, seed: Seed | None = None) -> Measurement:
    matrix = np.array(matrix)
    if matrix.ndim != 2:
        raise InvalidShape("measurement matrix must be 2-D")
    rows, N = matrix.shape
    omega = np.arange(rows) if omega is None else np.asarray(omega, dtype=np.int64)
    K = float(rows) if expected_K is None else float(expected_K)
    return Measurement(EnsembleKind(kind), N, matrix, omega, K, seed)


def make_ensemble(kind, N: int, K: float, seed=0) -> Measurement:
    """Dispatch by kind. For Fourier, ``K`` is the expected row count tau*N."""
    kind = EnsembleKind(kind)
    if kind is EnsembleKind.GAUSSIAN:
        return gaussian_ensemble(N, int(K), seed)
    if kind is EnsembleKind.BINARY:
        return binary_ensemble(N, int(K), seed)
    if kind is EnsembleKind.FOURIER:
        if K >= N:
            return fourier_from_omega(N, np.arange(N))
        return fourier_ensemble(N, K / N, seed)
    raise InvalidShape(f"cannot generate ensemble of kind {kind.value!r}")


def measure(M: Measurement, f) -> np.ndarray:
    """y = F_Omega f."""
    f = np.asarray(f)
    if f.shape != (M.N,):
        raise ShapeMismatch(f"signal has shape {f.shape}, operator expects ({M.N},)")
    return M.matrix @ f


def submatrix(M: Measurement, T) -> np.ndarray:
    """Columns of F_Omega indexed by T, in sorted order."""
    T = np.unique(np.asarray(T, dtype=np.int64).ravel())
    if T.size and (T[0] < 0 or T[-1] >= M.N):
        raise IndexOutOfRange(f"column indices must lie in [0, {M.N})")
    return M.matrix[:, T]
