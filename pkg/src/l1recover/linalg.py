"""Dense numerical kernels.

Unitary DFT (radix-2 FFT for power-of-two lengths, direct sum otherwise),
cyclic Jacobi eigen-decomposition for symmetric matrices, Cholesky
factorization with a pivot threshold, and Householder QR with column
pivoting for numerical rank.

Everything here is a pure function of its inputs. numpy is only used for
array storage and elementwise/BLAS-level arithmetic; the factorizations
themselves are written out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidShape, NotPositiveDefinite, NotSymmetric

#: Default tolerances. Exposed at module level so callers can override.
SYMMETRY_TOL = 1e-10
CHOLESKY_PIVOT_TOL = 1e-12
JACOBI_OFFDIAG_TOL = 1e-15
JACOBI_MAX_SWEEPS = 60
MAX_EIG_DIM = 4096

__all__ = [
    "Spectrum",
    "dft",
    "idft",
    "symmetric_eigs",
    "batched_eigvalsh",
    "hermitian_eigvalsh",
    "cholesky_factor",
    "cholesky_solve",
    "triangular_solve",
    "pivoted_qr",
    "pivoted_qr_rank",
]


# ---------------------------------------------------------------------------
# Fourier transform
# ---------------------------------------------------------------------------


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _bit_reverse_permutation(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def _fft_radix2(x: np.ndarray) -> np.ndarray:
    """Iterative decimation-in-time FFT along the last axis (unnormalized)."""
    n = x.shape[-1]
    lead = x.shape[:-1]
    y = x[..., _bit_reverse_permutation(n)].astype(np.complex128)
    m = 2
    while m <= n:
        half = m // 2
        w = np.exp(-2j * np.pi * np.arange(half) / m)
        y = y.reshape(*lead, n // m, m)
        even = y[..., :half]
        odd = y[..., half:] * w
        y = np.concatenate([even + odd, even - odd], axis=-1)
        m *= 2
    return y.reshape(*lead, n)


def _dft_direct(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    k = np.arange(n)
    # reduce k*t mod n before forming the phase to keep it accurate
    phase = (np.outer(k, k) % n) * (-2.0 * np.pi / n)
    W = np.exp(1j * phase)
    return x.astype(np.complex128) @ W.T


def dft(f) -> np.ndarray:
    """Unitary discrete Fourier transform along the last axis.

    ``dft(f)[k] = N**-0.5 * sum_t f[t] * exp(-2j*pi*k*t/N)``.
    """
    x = np.asarray(f)
    n = x.shape[-1]
    if n < 1:
        raise InvalidShape("dft needs a vector of length >= 1")
    out = _fft_radix2(x) if _is_pow2(n) else _dft_direct(x)
    return out / np.sqrt(n)


def idft(g) -> np.ndarray:
    """Inverse of :func:`dft`."""
    x = np.asarray(g, dtype=np.complex128)
    return np.conj(dft(np.conj(x)))


# ---------------------------------------------------------------------------
# Symmetric eigenproblem (cyclic Jacobi, round-robin ordering)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None


def _round_robin_pairs(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint index pairs covering all n(n-1)/2 pairs in n-1 rounds (n even)."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        p = [players[i] for i in range(n // 2)]
        q = [players[n - 1 - i] for i in range(n // 2)]
        rounds.append((np.array(p), np.array(q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi(A: np.ndarray, want_vectors: bool):
    """Jacobi sweeps on a stack of symmetric matrices, shape (..., n, n)."""
    n = A.shape[-1]
    # work with the batch axes last so row/column gathers are contiguous
    W = np.ascontiguousarray(np.moveaxis(np.asarray(A, dtype=np.float64), (-2, -1), (0, 1)))
    V = None
    if want_vectors:
        V = np.zeros_like(W)
        V[np.arange(n), np.arange(n)] = 1.0
    if n <= 1:
        return _restore(W), _restore(V)
    m = n + (n % 2)
    rounds = []
    for p, q in _round_robin_pairs(m):
        keep = (p < n) & (q < n)
        if keep.any():
            rounds.append((p[keep], q[keep]))

    extra = (1,) * (W.ndim - 2)
    offmask = (1.0 - np.eye(n)).reshape((n, n) + extra)
    fro = np.sqrt(np.sum(W * W, axis=(0, 1)))
    tiny = np.finfo(float).tiny
    # rounding leaves off-diagonal mass of order n*eps*|A|; don't chase below it
    target = max(JACOBI_OFFDIAG_TOL, 2.0 * n * np.finfo(float).eps) * fro + tiny
    prev = None
    for _ in range(JACOBI_MAX_SWEEPS):
        Woff = W * offmask
        off = np.sqrt(np.sum(Woff * Woff, axis=(0, 1)))
        if np.all(off <= target):
            break
        if prev is not None and np.all((off <= 1e-12 * fro + tiny) & (off > 0.5 * prev)):
            break
        prev = off
        for p, q in rounds:
            app = W[p, p]
            aqq = W[q, q]
            apq = W[p, q]
            small = np.abs(apq) <= tiny
            safe_apq = np.where(small, 1.0, apq)
            theta = (aqq - app) / (2.0 * safe_apq)
            t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(theta == 0, 1.0, t)
            t = np.where(small, 0.0, t)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            # columns: W <- W J ; rows: W <- J^T W
            cc, ss = c[None], s[None]
            Wp, Wq = W[:, p], W[:, q]
            W[:, p] = cc * Wp - ss * Wq
            W[:, q] = ss * Wp + cc * Wq
            cr, sr = c[:, None], s[:, None]
            Wp, Wq = W[p], W[q]
            W[p] = cr * Wp - sr * Wq
            W[q] = sr * Wp + cr * Wq
            W[p, q] = 0.0
            W[q, p] = 0.0
            if V is not None:
                Vp, Vq = V[:, p], V[:, q]
                V[:, p] = cc * Vp - ss * Vq
                V[:, q] = ss * Vp + cc * Vq
    return _restore(W), _restore(V)


def _restore(W):
    if W is None:
        return None
    return np.moveaxis(W, (0, 1), (-2, -1))


def _check_symmetric(A: np.ndarray, tol: float) -> None:
    scale = max(1.0, float(np.max(np.abs(A))) if A.size else 1.0)
    asym = float(np.max(np.abs(A - np.swapaxes(A, -1, -2)))) if A.size else 0.0
    if asym > tol * scale:
        raise NotSymmetric(f"asymmetry {asym:.3e} exceeds tolerance {tol:.1e}")


def symmetric_eigs(A, vectors: bool = True, tol: float = SYMMETRY_TOL) -> Spectrum:
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi.

    Eigenvalues are returned in ascending order; eigenvectors (if requested)
    are the matching columns of an orthogonal matrix.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidShape(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] > MAX_EIG_DIM:
        raise InvalidShape(f"dimension {A.shape[0]} exceeds {MAX_EIG_DIM}")
    _check_symmetric(A, tol)
    A = 0.5 * (A + A.T)
    D, V = _jacobi(A, vectors)
    w = np.diagonal(D).copy()
    order = np.argsort(w, kind="stable")
    w = w[order]
    if V is not None:
        V = V[:, order]
    return Spectrum(w, V)


def batched_eigvalsh(A, tol: float = SYMMETRY_TOL) -> np.ndarray:
    """Ascending eigenvalues for a stack of real symmetric matrices (..., n, n)."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise InvalidShape(f"expected (..., n, n), got {A.shape}")
    _check_symmetric(A, tol)
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    D, _ = _jacobi(A, False)
    return np.sort(np.diagonal(D, axis1=-2, axis2=-1), axis=-1)


def hermitian_eigvalsh(H, tol: float = SYMMETRY_TOL) -> np.ndarray:
    """Ascending eigenvalues of (a stack of) Hermitian matrices.

    Uses the real embedding [[Re, -Im], [Im, Re]], whose spectrum is the
    Hermitian spectrum with every eigenvalue doubled.
    """
    H = np.asarray(H)
    if not np.iscomplexobj(H):
        return batched_eigvalsh(H, tol)
    H = 0.5 * (H + np.conj(np.swapaxes(H, -1, -2)))
    re, im = H.real, H.imag
    top = np.concatenate([re, -im], axis=-1)
    bot = np.concatenate([im, re], axis=-1)
    w = batched_eigvalsh(np.concatenate([top, bot], axis=-2), tol)
    return w[..., ::2]


# ---------------------------------------------------------------------------
# Cholesky
# ---------------------------------------------------------------------------


def cholesky_factor(A, pivot_tol: float = CHOLESKY_PIVOT_TOL) -> np.ndarray:
    """Lower-triangular L with A = L L^T.

    Raises NotPositiveDefinite when a pivot falls below
    ``pivot_tol * max(diag(A))``.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise InvalidShape(f"expected a square matrix, got shape {A.shape}")
    L = np.zeros_like(A)
    if n == 0:
        return L
    threshold = pivot_tol * max(float(np.max(np.diag(A))), 0.0)
    for j in range(n):
        lj = L[j, :j]
        d = A[j, j] - lj @ lj
        if not d > threshold or d <= 0.0:
            raise NotPositiveDefinite(f"pivot {j} = {d:.3e} below threshold {threshold:.3e}")
        piv = np.sqrt(d)
        L[j, j] = piv
        if j + 1 < n:
            L[j + 1 :, j] = (A[j + 1 :, j] - L[j + 1 :, :j] @ lj) / piv
    return L


def triangular_solve(L, b, lower: bool = True, transpose: bool = False) -> np.ndarray:
    """Solve L x = b (or L^T x = b) by substitution."""
    L = np.asarray(L, dtype=np.float64)
    x = np.array(b, dtype=np.float64, copy=True)
    n = L.shape[0]
    M = L.T if transpose else L
    is_lower = lower != transpose
    rng = range(n) if is_lower else range(n - 1, -1, -1)
    for i in rng:
        if is_lower:
            x[i] = (x[i] - M[i, :i] @ x[:i]) / M[i, i]
        else:
            x[i] = (x[i] - M[i, i + 1 :] @ x[i + 1 :]) / M[i, i]
    return x


def cholesky_solve(A, b, pivot_tol: float = CHOLESKY_PIVOT_TOL, L=None) -> np.ndarray:
    """Solve A x = b for symmetric positive-definite A."""
    if L is None:
        L = cholesky_factor(A, pivot_tol)
    z = triangular_solve(L, b, lower=True)
    return triangular_solve(L, z, lower=True, transpose=True)


# ---------------------------------------------------------------------------
# Householder QR with column pivoting
# ---------------------------------------------------------------------------


def pivoted_qr(M, tol: float, want_q: bool = True):
    """Householder QR with column pivoting, stopped at numerical rank.

    Returns ``(Q, R, perm, rank)`` where ``Q`` holds ``rank`` orthonormal
    columns spanning the selected columns ``M[:, perm[:rank]]`` and
    ``R`` is the partially reduced ``rank x n`` upper block. A column is
    treated as dependent once its remaining norm is at most ``tol`` times
    the largest initial column norm. With ``want_q=False`` the first
    return value is None and the cost of forming Q is skipped.
    """
    R = np.array(M, dtype=np.complex128 if np.iscomplexobj(M) else np.float64, copy=True)
    m, n = R.shape
    perm = np.arange(n)
    reflectors = []
    ref = float(np.max(np.linalg.norm(R, axis=0))) if R.size else 0.0
    rank = 0
    if ref == 0.0:
        return np.zeros((m, 0), dtype=R.dtype), R[:0], perm, 0
    for k in range(min(m, n)):
        norms = np.linalg.norm(R[k:, k:], axis=0)
        j = int(np.argmax(norms))
        if norms[j] <= tol * ref:
            break
        j += k
        if j != k:
            R[:, [k, j]] = R[:, [j, k]]
            perm[[k, j]] = perm[[j, k]]
        x = R[k:, k]
        nx = np.linalg.norm(x)
        x0 = x[0]
        phase = x0 / abs(x0) if x0 != 0 else 1.0
        v = x.copy()
        v[0] += phase * nx
        v /= np.linalg.norm(v)
        R[k:, k:] -= 2.0 * np.outer(v, np.conj(v) @ R[k:, k:])
        reflectors.append(v)
        rank += 1
    if not want_q:
        return None, np.triu(R[:rank]), perm, rank
    Q = np.zeros((m, rank), dtype=R.dtype)
    Q[np.arange(rank), np.arange(rank)] = 1.0
    for k in range(rank - 1, -1, -1):
        v = reflectors[k]
        Q[k:, :] -= 2.0 * np.outer(v, np.conj(v) @ Q[k:, :])
    return Q, np.triu(R[:rank]), perm, rank


def pivoted_qr_rank(A, tol: float) -> tuple[int, np.ndarray]:
    """Numerical rank of A and a set of rows spanning its row space.

    Pivoted QR is applied to A^T so that pivot columns are rows of A.
    Returns ``(rank, rows)`` with ``rows`` sorted ascending.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = np.atleast_2d(np.asarray(A))
    if A.size == 0:
        return 0, np.zeros(0, dtype=np.int64)
    _, _, perm, rank = pivoted_qr(A.T, tol)
    return rank, np.sort(perm[:rank])
