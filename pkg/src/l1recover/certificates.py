"""Audits of the properties that make l1 decoding work.

* Restricted spectra of column subsets (uniform uncertainty audit).
* Least-squares dual certificates interpolating a sign pattern
  (exact reconstruction audit), and the weaker column-correlation bound.
* The least-squares extension of a function on T into the row space.

Column Gram matrices are formed in complex arithmetic for the Fourier
ensemble; eigenvalues go through :func:`l1recover.linalg.hermitian_eigvalsh`
and Gram solves through the real embedding and Cholesky.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .ensembles import Measurement, submatrix
from .errors import EmptyComplement, EmptySupport, InvalidShape, NotPositiveDefinite, SingularGram
from .linalg import cholesky_solve, hermitian_eigvalsh, pivoted_qr
from .seeding import as_seed

GRAM_PIVOT_TOL = 1e-10
EXHAUSTIVE_LIMIT = 100_000
DEFAULT_SAMPLED_TRIALS = 1000


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _gram_solve(FT: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve (F_T^* F_T) x = rhs, raising SingularGram on a failed pivot."""
    G = np.conj(FT.T) @ FT
    rhs = np.asarray(rhs)
    try:
        if np.iscomplexobj(G) or np.iscomplexobj(rhs):
            G = G.astype(np.complex128)
            k = G.shape[0]
            emb = np.block([[G.real, -G.imag], [G.imag, G.real]])
            r = rhs.astype(np.complex128)
            sol = cholesky_solve(emb, np.concatenate([r.real, r.imag]), pivot_tol=GRAM_PIVOT_TOL)
            return sol[:k] + 1j * sol[k:]
        return cholesky_solve(G, rhs.astype(np.float64), pivot_tol=GRAM_PIVOT_TOL)
    except NotPositiveDefinite as exc:
        raise SingularGram(str(exc)) from exc


def _complement(N: int, T: np.ndarray) -> np.ndarray:
    mask = np.ones(N, bool)
    mask[T] = False
    return np.flatnonzero(mask)


def _clean(P: np.ndarray) -> np.ndarray:
    # real operators give real certificates; drop the zero imaginary part
    if np.iscomplexobj(P) and not np.any(P.imag):
        return P.real
    return P


def row_space_residual(M: Measurement, v) -> float:
    """||(I - Proj_rowspace(F)) v||_2 using pivoted QR of F^*."""
    Q, _, _, _ = pivoted_qr(np.conj(M.matrix.T), 1e-12)
    v = np.asarray(v)
    return float(np.linalg.norm(v - Q @ (np.conj(Q.T) @ v)))


# ---------------------------------------------------------------------------
# restricted spectra
# ---------------------------------------------------------------------------


def submatrix_spectrum(M: Measurement, T) -> tuple[float, float]:
    """Extreme eigenvalues of F_{Omega T}^* F_{Omega T}."""
    T = np.unique(np.asarray(T, dtype=np.int64).ravel())
    if T.size == 0:
        raise EmptySupport("need a nonempty column set")
    FT = submatrix(M, T)
    w = hermitian_eigvalsh(np.conj(FT.T) @ FT)
    return float(w[0]), float(w[-1])


@dataclass
class UUPReport:
    bounds: tuple[float, float]
    lambda_factor: float
    alpha: float
    subset_size_cap: int
    mode: str  # "exhaustive" or "sampled"
    trials: int | None
    subsets: list[tuple[int, ...]] = field(default_factory=list)
    lambda_min: np.ndarray = field(default_factory=lambda: np.zeros(0))  # normalized by N/K
    lambda_max: np.ndarray = field(default_factory=lambda: np.zeros(0))
    violations: int = 0

    @property
    def violated(self) -> np.ndarray:
        a, b = self.bounds
        return (self.lambda_min < a) | (self.lambda_max > b)

    def worst(self) -> dict:
        if not self.subsets:
            return {"lowest_lambda_min": None, "highest_lambda_max": None}
        i, j = int(np.argmin(self.lambda_min)), int(np.argmax(self.lambda_max))
        return {
            "lowest_lambda_min": float(self.lambda_min[i]),
            "lowest_subset": list(self.subsets[i]),
            "highest_lambda_max": float(self.lambda_max[j]),
            "highest_subset": list(self.subsets[j]),
        }

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "trials": self.trials,
            "bounds": list(self.bounds),
            "alpha": self.alpha,
            "lambda_factor": self.lambda_factor,
            "subset_size_cap": self.subset_size_cap,
            "subsets_audited": len(self.subsets),
            "violations": self.violations,
            **self.worst(),
        }


def subset_size_cap(alpha: float, K: float, lambda_factor: float) -> int:
    # small slack so that alpha chosen as m*lambda/K lands on m exactly
    return int(math.floor(alpha * K / lambda_factor + 1e-9))


def _spectra_of_subsets(G: np.ndarray, subsets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Extreme eigenvalues of G[T, T] for each row T of ``subsets`` (equal sizes)."""
    sub = G[subsets[:, :, None], subsets[:, None, :]]
    w = hermitian_eigvalsh(sub)
    return w[:, 0], w[:, -1]


def uup_audit(
    M: Measurement,
    alpha: float,
    lambda_factor: float,
    bounds: tuple[float, float] = (0.5, 1.5),
    mode: str = "auto",
    seed=0,
    trials: int = DEFAULT_SAMPLED_TRIALS,
    chunk: int = 20_000,
) -> UUPReport:
    """Restricted-spectrum audit over column subsets of size 1..m.

    ``m = floor(alpha * K / lambda_factor)`` with K the expected number of
    measurements. Eigenvalues are normalized by N/K and compared with
    ``bounds``. ``mode="auto"`` enumerates every subset when there are at
    most 100000 of them and otherwise samples ``trials`` uniformly random
    subsets per size. Sampling checks far less than the uniform statement
    over all subsets.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    N, K = M.N, M.expected_K
    m = min(subset_size_cap(alpha, K, lambda_factor), N)
    total = sum(math.comb(N, j) for j in range(1, m + 1))
    if mode == "auto":
        mode = "exhaustive" if total <= EXHAUSTIVE_LIMIT else "sampled"
    if mode not in ("exhaustive", "sampled"):
        raise ValueError(f"unknown audit mode {mode!r}")
    report = UUPReport(tuple(bounds), lambda_factor, alpha, m, mode, trials if mode == "sampled" else None)
    if m < 1:
        return report

    G = np.conj(M.matrix.T) @ M.matrix
    if not np.iscomplexobj(M.matrix):
        G = G.real
    scale = N / K
    rng = as_seed(seed).generator()
    subsets: list[tuple[int, ...]] = []
    lmin: list[np.ndarray] = []
    lmax: list[np.ndarray] = []
    for j in range(1, m + 1):
        if mode == "exhaustive":
            it = itertools.combinations(range(N), j)
            while True:
                block = np.array(list(itertools.islice(it, chunk)), dtype=np.int64).reshape(-1, j)
                if block.size == 0:
                    break
                a, b = _spectra_of_subsets(G, block)
                subsets.extend(map(tuple, block.tolist()))
                lmin.append(a * scale)
                lmax.append(b * scale)
        else:
            block = np.stack([np.sort(rng.choice(N, size=j, replace=False)) for _ in range(trials)])
            a, b = _spectra_of_subsets(G, block)
            subsets.extend(map(tuple, block.tolist()))
            lmin.append(a * scale)
            lmax.append(b * scale)
    report.subsets = subsets
    report.lambda_min = np.concatenate(lmin)
    report.lambda_max = np.concatenate(lmax)
    report.violations = int(np.count_nonzero(report.violated))
    return report


def rayleigh_ratio(M: Measurement, f) -> float:
    """||F f||^2 / ||f||^2 normalized by N/K."""
    f = np.asarray(f)
    return float(np.linalg.norm(M.matrix @ f) ** 2 / np.linalg.norm(f) ** 2 * M.N / M.expected_K)


# ---------------------------------------------------------------------------
# dual certificates
# ---------------------------------------------------------------------------


@dataclass
class ErpCertificate:
    P: np.ndarray
    T: np.ndarray
    sigma: np.ndarray
    off_support_max: float

    def interpolation_error(self) -> float:
        if self.T.size == 0:
            return 0.0
        return float(np.max(np.abs(self.P[self.T] - self.sigma)))


def erp_certificate(M: Measurement, T, sigma) -> ErpCertificate:
    """Least-squares certificate P = F^* F_T (F_T^* F_T)^{-1} sigma.

    P equals sigma on T and lies in the row space of F; the largest
    off-support magnitude is recorded for the audit.
    """
    T = np.asarray(T, dtype=np.int64).ravel()
    sigma = np.asarray(sigma).ravel()
    if T.size != sigma.size:
        raise InvalidShape("T and sigma must have equal length")
    order = np.argsort(T)
    T, sigma = T[order], sigma[order]
    if np.unique(T).size != T.size:
        raise InvalidShape("T has repeated indices")
    if T.size == 0:
        return ErpCertificate(np.zeros(M.N), T, sigma, 0.0)
    if np.any(np.abs(np.abs(sigma) - 1.0) > 1e-12):
        raise InvalidShape("sigma must have unit modulus")
    FT = submatrix(M, T)
    coef = _gram_solve(FT, sigma)
    P = _clean(np.conj(M.matrix.T) @ (FT @ coef))
    Tc = _complement(M.N, T)
    off = float(np.max(np.abs(P[Tc]))) if Tc.size else 0.0
    return ErpCertificate(P, T, sigma, off)


def erp_audit(cert: ErpCertificate, threshold: float = 0.5) -> tuple[bool, float]:
    """Pass iff the off-support magnitude stays within threshold; returns (passed, margin)."""
    margin = threshold - cert.off_support_max
    return cert.off_support_max <= threshold, margin


def werp_audit(M: Measurement, T, gamma: float) -> tuple[bool, float, int]:
    """Column-correlation check ||F_T^* F_t||_2 <= gamma sqrt(K |T|) / N off T.

    Returns ``(passed, worst_ratio, worst_index)`` where the ratio is the
    left side over the right side.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    T = np.unique(np.asarray(T, dtype=np.int64).ravel())
    if T.size == 0:
        raise EmptySupport("need a nonempty column set")
    Tc = _complement(M.N, T)
    if Tc.size == 0:
        raise EmptyComplement("T covers every column")
    FT = submatrix(M, T)
    corr = np.conj(FT.T) @ M.matrix[:, Tc]
    norms = np.linalg.norm(corr, axis=0)
    bound = gamma * math.sqrt(M.expected_K * T.size) / M.N
    ratios = norms / bound
    k = int(np.argmax(ratios))
    return bool(ratios[k] <= 1.0), float(ratios[k]), int(Tc[k])


def extend(M: Measurement, T, f_on_T) -> np.ndarray:
    """Least-squares extension of f (given on T) into the row space of F."""
    T = np.asarray(T, dtype=np.int64).ravel()
    f_on_T = np.asarray(f_on_T).ravel()
    if T.size != f_on_T.size:
        raise InvalidShape("T and f_on_T must have equal length")
    order = np.argsort(T)
    T, f_on_T = T[order], f_on_T[order]
    if T.size == 0:
        return np.zeros(M.N)
    FT = submatrix(M, T)
    coef = _gram_solve(FT, f_on_T)
    return _clean(np.conj(M.matrix.T) @ (FT @ coef))


def extension_energy_ratio(f_ext, E, f_on_T, alpha: float, K: float, lambda_factor: float) -> float:
    """||f_ext||_{l2(E)} / ((1 + |E| / (alpha K / lambda))^{1/2} ||f||_{l2(T)}).

    The extension bound states this stays below an absolute constant.
    """
    E = np.asarray(E, dtype=np.int64).ravel()
    num = float(np.linalg.norm(np.asarray(f_ext)[E]))
    den = math.sqrt(1.0 + E.size / (alpha * K / lambda_factor)) * float(np.linalg.norm(f_on_T))
    return num / den if den > 0 else 0.0
