"""End-to-end acceptance runs at the documented sizes.

Every test records one PASS/FAIL line through the ``report`` fixture and then
asserts the same condition, so the terminal summary lists the outcome of each
criterion even when some of them fail. Run only these with ``-m acceptance``.
"""

import math
import time

import numpy as np
import pytest

from l1recover import io as l1io
from l1recover.certificates import erp_certificate, uup_audit
from l1recover.ensembles import binary_ensemble, fourier_ensemble, fourier_from_omega, gaussian_ensemble, measure
from l1recover.experiments import (
    TrialGrid,
    erp_batch,
    error_scaling,
    exact_recovery_curve,
    l1_stability_experiment,
    omega_concentration,
    quantization_sweep,
    singular_value_concentration,
    xnorm_concentration,
)
from l1recover.l1solver import quantize, solve_bp, solve_bp_quantized
from l1recover.linalg import dft, idft, symmetric_eigs
from l1recover.seeding import Seed, standard_normals
from l1recover.signals import sparse_signal, weak_lp_signal

import oracles

pytestmark = pytest.mark.acceptance

ENSEMBLES = {"gaussian": gaussian_ensemble, "binary": binary_ensemble}
SOLVER_GAP = 1e-9


def _timed(fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - start


def _recovery_grid(kind):
    return TrialGrid(kind, 256, (64,), sparsities=(4,), trials=100, base_seed=2024)


@pytest.fixture(scope="module")
def recovery_runs():
    """Exact-recovery tables for the three ensembles, shared with the determinism check."""
    runs = {}
    for kind in ("gaussian", "binary", "fourier"):
        runs[kind] = _timed(exact_recovery_curve, _recovery_grid(kind), workers=1)
    return runs


# ---------------------------------------------------------------------------


def test_solver_matches_support_enumeration(report):
    start = time.perf_counter()
    worst, failures, done = 0.0, [], 0
    for i in range(50):
        kind = ("gaussian", "binary", "fourier")[i % 3]
        rng = Seed(5000, i).generator()
        N = int(rng.integers(3, 9))
        if kind == "fourier":
            M = fourier_ensemble(N, float(rng.uniform(0.3, 0.7)), Seed(5001, i))
            if M.n_rows == 0 or M.n_rows > 6:
                M = fourier_from_omega(N, np.sort(rng.permutation(N)[: int(rng.integers(1, min(N, 6) + 1))]))
        else:
            K = int(rng.integers(1, min(N, 6) + 1))
            M = ENSEMBLES[kind](N, K, Seed(5001, i))
        f = np.zeros(N)
        s = int(rng.integers(1, N + 1))
        f[rng.permutation(N)[:s]] = rng.normal(size=s)
        y = measure(M, f)
        rec = solve_bp(M, y)
        A = M.real_rows()
        yr = np.concatenate([y.real, y.imag]) if M.is_complex else y
        val, _ = oracles.bp_support_oracle(A, yr)
        diff = abs(rec.l1value - val)
        worst = max(worst, diff)
        if not rec.ok or diff > 1e-6:
            failures.append((i, kind, N, rec.status.value, diff))
        done += 1
    elapsed = time.perf_counter() - start
    ok = report("solver vs support-enumeration oracle", not failures and elapsed < 60,
                f"{done} instances, worst |l1 - oracle| = {worst:.2e}, failures {failures}, {elapsed:.1f}s")
    assert ok


@pytest.mark.parametrize("kind", ["gaussian", "binary", "fourier"])
def test_exact_recovery_at_quarter_sampling(kind, recovery_runs, report):
    table, elapsed = recovery_runs[kind]
    prob = table.value("success_probability", sparsity=4)
    successes = round(prob * 100)
    fails = table.value("solver_failures", sparsity=4)
    ok = report(f"exact recovery {kind} N=256 K=64 |T|=4", successes >= 95 and elapsed < 600,
                f"{successes}/100 recovered, {fails} solver failures, {elapsed:.1f}s")
    assert ok


def test_error_scaling_exponent(report):
    grid = TrialGrid("gaussian", 512, (32, 64, 128, 256), p_values=(0.5, 0.75, 1.0), R=1.0,
                     trials=25, base_seed=3030)
    table, elapsed = _timed(error_scaling, grid)
    lines, all_ok = [], True
    for p in grid.p_values:
        slope = table.value("fitted_slope", p=p)
        se = table.select("fitted_slope", p=p)[0]["stderr"]
        target = table.value("target_slope", p=p)
        fails = sum(table.value("solver_failures", K=K, p=p) for K in grid.K_values)
        good = abs(slope - target) <= 0.25 and fails == 0
        all_ok &= good
        lines.append(f"p={p}: slope {slope:.3f}+-{se:.3f} vs {target:.3f} ({'ok' if good else 'off'})")
    ok = report("error-scaling slope within 0.25", all_ok and elapsed < 1800,
                "; ".join(lines) + f"; {elapsed:.1f}s")
    assert ok


def test_l1_stability_inequality(report):
    table, elapsed = _timed(l1_stability_experiment, 256, 128, 8, p=0.5, R=1.0, trials=100, base_seed=4040)
    frac = table.value("holds_fraction")
    ok = report("l1 stability inequality N=256 K=128 |T|=8", frac >= 0.95,
                f"holds in {frac:.0%} of 100 trials, median ratio {table.value('median_ratio'):.3f}, "
                f"max ratio {table.value('max_ratio'):.3f}, {elapsed:.1f}s")
    assert ok


def test_uup_audit_small_subsets(report):
    N, K = 64, 32
    lam = math.log(N)
    alpha = 2 * lam / K  # subset cap m = 2
    start = time.perf_counter()
    gauss = uup_audit(gaussian_ensemble(N, K, Seed(0, 0)), alpha=alpha, lambda_factor=lam)
    binary = uup_audit(binary_ensemble(N, K, Seed(0, 0)), alpha=alpha, lambda_factor=lam)
    fourier = uup_audit(fourier_ensemble(N, 0.5, Seed(0, 0)), alpha=alpha, lambda_factor=lam,
                        mode="sampled", trials=1000, seed=1)
    elapsed = time.perf_counter() - start
    fourier_rate = fourier.violations / len(fourier.subsets)
    c1 = float(binary.lambda_min.min())
    detail = (f"gaussian {gauss.violations}/{len(gauss.subsets)} violations "
              f"(lowest {gauss.worst()['lowest_lambda_min']:.3f}, highest {gauss.worst()['highest_lambda_max']:.3f}); "
              f"binary {binary.violations}/{len(binary.subsets)} violations, empirical c1 = {c1:.3f}; "
              f"fourier sampled {fourier_rate:.2%} violations; {elapsed:.1f}s")
    ok = report("UUP audit N=64 K=32 subsets of size <= 2",
                gauss.mode == "exhaustive" and gauss.subset_size_cap == 2 and gauss.violations == 0
                and fourier_rate <= 0.01 and elapsed < 300, detail)
    assert ok


def test_erp_certificate(report):
    table, elapsed = _timed(erp_batch, 128, 64, 3, trials=200, base_seed=6060)
    interp = table.value("max_interpolation_error")
    rate = table.value("pass_rate")
    singular = table.value("singular_trials")
    unitary = fourier_from_omega(128, np.arange(128))
    worst_unitary = 0.0
    for t in range(20):
        _, T = sparse_signal(128, 3, Seed(6061, t))
        sigma = np.where(Seed(6062, t).generator().random(3) < 0.5, -1.0, 1.0)
        worst_unitary = max(worst_unitary, erp_certificate(unitary, T, sigma).off_support_max)
    ok = report("ERP certificate N=128 K=64 |T|=3",
                interp <= 1e-8 and rate >= 0.95 and worst_unitary <= 1e-12,
                f"interpolation error <= {interp:.1e}, off-support < 1/2 in {rate:.1%} of 200 trials "
                f"({singular} singular), unitary Fourier off-support max {worst_unitary:.1e}, {elapsed:.1f}s")
    assert ok


def test_concentration_suites(report):
    start = time.perf_counter()
    sv = singular_value_concentration(200, 50, 2000, seed=7070)
    sv1 = singular_value_concentration(30, 1, 10_000, seed=7071, r_values=(0.5,))
    om = omega_concentration(4096, 0.25, 10_000, seed=7072)
    xn = {N: xnorm_concentration(np.full(N, 1 / math.sqrt(N)), 2000, seed=7073) for N in (64, 256, 1024)}
    elapsed = time.perf_counter() - start

    sv_pass = all(row["value"] for row in sv.rows if row["statistic"].endswith("_pass"))
    sv1_pass = sv1.value("upper_tail_pass", r=0.5) and sv1.value("lower_tail_pass", r=0.5)
    om_pass = om.value("outside_pass") and om.value("outside_frequency") == 0
    ratios = {N: max(t.value("mean_ratio", multiplier=m) for m in ("gaussian", "bernoulli")) for N, t in xn.items()}
    xn_pass = all(t.value("bounded", multiplier=m) for t in xn.values() for m in ("gaussian", "bernoulli"))
    tails = ", ".join(
        f"r={r}: up {sv.value('upper_tail_frequency', r=r):.4f} lo {sv.value('lower_tail_frequency', r=r):.4f} "
        f"(bound {sv.value('upper_tail_bound', r=r):.2e})" for r in (0.1, 0.25, 0.5))
    detail = (f"singular n=200 p=50 [{tails}]; vector case up {sv1.value('upper_tail_frequency', r=0.5):.4f} "
              f"vs {sv1.value('upper_tail_bound', r=0.5):.4f}; omega outside {om.value('outside_frequency'):.4f} "
              f"(bound {om.value('outside_bound'):.1e}); xnorm max mean ratio "
              + ", ".join(f"N={N}: {v:.3f}" for N, v in ratios.items()) + f"; {elapsed:.1f}s")
    ok = report("concentration suites", sv_pass and sv1_pass and om_pass and xn_pass, detail)
    assert ok


def test_numerical_kernels(report):
    worst_planch = 0.0
    for N in (1, 2, 7, 64, 100, 1024):
        g = Seed(8080, N).generator()
        f = standard_normals(g, N) + 1j * standard_normals(g, N)
        F = dft(f)
        worst_planch = max(worst_planch, abs(np.linalg.norm(F) - np.linalg.norm(f)) / np.linalg.norm(f),
                           np.abs(idft(F) - f).max() / np.abs(f).max())
    worst_eig = 0.0
    for n in (2, 16, 64, 128):
        X = standard_normals(Seed(8081, n).generator(), n * n).reshape(n, n)
        A = (X + X.T) / 2
        sp = symmetric_eigs(A)
        recon = (sp.eigenvectors * sp.eigenvalues) @ sp.eigenvectors.T
        worst_eig = max(worst_eig, np.linalg.norm(recon - A) / np.linalg.norm(A))
    gaps, optimal, solves = [], 0, 0
    for t in range(60):
        kind = ("gaussian", "binary", "fourier")[t % 3]
        N = (64, 128)[t % 2]
        M = (fourier_ensemble(N, 0.4, Seed(8082, t)) if kind == "fourier"
             else ENSEMBLES[kind](N, N // 3, Seed(8082, t)))
        f = weak_lp_signal(N, 0.75, 1.0, Seed(8083, t)) if t % 4 else sparse_signal(N, 5, Seed(8083, t))[0]
        y = measure(M, f)
        for rec in (solve_bp(M, y), solve_bp_quantized(M, quantize(y, 0.01), 0.01)):
            solves += 1
            if rec.ok:
                optimal += 1
                gaps.append(rec.duality_gap)
    worst_gap = max(gaps)
    ok = report("numerical kernels",
                worst_planch <= 1e-12 and worst_eig <= 1e-9 and worst_gap <= SOLVER_GAP,
                f"Plancherel/inversion {worst_planch:.1e}; eigen reconstruction {worst_eig:.1e}; "
                f"largest gap over {optimal}/{solves} optimal exits {worst_gap:.1e}")
    assert ok


def test_quantized_decoding_converges(report):
    coarse = (0.2, 0.1, 0.05, 0.01)
    fine = (1e-3, 1e-4, 1e-5, 1e-6)
    table, elapsed = _timed(quantization_sweep, 128, 64, 4, coarse + fine, trials=50, base_seed=9090)
    med = {q: table.value("median_error", q=q) for q in (0.0,) + coarse + fine}
    fails = {q: table.value("solver_failures", q=q) for q in (0.0,) + coarse + fine}
    monotone = all(med[a] >= med[b] for a, b in zip(coarse, coarse[1:]))
    gap = abs(med[fine[-1]] - med[0.0])
    ok = report("quantized decoding N=128 K=64 |T|=4",
                monotone and gap <= 1e-4 and not any(fails.values()),
                "median error " + ", ".join(f"q={q:g}: {v:.2e}" for q, v in med.items())
                + f"; |err(q={fine[-1]:g}) - err(BP)| = {gap:.1e}; solver failures {sum(fails.values())}; "
                f"{elapsed:.1f}s")
    assert ok


def test_reruns_are_byte_identical(recovery_runs, tmp_path, report):
    checks = {}
    table, _ = recovery_runs["gaussian"]
    checks["exact recovery, 2 workers"] = (
        table.to_csv_text() == exact_recovery_curve(_recovery_grid("gaussian"), workers=2).to_csv_text())
    a = erp_batch(128, 64, 3, trials=40, base_seed=6060, workers=1).to_csv_text()
    b = erp_batch(128, 64, 3, trials=40, base_seed=6060, workers=2).to_csv_text()
    checks["ERP batch, 2 workers"] = a == b
    a = quantization_sweep(128, 64, 4, (0.1, 0.01), trials=10, base_seed=9090, workers=1).to_csv_text()
    b = quantization_sweep(128, 64, 4, (0.1, 0.01), trials=10, base_seed=9090, workers=3).to_csv_text()
    checks["quantized sweep, 3 workers"] = a == b
    lam = math.log(64)
    for name in ("u1.csv", "u2.csv"):
        l1io.write_uup_csv(tmp_path / name, uup_audit(gaussian_ensemble(64, 32, Seed(0, 0)), 2 * lam / 32, lam))
    checks["UUP audit rerun"] = (tmp_path / "u1.csv").read_bytes() == (tmp_path / "u2.csv").read_bytes()
    a = omega_concentration(4096, 0.25, 2000, seed=11).to_csv_text()
    checks["omega concentration rerun"] = a == omega_concentration(4096, 0.25, 2000, seed=11).to_csv_text()
    ok = report("determinism across reruns and worker counts", all(checks.values()),
                ", ".join(f"{k}: {'identical' if v else 'DIFFERENT'}" for k, v in checks.items()))
    assert ok
