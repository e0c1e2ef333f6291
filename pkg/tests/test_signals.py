import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from l1recover.errors import InvalidShape
from l1recover.signals import (
    AMPLITUDE_FLOOR,
    SparsityProfile,
    best_k_term,
    best_k_term_error,
    norms,
    sparse_signal,
    weak_lp_radius,
    weak_lp_signal,
)


def test_sparse_signal_edge_sizes():
    f, T = sparse_signal(16, 0, 1)
    assert not f.any() and T.size == 0
    f, T = sparse_signal(16, 16, 1)
    assert np.count_nonzero(f) == 16 and list(T) == list(range(16))


def test_sparse_signal_contract():
    f, T = sparse_signal(64, 4, 3)
    assert np.count_nonzero(f) == 4
    assert np.all(np.abs(f[T]) >= AMPLITUDE_FLOOR)
    assert np.array_equal(np.flatnonzero(f), T)


def test_sparse_signal_nested_in_support_size():
    f8, T8 = sparse_signal(128, 8, 5)
    f4, T4 = sparse_signal(128, 4, 5)
    assert set(T4) <= set(T8)
    np.testing.assert_array_equal(f4[T4], f8[T4])


def test_sparse_signal_bad_size():
    with pytest.raises(InvalidShape):
        sparse_signal(4, 5, 0)


def test_weak_lp_examples():
    f = weak_lp_signal(3, 1.0, 1.0, 0)
    np.testing.assert_allclose(np.sort(np.abs(f))[::-1], [1, 1 / 2, 1 / 3])
    f = weak_lp_signal(4, 0.5, 2.0, 0)
    np.testing.assert_allclose(np.sort(np.abs(f))[::-1], [2, 1 / 2, 2 / 9, 1 / 8])


@pytest.mark.parametrize("p", [0.3, 0.5, 0.75, 1.0])
def test_weak_lp_radius_of_extremal_signal(p):
    f = weak_lp_signal(200, p, 1.7, 4)
    assert abs(weak_lp_radius(f, p) - 1.7) <= 1e-12


def test_weak_lp_signs_vary():
    f = weak_lp_signal(64, 1.0, 1.0, 0)
    assert (f > 0).any() and (f < 0).any()


@pytest.mark.parametrize("p,R", [(0.0, 1.0), (1.5, 1.0), (0.5, 0.0)])
def test_weak_lp_bad_parameters(p, R):
    with pytest.raises(InvalidShape):
        weak_lp_signal(8, p, R, 0)


def test_radius_examples():
    assert weak_lp_radius(np.zeros(5), 0.5) == 0
    assert weak_lp_radius(np.array([0, -3.0, 0]), 0.5) == 3
    assert weak_lp_radius(np.array([1.0, 1.0]), 1.0) == 2


@given(st.floats(0, 10), st.integers(0, 2**31))
@settings(max_examples=40, deadline=None)
def test_radius_homogeneous(c, seed):
    f = np.random.default_rng(seed).normal(size=20)
    assert weak_lp_radius(c * f, 0.7) == pytest.approx(c * weak_lp_radius(f, 0.7), rel=1e-12, abs=1e-300)


def test_best_k_term_examples():
    f = np.array([3.0, -1.0, 2.0])
    np.testing.assert_array_equal(best_k_term(f, 3), f)
    np.testing.assert_array_equal(best_k_term(f, 0), 0 * f)
    np.testing.assert_array_equal(best_k_term(f, 2), [3, 0, 2])


def test_best_k_term_ties_prefer_lower_index():
    np.testing.assert_array_equal(best_k_term(np.array([1.0, -1.0, 1.0]), 2), [1, -1, 0])


def test_best_k_term_bad_K():
    with pytest.raises(InvalidShape):
        best_k_term(np.ones(3), 4)


@given(st.integers(1, 40), st.integers(0, 40), st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_best_k_term_idempotent_and_monotone(n, k, seed):
    k = min(k, n)
    f = np.random.default_rng(seed).normal(size=n)
    fk = best_k_term(f, k)
    np.testing.assert_array_equal(best_k_term(fk, k), fk)
    if k < n:
        assert best_k_term_error(f, k + 1) <= best_k_term_error(f, k)


@pytest.mark.parametrize("p", [0.5, 0.75, 1.0])
def test_best_k_term_tail_sum_bound(p):
    N, R = 300, 2.0
    f = weak_lp_signal(N, p, R, 1)
    n = np.arange(1, N + 1, dtype=float)
    for K in range(1, N):
        tail = R**2 * np.sum(n[K:] ** (-2 / p))
        assert best_k_term_error(f, K) ** 2 <= tail * (1 + 1e-12)


def test_profile_exponent():
    assert SparsityProfile(0.5, 1).r == 1.5
    assert SparsityProfile(1.0, 1).r == 0.5


def test_norms_delta():
    f = np.zeros(16)
    f[0] = 1
    out = norms(f)
    assert out["l0"] == 1 and out["l1"] == 1 and out["l2"] == 1 and out["linf"] == 1
    assert out["xnorm"] == pytest.approx(1.0, abs=1e-14)


def test_norms_zero_and_ones():
    assert all(v == 0 for v in norms(np.zeros(4)).values())
    out = norms(np.ones(4))
    assert out["l1"] == 4 and out["l2"] == 2
    assert out["xnorm"] == pytest.approx(4.0, abs=1e-14)
