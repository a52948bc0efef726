import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import null_space

from rsortho.errors import DimensionMismatch, NotSkewHermitian, SingularGram, ZeroMatrix
from rsortho.linalg_core import (
    complete_unitary,
    condition_number,
    expm_skew_hermitian,
    left_pinv,
    random_semi_unitary,
    right_pinv,
    unitarity_error,
    unvec,
    vec,
)

from .conftest import crandn


def test_right_pinv_identity_and_scalar():
    np.testing.assert_allclose(right_pinv(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(right_pinv(np.array([[2.0]])), [[0.5]])


def test_right_pinv_residual(rng):
    a = crandn(rng, 2, 4)
    assert np.linalg.norm(a @ right_pinv(a) - np.eye(2)) <= 1e-10


def test_left_pinv_examples(rng):
    np.testing.assert_allclose(left_pinv(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(left_pinv(np.ones((2, 1))), [[0.5, 0.5]])
    a = crandn(rng, 5, 2)
    assert np.linalg.norm(left_pinv(a) @ a - np.eye(2)) <= 1e-10


def test_pinv_rank_deficient_raises(rng):
    a = crandn(rng, 1, 4)
    a = np.vstack([a, 2 * a])
    with pytest.raises(SingularGram):
        right_pinv(a)
    with pytest.raises(SingularGram):
        left_pinv(a.T)
    # SVD fallback still returns the Moore-Penrose inverse
    np.testing.assert_allclose(right_pinv(a, fallback=True), np.linalg.pinv(a), atol=1e-12)


def test_pinv_shape_checks(rng):
    with pytest.raises(DimensionMismatch):
        right_pinv(crandn(rng, 4, 2))
    with pytest.raises(DimensionMismatch):
        left_pinv(crandn(rng, 2, 4))


@pytest.mark.parametrize("seed", range(10))
def test_right_pinv_is_minimum_norm(seed):
    rng = np.random.default_rng(seed)
    a = crandn(rng, 3, 7)
    b = crandn(rng, 3, 1)
    x = right_pinv(a) @ b
    ns = null_space(a)
    for _ in range(20):
        z = ns @ crandn(rng, ns.shape[1], 1)
        assert np.linalg.norm(x) <= np.linalg.norm(x + z)


def test_vec_column_major():
    np.testing.assert_array_equal(vec(np.array([[1, 2], [3, 4]])).ravel(), [1, 3, 2, 4])
    col = np.arange(3.0)[:, None]
    np.testing.assert_array_equal(vec(col), col)


def test_vec_unvec_roundtrip(rng):
    a = crandn(rng, 3, 4)
    np.testing.assert_array_equal(unvec(vec(a), 3, 4), a)
    with pytest.raises(DimensionMismatch):
        unvec(vec(a), 5, 4)


def test_vec_of_outer_product_is_kron(rng):
    a, b = crandn(rng, 3), crandn(rng, 2)
    np.testing.assert_allclose(vec(np.outer(a, b)).ravel(), np.kron(b, a))


def test_condition_number_examples():
    assert condition_number(np.eye(4)) == 1.0
    assert condition_number(np.diag([3.0, 1.0])) == pytest.approx(3.0)
    u = random_semi_unitary(6, 3, 1)
    assert condition_number(np.sqrt(5) * u) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ZeroMatrix):
        condition_number(np.zeros((3, 2)))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), re=st.floats(-5, 5), im=st.floats(-5, 5))
def test_condition_number_scale_invariant(seed, re, im):
    c = complex(re, im)
    if abs(c) < 1e-3:
        c = 1.0
    a = crandn(np.random.default_rng(seed), 4, 2)
    assert condition_number(c * a) == pytest.approx(condition_number(a), rel=1e-9)


def test_random_semi_unitary():
    u = random_semi_unitary(1, 1, 7)
    assert abs(abs(u[0, 0]) - 1) < 1e-15
    u = random_semi_unitary(6, 3, 7)
    assert unitarity_error(u) <= 1e-10
    np.testing.assert_array_equal(u, random_semi_unitary(6, 3, 7))
    assert not np.array_equal(u, random_semi_unitary(6, 3, 8))
    with pytest.raises(DimensionMismatch):
        random_semi_unitary(2, 3, 0)


def test_complete_unitary_keeps_columns():
    u = random_semi_unitary(5, 2, 3)
    w = complete_unitary(u)
    np.testing.assert_array_equal(w[:, :2], u)
    assert unitarity_error(w) <= 1e-12


def _skew(rng, n, scale=1.0):
    a = scale * crandn(rng, n, n)
    return a - a.conj().T


def test_expm_examples(rng):
    np.testing.assert_allclose(expm_skew_hermitian(np.zeros((3, 3))), np.eye(3))
    assert abs(expm_skew_hermitian(np.array([[1j * np.pi]]))[0, 0] + 1) <= 1e-12
    g = _skew(rng, 4)
    assert np.linalg.norm(expm_skew_hermitian(g) @ expm_skew_hermitian(-g) - np.eye(4)) <= 1e-10
    with pytest.raises(NotSkewHermitian):
        expm_skew_hermitian(crandn(rng, 3, 3))


def test_expm_matches_taylor_series(rng):
    # independent oracle: truncated power series with scaling and squaring
    g = _skew(rng, 4, 0.7)
    s = 8
    x = g / 2**s
    term, acc = np.eye(4, dtype=complex), np.eye(4, dtype=complex)
    for j in range(1, 20):
        term = term @ x / j
        acc = acc + term
    for _ in range(s):
        acc = acc @ acc
    np.testing.assert_allclose(expm_skew_hermitian(g), acc, atol=1e-11)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(1, 6), scale=st.floats(0.01, 50))
def test_expm_always_unitary(seed, n, scale):
    g = _skew(np.random.default_rng(seed), n, scale)
    assert unitarity_error(expm_skew_hermitian(g)) <= 1e-10
