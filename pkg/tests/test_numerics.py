import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from hybrid_relay.numerics import (
    DomainError,
    SingularMatrixError,
    erf,
    gauss_hermite_nodes,
    gram_inverse_diag_batch,
    hermitian_gram_inverse_diag,
    log2_det_hermitian_psd,
    make_rng,
    sample_gamma_gamma,
    sample_rice,
    svd_singular_values,
)


def random_complex(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


# ---------------------------------------------------------------- oracles

def jacobi_eigenvalues(a, sweeps=100):
    """Cyclic Jacobi eigenvalues of a real symmetric matrix."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off < 1e-15 * np.linalg.norm(a):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta**2 + 1))
                c = 1 / math.sqrt(t**2 + 1)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q], rot[q, p] = s, -s
                a = rot.T @ a @ rot
    return np.diag(a)


def hermitian_to_real(h):
    # Real symmetric embedding with each eigenvalue of h repeated twice.
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


def cofactor_inverse(a):
    n = a.shape[0]
    det = np.linalg.det(a)
    cof = np.empty_like(a)
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(a, i, axis=0), j, axis=1)
            cof[i, j] = (-1) ** (i + j) * np.linalg.det(minor)
    return cof.T / det


def erf_series(x, terms=80):
    # Maclaurin series, accurate for |x| <= 3.
    total = 0.0
    for n in range(terms):
        total += (-1) ** n * x ** (2 * n + 1) / (math.factorial(n) * (2 * n + 1))
    return 2 / math.sqrt(math.pi) * total


# ---------------------------------------------------------------- rng

def test_same_seed_same_stream():
    a = make_rng(7, 1, 2).standard_normal(100)
    b = make_rng(7, 1, 2).standard_normal(100)
    assert np.array_equal(a, b)


def test_streams_differ():
    a = make_rng(7, 1).standard_normal(100)
    b = make_rng(7, 2).standard_normal(100)
    assert not np.array_equal(a, b)


def test_stream_key_matches_spawn():
    child = make_rng(3, 0, 9).spawn(2)[1]
    assert np.array_equal(child.random(5), make_rng(3, 0, 9, 1).random(5))


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_range(seed):
    with pytest.raises(DomainError):
        make_rng(seed)


# ---------------------------------------------------------------- rice

def test_rice_rayleigh_unit_power():
    x = sample_rice(make_rng(1), 0.0, 1.0, 10**6)
    assert abs(np.mean(x**2) - 1.0) < 0.01


def test_rice_infinite_omega_is_constant():
    x = sample_rice(make_rng(1), math.inf, 1.0, 1000)
    assert np.all(x == 1.0)
    x = sample_rice(make_rng(1), 1e12, 1.0, 1000)
    assert np.allclose(x, 1.0, atol=1e-5)


def test_rice_matches_closed_form_cdf():
    omega, psi = 4.0, 1.0
    x = sample_rice(make_rng(2), omega, psi, 10**6)
    scale = math.sqrt(psi / (2 * (1 + omega)))
    nu = math.sqrt(omega * psi / (1 + omega))
    ks = stats.kstest(x, stats.rice(nu / scale, scale=scale).cdf)
    assert ks.statistic < 0.005


def test_rice_zero_omega_is_rayleigh():
    x = sample_rice(make_rng(3), 0.0, 2.0, 10**6)
    ks = stats.kstest(x, stats.rayleigh(scale=1.0).cdf)
    assert ks.statistic < 0.005


@pytest.mark.parametrize("omega, psi", [(1.0, 0.0), (1.0, -1.0), (-0.5, 1.0)])
def test_rice_domain(omega, psi):
    with pytest.raises(DomainError):
        sample_rice(make_rng(0), omega, psi)


# ---------------------------------------------------------------- gamma-gamma

def test_gamma_gamma_unit_mean():
    x = sample_gamma_gamma(make_rng(4), 2.0, 3.0, 10**6)
    assert abs(x.mean() - 1.0) < 0.01


def test_gamma_gamma_variance_moment_formula():
    alpha, beta = 4.0, 2.0
    expected = 1 / alpha + 1 / beta + 1 / (alpha * beta)  # 0.875
    x = sample_gamma_gamma(make_rng(5), alpha, beta, 10**6)
    assert abs(x.var() - expected) < 0.02


def test_gamma_gamma_large_shapes_concentrate():
    x = sample_gamma_gamma(make_rng(6), 1e7, 1e7, 10**4)
    assert x.var() < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 50), st.floats(0.5, 50))
def test_gamma_gamma_mean_within_3se(alpha, beta):
    x = sample_gamma_gamma(make_rng(8), alpha, beta, 10**5)
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - 1.0) < 3 * se + 1e-12


@pytest.mark.parametrize("alpha, beta", [(0.0, 1.0), (1.0, -2.0)])
def test_gamma_gamma_domain(alpha, beta):
    with pytest.raises(DomainError):
        sample_gamma_gamma(make_rng(0), alpha, beta)


def test_samplers_deterministic():
    assert np.array_equal(sample_rice(make_rng(9), 1.0, 1.0, 50),
                          sample_rice(make_rng(9), 1.0, 1.0, 50))
    assert np.array_equal(sample_gamma_gamma(make_rng(9), 3.0, 5.0, 50),
                          sample_gamma_gamma(make_rng(9), 3.0, 5.0, 50))


# ---------------------------------------------------------------- erf

def test_erf_values():
    assert erf(0.0) == 0.0
    assert erf(40.0) == 1.0
    assert abs(erf(1.0) - 0.8427007929) < 1e-9


@pytest.mark.parametrize("x", [-2.5, -0.7, 0.1, 0.5, 1.3, 2.9])
def test_erf_against_series(x):
    assert abs(erf(x) - erf_series(x)) < 1e-12


# ---------------------------------------------------------------- gauss-hermite

def test_hermite_order_one():
    t, w = gauss_hermite_nodes(1)
    assert t[0] == 0.0 and abs(w[0] - math.sqrt(math.pi)) < 1e-15


@pytest.mark.parametrize("order", [1, 2, 5, 16, 64, 128, 256])
def test_hermite_weights_sum(order):
    _, w = gauss_hermite_nodes(order)
    assert abs(w.sum() - math.sqrt(math.pi)) < 1e-12


def test_hermite_second_moment():
    t, w = gauss_hermite_nodes(16)
    assert abs(np.dot(w, t**2) - math.sqrt(math.pi) / 2) < 1e-10


@pytest.mark.parametrize("order", [3, 8, 20])
def test_hermite_exact_on_monomials(order):
    t, w = gauss_hermite_nodes(order)
    for k in range(2 * order):
        exact = 0.0 if k % 2 else math.gamma((k + 1) / 2)
        got = np.dot(w, t**k)
        # Odd moments vanish, so scale by the absolute moment.
        scale = max(abs(exact), np.dot(w, np.abs(t) ** k))
        assert abs(got - exact) <= 1e-9 * scale


@pytest.mark.parametrize("order", [0, 257, 2.5])
def test_hermite_order_domain(order):
    with pytest.raises(DomainError):
        gauss_hermite_nodes(order)


def test_hermite_nodes_read_only():
    t, _ = gauss_hermite_nodes(8)
    with pytest.raises(ValueError):
        t[0] = 1.0


# ---------------------------------------------------------------- svd

def test_svd_identity_and_diag():
    assert np.allclose(svd_singular_values(np.eye(3)), [1, 1, 1])
    assert np.allclose(svd_singular_values(np.diag([2.0, 3.0])), [3, 2])


def test_svd_zero_matrix():
    assert np.array_equal(svd_singular_values(np.zeros((3, 2))), [0, 0])


def test_svd_against_jacobi():
    a = random_complex(make_rng(10), (4, 3))
    eig = jacobi_eigenvalues(hermitian_to_real(a.conj().T @ a))
    oracle = np.sqrt(np.sort(np.clip(eig, 0, None))[::-1][::2])
    assert np.allclose(svd_singular_values(a), oracle, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_svd_frobenius_and_adjoint(rows, cols, seed):
    a = random_complex(np.random.default_rng(seed), (rows, cols))
    sv = svd_singular_values(a)
    assert sv.shape == (min(rows, cols),)
    assert np.all(np.diff(sv) <= 0)
    assert abs(np.sum(sv**2) - np.linalg.norm(a) ** 2) <= 1e-10 * np.linalg.norm(a) ** 2
    assert np.allclose(svd_singular_values(a.conj().T), sv, rtol=1e-10)


def test_svd_batched():
    a = random_complex(make_rng(11), (5, 4, 3))
    batched = svd_singular_values(a)
    assert batched.shape == (5, 3)
    for i in range(5):
        assert np.allclose(batched[i], svd_singular_values(a[i]))


# ---------------------------------------------------------------- gram inverse

def test_gram_orthonormal_and_scaled():
    q, _ = np.linalg.qr(random_complex(make_rng(12), (5, 3)))
    assert np.allclose(hermitian_gram_inverse_diag(q), 1.0)
    c = 2.0 - 1.5j
    assert np.allclose(hermitian_gram_inverse_diag(c * np.eye(3)), 1 / abs(c) ** 2)


def test_gram_against_cofactor():
    a = random_complex(make_rng(13), (5, 3))
    oracle = np.real(np.diag(cofactor_inverse(a.conj().T @ a)))
    got = hermitian_gram_inverse_diag(a)
    assert np.allclose(got, oracle, rtol=1e-9)


def test_gram_singular_raises():
    a = random_complex(make_rng(14), (4, 2))
    a[:, 1] = 3 * a[:, 0]
    with pytest.raises(SingularMatrixError):
        hermitian_gram_inverse_diag(a)
    with pytest.raises(SingularMatrixError):
        hermitian_gram_inverse_diag(np.zeros((3, 2)))


def test_gram_batch_flags_singular_rows():
    a = random_complex(make_rng(15), (3, 4, 2))
    a[1, :, 1] = a[1, :, 0]
    diag, singular = gram_inverse_diag_batch(a)
    assert singular.tolist() == [False, True, False]
    assert np.all(np.isinf(diag[1]))
    assert np.allclose(diag[0], hermitian_gram_inverse_diag(a[0]))


def test_gram_condition_cutoff():
    # Gram condition number is the squared ratio of singular values.
    ok = np.diag([1.0, 1e-5])  # cond = 1e10
    bad = np.diag([1.0, 1e-7])  # cond = 1e14
    assert np.allclose(hermitian_gram_inverse_diag(ok), [1.0, 1e10])
    with pytest.raises(SingularMatrixError):
        hermitian_gram_inverse_diag(bad)


# ---------------------------------------------------------------- log det

def test_logdet_simple():
    assert log2_det_hermitian_psd(np.eye(4)) == 0.0
    assert abs(log2_det_hermitian_psd(np.diag([2.0, 4.0])) - 3.0) < 1e-15


def test_logdet_against_eigen_product():
    h = random_complex(make_rng(16), (4, 4))
    a = np.eye(4) + h @ h.conj().T
    eig = jacobi_eigenvalues(hermitian_to_real(a))
    oracle = np.sum(np.log2(np.sort(eig)[::2]))
    assert abs(log2_det_hermitian_psd(a) - oracle) < 1e-9


def test_logdet_rejects_indefinite():
    with pytest.raises(DomainError):
        log2_det_hermitian_psd(np.diag([1.0, -0.5]))
