import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radioslam.likelihood import (
    NumericalError,
    cn_logpdf,
    cn_logpdf_batch,
    cn_logpdf_rank1,
    forward_substitution,
    normalize_log_weights,
)


def _random_pd(rng, M, scale=1.0):
    A = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
    return scale * (A @ A.conj().T / M + 0.1 * np.eye(M))


def _dense(z, C):
    sign, logdet = np.linalg.slogdet(C)
    return float(-(z.conj() @ np.linalg.solve(C, z)).real - len(z) * np.log(np.pi) - logdet)


@given(st.integers(1, 8), st.integers(0, 2**31))
def test_logpdf_matches_dense_formula(M, seed):
    rng = np.random.default_rng(seed)
    C = _random_pd(rng, M)
    z = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    assert cn_logpdf(z, C) == pytest.approx(_dense(z, C), rel=1e-10, abs=1e-10)


def test_scalar_case():
    z, c = np.array([0.3 + 0.4j]), 0.5
    assert cn_logpdf(z, np.array([[c]])) == pytest.approx(-0.25 / c - np.log(np.pi * c))


def test_batch_and_forward_substitution(rng):
    C = np.stack([_random_pd(rng, 5) for _ in range(4)])
    z = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    np.testing.assert_allclose(cn_logpdf_batch(z, C), [_dense(z, c) for c in C], rtol=1e-10)
    L = np.linalg.cholesky(C)
    y = forward_substitution(L, z)
    np.testing.assert_allclose(np.einsum("pij,pj->pi", L, y), np.broadcast_to(z, (4, 5)), atol=1e-12)


@given(st.integers(1, 6), st.integers(0, 2**31))
def test_rank1_matches_dense(M, seed):
    rng = np.random.default_rng(seed)
    C = _random_pd(rng, M)
    z = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    H = rng.standard_normal((3, M)) + 1j * rng.standard_normal((3, M))
    g = rng.uniform(0, 2, 3)
    base, delta = cn_logpdf_rank1(z, C, g, H)
    assert base == pytest.approx(_dense(z, C), rel=1e-10, abs=1e-10)
    for p in range(3):
        full = _dense(z, C + g[p] * np.outer(H[p], H[p].conj()))
        assert base + delta[p] == pytest.approx(full, rel=1e-9, abs=1e-9)


def test_rank1_with_no_particles(rng):
    base, delta = cn_logpdf_rank1(np.ones(3, complex), np.eye(3), np.zeros(0), np.zeros((0, 3)))
    assert delta.shape == (0,)


def test_non_pd_raises():
    with pytest.raises(NumericalError):
        cn_logpdf(np.ones(2, complex), np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(NumericalError):
        normalize_log_weights(np.array([-np.inf, -np.inf]))


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=30), st.floats(-500, 500))
def test_log_domain_normalisation(logw, shift):
    logw = np.array(logw)
    w = normalize_log_weights(logw + shift)
    direct = np.exp(logw) / np.exp(logw).sum()
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(w, direct, atol=1e-12)
