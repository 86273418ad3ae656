import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from wprelay.matrix import (eig_hermitian, hermitize, inner, is_hermitian, is_psd, jacobi_eig_hermitian, rand_hermitian,
                            real_embed, real_unembed)


def test_identity_eigenvalues():
    w, v = eig_hermitian(np.eye(2))
    assert np.allclose(w, [1, 1])
    assert np.allclose(v.conj().T @ v, np.eye(2))


def test_rank_one_eigenpair():
    c = np.array([1.0, 2.0])
    w, v = eig_hermitian(np.outer(c, c))
    assert np.allclose(w, [5, 0], atol=1e-12)
    top = np.real(v[:, 0] * np.sign(v[0, 0].real))
    assert np.allclose(top, c / np.sqrt(5))


def test_random_reconstruction_5x5():
    m = rand_hermitian(np.random.default_rng(0), 5)
    w, v = eig_hermitian(m)
    assert np.max(np.abs(m - (v * w) @ v.conj().T)) <= 1e-10 * 5 * np.max(np.abs(w))
    assert np.all(np.diff(w) <= 0)


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        eig_hermitian(np.array([[np.nan, 0], [0, 1]]))


def test_jacobi_matches_lapack():
    rng = np.random.default_rng(1)
    for n in range(1, 8):
        m = rand_hermitian(rng, n)
        w1, _ = eig_hermitian(m)
        w2, v2 = jacobi_eig_hermitian(m)
        assert np.allclose(w1, w2, atol=1e-10 * n * max(1, np.max(np.abs(w1))))
        assert np.max(np.abs(m - (v2 * w2) @ v2.conj().T)) <= 1e-10 * n * np.max(np.abs(w2))


@pytest.mark.parametrize("m, expected", [(np.zeros((2, 2)), True), (np.diag([1.0, -1.0]), False)])
def test_is_psd_examples(m, expected):
    assert is_psd(m, 1e-9) is expected


def test_gram_is_psd():
    rng = np.random.default_rng(2)
    for _ in range(20):
        c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        g = np.outer(c, c.conj())
        assert is_psd(g)
        assert eig_hermitian(g)[0][-1] >= -1e-12 * np.linalg.norm(c) ** 2


def test_real_embed_of_real_matrix_is_block_diagonal():
    m = np.array([[2.0, 1.0], [1.0, 3.0]])
    e = real_embed(m)
    assert np.allclose(e, np.block([[m, np.zeros((2, 2))], [np.zeros((2, 2)), m]]))


def test_real_embed_pauli_eigenvalues():
    m = np.array([[0, 1j], [-1j, 0]])
    assert np.allclose(np.sort(np.linalg.eigvalsh(real_embed(m))), [-1, -1, 1, 1])


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_real_embed_trace_and_spectrum(n, seed):
    m = rand_hermitian(np.random.default_rng(seed), n)
    e = real_embed(m)
    assert np.isclose(np.trace(e), 2 * np.real(np.trace(m)))
    w = np.sort(np.linalg.eigvalsh(m))
    assert np.allclose(np.sort(np.linalg.eigvalsh(e)), np.sort(np.repeat(w, 2)), atol=1e-10 * (1 + np.max(np.abs(w))))
    assert np.allclose(real_unembed(e), m)


@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_eig_reconstruction_property(n, seed):
    m = rand_hermitian(np.random.default_rng(seed), n)
    w, v = eig_hermitian(m)
    assert np.max(np.abs(m - (v * w) @ v.conj().T)) <= 1e-10 * n * np.max(np.abs(w))
    assert np.allclose(v.conj().T @ v, np.eye(n), atol=1e-12 * n)


@given(st.integers(1, 6), st.integers(0, 2**32 - 1), st.booleans())
def test_psd_verdict_survives_embedding(n, seed, make_psd):
    m = rand_hermitian(np.random.default_rng(seed), n)
    if make_psd:
        m = m @ m.conj().T
    assert is_psd(m) == is_psd(real_embed(m))


@given(st.integers(1, 5), st.integers(0, 2**32 - 1),
       st.floats(-10, 10, allow_nan=False), st.floats(-10, 10, allow_nan=False))
def test_inner_product_symmetric_and_linear(n, seed, s, t):
    rng = np.random.default_rng(seed)
    a, b, c = (rand_hermitian(rng, n) for _ in range(3))
    assert np.isclose(inner(a, b), inner(b, a))
    assert np.isclose(inner(s * a + t * b, c), s * inner(a, c) + t * inner(b, c), atol=1e-9 * (1 + abs(s) + abs(t)) * 100)


@given(arrays(np.float64, (3, 3), elements=st.floats(-5, 5)))
def test_hermitize_is_hermitian(m):
    assert is_hermitian(hermitize(m))
