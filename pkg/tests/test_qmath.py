import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_density, random_hermitian
from ippt.qmath import (
    I2,
    X,
    Z,
    Bipartition,
    haar_random_pure,
    hermitian_spectrum,
    ket,
    partial_trace,
    partial_transpose,
    projector,
    purity,
    random_induced_mixed,
    rng_stream,
    schmidt_alpha,
    schmidt_alpha_batch,
    tensor_product,
)

PHI_PLUS = (ket("00") + ket("11")) / math.sqrt(2)


def splits(max_n=4):
    """Random bipartitions with both sides nonempty."""
    @st.composite
    def build(draw):
        n = draw(st.integers(2, max_n))
        perm = draw(st.permutations(range(n)))
        cut = draw(st.integers(1, n - 1))
        return Bipartition(n, tuple(sorted(perm[:cut])), tuple(sorted(perm[cut:])))
    return build()


# bipartitions

def test_bipartition_rejects_bad_splits():
    with pytest.raises(ValueError):
        Bipartition(2, (), (0, 1))
    with pytest.raises(ValueError):
        Bipartition(3, (0, 1), (1, 2))
    with pytest.raises(ValueError):
        Bipartition(3, (0,), (2,))


def test_bipartition_strings_round_trip():
    bip = Bipartition.from_string("0/12")
    assert bip == Bipartition(3, (0,), (1, 2))
    assert Bipartition.from_string("1,3/0,2") == Bipartition(4, (1, 3), (0, 2))
    assert Bipartition.from_string(bip.to_string()) == bip
    with pytest.raises(ValueError):
        Bipartition.from_string("012")


# tensor products

def test_tensor_identity_and_basis():
    np.testing.assert_array_equal(tensor_product(I2, I2), np.eye(4))
    p0, p1 = projector(ket("0")), projector(ket("1"))
    np.testing.assert_array_equal(tensor_product(p0, p1), np.diag([0, 1, 0, 0]))


def test_tensor_matches_index_loop():
    expected = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    expected[2 * i + k, 2 * j + l] = X[i, j] * Z[k, l]
    np.testing.assert_array_equal(tensor_product(X, Z), expected)
    assert tensor_product(X, Z)[1, 2] == 0
    assert tensor_product(X, Z)[0, 2] == 1


# partial trace

def test_partial_trace_bell_is_maximally_mixed():
    np.testing.assert_allclose(partial_trace(projector(PHI_PLUS), 2, [0]), I2 / 2, atol=1e-15)


def test_partial_trace_product(rng):
    a, b = random_density(1, rng), random_density(2, rng)
    np.testing.assert_allclose(partial_trace(np.kron(a, b), 3, [0]), a, atol=1e-12)
    np.testing.assert_allclose(partial_trace(np.kron(a, b), 3, [1, 2]), b, atol=1e-12)


def test_partial_trace_environment_slot(rng):
    psi = haar_random_pure(16 * 3, rng)
    rho = partial_trace(projector(psi), 4, range(4), env_dim=3)
    assert rho.shape == (16, 16)
    assert abs(np.trace(rho) - 1) < 1e-12
    assert np.linalg.eigvalsh(rho)[0] >= -1e-12


def test_partial_trace_rejects_wrong_shape():
    with pytest.raises(ValueError):
        partial_trace(np.eye(6), 2, [0])


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3))
def test_partial_trace_of_tensor(seed, na, nb):
    rng = np.random.default_rng(seed)
    a = random_hermitian(2**na, rng)
    b = random_hermitian(2**nb, rng)
    got = partial_trace(np.kron(a, b), na + nb, range(na))
    np.testing.assert_allclose(got, a * np.trace(b), atol=1e-12)


# partial transpose

def test_partial_transpose_bell_spectrum():
    pt = partial_transpose(projector(PHI_PLUS), Bipartition(2, (0,), (1,)))
    np.testing.assert_allclose(np.linalg.eigvalsh(pt), [-0.5, 0.5, 0.5, 0.5], atol=1e-12)


def test_partial_transpose_product(rng):
    a, b = random_density(1, rng), random_density(2, rng)
    got = partial_transpose(np.kron(a, b), Bipartition(3, (0,), (1, 2)))
    np.testing.assert_allclose(got, np.kron(a.T, b), atol=1e-14)
    got_b = partial_transpose(np.kron(a, b), Bipartition(3, (0,), (1, 2)), "B")
    np.testing.assert_allclose(got_b, np.kron(a, b.T), atol=1e-14)


@given(splits(), st.integers(0, 2**32 - 1))
def test_partial_transpose_involution_trace_hermiticity(bip, seed):
    h = random_hermitian(2**bip.n_qubits, np.random.default_rng(seed))
    pt = partial_transpose(h, bip)
    np.testing.assert_array_equal(partial_transpose(pt, bip), h)
    assert abs(np.trace(pt) - np.trace(h)) < 1e-12
    np.testing.assert_allclose(pt, pt.conj().T, atol=1e-14)
    # full transpose = T_A then T_B
    np.testing.assert_array_equal(partial_transpose(pt, bip, "B"), h.T)


@given(splits(3), st.integers(0, 2**32 - 1))
def test_transpose_can_move_between_factors(bip, seed):
    rng = np.random.default_rng(seed)
    d = 2**bip.n_qubits
    rho, sigma = random_hermitian(d, rng), random_hermitian(d, rng)
    lhs = np.trace(rho @ partial_transpose(sigma, bip))
    rhs = np.trace(partial_transpose(rho, bip) @ sigma)
    assert abs(lhs - rhs) < 1e-10


@given(splits(4), st.integers(0, 2**32 - 1))
def test_spectrum_of_partial_transpose_sums_to_one(bip, seed):
    rho = random_density(bip.n_qubits, np.random.default_rng(seed))
    assert abs(hermitian_spectrum(partial_transpose(rho, bip)).sum() - 1) < 1e-9


# spectra

def test_hermitian_spectrum_examples():
    np.testing.assert_allclose(hermitian_spectrum(np.eye(4)), [1, 1, 1, 1])
    np.testing.assert_allclose(hermitian_spectrum(np.diag([3.0, 1.0, 2.0])), [1, 2, 3])
    with pytest.raises(ValueError):
        hermitian_spectrum(np.array([[0, 1], [0, 0]]))


def test_hermitian_spectrum_reconstructs(rng):
    h = random_hermitian(8, rng)
    lam = hermitian_spectrum(h)
    assert np.all(np.diff(lam) >= 0)
    _, vecs = np.linalg.eigh(h)
    np.testing.assert_allclose((vecs * lam) @ vecs.conj().T, h, atol=1e-9)
    assert abs(lam.sum() - np.trace(h).real) < 1e-9


# random states

def test_haar_norm_and_determinism():
    for i in range(20):
        assert abs(np.linalg.norm(haar_random_pure(7, rng_stream(3, i))) - 1) < 1e-12
    np.testing.assert_array_equal(haar_random_pure(8, rng_stream(5, 1)),
                                  haar_random_pure(8, rng_stream(5, 1)))
    assert not np.array_equal(haar_random_pure(8, rng_stream(5, 1)),
                              haar_random_pure(8, rng_stream(5, 2)))


def haar_batch(d, count, rng):
    v = rng.standard_normal((count, d)) + 1j * rng.standard_normal((count, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def test_haar_first_moment():
    # the batch sampler draws exactly what haar_random_pure draws, row by row
    rng_a, rng_b = np.random.default_rng(9), np.random.default_rng(9)
    np.testing.assert_allclose(haar_batch(4, 1, rng_a)[0], haar_random_pure(4, rng_b))
    d = 4
    p0 = np.abs(haar_batch(d, 100_000, np.random.default_rng(10))[:, 0]) ** 2
    se = p0.std(ddof=1) / math.sqrt(p0.size)
    assert abs(p0.mean() - 1 / d) < 5 * se


def test_haar_second_moment():
    d = 8
    v = haar_batch(d, 100_000, np.random.default_rng(11))
    x = np.abs(v[:, 0]) ** 2 * np.abs(v[:, 1]) ** 2
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - 1 / (d * (d + 1))) < 5 * se


def test_induced_k1_is_pure():
    rho = random_induced_mixed(3, 1, rng_stream(0, 0))
    assert abs(purity(rho) - 1) < 1e-12


def test_induced_states_are_valid():
    for i in range(20):
        rho = random_induced_mixed(3, 4, rng_stream(1, i))
        assert abs(np.trace(rho) - 1) < 1e-12
        assert np.linalg.eigvalsh(rho)[0] >= -1e-12
    with pytest.raises(ValueError):
        random_induced_mixed(2, 0, rng_stream(0))


def test_induced_mean_purity():
    n, k, count = 4, 8, 10_000
    d = 2**n
    g = haar_batch(d * k, count, np.random.default_rng(12)).reshape(count, d, k)
    rhos = g @ g.conj().transpose(0, 2, 1)
    pur = np.einsum("bij,bji->b", rhos, rhos).real
    se = pur.std(ddof=1) / math.sqrt(count)
    assert abs(pur.mean() - (d + k) / (d * k + 1)) < 3 * se
    # same construction as the library sampler
    np.testing.assert_allclose(random_induced_mixed(n, k, np.random.default_rng(5)),
                               rhos_single(n, k, np.random.default_rng(5)), atol=1e-14)


def rhos_single(n, k, rng):
    g = haar_batch(2**n * k, 1, rng)[0].reshape(2**n, k)
    return g @ g.conj().T


# Schmidt coefficients

def test_schmidt_alpha_examples():
    ghz3 = (ket("000") + ket("111")) / math.sqrt(2)
    assert schmidt_alpha(ket("00"), Bipartition(2, (0,), (1,))) == pytest.approx(1.0)
    assert schmidt_alpha(PHI_PLUS, Bipartition(2, (0,), (1,))) == pytest.approx(0.5)
    assert schmidt_alpha(ghz3, Bipartition(3, (0,), (1, 2))) == pytest.approx(0.5)


@given(splits(4), st.integers(0, 2**32 - 1))
def test_schmidt_alpha_bounds_and_batch(bip, seed):
    rng = np.random.default_rng(seed)
    states = haar_batch(2**bip.n_qubits, 3, rng)
    batch = schmidt_alpha_batch(states, bip)
    for psi, alpha in zip(states, batch):
        single = schmidt_alpha(psi, bip)
        assert abs(single - alpha) < 1e-12
        assert 2.0 ** -min(bip.n_a, bip.n_b) - 1e-12 <= single <= 1 + 1e-12
        # alpha is the top eigenvalue of the reduced state
        rho_a = partial_trace(projector(psi), bip.n_qubits, bip.a_qubits)
        assert abs(np.linalg.eigvalsh(rho_a)[-1] - single) < 1e-10
