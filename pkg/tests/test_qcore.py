import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsep.errors import InvalidArgumentError
from qsep.qcore import (
    BipartiteDims,
    DensityMatrix,
    PureState,
    bell_state,
    derive_seed,
    haar_random_pure,
    haar_random_unitary,
    hermitian_top_eigpair,
    mixture_matrix,
    partial_transpose_b,
    partial_transpose_matrix,
    product_state,
    random_density_mixture,
    random_separable,
    schmidt_top,
)

D22 = BipartiteDims(2, 2)
D33 = BipartiteDims(3, 3)


def test_dims_validation():
    assert BipartiteDims(2, 3).p == 6
    assert str(BipartiteDims(3, 7)) == "3x7"
    assert BipartiteDims(2, 3).ppt_is_exact
    assert not D33.ppt_is_exact
    for bad in [(1, 3), (3, 0), (2.0, 2), (True, 2)]:
        with pytest.raises(InvalidArgumentError):
            BipartiteDims(*bad)


def test_density_matrix_rejects_invalid():
    with pytest.raises(InvalidArgumentError):
        DensityMatrix(np.eye(4), D22)  # trace 4
    m = np.eye(4) / 4
    m = m.astype(complex)
    m[0, 1] = 1e-3
    with pytest.raises(InvalidArgumentError):
        DensityMatrix(m, D22)  # not Hermitian
    with pytest.raises(InvalidArgumentError):
        DensityMatrix(np.diag([0.6, 0.6, -0.2, 0.0]), D22)  # not PSD
    with pytest.raises(InvalidArgumentError):
        DensityMatrix(np.eye(9) / 9, D22)  # wrong size
    with pytest.raises(InvalidArgumentError):
        DensityMatrix(np.full((4, 4), np.nan), D22)


def test_density_matrix_is_read_only():
    rho = DensityMatrix.maximally_mixed(D22)
    with pytest.raises(ValueError):
        rho.entries[0, 0] = 1.0


def test_pure_state_normalization():
    with pytest.raises(InvalidArgumentError):
        PureState(np.array([1.0, 1.0, 0, 0]), D22)
    s = haar_random_pure(D33, 3)
    assert abs(np.linalg.norm(s.amplitudes) - 1) < 1e-12


def test_haar_pure_seeded_and_uniform():
    a = haar_random_pure(D22, 42).amplitudes
    b = haar_random_pure(D22, 42).amplitudes
    np.testing.assert_array_equal(a, b)
    # E|a_0|^2 = 1/p on the uniform sphere
    rng = np.random.default_rng(0)
    from qsep.qcore import haar_random_vector

    vals = [abs(haar_random_vector(2, rng)[0]) ** 2 for _ in range(10_000)]
    assert abs(np.mean(vals) - 0.5) < 0.02


def test_random_density_mixture():
    rho = random_density_mixture(D33, 1, 0)
    np.testing.assert_allclose(rho.purity(), 1.0, atol=1e-12)
    rho = random_density_mixture(D22, 2, 1)
    assert abs(np.trace(rho.entries) - 1) < 1e-12
    assert rho.eigvalsh()[0] >= -1e-12
    rho = random_density_mixture(D33, 500, 2)
    assert np.linalg.norm(rho.entries - np.eye(9) / 9) < 0.15
    with pytest.raises(InvalidArgumentError):
        mixture_matrix(4, 0, 0)


def test_random_separable():
    rng = np.random.default_rng(5)
    rho = random_separable(D33, 1, rng, factor_k=1)
    np.testing.assert_allclose(rho.purity(), 1.0, atol=1e-12)
    rho = random_separable(D33, 3, 7)
    np.testing.assert_allclose(np.trace(rho.entries), 1.0, atol=1e-12)
    assert np.max(np.abs(rho.entries - rho.entries.conj().T)) <= 1e-12
    for _ in range(50):
        rho = random_separable(D33, int(rng.integers(1, 10)), rng)
        assert np.linalg.eigvalsh(partial_transpose_b(rho))[0] >= -1e-10


def test_separable_matrix_matches_kron():
    # the vectorized assembly must equal an explicit sum of Kronecker products
    from qsep.qcore import _batched_mixtures, separable_matrix

    seed = 11
    m = separable_matrix(2, 3, 4, np.random.default_rng(seed))
    rng = np.random.default_rng(seed)
    q = rng.standard_exponential(4)
    q /= q.sum()
    a = _batched_mixtures(4, 2, 2, rng)
    b = _batched_mixtures(4, 3, 3, rng)
    ref = sum(q[j] * np.kron(a[j], b[j]) for j in range(4))
    np.testing.assert_allclose(m, ref, atol=1e-14)


def test_partial_transpose_examples():
    # 4x4 index matrix with its B-partial transpose written out
    m = np.arange(16).reshape(4, 4)
    expected = np.array([[0, 4, 2, 6], [1, 5, 3, 7], [8, 12, 10, 14], [9, 13, 11, 15]])
    np.testing.assert_array_equal(partial_transpose_matrix(m, 2, 2), expected)

    ra = random_density_mixture(BipartiteDims(3, 2), 2, 0).entries[:3, :3]
    ra = ra / np.trace(ra)
    rb = mixture_matrix(2, 1, 1)
    prod = DensityMatrix.from_array(np.kron(ra, rb), BipartiteDims(3, 2))
    np.testing.assert_allclose(partial_transpose_b(prod), np.kron(ra, rb.T), atol=1e-15)

    mixed = DensityMatrix.maximally_mixed(D33)
    np.testing.assert_array_equal(partial_transpose_b(mixed), mixed.entries)


def test_bell_partial_transpose_spectrum():
    ev = np.linalg.eigvalsh(partial_transpose_b(bell_state()))
    np.testing.assert_allclose(ev, [-0.5, 0.5, 0.5, 0.5], atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.integers(2, 4), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_partial_transpose_properties(pa, pb, k, seed):
    m = mixture_matrix(pa * pb, k, seed)
    pt = partial_transpose_matrix(m, pa, pb)
    np.testing.assert_array_equal(partial_transpose_matrix(pt, pa, pb), m)
    np.testing.assert_allclose(np.trace(pt), np.trace(m), atol=1e-14)
    np.testing.assert_array_equal(pt, pt.conj().T)


def test_schmidt_examples():
    a = np.array([1, 1j, 0]) / np.sqrt(2)
    b = np.array([0.6, 0.8])
    top = schmidt_top(product_state(a, b, BipartiteDims(3, 2)))
    assert abs(top.lambda1 - 1) < 1e-12
    # equal up to a global phase
    assert abs(abs(np.vdot(top.a1, a)) - 1) < 1e-12
    assert abs(abs(np.vdot(top.b1, b)) - 1) < 1e-12

    s = np.zeros(4)
    s[0], s[3] = np.sqrt(0.8), np.sqrt(0.2)
    top = schmidt_top(PureState(s, D22))
    np.testing.assert_allclose(top.lambda1, np.sqrt(0.8), atol=1e-14)
    assert abs(abs(top.a1[0]) - 1) < 1e-12 and abs(abs(top.b1[0]) - 1) < 1e-12

    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    np.testing.assert_allclose(schmidt_top(PureState(bell, D22)).lambda1, 1 / np.sqrt(2), atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_schmidt_top_matches_svd_oracle(pa, pb, seed):
    s = haar_random_pure(BipartiteDims(pa, pb), seed)
    top = schmidt_top(s)
    sv = np.linalg.svd(s.amplitudes.reshape(pa, pb), compute_uv=False)
    assert abs(top.lambda1 - sv[0]) < 1e-8
    assert 0 < top.lambda1 <= 1 + 1e-12
    assert abs(np.linalg.norm(top.a1) - 1) < 1e-12 and abs(np.linalg.norm(top.b1) - 1) < 1e-12
    # <a1 (x) b1 | s> = lambda1 up to phase
    assert abs(abs(np.vdot(np.kron(top.a1, top.b1), s.amplitudes)) - top.lambda1) < 1e-8


@pytest.mark.parametrize("method", ["dense", "power"])
def test_top_eigpair(method):
    lam, v = hermitian_top_eigpair(np.diag([3.0, 1.0, -2.0]), method)
    assert abs(lam - 3) < 1e-10
    assert abs(abs(v[0]) - 1) < 1e-8

    lam, v = hermitian_top_eigpair(np.eye(4) / 4, method)
    assert abs(lam - 0.25) < 1e-12
    assert np.linalg.norm(np.eye(4) / 4 @ v - lam * v) <= 1e-8

    rng = np.random.default_rng(9)
    g = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
    h = (g + g.conj().T) / 2
    lam, v = hermitian_top_eigpair(h, method, rng=1)
    assert abs(lam - np.linalg.eigvalsh(h)[-1]) < 1e-8
    assert np.linalg.norm(h @ v - lam * v) <= 1e-8


def test_top_eigpair_rejects_non_hermitian():
    with pytest.raises(InvalidArgumentError):
        hermitian_top_eigpair(np.array([[0, 1], [0, 0]]))


def test_haar_unitary_is_unitary():
    u = haar_random_unitary(5, 3)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(5), atol=1e-12)


def test_derive_seed_is_stable():
    assert derive_seed(7, 1, 2) == derive_seed(7, 1, 2)
    assert derive_seed(7, 1, 2) != derive_seed(7, 2, 1)
    assert derive_seed(7, 1) != derive_seed(8, 1)
