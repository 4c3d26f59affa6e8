import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsep.datagen import generate_nppt, generate_sep
from qsep.errors import InvalidArgumentError
from qsep.features import (
    BlochVector,
    bloch_coefficients,
    bloch_vector,
    feature_matrix,
    gellmann_basis,
    reconstruct,
    write_features_csv,
)
from qsep.qcore import BipartiteDims, DensityMatrix, mixture_matrix

D33 = BipartiteDims(3, 3)


def test_pauli_case():
    g = gellmann_basis(2).matrices
    np.testing.assert_array_equal(g[0], [[0, 1], [1, 0]])
    np.testing.assert_array_equal(g[1], [[0, -1j], [1j, 0]])
    np.testing.assert_array_equal(g[2], [[1, 0], [0, -1]])


def test_qutrit_diagonals():
    g = gellmann_basis(3).matrices
    assert g.shape == (8, 3, 3)
    np.testing.assert_allclose(g[6], np.diag([1, -1, 0]), atol=1e-15)
    np.testing.assert_allclose(g[7], np.diag([1, 1, -2]) / np.sqrt(3), atol=1e-15)


@pytest.mark.parametrize("p", [2, 3, 4, 9])
def test_basis_gram(p):
    g = gellmann_basis(p).matrices
    assert g.shape[0] == p * p - 1
    gram = np.einsum("aij,bji->ab", g, g)
    np.testing.assert_allclose(gram, 2 * np.eye(p * p - 1), atol=1e-12)
    np.testing.assert_allclose(np.trace(g, axis1=1, axis2=2), 0, atol=1e-12)
    np.testing.assert_allclose(g, np.conj(np.swapaxes(g, 1, 2)), atol=1e-12)


def test_basis_rejects_small_p():
    with pytest.raises(InvalidArgumentError):
        gellmann_basis(1)


def test_bloch_examples():
    np.testing.assert_allclose(bloch_vector(DensityMatrix.maximally_mixed(D33)).beta, 0, atol=1e-15)
    ket0 = np.diag([1.0, 0.0])
    np.testing.assert_allclose(bloch_coefficients(ket0, gellmann_basis(2)), [0, 0, 1], atol=1e-15)
    with pytest.raises(InvalidArgumentError):
        bloch_vector(DensityMatrix.maximally_mixed(D33), gellmann_basis(4))
    with pytest.raises(InvalidArgumentError):
        BlochVector(np.zeros(5), 3)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_round_trip_and_norm(k, seed):
    rho = DensityMatrix(mixture_matrix(9, k, seed), D33)
    basis = gellmann_basis(9)
    beta = bloch_vector(rho, basis)
    assert np.linalg.norm(reconstruct(beta, basis) - rho.entries) <= 1e-10
    # |beta|^2 = 2 (purity - 1/p)
    np.testing.assert_allclose(beta.beta @ beta.beta, 2 * (rho.purity() - 1 / 9), atol=1e-10)


def test_feature_matrix_and_csv(tmp_path):
    samples = generate_sep(D33, 3, 1) + generate_nppt(D33, 2, 1)
    x = feature_matrix([s.rho for s in samples])
    assert x.shape == (5, 80) and x.dtype == np.float64
    path = tmp_path / "f.csv"
    write_features_csv(path, samples)
    rows = list(csv.reader(open(path)))
    assert rows[0][:2] == ["beta_1", "beta_2"] and rows[0][-2:] == ["label", "class"]
    assert [r[-2] for r in rows[1:]] == ["-1", "-1", "-1", "1", "1"]
    np.testing.assert_array_equal(np.array([[float(v) for v in r[:-2]] for r in rows[1:]]), x)
