"""Generalized Gell-Mann basis and Bloch-vector features."""

from __future__ import annotations

import csv
import functools
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NumericalInconsistencyError
from .qcore import DensityMatrix


@dataclass(frozen=True, eq=False)
class GellMannBasis:
    """The p^2 - 1 generalized Gell-Mann matrices, stacked as (p^2-1, p, p).

    Order: symmetric S_ij for i < j lexicographic, antisymmetric A_ij in
    the same order, then diagonal D_k for k = 1 .. p-1.  Every matrix is
    traceless and Hermitian with tr(G_l G_m) = 2 delta_lm.
    """

    p: int
    matrices: np.ndarray

    def __len__(self):
        return self.matrices.shape[0]


@functools.lru_cache(maxsize=16)
def gellmann_basis(p: int) -> GellMannBasis:
    if p < 2:
        raise InvalidArgumentError(f"p must be >= 2, got {p}")
    pairs = [(i, j) for i in range(p) for j in range(i + 1, p)]
    mats = np.zeros((p * p - 1, p, p), dtype=np.complex128)
    n = 0
    for i, j in pairs:
        mats[n, i, j] = mats[n, j, i] = 1.0
        n += 1
    for i, j in pairs:
        mats[n, i, j] = -1j
        mats[n, j, i] = 1j
        n += 1
    for k in range(1, p):
        scale = np.sqrt(2.0 / (k * (k + 1)))
        mats[n, np.arange(k), np.arange(k)] = scale
        mats[n, k, k] = -k * scale
        n += 1
    mats.setflags(write=False)
    return GellMannBasis(p, mats)


@dataclass(frozen=True, eq=False)
class BlochVector:
    beta: np.ndarray
    p: int

    def __post_init__(self):
        beta = np.array(self.beta, dtype=np.float64, copy=True)
        if beta.shape != (self.p * self.p - 1,):
            raise InvalidArgumentError(f"Bloch vector of length {beta.shape} does not match p={self.p}")
        if not np.all(np.isfinite(beta)):
            raise InvalidArgumentError("Bloch vector has non-finite entries")
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)


def bloch_coefficients(matrices: np.ndarray, basis: GellMannBasis) -> np.ndarray:
    """beta_l = tr(G_l rho) for a stack of matrices (n, p, p) -> (n, p^2-1)."""
    matrices = np.asarray(matrices)
    if matrices.shape[-1] != basis.p:
        raise InvalidArgumentError(f"matrix size {matrices.shape[-1]} != basis p={basis.p}")
    # tr(G rho) = sum_ij G_ij rho_ji
    vals = np.einsum("lij,...ji->...l", basis.matrices, matrices)
    if np.max(np.abs(vals.imag), initial=0.0) > 1e-10:
        raise NumericalInconsistencyError("tr(G rho) has a non-negligible imaginary part")
    return vals.real


def bloch_vector(rho: DensityMatrix, basis: GellMannBasis | None = None) -> BlochVector:
    basis = basis or gellmann_basis(rho.p)
    if basis.p != rho.p:
        raise InvalidArgumentError(f"basis p={basis.p} does not match state p={rho.p}")
    return BlochVector(bloch_coefficients(rho.entries, basis), rho.p)


def feature_matrix(states, basis: GellMannBasis | None = None) -> np.ndarray:
    """Bloch vectors of many states as rows of an (n, p^2-1) array."""
    states = list(states)
    if not states:
        return np.zeros((0, 0))
    basis = basis or gellmann_basis(states[0].p)
    return bloch_coefficients(np.stack([s.entries for s in states]), basis)


def reconstruct(beta, basis: GellMannBasis) -> np.ndarray:
    """rho = I/p + sum_l (beta_l / 2) G_l; the 1/2 undoes tr(G_l G_l) = 2."""
    beta = beta.beta if isinstance(beta, BlochVector) else np.asarray(beta)
    return np.eye(basis.p) / basis.p + 0.5 * np.tensordot(beta, basis.matrices, axes=1)


BINARY_LABEL = {"SEP": -1, "PPT_ENT": 1, "NPPT_ENT": 1}


def write_features_csv(path, samples) -> None:
    """One row per sample: beta_1..beta_{p^2-1}, binary label, class name."""
    samples = list(samples)
    rows = feature_matrix([s.rho for s in samples]) if samples else np.zeros((0, 0))
    n_feat = rows.shape[1] if samples else 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"beta_{i + 1}" for i in range(n_feat)] + ["label", "class"])
        for s, row in zip(samples, rows):
            cls = s.label.value
            writer.writerow([f"{x:.17g}" for x in row] + [BINARY_LABEL[cls], cls])
