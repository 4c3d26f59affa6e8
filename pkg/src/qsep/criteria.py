"""Separability criteria and entanglement witnesses."""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateWitnessError, InvalidArgumentError, NumericalInconsistencyError
from .qcore import BipartiteDims, DensityMatrix, derive_seed, partial_transpose_matrix, separable_matrix

#: A witness must push tr(W rho) below -ENTANGLEMENT_MARGIN to certify rho.
ENTANGLEMENT_MARGIN = 1e-6
#: Slack allowed on tr(W sigma) >= 0 over validation samples.
SAMPLE_MARGIN = 1e-9
DEGENERATE_DISTANCE = 1e-8


class Verdict(enum.Enum):
    ENTANGLED = "ENTANGLED"
    SEPARABLE = "SEPARABLE"
    INCONCLUSIVE = "INCONCLUSIVE"


class Criterion(enum.Enum):
    PPT = "PPT"
    BALL = "BALL"
    WITNESS = "WITNESS"


@dataclass(frozen=True)
class CriterionVerdict:
    verdict: Verdict
    evidence: float
    criterion: Criterion

    def __post_init__(self):
        if not math.isfinite(self.evidence):
            raise NumericalInconsistencyError(f"non-finite evidence {self.evidence!r}")

    @property
    def entangled(self) -> bool:
        return self.verdict is Verdict.ENTANGLED


@dataclass(frozen=True, eq=False)
class Witness:
    """Hermitian operator W with tr(W sigma) >= 0 on separable sigma.

    ``source_distance`` is the Frobenius distance between the state and
    the separable approximation it was built from (0 when supplied by hand).
    """

    matrix: np.ndarray
    dims: BipartiteDims
    source_distance: float = 0.0

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128, copy=True)
        if m.shape != (self.dims.p, self.dims.p):
            raise InvalidArgumentError(f"witness shape {m.shape} does not match dims {self.dims}")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise InvalidArgumentError("witness is not Hermitian")
        if self.source_distance < 0:
            raise InvalidArgumentError("source_distance must be >= 0")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def conjugated(self, u: np.ndarray) -> "Witness":
        """The witness for U rho U^dagger, i.e. U W U^dagger."""
        m = u @ self.matrix @ u.conj().T
        return Witness(0.5 * (m + m.conj().T), self.dims, self.source_distance)


# ------------------------------------------------------------------ PPT


def min_pt_eigenvalue(m: np.ndarray, p_a: int, p_b: int) -> float:
    return float(np.linalg.eigvalsh(partial_transpose_matrix(m, p_a, p_b))[0])


def ppt_check(rho: DensityMatrix, tol: float = 1e-10) -> CriterionVerdict:
    """Peres-Horodecki test; evidence is the smallest eigenvalue of rho^{T_B}."""
    lam = min_pt_eigenvalue(rho.entries, rho.dims.p_a, rho.dims.p_b)
    if lam < -tol:
        verdict = Verdict.ENTANGLED
    elif rho.dims.ppt_is_exact:
        verdict = Verdict.SEPARABLE
    else:
        verdict = Verdict.INCONCLUSIVE
    return CriterionVerdict(verdict, lam, Criterion.PPT)


def separable_ball_check(rho: DensityMatrix) -> CriterionVerdict:
    """States with purity <= 1/(p-1) lie in the separable ball around I/p."""
    purity = rho.purity()
    if purity <= 1.0 / (rho.p - 1) + 1e-12:
        verdict = Verdict.SEPARABLE
    else:
        verdict = Verdict.INCONCLUSIVE
    return CriterionVerdict(verdict, purity, Criterion.BALL)


# -------------------------------------------------------------- witnesses


def witness_value(w: Witness, rho: DensityMatrix) -> float:
    """Re tr(W rho); the imaginary part must vanish to 1e-10."""
    if w.dims != rho.dims:
        raise InvalidArgumentError(f"witness dims {w.dims} != state dims {rho.dims}")
    # tr(W rho) = sum_ij W_ij rho_ji
    val = np.sum(w.matrix * rho.entries.T)
    if abs(val.imag) > 1e-10:
        raise NumericalInconsistencyError(f"tr(W rho) has imaginary part {val.imag:.3e}")
    return float(val.real)


def optimal_witness_matrix(rho: np.ndarray, rho_sep: np.ndarray) -> tuple[np.ndarray, float]:
    diff = rho_sep - rho
    dist = float(np.linalg.norm(diff))
    if dist <= DEGENERATE_DISTANCE:
        raise DegenerateWitnessError(
            f"|rho_sep - rho| = {dist:.3e}: no separating direction at this precision"
        )
    # real Hilbert-Schmidt inner product <A, B> = Re tr(A^dagger B)
    shift = float(np.vdot(rho_sep, diff).real)
    w = (diff - shift * np.eye(rho.shape[0])) / dist
    return 0.5 * (w + w.conj().T), dist


def optimal_witness(rho: DensityMatrix, rho_sep: DensityMatrix) -> Witness:
    """Witness whose hyperplane touches the separable set at ``rho_sep``.

    W = (rho_sep - rho - <rho_sep, rho_sep - rho> I) / |rho_sep - rho|, so
    tr(W rho_sep) = 0 and tr(W rho) = -|rho_sep - rho|.
    """
    if rho.dims != rho_sep.dims:
        raise InvalidArgumentError("rho and rho_sep have different dims")
    m, dist = optimal_witness_matrix(rho.entries, rho_sep.entries)
    return Witness(m, rho.dims, dist)


# ------------------------------------------------------------- validation


def hermitian_coords(m: np.ndarray) -> np.ndarray:
    """Real coordinates of Hermitian matrices with dot(c(A), c(B)) = tr(A B).

    Works on a single (p, p) matrix or a stack (..., p, p).
    """
    p = m.shape[-1]
    iu = np.triu_indices(p, 1)
    diag = np.diagonal(m, axis1=-2, axis2=-1).real
    upper = m[..., iu[0], iu[1]] * np.sqrt(2.0)
    return np.concatenate([diag, upper.real, upper.imag], axis=-1)


class SeparableBank:
    """A fixed set of random separable states used to test witnesses.

    Sample ``i`` is drawn from its own generator seeded with
    ``derive_seed(seed, i)``; its mixing count ``r`` is uniform in
    ``[1, r_max]`` (``r_max`` defaults to p^2).  States are kept only
    through :func:`hermitian_coords`, so evaluating tr(W sigma) over the
    whole bank is a single matrix-vector product.
    """

    def __init__(self, dims: BipartiteDims, n: int = 10_000, seed: int = 0, r_max: int | None = None):
        if n < 1:
            raise InvalidArgumentError("bank needs at least one sample")
        self.dims = dims
        self.n = int(n)
        self.seed = int(seed)
        self.r_max = int(r_max or dims.p**2)
        p = dims.p
        coords = np.empty((self.n, p * p))
        for i in range(self.n):
            rng = np.random.default_rng(derive_seed(self.seed, i))
            r = int(rng.integers(1, self.r_max + 1))
            coords[i] = hermitian_coords(separable_matrix(dims.p_a, dims.p_b, r, rng))
        coords.setflags(write=False)
        self.coords = coords

    def values(self, w) -> np.ndarray:
        m = w.matrix if isinstance(w, Witness) else np.asarray(w)
        return self.coords @ hermitian_coords(m)

    @classmethod
    @functools.lru_cache(maxsize=4)
    def cached(cls, dims: BipartiteDims, n: int = 10_000, seed: int = 0, r_max: int | None = None):
        return cls(dims, n, seed, r_max)


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    sample_min: float
    sample_mean: float
    target_value: float
    n_samples: int
    n_violations: int

    def __bool__(self):
        return self.passed


def validate_witness(
    w: Witness,
    rho: DensityMatrix,
    n_samples: int = 10_000,
    margin: float = SAMPLE_MARGIN,
    seed: int = 0,
    entanglement_margin: float = ENTANGLEMENT_MARGIN,
    bank: SeparableBank | None = None,
) -> ValidationReport:
    """Check W numerically: nonnegative on a separable sample, negative on ``rho``.

    The separable sample is the bank for ``(rho.dims, n_samples, seed)``;
    banks are cached so repeated validations reuse the same states.
    """
    if w.dims != rho.dims:
        raise InvalidArgumentError(f"witness dims {w.dims} != state dims {rho.dims}")
    if bank is None:
        bank = SeparableBank.cached(rho.dims, n_samples, seed)
    elif bank.dims != rho.dims:
        raise InvalidArgumentError("bank dims do not match the state")
    vals = bank.values(w)
    target = witness_value(w, rho)
    n_bad = int(np.count_nonzero(vals < -margin))
    passed = n_bad == 0 and target < -entanglement_margin
    return ValidationReport(
        passed=passed,
        sample_min=float(vals.min()),
        sample_mean=float(vals.mean()),
        target_value=target,
        n_samples=bank.n,
        n_violations=n_bad,
    )
