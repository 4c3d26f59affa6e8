"""Dense complex linear algebra for bipartite states.

Everything here works on plain ``numpy`` arrays underneath; the small
frozen dataclasses only carry the bipartite split and validate the
physical invariants once, at construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

#: Smallest eigenvalue tolerated for a matrix to count as PSD.
PSD_TOL = 1e-10
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
NORM_TOL = 1e-12


def as_rng(rng=None) -> np.random.Generator:
    """Coerce an int seed, ``SeedSequence`` or ``Generator`` into a ``Generator``."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def derive_seed(master: int, *keys: int) -> int:
    """64-bit seed for the item addressed by ``keys`` under ``master``.

    Uses ``SeedSequence`` spawn keys, so the value depends only on
    ``(master, keys)`` and never on how many other items were drawn.
    """
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class BipartiteDims:
    p_a: int
    p_b: int

    def __post_init__(self):
        for name in ("p_a", "p_b"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise InvalidArgumentError(f"{name} must be an integer, got {value!r}")
            if value < 2:
                raise InvalidArgumentError(f"{name} must be >= 2, got {value}")
            object.__setattr__(self, name, int(value))

    @property
    def p(self) -> int:
        return self.p_a * self.p_b

    @property
    def ppt_is_exact(self) -> bool:
        """True for 2x2, 2x3 and 3x2, where PPT is equivalent to separability."""
        return self.p in (4, 6)

    def __str__(self):
        return f"{self.p_a}x{self.p_b}"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    dims: BipartiteDims

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.shape != (self.dims.p,):
            raise InvalidArgumentError(
                f"expected {self.dims.p} amplitudes for dims {self.dims}, got shape {amps.shape}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidArgumentError(f"state is not normalized (norm={norm!r})")
        object.__setattr__(self, "amplitudes", amps)

    def projector(self) -> "DensityMatrix":
        v = self.amplitudes
        return DensityMatrix(_hermitize(np.outer(v, v.conj())), self.dims)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A p x p Hermitian, unit-trace, PSD matrix on a bipartite space.

    Construction validates the invariants (Hermitian to 1e-12, trace to
    1e-12, smallest eigenvalue >= -1e-10) and raises
    :class:`InvalidArgumentError` otherwise.  Entries are stored read-only.
    """

    entries: np.ndarray
    dims: BipartiteDims

    def __post_init__(self):
        m = _frozen(self.entries)
        p = self.dims.p
        if m.shape != (p, p):
            raise InvalidArgumentError(f"expected a {p}x{p} matrix for dims {self.dims}, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidArgumentError("matrix has non-finite entries")
        herm_err = np.max(np.abs(m - m.conj().T))
        if herm_err > HERMITIAN_TOL:
            raise InvalidArgumentError(f"matrix is not Hermitian (max deviation {herm_err:.3e})")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidArgumentError(f"trace is {tr!r}, expected 1")
        lam_min = np.linalg.eigvalsh(m)[0]
        if lam_min < -PSD_TOL:
            raise InvalidArgumentError(f"matrix is not PSD (min eigenvalue {lam_min:.3e})")
        object.__setattr__(self, "entries", m)

    @property
    def p(self) -> int:
        return self.dims.p

    def purity(self) -> float:
        m = self.entries
        return float(np.vdot(m, m).real)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    @classmethod
    def maximally_mixed(cls, dims: BipartiteDims) -> "DensityMatrix":
        return cls(np.eye(dims.p) / dims.p, dims)

    @classmethod
    def from_array(cls, m, dims: BipartiteDims) -> "DensityMatrix":
        """Build from a matrix that is a density matrix up to rounding.

        The input is symmetrized and its trace renormalized before the
        usual validation runs, so gross violations are still rejected.
        """
        m = _hermitize(np.asarray(m, dtype=np.complex128))
        return cls(m / np.trace(m).real, dims)


@dataclass(frozen=True, eq=False)
class SchmidtTop:
    lambda1: float
    a1: np.ndarray
    b1: np.ndarray


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def product_state(a, b, dims: BipartiteDims) -> PureState:
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    return PureState(np.kron(a / np.linalg.norm(a), b / np.linalg.norm(b)), dims)


def bell_state(dims: BipartiteDims | None = None) -> DensityMatrix:
    """The maximally entangled state sum_i |ii>/sqrt(d) on a d x d system (default 2x2)."""
    dims = dims or BipartiteDims(2, 2)
    if dims.p_a != dims.p_b:
        raise InvalidArgumentError("a maximally entangled state needs p_a == p_b")
    d = dims.p_a
    v = np.zeros(dims.p, dtype=np.complex128)
    v[:: d + 1] = 1 / np.sqrt(d)
    return PureState(v, dims).projector()


# ---------------------------------------------------------------- sampling


def _haar_vectors(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """n independent Haar-random unit vectors in C^d, shape (n, d)."""
    g = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def haar_random_vector(d: int, rng=None) -> np.ndarray:
    return _haar_vectors(1, d, as_rng(rng))[0]


def haar_random_pure(dims: BipartiteDims, rng=None) -> PureState:
    return PureState(haar_random_vector(dims.p, rng), dims)


def mixture_matrix(d: int, k: int, rng=None) -> np.ndarray:
    """(1/k) sum of k Haar-random projectors in C^d, as a raw array."""
    if k < 1:
        raise InvalidArgumentError(f"k must be >= 1, got {k}")
    v = _haar_vectors(int(k), d, as_rng(rng))
    return _hermitize(v.T @ v.conj()) / k


def random_density_mixture(dims: BipartiteDims, k: int, rng=None) -> DensityMatrix:
    """Uniform mixture of ``k`` independent Haar-random pure states."""
    return DensityMatrix(mixture_matrix(dims.p, k, rng), dims)


def _batched_mixtures(n: int, d: int, k: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, k, d)) + 1j * rng.standard_normal((n, k, d))
    g /= np.linalg.norm(g, axis=2, keepdims=True)
    return np.swapaxes(g, 1, 2) @ g.conj() / k


def separable_matrix(
    p_a: int, p_b: int, r: int, rng=None, factor_k: int | tuple[int, int] | None = None
) -> np.ndarray:
    """Raw array of sum_j q_j A_j (x) B_j with q uniform on the simplex.

    ``factor_k`` is the number of pure states mixed into each local factor;
    the default mixes ``p_a`` (resp. ``p_b``) states, giving full-rank factors.
    """
    if r < 1:
        raise InvalidArgumentError(f"r must be >= 1, got {r}")
    rng = as_rng(rng)
    if factor_k is None:
        k_a, k_b = p_a, p_b
    elif isinstance(factor_k, tuple):
        k_a, k_b = factor_k
    else:
        k_a = k_b = int(factor_k)
    q = rng.standard_exponential(r)
    q /= q.sum()
    a = _batched_mixtures(r, p_a, k_a, rng).reshape(r, p_a * p_a)
    b = _batched_mixtures(r, p_b, k_b, rng).reshape(r, p_b * p_b)
    m = (q[:, None] * a).T @ b
    m = m.reshape(p_a, p_a, p_b, p_b).transpose(0, 2, 1, 3).reshape(p_a * p_b, p_a * p_b)
    m = _hermitize(m)
    return m / np.trace(m).real


def random_separable(
    dims: BipartiteDims, r: int, rng=None, factor_k: int | tuple[int, int] | None = None
) -> DensityMatrix:
    """A separable state built as a convex combination of ``r`` product states."""
    return DensityMatrix(separable_matrix(dims.p_a, dims.p_b, r, rng, factor_k), dims)


def haar_random_unitary(d: int, rng=None) -> np.ndarray:
    """Haar unitary from the QR decomposition of a complex Ginibre matrix."""
    rng = as_rng(rng)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


# ------------------------------------------------------------- operations


def partial_transpose_matrix(m: np.ndarray, p_a: int, p_b: int) -> np.ndarray:
    """Transpose every p_b x p_b block of ``m`` in place of the block."""
    return m.reshape(p_a, p_b, p_a, p_b).transpose(0, 3, 2, 1).reshape(p_a * p_b, p_a * p_b)


def partial_transpose_b(rho: DensityMatrix) -> np.ndarray:
    return partial_transpose_matrix(rho.entries, rho.dims.p_a, rho.dims.p_b).copy()


def schmidt_top_vectors(s: np.ndarray, p_a: int, p_b: int) -> tuple[float, np.ndarray, np.ndarray]:
    u, sv, vh = np.linalg.svd(s.reshape(p_a, p_b))
    return float(sv[0]), u[:, 0], vh[0]


def schmidt_top(state: PureState) -> SchmidtTop:
    """Dominant Schmidt triple; ``kron(a1, b1)`` is the closest product state."""
    lam, a, b = schmidt_top_vectors(state.amplitudes, state.dims.p_a, state.dims.p_b)
    return SchmidtTop(lam, a, b)


def hermitian_top_eigpair(
    m, method: str = "dense", tol: float = 1e-10, max_iter: int = 10_000, rng=None
) -> tuple[float, np.ndarray]:
    """Algebraically largest eigenvalue of a Hermitian matrix and a unit eigenvector.

    ``method="dense"`` runs a full ``eigh``; ``method="power"`` runs power
    iteration on ``m + c I`` with ``c`` large enough to make the shifted
    matrix positive definite.
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-10:
        raise InvalidArgumentError("matrix is not Hermitian")
    if method == "dense":
        w, v = np.linalg.eigh(m)
        return float(w[-1]), v[:, -1]
    if method != "power":
        raise InvalidArgumentError(f"unknown method {method!r}")

    p = m.shape[0]
    # Gershgorin bound on the spectral radius; at least p as for rho - sigma
    c = max(float(p), float(np.max(np.sum(np.abs(m), axis=1))))
    shifted = m + c * np.eye(p)
    x = haar_random_vector(p, rng if rng is not None else 0)
    lam = 0.0
    for _ in range(max_iter):
        y = shifted @ x
        x_new = y / np.linalg.norm(y)
        lam = float(np.vdot(x_new, m @ x_new).real)
        if np.linalg.norm(m @ x_new - lam * x_new) <= tol:
            x = x_new
            break
        x = x_new
    return lam, x
