"""Frank-Wolfe search for the nearest separable state.

The linear subproblem over product states is approximated in two cheap
steps: the top eigenvector of ``rho - rho_t`` followed by its leading
Schmidt pair.  Iterates are kept both as a dense matrix and as the list
of product atoms that certifies their separability.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .qcore import DensityMatrix, _haar_vectors, as_rng, schmidt_top_vectors

PRUNE_WEIGHT = 1e-14


class StepRule(enum.Enum):
    CLASSIC = "classic"  # alpha_t = 2 / (t + 2)


@dataclass(frozen=True)
class FwConfig:
    max_iters: int = 1000
    gap_tol: float = 1e-7
    track_trajectory: bool = False
    step_rule: StepRule = StepRule.CLASSIC
    #: Optional fixed starting product state ``(a, b)``; random when None.
    initial_product: tuple | None = field(default=None, compare=False)
    #: Re-validate every iterate as a density matrix (slow).
    debug: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidArgumentError("max_iters must be >= 1")
        if self.gap_tol < 0:
            raise InvalidArgumentError("gap_tol must be >= 0")
        if not isinstance(self.step_rule, StepRule):
            object.__setattr__(self, "step_rule", StepRule(self.step_rule))


@dataclass(frozen=True, eq=False)
class FwResult:
    nearest: DensityMatrix
    distance: float
    iterations_run: int
    final_gap: float
    trajectory: list | None
    weights: np.ndarray
    atoms_a: np.ndarray
    atoms_b: np.ndarray

    @property
    def decomposition(self) -> list[tuple[float, np.ndarray, np.ndarray]]:
        return list(zip(self.weights.tolist(), self.atoms_a, self.atoms_b))

    def reconstruct(self) -> np.ndarray:
        """sum_j w_j |a_j><a_j| (x) |b_j><b_j| from the stored atoms."""
        v = np.einsum("ja,jb->jab", self.atoms_a, self.atoms_b).reshape(len(self.weights), -1)
        return (v.T * self.weights) @ v.conj()


def _unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128)
    return v / np.linalg.norm(v)


def fw_nearest_separable(rho: DensityMatrix, config: FwConfig | None = None, rng=None) -> FwResult:
    """Approximate the separable state closest to ``rho`` in Frobenius norm.

    Starts from a random product pure state (or ``config.initial_product``)
    and runs ``config.max_iters`` Frank-Wolfe steps with step size
    2/(t+2), stopping early once the gap <2(rho_t - rho), rho_t - s> of the
    chosen atom falls in ``[0, gap_tol]``.  A negative gap means the
    approximate subproblem missed a descent atom, so it never stops the run.
    """
    config = config or FwConfig()
    rng = as_rng(rng)
    dims = rho.dims
    p_a, p_b = dims.p_a, dims.p_b
    target = rho.entries

    n_max = config.max_iters + 1
    atoms_a = np.empty((n_max, p_a), dtype=np.complex128)
    atoms_b = np.empty((n_max, p_b), dtype=np.complex128)
    weights = np.zeros(n_max)

    if config.initial_product is not None:
        a0, b0 = (_unit(x) for x in config.initial_product)
        if a0.shape != (p_a,) or b0.shape != (p_b,):
            raise InvalidArgumentError("initial_product does not match the state dims")
    else:
        a0 = _haar_vectors(1, p_a, rng)[0]
        b0 = _haar_vectors(1, p_b, rng)[0]
    atoms_a[0], atoms_b[0], weights[0] = a0, b0, 1.0
    s = np.kron(a0, b0)
    x = np.outer(s, s.conj())
    n_atoms = 1

    trajectory = [(0, float(np.linalg.norm(x - target)))] if config.track_trajectory else None
    gap = float("nan")
    t = 0
    while t < config.max_iters:
        diff = target - x
        _, vecs = np.linalg.eigh(diff)
        _, a, b = schmidt_top_vectors(vecs[:, -1], p_a, p_b)
        s = np.kron(a, b)
        atom = np.outer(s, s.conj())
        # <2(x - rho), x - atom>, real Hilbert-Schmidt product
        gap = 2.0 * float(np.vdot(-diff, x - atom).real)
        if 0.0 <= gap <= config.gap_tol:
            break
        alpha = 2.0 / (t + 2.0)
        x = (1.0 - alpha) * x + alpha * atom
        weights[:n_atoms] *= 1.0 - alpha
        atoms_a[n_atoms], atoms_b[n_atoms], weights[n_atoms] = a, b, alpha
        n_atoms += 1
        t += 1
        if trajectory is not None:
            trajectory.append((t, float(np.linalg.norm(x - target))))
        if config.debug:
            DensityMatrix(0.5 * (x + x.conj().T), dims)

    keep = weights[:n_atoms] > PRUNE_WEIGHT
    w = weights[:n_atoms][keep]
    w = w / w.sum()
    x = 0.5 * (x + x.conj().T)
    nearest = DensityMatrix(x / np.trace(x).real, dims)
    return FwResult(
        nearest=nearest,
        distance=float(np.linalg.norm(nearest.entries - target)),
        iterations_run=t,
        final_gap=gap,
        trajectory=trajectory,
        weights=w,
        atoms_a=atoms_a[:n_atoms][keep].copy(),
        atoms_b=atoms_b[:n_atoms][keep].copy(),
    )


@dataclass(frozen=True)
class CurvePoint:
    class_tag: str
    iteration: int
    mean_distance: float
    std_distance: float


def fw_error_curve(inputs, config: FwConfig, rng=None, class_tag: str = "") -> list[CurvePoint]:
    """Per-iteration mean and std of the FW distance across ``inputs``.

    Runs that stop early are padded with their final distance so every
    iteration index aggregates over all inputs.
    """
    inputs = list(inputs)
    if not inputs:
        raise InvalidArgumentError("fw_error_curve needs at least one input")
    if not config.track_trajectory:
        raise InvalidArgumentError("fw_error_curve requires config.track_trajectory=True")
    dims = inputs[0].dims
    if any(r.dims != dims for r in inputs):
        raise InvalidArgumentError("all inputs must share the same dims")
    rng = as_rng(rng)
    n_points = config.max_iters + 1
    table = np.empty((len(inputs), n_points))
    for i, rho in enumerate(inputs):
        dist = [d for _, d in fw_nearest_separable(rho, config, rng).trajectory]
        table[i, : len(dist)] = dist
        table[i, len(dist) :] = dist[-1]
    mean = table.mean(axis=0)
    std = table.std(axis=0)
    return [CurvePoint(class_tag, t, float(mean[t]), float(std[t])) for t in range(n_points)]
