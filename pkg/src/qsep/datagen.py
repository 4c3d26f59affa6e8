"""Labelled dataset generation and PPT-entangled data augmentation.

Three classes are produced:

* ``SEP``      separable by construction (convex mixtures of product states);
* ``NPPT_ENT`` random mixtures whose partial transpose has a negative eigenvalue;
* ``PPT_ENT``  PPT random mixtures whose Frank-Wolfe optimal witness holds up
  against a bank of random separable states.

Every sample draws from its own generator, seeded by
``derive_seed(master_seed, class_code, index)``, so a dataset is a pure
function of its configuration and master seed.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .criteria import (
    ENTANGLEMENT_MARGIN,
    SeparableBank,
    Verdict,
    Witness,
    min_pt_eigenvalue,
    optimal_witness,
    ppt_check,
    validate_witness,
    witness_value,
)
from .errors import (
    DegenerateWitnessError,
    GeneratorStarvedError,
    InvalidArgumentError,
    RegionEmptyError,
)
from .fw import FwConfig, fw_nearest_separable
from .qcore import (
    BipartiteDims,
    DensityMatrix,
    _hermitize,
    as_rng,
    derive_seed,
    haar_random_unitary,
    mixture_matrix,
    separable_matrix,
)

log = logging.getLogger(__name__)

REGION_GUARD = 1e-6

# spawn-key namespaces for seed derivation
SEED_SEP, SEED_NPPT, SEED_PPT, SEED_AUGMENT, SEED_VALIDATION, SEED_PPT_ANY = 1, 2, 3, 4, 5, 6


class ClassLabel(enum.Enum):
    SEP = "SEP"
    PPT_ENT = "PPT_ENT"
    NPPT_ENT = "NPPT_ENT"

    @property
    def binary(self) -> int:
        """-1 for separable, +1 for entangled."""
        return -1 if self is ClassLabel.SEP else 1


class GeneratorKind(enum.Enum):
    MIXTURE = "MIXTURE"
    SEPARABLE_CONSTRUCTION = "SEPARABLE_CONSTRUCTION"
    AUGMENT_REGION = "AUGMENT_REGION"
    AUGMENT_UNITARY = "AUGMENT_UNITARY"
    FW_DECOMPOSITION = "FW_DECOMPOSITION"


@dataclass(frozen=True)
class Provenance:
    seed: int
    generator: GeneratorKind
    k_or_r: int
    parent_id: str | None = None
    #: Seed of the separable bank a PPT_ENT witness was validated against.
    validation_seed: int | None = None


@dataclass(frozen=True, eq=False)
class LabeledSample:
    id: str
    rho: DensityMatrix
    label: ClassLabel
    provenance: Provenance
    witness: Witness | None = None

    def __post_init__(self):
        if (self.witness is not None) != (self.label is ClassLabel.PPT_ENT):
            raise InvalidArgumentError(f"{self.id}: a witness is required exactly for PPT_ENT samples")
        if self.witness is not None and self.witness.dims != self.rho.dims:
            raise InvalidArgumentError(f"{self.id}: witness dims do not match the state")

    @property
    def dims(self) -> BipartiteDims:
        return self.rho.dims


@dataclass(frozen=True)
class GenConfig:
    """Knobs of the dataset generators.  ``None`` ranges resolve per dims.

    Defaults: SEP mixing count ``r`` uniform in ``[1, p^2]``; NPPT mixture
    size ``k`` and PPT_ENT candidate ``k`` both in ``[p, 4p]`` so the two
    entangled classes come from one mixture ensemble split by the PPT test.
    """

    sep_r_range: tuple[int, int] | None = None
    nppt_k_range: tuple[int, int] | None = None
    ppt_k_range: tuple[int, int] | None = None
    noise_k_range: tuple[int, int] | None = None
    fw: FwConfig = field(default_factory=FwConfig)
    n_validation: int = 10_000
    #: Give up after this many consecutive rejected draws (rate < 1/window).
    starve_window: int = 10_000
    #: ...or after this many consecutive PPT candidates failing validation.
    starve_window_validated: int = 500

    def resolve(self, dims: BipartiteDims) -> "GenConfig":
        p = dims.p
        return replace(
            self,
            sep_r_range=self.sep_r_range or (1, p * p),
            nppt_k_range=self.nppt_k_range or (p, 4 * p),
            ppt_k_range=self.ppt_k_range or (p, 4 * p),
            noise_k_range=self.noise_k_range or (1, p),
        )


def _check_range(name: str, rng_: tuple[int, int], lo: int, hi: int | None = None) -> tuple[int, int]:
    a, b = int(rng_[0]), int(rng_[1])
    if a < lo or b < a or (hi is not None and b > hi):
        bound = f"[{lo}, {hi}]" if hi is not None else f">= {lo}"
        raise InvalidArgumentError(f"{name}={rng_} must be a nonempty interval within {bound}")
    return a, b


def _check_n(n: int, name: str = "n") -> int:
    if int(n) < 1:
        raise InvalidArgumentError(f"{name} must be >= 1, got {n}")
    return int(n)


def validation_seed_for(seed: int) -> int:
    return derive_seed(seed, SEED_VALIDATION)


# ----------------------------------------------------------------- classes


def generate_sep(
    dims: BipartiteDims, n: int, seed: int = 0, config: GenConfig | None = None, start: int = 0
) -> list[LabeledSample]:
    """Separable states sum_j q_j A_j (x) B_j with ``r`` drawn from ``sep_r_range``.

    Samples ``start .. start + n - 1`` of the stream defined by ``seed``.
    """
    n = _check_n(n)
    cfg = (config or GenConfig()).resolve(dims)
    r_lo, r_hi = _check_range("sep_r_range", cfg.sep_r_range, 1)
    out = []
    for i in range(start, start + n):
        s = derive_seed(seed, SEED_SEP, i)
        rng = np.random.default_rng(s)
        r = int(rng.integers(r_lo, r_hi + 1))
        rho = DensityMatrix(separable_matrix(dims.p_a, dims.p_b, r, rng), dims)
        prov = Provenance(s, GeneratorKind.SEPARABLE_CONSTRUCTION, r)
        out.append(LabeledSample(f"SEP-{i:06d}", rho, ClassLabel.SEP, prov))
    return out


class _Starvation:
    """Counts consecutive rejections and raises once a window is exhausted."""

    def __init__(self, what: str, window: int, window_validated: int | None = None):
        self.what = what
        self.window = window
        self.window_validated = window_validated
        self.since_accept = 0
        self.validated_since_accept = 0
        self.stats = {"draws": 0, "accepted": 0, "ppt_rejected": 0, "ppt_candidates": 0,
                      "validation_failures": 0, "degenerate": 0}

    def reject(self, reason: str | None = None, validated: bool = False):
        self.stats["draws"] += 1
        if reason:
            self.stats[reason] += 1
        self.since_accept += 1
        if validated:
            self.validated_since_accept += 1
        starved = self.since_accept >= self.window or (
            self.window_validated is not None and self.validated_since_accept >= self.window_validated
        )
        if starved:
            diag = dict(self.stats)
            diag["ppt_rate"] = diag["ppt_candidates"] / max(diag["draws"], 1)
            diag["validation_failure_rate"] = diag["validation_failures"] / max(diag["ppt_candidates"], 1)
            raise GeneratorStarvedError(
                f"{self.what}: no acceptance in the last {self.since_accept} draws "
                f"({self.validated_since_accept} validated candidates); diagnostics: {diag}",
                diag,
            )

    def accept(self):
        self.stats["draws"] += 1
        self.stats["accepted"] += 1
        self.since_accept = 0
        self.validated_since_accept = 0


def generate_nppt(
    dims: BipartiteDims,
    n: int,
    seed: int = 0,
    config: GenConfig | None = None,
    k_range=None,
    start: int = 0,
    diagnostics: dict | None = None,
) -> list[LabeledSample]:
    """Random k-mixtures kept only when their partial transpose is not PSD.

    ``diagnostics``, when given, is updated with the draw counters.
    """
    n = _check_n(n)
    cfg = (config or GenConfig()).resolve(dims)
    k_lo, k_hi = _check_range("k_range", k_range or cfg.nppt_k_range, 1, 4 * dims.p)
    guard = _Starvation("generate_nppt", cfg.starve_window)
    out = []
    for i in range(start, start + n):
        s = derive_seed(seed, SEED_NPPT, i)
        rng = np.random.default_rng(s)
        while True:
            k = int(rng.integers(k_lo, k_hi + 1))
            m = mixture_matrix(dims.p, k, rng)
            if min_pt_eigenvalue(m, dims.p_a, dims.p_b) < -1e-10:
                break
            guard.reject("ppt_rejected")
        guard.accept()
        rho = DensityMatrix(m, dims)
        out.append(LabeledSample(f"NPPT_ENT-{i:06d}", rho, ClassLabel.NPPT_ENT,
                                 Provenance(s, GeneratorKind.MIXTURE, k)))
    if diagnostics is not None:
        diagnostics.update(guard.stats)
    return out


def generate_ppt(dims: BipartiteDims, n: int, seed: int = 0, k_range=None, starve_window: int = 10_000):
    """Unlabelled random PPT mixtures (separable or not), with their ``k``.

    This is the "PPT" population of the FW error curves.
    """
    n = _check_n(n)
    k_lo, k_hi = _check_range("k_range", k_range or (dims.p, 4 * dims.p), 1)
    guard = _Starvation("generate_ppt", starve_window)
    out = []
    for i in range(n):
        rng = np.random.default_rng(derive_seed(seed, SEED_PPT_ANY, i))
        while True:
            k = int(rng.integers(k_lo, k_hi + 1))
            m = mixture_matrix(dims.p, k, rng)
            if min_pt_eigenvalue(m, dims.p_a, dims.p_b) >= -1e-10:
                break
            guard.reject()
        guard.accept()
        out.append((DensityMatrix(m, dims), k))
    return out


def generate_ppt_ent(
    dims: BipartiteDims,
    n: int,
    seed: int = 0,
    config: GenConfig | None = None,
    k_range=None,
    validation_seed: int | None = None,
    progress=None,
    start: int = 0,
    diagnostics: dict | None = None,
) -> list[LabeledSample]:
    """PPT random mixtures certified entangled by a validated optimal witness.

    Each candidate is drawn as a ``k``-mixture; PPT candidates whose dims
    leave separability open get a Frank-Wolfe nearest separable state, the
    optimal witness built from it, and a check of that witness against a
    bank of ``config.n_validation`` separable states.  Candidates whose
    witness passes become ``PPT_ENT`` samples carrying the witness.

    Raises :class:`GeneratorStarvedError` when acceptances dry up; at
    2x2 and 2x3 this always happens, since every PPT state is separable.
    """
    n = _check_n(n)
    cfg = (config or GenConfig()).resolve(dims)
    k_lo, k_hi = _check_range("k_range", k_range or cfg.ppt_k_range, 1)
    vseed = validation_seed_for(seed) if validation_seed is None else int(validation_seed)
    guard = _Starvation("generate_ppt_ent", cfg.starve_window, cfg.starve_window_validated)
    bank = None
    out = []
    for i in range(start, start + n):
        s = derive_seed(seed, SEED_PPT, i)
        rng = np.random.default_rng(s)
        while True:
            k = int(rng.integers(k_lo, k_hi + 1))
            m = mixture_matrix(dims.p, k, rng)
            rho = DensityMatrix(m, dims)
            if ppt_check(rho).verdict is not Verdict.INCONCLUSIVE:
                guard.reject("ppt_rejected")
                continue
            guard.stats["ppt_candidates"] += 1
            fw = fw_nearest_separable(rho, cfg.fw, rng)
            try:
                w = optimal_witness(rho, fw.nearest)
            except DegenerateWitnessError:
                guard.reject("degenerate", validated=True)
                continue
            if bank is None:
                bank = SeparableBank.cached(dims, cfg.n_validation, vseed)
            if validate_witness(w, rho, bank=bank):
                break
            guard.reject("validation_failures", validated=True)
        guard.accept()
        prov = Provenance(s, GeneratorKind.MIXTURE, k, validation_seed=vseed)
        out.append(LabeledSample(f"PPT_ENT-{i:06d}", rho, ClassLabel.PPT_ENT, prov, w))
        if progress is not None:
            progress(len(out), n)
    log.info("generate_ppt_ent %s: %s", dims, guard.stats)
    if diagnostics is not None:
        diagnostics.update(guard.stats)
    return out


# ------------------------------------------------------------ augmentation


@dataclass(frozen=True, eq=False)
class RobustnessRegion:
    """Noisy neighbourhood of a PPT entangled state used for augmentation.

    Members are (1 - mu)(nu rho + (1 - nu) I/p) + mu sigma with nu in
    (nu_lower, 1), mu in [0, g(nu)) and sigma any density matrix.  The
    stored witness is rescaled to unit trace, which the closed forms for
    the bounds assume.  The bounds are not tight enough to exclude every
    sigma, so :func:`sample_in_region` re-verifies each draw.
    """

    rho: DensityMatrix
    witness: Witness
    lambda_rho: float
    nu_lower: float
    num_pos: int
    trace_pos: float

    @classmethod
    def from_witness(cls, rho: DensityMatrix, witness: Witness) -> "RobustnessRegion":
        tr = float(np.trace(witness.matrix).real)
        if tr <= 0:
            raise RegionEmptyError(f"witness trace {tr:.3e} is not positive; cannot normalize")
        w = Witness(witness.matrix / tr, witness.dims, witness.source_distance)
        lam = -witness_value(w, rho)
        if lam <= 0:
            raise RegionEmptyError(f"witness does not detect the state (tr(W rho) = {-lam:.3e})")
        ev = np.linalg.eigvalsh(w.matrix)
        pos = ev[ev > 0]
        if pos.size == 0:
            raise RegionEmptyError("witness has no positive part")
        return cls(rho, w, lam, 1.0 / (1.0 + lam * rho.p), int(pos.size), float(pos.sum()))

    @property
    def p(self) -> int:
        return self.rho.p


def region_g(region: RobustnessRegion, nu: float) -> float:
    """Upper bound on the noise weight mu at visibility ``nu``."""
    if not region.nu_lower < nu < 1.0:
        raise InvalidArgumentError(f"nu={nu} outside ({region.nu_lower}, 1)")
    p = region.p
    x = nu * (1.0 + p * region.lambda_rho) - 1.0
    first = (1.0 - nu) / (p - 1.0 - nu)
    second = region.num_pos * x / (p * region.trace_pos + region.num_pos * x)
    return min(first, second)


def region_member(region: RobustnessRegion, nu: float, mu: float, sigma: np.ndarray) -> np.ndarray:
    p = region.p
    m = (1.0 - mu) * (nu * region.rho.entries + (1.0 - nu) * np.eye(p) / p) + mu * sigma
    m = _hermitize(m)
    return m / np.trace(m).real


def sample_in_region(
    region: RobustnessRegion,
    rng=None,
    nu: float | None = None,
    mu: float | None = None,
    noise_k_range=None,
    guard: float = REGION_GUARD,
    max_attempts: int = 100,
) -> tuple[DensityMatrix, int]:
    """Draw a state from the robustness region; returns it with the noise ``k``.

    ``nu`` is uniform on (nu_lower + guard, 1 - guard) and ``mu`` uniform on
    [0, (1 - guard) g(nu)); either can be pinned.  The noise sigma is a
    random k-mixture.  Each draw is re-checked to be PPT and detected by the
    region witness; failing draws are redrawn up to ``max_attempts`` times.
    """
    if max_attempts < 1:
        raise InvalidArgumentError("max_attempts must be >= 1")
    rng = as_rng(rng)
    p = region.p
    lo, hi = region.nu_lower + guard, 1.0 - guard
    if lo >= hi:
        raise RegionEmptyError(f"empty visibility interval ({lo}, {hi})")
    k_lo, k_hi = noise_k_range or (1, p)
    for _ in range(max_attempts):
        nu_t = float(rng.uniform(lo, hi)) if nu is None else nu
        mu_t = float(rng.uniform(0.0, (1.0 - guard) * region_g(region, nu_t))) if mu is None else mu
        k = int(rng.integers(k_lo, k_hi + 1))
        sigma = mixture_matrix(p, k, rng)
        rho = DensityMatrix(region_member(region, nu_t, mu_t, sigma), region.rho.dims)
        pt_min = min_pt_eigenvalue(rho.entries, rho.dims.p_a, rho.dims.p_b)
        w_val = witness_value(region.witness, rho)
        # the g bound budgets the mean positive eigenvalue of W, so noise
        # aligned with its top eigenvector can (rarely) cancel the detection
        if pt_min >= -1e-10 and w_val < 0:
            return rho, k
    raise RegionEmptyError(
        f"{max_attempts} region draws left the PPT entangled set (last: min PT eig {pt_min:.3e}, "
        f"tr(W rho) {w_val:.3e})"
    )


def local_unitary(dims: BipartiteDims, rng=None) -> np.ndarray:
    rng = as_rng(rng)
    return np.kron(haar_random_unitary(dims.p_a, rng), haar_random_unitary(dims.p_b, rng))


def random_local_unitary_transform(rho: DensityMatrix, rng=None) -> DensityMatrix:
    """(U_A (x) U_B) rho (U_A (x) U_B)^dagger with Haar-random local unitaries."""
    u = local_unitary(rho.dims, rng)
    return DensityMatrix.from_array(u @ rho.entries @ u.conj().T, rho.dims)


def augment(
    seeds: list[LabeledSample],
    n_out: int,
    unitary_fraction: float = 0.5,
    seed: int = 0,
    noise_k_range=None,
) -> list[LabeledSample]:
    """Grow a PPT_ENT pool from a few witnessed seeds.

    Outputs cycle through the seeds.  Each is a draw from the seed's
    robustness region; with probability ``unitary_fraction`` it is then
    conjugated by a random local unitary, in which case the stored witness
    is the conjugated seed witness.
    """
    n_out = _check_n(n_out, "n_out")
    if not seeds:
        raise InvalidArgumentError("augment needs at least one seed")
    if not 0.0 <= unitary_fraction <= 1.0:
        raise InvalidArgumentError("unitary_fraction must be in [0, 1]")
    for s in seeds:
        if s.label is not ClassLabel.PPT_ENT or s.witness is None:
            raise InvalidArgumentError(f"seed {s.id} is not a witnessed PPT_ENT sample")
    regions = [RobustnessRegion.from_witness(s.rho, s.witness) for s in seeds]
    out = []
    for i in range(n_out):
        j = i % len(seeds)
        parent = seeds[j]
        s = derive_seed(seed, SEED_AUGMENT, i)
        rng = np.random.default_rng(s)
        rho, k = sample_in_region(regions[j], rng, noise_k_range=noise_k_range)
        witness = parent.witness
        kind = GeneratorKind.AUGMENT_REGION
        if rng.random() < unitary_fraction:
            u = local_unitary(rho.dims, rng)
            rho = DensityMatrix.from_array(u @ rho.entries @ u.conj().T, rho.dims)
            witness = witness.conjugated(u)
            kind = GeneratorKind.AUGMENT_UNITARY
        prov = Provenance(s, kind, k, parent_id=parent.id)
        out.append(LabeledSample(f"AUG-{i:06d}", rho, ClassLabel.PPT_ENT, prov, witness))
    return out


# ------------------------------------------------------------ soundness


def label_violations(
    sample: LabeledSample,
    bank: SeparableBank | None = None,
    check_witness: bool = True,
    n_validation: int = 10_000,
) -> list[str]:
    """Reasons why ``sample`` breaks its class invariant (empty when sound).

    PPT_ENT samples drawn as mixtures are re-validated against the bank
    named in their provenance (or ``bank`` when given); augmented ones,
    and all of them when ``check_witness`` is false, must be PPT and
    strictly detected by their witness.
    """
    problems = []
    rho = sample.rho
    verdict = ppt_check(rho)
    kind = sample.provenance.generator
    if sample.label is ClassLabel.SEP:
        if kind not in (GeneratorKind.SEPARABLE_CONSTRUCTION, GeneratorKind.FW_DECOMPOSITION):
            problems.append(f"SEP sample produced by {kind.value}, not a separable construction")
        if verdict.entangled:
            problems.append(f"SEP sample fails PPT (min PT eig {verdict.evidence:.3e})")
    elif sample.label is ClassLabel.NPPT_ENT:
        if not verdict.entangled:
            problems.append(f"NPPT_ENT sample is PPT (min PT eig {verdict.evidence:.3e})")
    else:
        if verdict.entangled:
            problems.append(f"PPT_ENT sample fails PPT (min PT eig {verdict.evidence:.3e})")
        if sample.witness is None:
            problems.append("PPT_ENT sample without witness")
        elif kind is GeneratorKind.MIXTURE and check_witness:
            if bank is None:
                vseed = sample.provenance.validation_seed
                bank = SeparableBank.cached(rho.dims, n_validation, 0 if vseed is None else vseed)
            report = validate_witness(sample.witness, rho, bank=bank)
            if not report.passed:
                problems.append(
                    f"witness validation failed ({report.n_violations} violations, "
                    f"tr(W rho) = {report.target_value:.3e})"
                )
        else:
            val = witness_value(sample.witness, rho)
            limit = -ENTANGLEMENT_MARGIN if kind is GeneratorKind.MIXTURE else 0.0
            if val >= limit:
                problems.append(f"witness does not detect the sample (tr(W rho) = {val:.3e})")
    return problems


def fw_separable_samples(
    sources: list[LabeledSample], config: FwConfig | None = None, seed: int = 0
) -> list[LabeledSample]:
    """Separable outputs of Frank-Wolfe run on ``sources`` ("FW data")."""
    out = []
    for i, src in enumerate(sources):
        s = derive_seed(seed, 7, i)
        res = fw_nearest_separable(src.rho, config, np.random.default_rng(s))
        prov = Provenance(s, GeneratorKind.FW_DECOMPOSITION, len(res.weights), parent_id=src.id)
        out.append(LabeledSample(f"FW-{i:06d}", res.nearest, ClassLabel.SEP, prov))
    return out
