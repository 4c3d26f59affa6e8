"""Kernel SVM trained by sequential minimal optimization, and experiment drivers.

Binary labels: separable -> -1, entangled -> +1.  Per-class scores are
per-class recall of that binary prediction.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .criteria import Verdict, ppt_check, separable_ball_check
from .errors import InvalidArgumentError
from .features import bloch_coefficients, feature_matrix, gellmann_basis
from .qcore import BipartiteDims, DensityMatrix, as_rng, derive_seed, mixture_matrix

MODEL_FORMAT = "qsep-svm"
MODEL_VERSION = 1


class KernelKind(enum.Enum):
    GAUSSIAN = "GAUSSIAN"
    POLYNOMIAL = "POLYNOMIAL"


@dataclass(frozen=True)
class KernelSpec:
    """exp(-gamma |x - y|^2) or (x . y + coef0)^degree."""

    kind: KernelKind
    gamma: float = 1.0
    degree: int = 3
    coef0: float = 1.0

    def __post_init__(self):
        if not isinstance(self.kind, KernelKind):
            object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.kind is KernelKind.GAUSSIAN and not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise InvalidArgumentError(f"gamma must be positive, got {self.gamma}")
        if self.kind is KernelKind.POLYNOMIAL:
            if int(self.degree) != self.degree or self.degree < 1:
                raise InvalidArgumentError(f"degree must be an integer >= 1, got {self.degree}")
            if not math.isfinite(self.coef0):
                raise InvalidArgumentError("coef0 must be finite")

    @classmethod
    def gaussian(cls, gamma: float) -> "KernelSpec":
        return cls(KernelKind.GAUSSIAN, gamma=float(gamma))

    @classmethod
    def polynomial(cls, degree: int, coef0: float = 1.0) -> "KernelSpec":
        return cls(KernelKind.POLYNOMIAL, degree=int(degree), coef0=float(coef0))

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Kernel matrix between the rows of ``x`` (n, d) and ``y`` (m, d)."""
        x = np.atleast_2d(x)
        y = np.atleast_2d(y)
        if self.kind is KernelKind.GAUSSIAN:
            sq = (x * x).sum(1)[:, None] + (y * y).sum(1)[None, :] - 2.0 * (x @ y.T)
            return np.exp(-self.gamma * np.maximum(sq, 0.0))
        return (x @ y.T + self.coef0) ** self.degree

    def to_dict(self) -> dict:
        if self.kind is KernelKind.GAUSSIAN:
            return {"kind": self.kind.value, "gamma": self.gamma}
        return {"kind": self.kind.value, "degree": self.degree, "coef0": self.coef0}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(KernelKind(d["kind"]), **{k: v for k, v in d.items() if k != "kind"})

    def __str__(self):
        if self.kind is KernelKind.GAUSSIAN:
            return f"gaussian(gamma={self.gamma:g})"
        return f"poly(degree={self.degree}, coef0={self.coef0:g})"


@dataclass(frozen=True, eq=False)
class KernelModel:
    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    kernel: KernelSpec
    C: float
    seed: int | None = None
    fold_scores: tuple = ()
    #: Optional standardization applied to raw features before the kernel.
    feature_mean: np.ndarray | None = None
    feature_scale: np.ndarray | None = None

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]

    def transform(self, x: np.ndarray) -> np.ndarray:
        if self.feature_mean is None:
            return x
        return (x - self.feature_mean) / self.feature_scale


# --------------------------------------------------------------------- SMO


def _check_xy(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise InvalidArgumentError(f"features {x.shape} and labels {y.shape} do not align")
    if x.shape[0] < 2:
        raise InvalidArgumentError("need at least two training samples")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("features contain non-finite values")
    if not np.all((y == 1) | (y == -1)):
        raise InvalidArgumentError("labels must be -1 or +1")
    if np.all(y == y[0]):
        raise InvalidArgumentError("training data contains a single class")
    return x, y


@dataclass(frozen=True)
class SmoSolution:
    alpha: np.ndarray
    rho: float
    iterations: int
    gap: float


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3, max_iter: int | None = None) -> SmoSolution:
    """Dual soft-margin SVM: min 1/2 a^T Q a - e^T a, 0 <= a <= C, y^T a = 0.

    Working pairs are chosen by the maximal-violating-pair rule; the run
    stops once max_{I_up} -y G - min_{I_low} -y G < tol.  Decision values
    are sum_i y_i a_i K(x_i, x) - rho.
    """
    n = y.shape[0]
    Q = (y[:, None] * y[None, :]) * K
    alpha = np.zeros(n)
    grad = -np.ones(n)
    max_iter = max_iter or max(100_000, 100 * n)
    pos = y > 0
    tau = 1e-12
    it = 0
    gap = np.inf
    while it < max_iter:
        ygrad = -y * grad
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        vu = np.where(up, ygrad, -np.inf)
        vl = np.where(low, ygrad, np.inf)
        i = int(np.argmax(vu))
        j = int(np.argmin(vl))
        gap = vu[i] - vl[j]
        if gap < tol:
            break
        it += 1
        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = max(Q[i, i] + Q[j, j] + 2.0 * Q[i, j], tau)
            delta = (-grad[i] - grad[j]) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            quad = max(Q[i, i] + Q[j, j] - 2.0 * Q[i, j], tau)
            delta = (grad[i] - grad[j]) / quad
            total = ai + aj
            ai -= delta
            aj += delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        dai, daj = ai - alpha[i], aj - alpha[j]
        alpha[i], alpha[j] = ai, aj
        grad += Q[:, i] * dai + Q[:, j] * daj

    ygrad = y * grad
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        rho = float(ygrad[free].mean())
    else:
        # bounds from the constraint-active sets
        ub_mask = np.where(pos, alpha >= C, alpha <= 0)
        lb_mask = np.where(pos, alpha <= 0, alpha >= C)
        ub = ygrad[ub_mask].min() if np.any(ub_mask) else np.inf
        lb = ygrad[lb_mask].max() if np.any(lb_mask) else -np.inf
        rho = float(0.5 * (ub + lb)) if np.isfinite(ub + lb) else float(ub if np.isfinite(ub) else lb)
    return SmoSolution(alpha, rho, it, float(gap))


def _standardizer(x: np.ndarray):
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def svm_train(
    x, y, kernel: KernelSpec, C: float, tol: float = 1e-3, seed: int | None = None, standardize: bool = False
) -> KernelModel:
    """Train a kernel SVM on rows of ``x`` with labels in {-1, +1}.

    The solver is deterministic; ``seed`` is recorded for provenance only.
    """
    if not (C > 0 and math.isfinite(C)):
        raise InvalidArgumentError(f"C must be positive, got {C}")
    x, y = _check_xy(x, y)
    mean = scale = None
    if standardize:
        mean, scale = _standardizer(x)
        x = (x - mean) / scale
    sol = smo_solve(kernel(x, x), y, C, tol)
    sv = sol.alpha > 0
    return KernelModel(
        support_vectors=x[sv].copy(),
        dual_coefs=(y * sol.alpha)[sv],
        bias=-sol.rho,
        kernel=kernel,
        C=float(C),
        seed=seed,
        feature_mean=mean,
        feature_scale=scale,
    )


def decision_function(model: KernelModel, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.n_features:
        raise InvalidArgumentError(f"feature dimension {x.shape[1]} != model dimension {model.n_features}")
    z = model.transform(x)
    return model.kernel(z, model.support_vectors) @ model.dual_coefs + model.bias


def predict_labels(model: KernelModel, x) -> np.ndarray:
    """Batch prediction; a decision value of exactly 0 maps to +1."""
    return np.where(decision_function(model, x) >= 0, 1, -1)


def svm_predict(model: KernelModel, x) -> tuple[int, float]:
    """Label and decision value for a single feature vector (or BlochVector)."""
    x = getattr(x, "beta", x)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidArgumentError("svm_predict takes one feature vector")
    val = float(decision_function(model, x[None, :])[0])
    return (1 if val >= 0 else -1), val


# ------------------------------------------------------------------- CV


def default_kernel_grid() -> list[KernelSpec]:
    grid = [KernelSpec.gaussian(2.0**e) for e in range(-7, 4)]
    grid += [KernelSpec.polynomial(d, 1.0) for d in (2, 3)]
    return grid


def default_c_grid() -> list[float]:
    return [2.0**e for e in range(-3, 8)]


def stratified_folds(y, folds: int, seed: int = 0) -> list[np.ndarray]:
    """Disjoint index sets covering ``range(len(y))`` with per-label proportions kept."""
    y = np.asarray(y)
    if folds < 2:
        raise InvalidArgumentError("folds must be >= 2")
    rng = np.random.default_rng(seed)
    parts: list[list[int]] = [[] for _ in range(folds)]
    offset = 0
    for lab in np.unique(y):
        idx = np.flatnonzero(y == lab)
        if idx.size < folds:
            raise InvalidArgumentError(f"class {lab} has {idx.size} samples, fewer than {folds} folds")
        idx = rng.permutation(idx)
        for n, i in enumerate(idx):
            parts[(n + offset) % folds].append(int(i))
        offset += idx.size
    return [np.sort(np.array(p, dtype=int)) for p in parts]


@dataclass(frozen=True)
class CvResult:
    kernel: KernelSpec
    C: float
    mean_score: float
    #: rows (grid index, kernel, C, fold scores)
    table: list


def cross_validate(
    x,
    y,
    kernel_grid: list[KernelSpec] | None = None,
    C_grid: list[float] | None = None,
    folds: int = 5,
    seed: int = 0,
    tol: float = 1e-3,
    standardize: bool = False,
) -> CvResult:
    """Grid search over (kernel, C) by stratified k-fold accuracy.

    Ties on mean accuracy go to the smaller C, then to the earlier grid point.
    Kernel matrices are computed once per kernel on the full data.
    """
    x, y = _check_xy(x, y)
    kernel_grid = list(kernel_grid or default_kernel_grid())
    C_grid = list(C_grid or default_c_grid())
    if not kernel_grid or not C_grid:
        raise InvalidArgumentError("grids must be nonempty")
    parts = stratified_folds(y, folds, seed)
    masks = []
    for f in range(folds):
        test = np.zeros(len(y), bool)
        test[parts[f]] = True
        masks.append(test)
    table = []
    best = None
    for ki, kernel in enumerate(kernel_grid):
        for ci, C in enumerate(C_grid):
            table.append([ki * len(C_grid) + ci, kernel, float(C), []])
    for ki, kernel in enumerate(kernel_grid):
        fold_data = []
        for test in masks:
            xtr, xte = x[~test], x[test]
            if standardize:
                mean, scale = _standardizer(xtr)
                xtr, xte = (xtr - mean) / scale, (xte - mean) / scale
            fold_data.append((kernel(xtr, xtr), kernel(xte, xtr), y[~test], y[test]))
        for ci, C in enumerate(C_grid):
            row = table[ki * len(C_grid) + ci]
            for ktr, kte, ytr, yte in fold_data:
                sol = smo_solve(ktr, ytr, C, tol)
                pred = np.where(kte @ (ytr * sol.alpha) - sol.rho >= 0, 1, -1)
                row[3].append(float(np.mean(pred == yte)))
    for idx, kernel, C, scores in table:
        m = float(np.mean(scores))
        if best is None or m > best[0] or (m == best[0] and C < best[2]):
            best = (m, kernel, C)
    rows = [(i, k, c, tuple(s)) for i, k, c, s in table]
    return CvResult(best[1], best[2], best[0], rows)


@dataclass(frozen=True)
class CvConfig:
    kernel_grid: tuple | None = None
    C_grid: tuple | None = None
    folds: int = 5
    tol: float = 1e-3
    standardize: bool = False


def fit_with_cv(x, y, cv: CvConfig | None = None, seed: int = 0) -> KernelModel:
    cv = cv or CvConfig()
    res = cross_validate(x, y, cv.kernel_grid, cv.C_grid, cv.folds, seed, cv.tol, cv.standardize)
    best_scores = next(r[3] for r in res.table if r[1] == res.kernel and r[2] == res.C)
    model = svm_train(x, y, res.kernel, res.C, cv.tol, seed, cv.standardize)
    return KernelModel(
        model.support_vectors, model.dual_coefs, model.bias, model.kernel, model.C,
        seed, best_scores, model.feature_mean, model.feature_scale,
    )


# ------------------------------------------------------------ persistence


def _arr(a):
    return None if a is None else np.asarray(a, dtype=np.float64).tolist()


def model_to_json(model: KernelModel) -> str:
    """Versioned JSON document; Python float repr round-trips doubles exactly."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kernel": model.kernel.to_dict(),
        "C": model.C,
        "bias": model.bias,
        "n_features": model.n_features,
        "support_vectors": _arr(model.support_vectors),
        "dual_coefs": _arr(model.dual_coefs),
        "feature_mean": _arr(model.feature_mean),
        "feature_scale": _arr(model.feature_scale),
        "meta": {"seed": model.seed, "fold_scores": list(model.fold_scores)},
    }
    return json.dumps(doc)


def model_from_json(text: str) -> KernelModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"model file is not valid JSON: {exc}") from exc
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
        raise InvalidArgumentError(f"unsupported model format {doc.get('format')!r} v{doc.get('version')!r}")
    sv = np.array(doc["support_vectors"], dtype=np.float64).reshape(-1, doc["n_features"])
    opt = lambda k: None if doc[k] is None else np.array(doc[k], dtype=np.float64)  # noqa: E731
    return KernelModel(
        support_vectors=sv,
        dual_coefs=np.array(doc["dual_coefs"], dtype=np.float64),
        bias=float(doc["bias"]),
        kernel=KernelSpec.from_dict(doc["kernel"]),
        C=float(doc["C"]),
        seed=doc["meta"]["seed"],
        fold_scores=tuple(doc["meta"]["fold_scores"]),
        feature_mean=opt("feature_mean"),
        feature_scale=opt("feature_scale"),
    )


def save_model(model: KernelModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(model_to_json(model))


def load_model(path) -> KernelModel:
    with open(path) as fh:
        return model_from_json(fh.read())


# ------------------------------------------------------------ experiments

CLASS_ORDER = ("SEP", "FW", "PPT_ENT", "NPPT_ENT")


@dataclass(frozen=True)
class EvalReport:
    """Per-class recall: mean and std over repetitions, plus test counts."""

    per_class_score: dict
    per_class_std: dict
    n_test: dict
    repetitions: int
    models: list = field(default_factory=list, compare=False, repr=False)

    def rows(self) -> list[tuple[str, float, float, int]]:
        return [(c, self.per_class_score[c], self.per_class_std[c], self.n_test[c])
                for c in CLASS_ORDER if c in self.per_class_score]


def _class_name(sample) -> str:
    label = sample.label.value
    if label == "SEP" and sample.provenance.generator.value == "FW_DECOMPOSITION":
        return "FW"
    return label


def per_class_scores(model: KernelModel, samples) -> tuple[dict, dict]:
    samples = list(samples)
    if not samples:
        return {}, {}
    pred = predict_labels(model, feature_matrix([s.rho for s in samples]))
    names = np.array([_class_name(s) for s in samples])
    truth = np.where(names == "SEP", -1, np.where(names == "FW", -1, 1))
    scores, counts = {}, {}
    for c in CLASS_ORDER:
        m = names == c
        if m.any():
            scores[c] = float(np.mean(pred[m] == truth[m]))
            counts[c] = int(m.sum())
    return scores, counts


def _summarize(runs: list[dict], counts: dict, models) -> EvalReport:
    keys = [c for c in CLASS_ORDER if c in runs[0]]
    mean = {c: float(np.mean([r[c] for r in runs])) for c in keys}
    std = {c: float(np.std([r[c] for r in runs])) for c in keys}
    return EvalReport(mean, std, counts, len(runs), models)


@dataclass(frozen=True)
class AugmentConfig:
    n_seeds: int = 10
    unitary_fraction: float = 0.5


def _by_class(samples) -> dict[str, list]:
    out: dict[str, list] = {"SEP": [], "FW": [], "PPT_ENT": [], "NPPT_ENT": []}
    for s in samples:
        out[_class_name(s)].append(s)
    return out


def build_training_set(train, ppt_ratio: float, augment_config: AugmentConfig | None, seed: int):
    """Separable class plus an equally sized entangled class.

    A fraction ``ppt_ratio`` of the entangled class comes from PPT_ENT
    (augmented from ``augment_config.n_seeds`` random seeds when given),
    the rest from NPPT_ENT.
    """
    from .datagen import augment

    if not 0.0 <= ppt_ratio <= 1.0:
        raise InvalidArgumentError("ppt_ratio must be in [0, 1]")
    pools = _by_class(train)
    sep = pools["SEP"] + pools["FW"]
    n = len(pools["SEP"])
    if n < 2:
        raise InvalidArgumentError("training set needs separable samples")
    n_ppt = int(round(ppt_ratio * n))
    n_nppt = n - n_ppt
    rng = np.random.default_rng(seed)
    if n_nppt > len(pools["NPPT_ENT"]):
        raise InvalidArgumentError(f"need {n_nppt} NPPT_ENT training samples, have {len(pools['NPPT_ENT'])}")
    ent = [pools["NPPT_ENT"][i] for i in np.sort(rng.choice(len(pools["NPPT_ENT"]), n_nppt, replace=False))]
    if n_ppt:
        ppt_pool = pools["PPT_ENT"]
        if augment_config is not None:
            if len(ppt_pool) < augment_config.n_seeds:
                raise InvalidArgumentError(f"need {augment_config.n_seeds} PPT_ENT seeds, have {len(ppt_pool)}")
            pick = np.sort(rng.choice(len(ppt_pool), augment_config.n_seeds, replace=False))
            ent += augment([ppt_pool[i] for i in pick], n_ppt, augment_config.unitary_fraction,
                           seed=derive_seed(seed, 1))
        else:
            if n_ppt > len(ppt_pool):
                raise InvalidArgumentError(f"need {n_ppt} PPT_ENT training samples, have {len(ppt_pool)}")
            ent += [ppt_pool[i] for i in np.sort(rng.choice(len(ppt_pool), n_ppt, replace=False))]
    samples = sep + ent
    x = feature_matrix([s.rho for s in samples])
    y = np.r_[-np.ones(len(sep)), np.ones(len(ent))]
    return x, y


def run_experiment(
    train,
    test,
    ppt_ratio: float = 0.0,
    augment_config: AugmentConfig | None = None,
    cv_config: CvConfig | None = None,
    repetitions: int = 1,
    seed: int = 0,
) -> EvalReport:
    """Train with cross-validated hyperparameters and score each test class.

    Each repetition re-draws the entangled training mix (and augmentation)
    from ``derive_seed(seed, repetition)``.
    """
    if repetitions < 1:
        raise InvalidArgumentError("repetitions must be >= 1")
    runs, models, counts = [], [], {}
    for rep in range(repetitions):
        s = derive_seed(seed, rep)
        x, y = build_training_set(train, ppt_ratio, augment_config, s)
        model = fit_with_cv(x, y, cv_config, s)
        scores, counts = per_class_scores(model, test)
        runs.append(scores)
        models.append(model)
    return _summarize(runs, counts, models)


@dataclass(frozen=True)
class SweepRow:
    k: int
    ratio_svm: float
    ratio_ppt: float
    ratio_ball: float


def k_sweep(model: KernelModel, dims: BipartiteDims, k_values, n_per_k: int, seed: int = 0) -> list[SweepRow]:
    """Fraction of random k-mixtures called separable by the model, PPT, and the ball test."""
    basis = gellmann_basis(dims.p)
    if model.n_features != len(basis):
        raise InvalidArgumentError(f"model expects {model.n_features} features, dims {dims} give {len(basis)}")
    rows = []
    for k in k_values:
        rng = np.random.default_rng(derive_seed(seed, int(k)))
        mats = [DensityMatrix(mixture_matrix(dims.p, int(k), rng), dims) for _ in range(n_per_k)]
        pred = predict_labels(model, bloch_coefficients(np.stack([m.entries for m in mats]), basis))
        ppt = [ppt_check(m).verdict is not Verdict.ENTANGLED for m in mats]
        ball = [separable_ball_check(m).verdict is Verdict.SEPARABLE for m in mats]
        rows.append(SweepRow(int(k), float(np.mean(pred == -1)), float(np.mean(ppt)), float(np.mean(ball))))
    return rows


def fw_limitation_experiment(
    train,
    test,
    include_fw_sep_in_train: bool,
    fw_config=None,
    seed: int = 0,
    cv_config: CvConfig | None = None,
    ppt_ratio: float = 0.5,
    repetitions: int = 1,
) -> EvalReport:
    """Score a classifier on separable states produced by Frank-Wolfe ("FW data").

    FW data are the nearest-separable outputs of FW runs on the entangled
    samples of each split.  Test FW data are always scored; training FW
    data join the separable class only when ``include_fw_sep_in_train``.
    """
    from .datagen import fw_separable_samples

    train, test = list(train), list(test)
    ent_test = [s for s in test if s.label.value != "SEP"]
    fw_test = fw_separable_samples(ent_test, fw_config, derive_seed(seed, 2))
    train_aug = list(train)
    if include_fw_sep_in_train:
        ent_train = [s for s in train if s.label.value != "SEP"]
        fw_train = fw_separable_samples(ent_train, fw_config, derive_seed(seed, 1))
        n_sep = sum(1 for s in train if s.label.value == "SEP")
        # FW data replace part of the separable class so its size is unchanged
        rng = np.random.default_rng(derive_seed(seed, 3))
        n_fw = min(len(fw_train), n_sep // 2)
        fw_pick = [fw_train[i] for i in np.sort(rng.choice(len(fw_train), n_fw, replace=False))]
        sep = [s for s in train if s.label.value == "SEP"][: n_sep - n_fw]
        train_aug = sep + fw_pick + [s for s in train if s.label.value != "SEP"]
    return _fw_run(train_aug, test + fw_test, ppt_ratio, cv_config, repetitions, seed)


def _fw_run(train, test, ppt_ratio, cv_config, repetitions, seed):
    runs, models, counts = [], [], {}
    for rep in range(repetitions):
        s = derive_seed(seed, rep)
        pools = _by_class(train)
        sep = pools["SEP"] + pools["FW"]
        n = len(sep)
        n_ppt = int(round(ppt_ratio * n))
        rng = np.random.default_rng(s)
        if n_ppt > len(pools["PPT_ENT"]) or n - n_ppt > len(pools["NPPT_ENT"]):
            raise InvalidArgumentError("not enough entangled training samples")
        ent = [pools["PPT_ENT"][i] for i in np.sort(rng.choice(len(pools["PPT_ENT"]), n_ppt, replace=False))]
        ent += [pools["NPPT_ENT"][i] for i in np.sort(rng.choice(len(pools["NPPT_ENT"]), n - n_ppt, replace=False))]
        x = feature_matrix([t.rho for t in sep + ent])
        y = np.r_[-np.ones(len(sep)), np.ones(len(ent))]
        model = fit_with_cv(x, y, cv_config, s)
        scores, counts = per_class_scores(model, test)
        runs.append(scores)
        models.append(model)
    return _summarize(runs, counts, models)
