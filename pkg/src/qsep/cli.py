"""Command-line entry point: ``qsep <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 generator
starvation.  All randomness flows from the required ``--seed``.  Output
files are written to a temporary name and renamed into place, so a
failing command never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import classifier as clf
from .criteria import SeparableBank, validate_witness
from .datagen import (
    ClassLabel,
    GenConfig,
    augment,
    generate_nppt,
    generate_ppt,
    generate_ppt_ent,
    generate_sep,
    validation_seed_for,
)
from .dataset import DatasetHeader, _atomic_write, dataset_read, dataset_write
from .errors import GeneratorStarvedError, QsepError
from .features import BINARY_LABEL, feature_matrix
from .fw import FwConfig, fw_error_curve, fw_nearest_separable
from .qcore import BipartiteDims, derive_seed

log = logging.getLogger("qsep")

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_STARVED = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def worker_count() -> int:
    """Worker processes for generation, from ``QSEP_THREADS`` (default 1)."""
    raw = os.environ.get("QSEP_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise QsepError(f"QSEP_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise QsepError(f"QSEP_THREADS must be a positive integer, got {raw!r}")
    return n


def _created() -> str | None:
    # reproducible builds convention; absent -> null keeps files byte-identical
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is None:
        return None
    return datetime.fromtimestamp(int(epoch), tz=timezone.utc).isoformat()


def _write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    _atomic_write(path, buf.getvalue())


def _fmt(x: float) -> str:
    return f"{x:.17g}"


# ------------------------------------------------------------- generation


def _gen_chunk(kind, dims, n, seed, config, k_range, start):
    if kind == "sep":
        return generate_sep(dims, n, seed, config, start=start)
    if kind == "nppt":
        return generate_nppt(dims, n, seed, config, k_range, start=start)
    return generate_ppt_ent(dims, n, seed, config, k_range, start=start)


def _generate(kind, dims, n, seed, config, k_range=None):
    """Generate in index chunks; output does not depend on the worker count."""
    workers = min(worker_count(), n)
    if workers <= 1:
        return _gen_chunk(kind, dims, n, seed, config, k_range, 0)
    bounds = np.linspace(0, n, workers + 1).astype(int)
    with ProcessPoolExecutor(workers) as pool:
        futures = [
            pool.submit(_gen_chunk, kind, dims, int(b - a), seed, config, k_range, int(a))
            for a, b in zip(bounds[:-1], bounds[1:])
            if b > a
        ]
        return [s for f in futures for s in f.result()]


def _dims(args) -> BipartiteDims:
    return BipartiteDims(args.dim_a, args.dim_b)


def _k_range(args):
    if args.k_min is None and args.k_max is None:
        return None
    if args.k_min is None or args.k_max is None:
        raise QsepError("--k-min and --k-max must be given together")
    return (args.k_min, args.k_max)


def _fw_config(args, trajectory=False) -> FwConfig:
    return FwConfig(max_iters=args.iters, gap_tol=args.gap_tol, track_trajectory=trajectory)


def cmd_gen(args) -> int:
    dims = _dims(args)
    kind = args.command.removeprefix("gen-").replace("-ent", "")
    echo = {"command": args.command, "n": args.n}
    if kind == "sep":
        config = GenConfig(sep_r_range=(args.r_min, args.r_max) if args.r_max else None)
        echo["r_range"] = list(config.resolve(dims).sep_r_range)
        k_range = None
    else:
        fw = FwConfig(max_iters=args.fw_iters) if kind == "ppt" else FwConfig()
        config = GenConfig(fw=fw, n_validation=getattr(args, "n_validation", 10_000))
        k_range = _k_range(args)
        resolved = config.resolve(dims)
        echo["k_range"] = list(k_range or (resolved.nppt_k_range if kind == "nppt" else resolved.ppt_k_range))
        if kind == "ppt":
            echo.update(fw_iters=args.fw_iters, n_validation=config.n_validation)
    samples = _generate(kind, dims, args.n, args.seed, config, k_range)
    header = DatasetHeader(dims, _created(), args.seed, echo)
    dataset_write(args.out, samples, header)
    log.info("wrote %d samples to %s", len(samples), args.out)
    return EXIT_OK


def cmd_augment(args) -> int:
    header, samples = dataset_read(args.input, with_header=True)
    pool = [s for s in samples if s.label is ClassLabel.PPT_ENT]
    if len(pool) < args.seeds_n:
        raise QsepError(f"need {args.seeds_n} PPT_ENT seeds, {args.input} has {len(pool)}")
    rng = np.random.default_rng(derive_seed(args.seed, 0))
    seeds = [pool[i] for i in np.sort(rng.choice(len(pool), args.seeds_n, replace=False))]
    out = augment(seeds, args.out_n, args.unitary_frac, seed=args.seed)
    echo = {"command": "augment", "source": os.path.basename(args.input), "seeds": [s.id for s in seeds],
            "unitary_fraction": args.unitary_frac}
    dataset_write(args.out, out, DatasetHeader(header.dims, _created(), args.seed, echo))
    return EXIT_OK


def _read_many(paths, check_witnesses=False):
    samples = []
    for p in paths:
        samples += dataset_read(p, check_witnesses=check_witnesses)
    return samples


def cmd_fw(args) -> int:
    samples = _read_many(args.input)
    cfg = _fw_config(args, trajectory=args.trajectory_out is not None)
    rows, traj = [], []
    for i, s in enumerate(samples):
        res = fw_nearest_separable(s.rho, cfg, np.random.default_rng(derive_seed(args.seed, i)))
        rows.append([s.id, s.label.value, _fmt(res.distance), res.iterations_run, _fmt(res.final_gap)])
        if res.trajectory is not None:
            traj += [[s.id, t, _fmt(d)] for t, d in res.trajectory]
    if args.trajectory_out:
        _write_csv(args.trajectory_out, ["id", "iteration", "distance"], traj)
    if args.out:
        _write_csv(args.out, ["id", "label", "distance", "iterations", "final_gap"], rows)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["id", "label", "distance", "iterations", "final_gap"])
        w.writerows(rows)
    return EXIT_OK


def cmd_witness_check(args) -> int:
    samples = [s for s in _read_many(args.input) if s.label is ClassLabel.PPT_ENT]
    rows, bad = [], 0
    for s in samples:
        vseed = s.provenance.validation_seed
        vseed = validation_seed_for(args.seed) if vseed is None or args.fresh_bank else vseed
        bank = SeparableBank.cached(s.dims, args.n_validation, vseed)
        rep = validate_witness(s.witness, s.rho, bank=bank)
        bad += not rep.passed
        rows.append([s.id, rep.passed, rep.n_violations, _fmt(rep.sample_min), _fmt(rep.target_value)])
    header = ["id", "passed", "n_violations", "sample_min", "target_value"]
    if args.report_out:
        _write_csv(args.report_out, header, rows)
    print(f"{len(samples) - bad}/{len(samples)} witnesses passed")
    return EXIT_INVALID if bad else EXIT_OK


def cmd_features(args) -> int:
    samples = _read_many(args.input)
    x = feature_matrix([s.rho for s in samples])
    header = [f"beta_{i + 1}" for i in range(x.shape[1])] + ["label", "class"]
    rows = [[_fmt(v) for v in row] + [BINARY_LABEL[s.label.value], s.label.value] for s, row in zip(samples, x)]
    _write_csv(args.out, header, rows)
    return EXIT_OK


def _cv_config(args) -> clf.CvConfig:
    return clf.CvConfig(folds=args.folds, standardize=args.standardize)


def cmd_train(args) -> int:
    train = _read_many(args.train)
    aug = clf.AugmentConfig(args.augment_seeds, args.unitary_frac) if args.augment else None
    x, y = clf.build_training_set(train, args.ppt_ratio, aug, args.seed)
    model = clf.fit_with_cv(x, y, _cv_config(args), args.seed)
    _atomic_write(args.model_out, clf.model_to_json(model))
    log.info("trained %s, C=%g, %d support vectors", model.kernel, model.C, len(model.dual_coefs))
    return EXIT_OK


def _report_rows(report: clf.EvalReport):
    return [[c, _fmt(m), _fmt(s), n] for c, m, s, n in report.rows()]


def _emit_report(report, path) -> None:
    header = ["class", "score", "std", "n_test"]
    rows = _report_rows(report)
    if path:
        _write_csv(path, header, rows)
    for c, m, s, n in report.rows():
        print(f"{c:9s} score {m:.3f} (+- {s:.3f})  n={n}")


def cmd_eval(args) -> int:
    model = clf.load_model(args.model)
    test = _read_many(args.test)
    scores, counts = clf.per_class_scores(model, test)
    report = clf.EvalReport(scores, {c: 0.0 for c in scores}, counts, 1)
    _emit_report(report, args.report_out)
    return EXIT_OK


def cmd_k_sweep(args) -> int:
    model = clf.load_model(args.model)
    rows = clf.k_sweep(model, _dims(args), range(args.k_min, args.k_max + 1), args.n_per_k, args.seed)
    _write_csv(
        args.out,
        ["k", "ratio_svm", "ratio_ppt", "ratio_ball"],
        [[r.k, _fmt(r.ratio_svm), _fmt(r.ratio_ppt), _fmt(r.ratio_ball)] for r in rows],
    )
    return EXIT_OK


def cmd_error_curve(args) -> int:
    dims = _dims(args)
    cfg = FwConfig(max_iters=args.iters, gap_tol=0.0, track_trajectory=True)
    groups = {
        "SEP": [s.rho for s in generate_sep(dims, args.n, derive_seed(args.seed, 1))],
        "PPT": [rho for rho, _ in generate_ppt(dims, args.n, derive_seed(args.seed, 2))],
        "NPPT": [s.rho for s in generate_nppt(dims, args.n, derive_seed(args.seed, 3))],
    }
    rows = []
    for tag, states in groups.items():
        rng = np.random.default_rng(derive_seed(args.seed, 4, len(rows)))
        for pt in fw_error_curve(states, cfg, rng, tag):
            rows.append([pt.class_tag, pt.iteration, _fmt(pt.mean_distance), _fmt(pt.std_distance)])
    _write_csv(args.out, ["class", "iteration", "mean_distance", "std_distance"], rows)
    return EXIT_OK


def cmd_fw_limitation(args) -> int:
    train = _read_many(args.train)
    test = _read_many(args.test)
    report = clf.fw_limitation_experiment(
        train, test, args.with_fw_train, FwConfig(max_iters=args.iters), args.seed,
        _cv_config(args), ppt_ratio=args.ppt_ratio,
    )
    _emit_report(report, args.report_out)
    return EXIT_OK


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qsep", description="Quantum separability datasets, witnesses and SVM experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--seed", type=int, required=True, help="master seed")
        p.set_defaults(func=func)
        return p

    def dims(p):
        p.add_argument("--dim-a", type=int, required=True)
        p.add_argument("--dim-b", type=int, required=True)

    p = add("gen-sep", cmd_gen, "generate separable states")
    dims(p)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--r-min", type=int, default=1)
    p.add_argument("--r-max", type=int, default=None, help="mixing count upper bound (default p^2)")
    p.add_argument("--out", required=True)

    for name, help_ in (("gen-nppt", "generate NPPT entangled states"),
                        ("gen-ppt-ent", "generate witnessed PPT entangled states")):
        p = add(name, cmd_gen, help_)
        dims(p)
        p.add_argument("-n", type=int, required=True)
        p.add_argument("--k-min", type=int, default=None)
        p.add_argument("--k-max", type=int, default=None)
        if name == "gen-ppt-ent":
            p.add_argument("--n-validation", type=int, default=10_000)
            p.add_argument("--fw-iters", type=int, default=1000)
        p.add_argument("--out", required=True)

    p = add("augment", cmd_augment, "augment PPT entangled seeds")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--seeds-n", type=int, default=10)
    p.add_argument("--out-n", type=int, required=True)
    p.add_argument("--unitary-frac", type=float, default=0.5)
    p.add_argument("--out", required=True)

    p = add("fw", cmd_fw, "run Frank-Wolfe on every sample of a dataset")
    p.add_argument("--in", dest="input", nargs="+", required=True)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--gap-tol", type=float, default=1e-7)
    p.add_argument("--trajectory-out", default=None, help="CSV of per-iteration distances")
    p.add_argument("--out", default=None, help="CSV summary (stdout when omitted)")

    p = add("witness-check", cmd_witness_check, "re-validate PPT_ENT witnesses")
    p.add_argument("--in", dest="input", nargs="+", required=True)
    p.add_argument("--n-validation", type=int, default=10_000)
    p.add_argument("--fresh-bank", action="store_true", help="use a bank derived from --seed, not provenance")
    p.add_argument("--report-out", default=None)

    p = add("features", cmd_features, "export Bloch-vector features as CSV")
    p.add_argument("--in", dest="input", nargs="+", required=True)
    p.add_argument("--out", required=True)

    def cv(p):
        p.add_argument("--folds", type=int, default=5)
        p.add_argument("--standardize", action="store_true")

    p = add("train", cmd_train, "cross-validate and train an SVM")
    p.add_argument("--train", nargs="+", required=True)
    p.add_argument("--ppt-ratio", type=float, default=0.0)
    p.add_argument("--augment", action="store_true")
    p.add_argument("--augment-seeds", type=int, default=10)
    p.add_argument("--unitary-frac", type=float, default=0.5)
    cv(p)
    p.add_argument("--model-out", required=True)

    p = add("eval", cmd_eval, "per-class scores of a model on test data")
    p.add_argument("--model", required=True)
    p.add_argument("--test", nargs="+", required=True)
    p.add_argument("--report-out", default=None)

    p = add("k-sweep", cmd_k_sweep, "separable ratios versus k (CSV)")
    p.add_argument("--model", required=True)
    dims(p)
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=40)
    p.add_argument("--n-per-k", type=int, default=200)
    p.add_argument("--out", required=True)

    p = add("fig-error-curve", cmd_error_curve, "FW distance versus iteration per class (CSV)")
    dims(p)
    p.add_argument("-n", type=int, default=100)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--out", required=True)

    p = add("fw-limitation", cmd_fw_limitation, "scores on FW-generated separable states")
    p.add_argument("--train", nargs="+", required=True)
    p.add_argument("--test", nargs="+", required=True)
    p.add_argument("--with-fw-train", action="store_true")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--ppt-ratio", type=float, default=0.5)
    cv(p)
    p.add_argument("--report-out", default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    log.info("command=%s seed=%s argv=%s", args.command, args.seed, argv if argv is not None else sys.argv[1:])
    try:
        return args.func(args)
    except GeneratorStarvedError as exc:
        print(f"qsep: generator starved: {exc}", file=sys.stderr)
        return EXIT_STARVED
    except (QsepError, ValueError) as exc:
        print(f"qsep: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"qsep: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
