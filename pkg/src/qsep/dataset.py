"""JSON-Lines dataset files.

Line 1 is a header object::

    {"format": "qsep-dataset", "format_version": 1, "dims": [p_a, p_b],
     "created": <ISO timestamp or null>, "master_seed": <int or null>,
     "generator_config": {...}}

Every further line is one sample::

    {"id": ..., "label": "SEP" | "PPT_ENT" | "NPPT_ENT",
     "matrix": [[re, im], ...],          # row-major, p*p pairs
     "witness": [[re, im], ...] | null,
     "provenance": {"seed", "generator", "k_or_r", "parent_id", "validation_seed"}}

Floats are written with 17 significant digits, so doubles round-trip
exactly and write -> read -> write reproduces the file byte for byte.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .criteria import Witness
from .datagen import ClassLabel, GeneratorKind, LabeledSample, Provenance, label_violations
from .errors import DatasetLoadError, InvalidArgumentError, QsepError
from .qcore import BipartiteDims, DensityMatrix

FORMAT = "qsep-dataset"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class DatasetHeader:
    dims: BipartiteDims
    created: str | None = None
    master_seed: int | None = None
    generator_config: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def to_json(self) -> str:
        return json.dumps(
            {
                "format": FORMAT,
                "format_version": self.format_version,
                "dims": [self.dims.p_a, self.dims.p_b],
                "created": self.created,
                "master_seed": self.master_seed,
                "generator_config": self.generator_config,
            },
            sort_keys=False,
        )


def _encode_matrix(m: np.ndarray) -> str:
    flat = np.asarray(m).ravel()
    return "[" + ",".join(f"[{z.real:.17g},{z.imag:.17g}]" for z in flat) + "]"


def _decode_matrix(pairs, p: int) -> np.ndarray:
    a = np.array(pairs, dtype=np.float64)
    if a.shape != (p * p, 2):
        raise ValueError(f"matrix has shape {a.shape}, expected ({p * p}, 2)")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return (a[:, 0] + 1j * a[:, 1]).reshape(p, p)


def sample_to_json(sample: LabeledSample) -> str:
    prov = sample.provenance
    prov_json = json.dumps(
        {
            "seed": prov.seed,
            "generator": prov.generator.value,
            "k_or_r": prov.k_or_r,
            "parent_id": prov.parent_id,
            "validation_seed": prov.validation_seed,
        }
    )
    witness = "null" if sample.witness is None else _encode_matrix(sample.witness.matrix)
    return (
        f'{{"id": {json.dumps(sample.id)}, "label": "{sample.label.value}", '
        f'"matrix": {_encode_matrix(sample.rho.entries)}, "witness": {witness}, '
        f'"provenance": {prov_json}}}'
    )


def sample_from_obj(obj: dict, dims: BipartiteDims) -> LabeledSample:
    label = ClassLabel(obj["label"])
    rho = DensityMatrix(_decode_matrix(obj["matrix"], dims.p), dims)
    w = obj.get("witness")
    witness = None if w is None else Witness(_decode_matrix(w, dims.p), dims)
    p = obj["provenance"]
    prov = Provenance(
        seed=int(p["seed"]),
        generator=GeneratorKind(p["generator"]),
        k_or_r=int(p["k_or_r"]),
        parent_id=p.get("parent_id"),
        validation_seed=p.get("validation_seed"),
    )
    return LabeledSample(str(obj["id"]), rho, label, prov, witness)


def _atomic_write(path, text: str) -> None:
    """Write to a temporary file next to ``path`` and rename it into place."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dataset_dumps(samples, header: DatasetHeader | None = None) -> str:
    samples = list(samples)
    if header is None:
        if not samples:
            raise InvalidArgumentError("an empty dataset needs an explicit header")
        header = DatasetHeader(samples[0].dims)
    for s in samples:
        if s.dims != header.dims:
            raise InvalidArgumentError(f"sample {s.id} has dims {s.dims}, header says {header.dims}")
    lines = [header.to_json()] + [sample_to_json(s) for s in samples]
    return "\n".join(lines) + "\n"


def dataset_write(path, samples, header: DatasetHeader | None = None) -> None:
    _atomic_write(path, dataset_dumps(samples, header))


def read_header(line: str) -> DatasetHeader:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetLoadError(f"malformed header: {exc}", 1) from exc
    if not isinstance(obj, dict) or obj.get("format") != FORMAT:
        raise DatasetLoadError("not a qsep dataset header", 1)
    if obj.get("format_version") != FORMAT_VERSION:
        raise DatasetLoadError(f"unsupported format_version {obj.get('format_version')!r}", 1)
    try:
        dims = BipartiteDims(*obj["dims"])
    except (KeyError, TypeError, QsepError) as exc:
        raise DatasetLoadError(f"bad dims in header: {exc}", 1) from exc
    return DatasetHeader(dims, obj.get("created"), obj.get("master_seed"), obj.get("generator_config") or {})


def dataset_read(path, check_witnesses: bool = False, with_header: bool = False):
    """Load and validate a dataset file.

    Every record must satisfy its class invariant.  PPT_ENT witnesses are
    always required to be PPT-consistent and to detect their state; with
    ``check_witnesses`` mixture-drawn witnesses are also re-validated
    against their separable bank (slow).  The first bad record raises
    :class:`DatasetLoadError` carrying its line number.
    """
    with open(path) as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DatasetLoadError("empty file, missing header", 1)
    header = read_header(lines[0])
    samples = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("record is not a JSON object")
            sample = sample_from_obj(obj, header.dims)
        except (ValueError, KeyError, TypeError, QsepError) as exc:
            raise DatasetLoadError(f"invalid record: {exc}", lineno) from exc
        if sample.id in seen:
            raise DatasetLoadError(f"duplicate sample id {sample.id!r}", lineno)
        seen.add(sample.id)
        problems = label_violations(sample, check_witness=check_witnesses)
        if problems:
            raise DatasetLoadError(f"record {sample.id}: " + "; ".join(problems), lineno)
        samples.append(sample)
    return (header, samples) if with_header else samples
