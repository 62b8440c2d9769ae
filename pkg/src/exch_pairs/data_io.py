"""Dataset directories, Tuebingen-format benchmark loading and report files."""
from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError, LoadError
from .generator.core import Dataset, Example, ExampleMeta, cell_id
from .generator.mechanisms import MechanismKind
from .priors import PriorKind
from .types import Direction

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
DATASET_FORMAT = "exch-pairs-dataset"
DATASET_VERSION = 1
REPORT_VERSION = 1


# --- generated datasets ------------------------------------------------------

def example_filename(index: int) -> str:
    return f"ex{index:05d}.csv"


def _write_csv(path: Path, xs, ys) -> None:
    lines = ["x,y"] + [f"{x:.17g},{y:.17g}" for x, y in zip(xs, ys)]
    path.write_text("\n".join(lines) + "\n")


def _read_csv(path: Path) -> tuple[np.ndarray, np.ndarray]:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise LoadError(f"{path}: {exc}") from exc
    return data[:, 0].copy(), data[:, 1].copy()


def dataset_manifest(ds: Dataset) -> dict:
    cells = []
    for ci, cell in enumerate(ds.cells):
        pt, pp, m = cell
        cells.append({"index": ci, "id": cell_id(cell), "prior_theta": PriorKind(pt).value,
                      "prior_psi": PriorKind(pp).value, "mechanism": MechanismKind(m).value,
                      "weight": 1.0 if ds.cell_weights is None else float(ds.cell_weights[ci])})
    examples = []
    for i, ex in enumerate(ds.examples):
        entry = {"file": example_filename(i), "label": Direction(ex.label).value}
        entry.update(ex.meta.to_dict())
        examples.append(entry)
    return {"format": DATASET_FORMAT, "version": DATASET_VERSION, "seed": ds.seed,
            "per_cell": ds.per_cell, "settings": ds.settings, "cells": cells,
            "files": [e["file"] for e in examples], "examples": examples}


def save_dataset(ds: Dataset, directory) -> Path:
    """Write ``manifest.json`` plus one ``x,y`` CSV per example."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    for i, ex in enumerate(ds.examples):
        _write_csv(out / example_filename(i), ex.xs, ex.ys)
    (out / MANIFEST).write_text(json.dumps(dataset_manifest(ds), indent=2, allow_nan=False) + "\n")
    return out


def load_dataset(directory) -> Dataset:
    root = Path(directory)
    try:
        manifest = json.loads((root / MANIFEST).read_text())
    except (OSError, ValueError) as exc:
        raise LoadError(f"{root / MANIFEST}: {exc}") from exc
    if manifest.get("format") != DATASET_FORMAT:
        raise LoadError(f"{root}: not a generated dataset directory")
    if manifest.get("version") != DATASET_VERSION:
        raise LoadError(f"{root}: unsupported dataset version {manifest.get('version')}")
    cells = [(PriorKind(c["prior_theta"]), PriorKind(c["prior_psi"]), MechanismKind(c["mechanism"]))
             for c in manifest["cells"]]
    weights = [c["weight"] for c in manifest["cells"]]
    examples = []
    for entry in manifest["examples"]:
        xs, ys = _read_csv(root / entry["file"])
        examples.append(Example(xs, ys, Direction(entry["label"]), ExampleMeta.from_dict(entry)))
    cell_weights = None if all(w == 1.0 for w in weights) else weights
    return Dataset(examples, cells, manifest["seed"], manifest["per_cell"],
                   manifest.get("settings", {}), cell_weights)


# --- Tuebingen-format benchmark ------------------------------------------------

@dataclass
class BenchmarkPair:
    id: str
    xs: np.ndarray | None
    ys: np.ndarray | None
    weight: float
    ground_truth: Direction
    skipped: bool = False
    reason: str = ""


def _parse_meta_line(line: str, lineno: int, path: Path):
    parts = line.split()
    if len(parts) != 6:
        raise LoadError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
    try:
        cs, ce, es, ee = (int(p) for p in parts[1:5])
        weight = float(parts[5])
    except ValueError as exc:
        raise LoadError(f"{path}:{lineno}: {exc}") from exc
    return parts[0], cs, ce, es, ee, weight


def _read_numeric(path: Path) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            rows.append([float(v) for v in line.split()])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError("ragged or empty table")
    data = np.array(rows)
    if not np.all(np.isfinite(data)):
        raise ValueError("non-finite value")
    return data


def load_benchmark(directory, meta_name: str = "pairmeta.txt") -> list[BenchmarkPair]:
    """Load every pair listed in the metadata file.

    Pairs keep their file column order: ``xs`` is the lower-numbered column
    and ``ground_truth`` says whether it is the cause. Pairs with a
    multi-column cause or effect, a missing data file or unparsable rows are
    returned with ``skipped=True`` and a reason.
    """
    root = Path(directory)
    meta_path = root / meta_name
    if not meta_path.is_file():
        raise LoadError(f"{meta_path}: metadata file not found")
    pairs = []
    for lineno, line in enumerate(meta_path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        pid, cs, ce, es, ee, weight = _parse_meta_line(line, lineno, meta_path)
        truth = Direction.XtoY if cs < es else Direction.YtoX
        pair = BenchmarkPair(pid, None, None, weight, truth)
        pairs.append(pair)
        if cs != ce or es != ee:
            pair.skipped, pair.reason = True, "multidimensional"
            continue
        data_path = root / f"pair{pid}.txt"
        try:
            data = _read_numeric(data_path)
        except OSError:
            pair.skipped, pair.reason = True, "missing data file"
            continue
        except ValueError as exc:
            pair.skipped, pair.reason = True, f"malformed: {exc}"
            continue
        if data.shape[1] < max(cs, es):
            pair.skipped, pair.reason = True, f"malformed: only {data.shape[1]} columns"
            continue
        first, second = sorted((cs, es))
        pair.xs, pair.ys = data[:, first - 1].copy(), data[:, second - 1].copy()
    return pairs


def benchmark_sizes(pairs: list[BenchmarkPair]) -> np.ndarray:
    return np.array([len(p.xs) for p in pairs if not p.skipped])


# --- reports ---------------------------------------------------------------------

def _round12(v):
    if isinstance(v, bool) or v is None:
        return v
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if not math.isfinite(v) else float(f"{v:.12g}")
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, dict):
        return {k: _round12(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_round12(x) for x in v]
    return v


@dataclass
class EvalReport:
    """Per-method direction metrics on one dataset or benchmark.

    ``per_cell`` maps a metric name (``auroc``/``accuracy``) to a methods x
    cells matrix; it is empty for benchmark reports. Floats are held at 12
    significant digits, the precision they are saved with.
    """

    source: str
    kind: str
    methods: list[str]
    metrics: dict[str, dict[str, float]]
    n_items: int
    cells: list[str] = field(default_factory=list)
    per_cell: dict[str, list[list[float]]] = field(default_factory=dict)
    screened: list[str] | None = None
    threshold: float | None = None
    extra: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    version: int = REPORT_VERSION

    def __post_init__(self):
        for f in dataclasses.fields(self):
            setattr(self, f.name, _round12(getattr(self, f.name)))

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}


def save_report(report: EvalReport, path) -> Path:
    path = Path(path)
    try:
        text = json.dumps(report.to_dict(), indent=2, allow_nan=False)
    except ValueError as exc:
        raise InvalidArgumentError(f"report for {report.source} contains NaN/inf: {exc}") from exc
    try:
        path.write_text(text + "\n")
    except OSError as exc:
        raise LoadError(f"{path}: cannot write report ({exc})") from exc
    return path


def load_report(path) -> EvalReport:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise LoadError(f"{path}: cannot read report ({exc})") from exc
    if d.get("version") != REPORT_VERSION:
        raise LoadError(f"{path}: unsupported report version {d.get('version')}")
    try:
        return EvalReport(**d)
    except TypeError as exc:
        raise LoadError(f"{path}: malformed report ({exc})") from exc


def save_json(obj: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_round12(obj), indent=2, allow_nan=False) + "\n")
    return path
