"""Run direction scorers over datasets and benchmarks and build reports."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data_io import BenchmarkPair, EvalReport
from .errors import InsufficientDataError, UndefinedMetricError
from .generator.core import Dataset, cell_id
from .methods import get_method
from .metrics import INDEPENDENCE_THRESHOLD, auroc_arrays, hoeffding_d, independence_flag
from .types import Direction
from .weights import weighted_performance

log = logging.getLogger(__name__)


@dataclass
class Item:
    id: str
    xs: np.ndarray
    ys: np.ndarray
    label: Direction
    weight: float = 1.0
    cell: int | None = None


def items_from_dataset(ds: Dataset) -> list[Item]:
    w = ds.cell_weights
    return [Item(f"ex{i:05d}", ex.xs, ex.ys, ex.label,
                 ex.meta.weight if w is None else float(w[ex.meta.cell]), ex.meta.cell)
            for i, ex in enumerate(ds.examples)]


def items_from_benchmark(pairs: list[BenchmarkPair]) -> list[Item]:
    return [Item(p.id, p.xs, p.ys, p.ground_truth, p.weight) for p in pairs if not p.skipped]


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("EXCH_PAIRS_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, seq):
    n = _threads()
    if n == 1:
        return [fn(s) for s in seq]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(fn, seq))


def score_items(items: list[Item], methods: list[str]) -> dict[str, np.ndarray]:
    """Scores per method, aligned with ``items``. Failures score 0 (a tie)."""
    out = {}
    for name in methods:
        fn = get_method(name)

        def one(it, fn=fn, name=name):
            try:
                return fn(it.xs, it.ys).score
            except InsufficientDataError as exc:
                log.warning("%s on %s: %s", name, it.id, exc)
                return 0.0

        out[name] = np.array(_map(one, items), dtype=float)
    return out


def summarize(scores: np.ndarray, positive: np.ndarray, weights: np.ndarray) -> dict[str, float]:
    # ties (score 0) decide XtoY
    correct = (scores >= 0) == positive
    return {
        "auroc": auroc_arrays(scores, positive),
        "accuracy": float(np.mean(correct)),
        "weighted_auroc": auroc_arrays(scores, positive, weights),
        "weighted_accuracy": float(np.sum(weights * correct) / np.sum(weights)),
    }


def _safe_summary(scores, positive, weights) -> dict[str, float] | None:
    try:
        return summarize(scores, positive, weights)
    except UndefinedMetricError:
        return None


def screen_items(items: list[Item],
                 threshold: float = INDEPENDENCE_THRESHOLD) -> list[tuple[str, float, bool]]:
    """(id, Hoeffding's D, deemed independent) for every item."""
    def one(it):
        d = hoeffding_d(it.xs, it.ys)
        return it.id, d, independence_flag(d, threshold)
    return _map(one, items)


def evaluate_items(items: list[Item], methods: list[str], *, source: str, kind: str,
                   cells: list | None = None, cell_weights=None, screen: bool = False,
                   threshold: float = INDEPENDENCE_THRESHOLD, config: dict | None = None):
    """Build an :class:`EvalReport` and return it with the raw score table."""
    scores = score_items(items, methods)
    positive = np.array([Direction(it.label) is Direction.XtoY for it in items])
    weights = np.array([it.weight for it in items], dtype=float)
    metrics = {m: summarize(scores[m], positive, weights) for m in methods}

    per_cell: dict[str, list[list[float]]] = {}
    cell_names: list[str] = []
    extra: dict = {}
    if cells:
        cell_names = [cell_id(c) for c in cells]
        cidx = np.array([it.cell for it in items])
        per_cell = {"auroc": [], "accuracy": []}
        for m in methods:
            row_a, row_c = [], []
            for ci in range(len(cells)):
                sel = cidx == ci
                s = _safe_summary(scores[m][sel], positive[sel], np.ones(sel.sum()))
                row_a.append(s["auroc"] if s else 0.5)
                row_c.append(s["accuracy"] if s else 0.5)
            per_cell["auroc"].append(row_a)
            per_cell["accuracy"].append(row_c)
        if cell_weights is not None:
            w = np.asarray(cell_weights, dtype=float)
            w = w / w.sum()
            # mixture of per-cell metrics; not the AUROC of the weighted dataset
            extra["cell_weighted"] = {
                metric: dict(zip(methods, weighted_performance(per_cell[metric], w).tolist()))
                for metric in ("auroc", "accuracy")}

    screened = None
    if screen:
        flags = screen_items(items, threshold)
        screened = [pid for pid, _, indep in flags if indep]
        keep = np.array([not indep for _, _, indep in flags])
        extra["screened_metrics"] = {
            m: _safe_summary(scores[m][keep], positive[keep], weights[keep]) for m in methods}

    report = EvalReport(source=source, kind=kind, methods=list(methods), metrics=metrics,
                        n_items=len(items), cells=cell_names, per_cell=per_cell,
                        screened=screened, threshold=threshold if screen else None,
                        extra=extra, config=config or {})
    return report, scores


def evaluate_dataset(ds: Dataset, methods: list[str], source: str = "", **kw):
    return evaluate_items(items_from_dataset(ds), methods, source=source, kind="dataset",
                          cells=ds.cells, cell_weights=ds.cell_weights, **kw)


def evaluate_benchmark(pairs: list[BenchmarkPair], methods: list[str], source: str = "", **kw):
    report, scores = evaluate_items(items_from_benchmark(pairs), methods, source=source,
                                    kind="benchmark", **kw)
    report.extra["skipped"] = {p.id: p.reason for p in pairs if p.skipped}
    return report, scores
