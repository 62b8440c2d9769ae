"""Ranking/decision metrics and Hoeffding's D independence statistic."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import InsufficientDataError, InvalidArgumentError, UndefinedMetricError
from .types import Direction

INDEPENDENCE_THRESHOLD = 0.012


@dataclass(frozen=True)
class LabeledScore:
    score: float
    label: Direction
    weight: float = 1.0

    def __post_init__(self):
        if not self.weight >= 0:
            raise InvalidArgumentError(f"weight must be >= 0, got {self.weight}")


def _as_arrays(items: Sequence[LabeledScore]):
    scores = np.array([it.score for it in items], dtype=float)
    positive = np.array([Direction(it.label) is Direction.XtoY for it in items], dtype=bool)
    weights = np.array([it.weight for it in items], dtype=float)
    return scores, positive, weights


def auroc(items: Sequence[LabeledScore]) -> float:
    """Weighted AUROC with XtoY as the positive class.

    Each (positive, negative) pair contributes ``w_pos * w_neg`` times 1 if the
    positive scores higher, 1/2 on a tie, 0 otherwise; the total is divided
    by the summed pair weight.
    """
    scores, positive, weights = _as_arrays(items)
    return auroc_arrays(scores, positive, weights)


def auroc_arrays(scores, positive, weights=None) -> float:
    scores = np.asarray(scores, dtype=float)
    positive = np.asarray(positive, dtype=bool)
    weights = np.ones_like(scores) if weights is None else np.asarray(weights, dtype=float)
    if np.isnan(scores).any():
        raise InvalidArgumentError("scores contain NaN")
    w_pos, w_neg = weights[positive].sum(), weights[~positive].sum()
    if not (positive.any() and (~positive).any()) or w_pos == 0 or w_neg == 0:
        raise UndefinedMetricError("AUROC needs weight on both classes")

    uniq, inv = np.unique(scores, return_inverse=True)
    neg_at = np.bincount(inv, weights=np.where(positive, 0.0, weights), minlength=len(uniq))
    pos_at = np.bincount(inv, weights=np.where(positive, weights, 0.0), minlength=len(uniq))
    neg_below = np.concatenate(([0.0], np.cumsum(neg_at)[:-1]))
    numerator = np.sum(pos_at * (neg_below + 0.5 * neg_at))
    return float(numerator / (w_pos * w_neg))


def accuracy(items: Iterable[tuple[Direction, Direction, float]]) -> float:
    """Weighted fraction of ``(decision, label, weight)`` triples that agree."""
    items = list(items)
    if not items:
        raise UndefinedMetricError("accuracy of an empty set is undefined")
    hit = sum(w for d, l, w in items if Direction(d) is Direction(l))
    total = sum(w for _, _, w in items)
    if total <= 0:
        raise UndefinedMetricError("total weight is zero")
    return float(hit / total)


def _bivariate_counts(x: np.ndarray, y: np.ndarray, chunk: int = 1024) -> np.ndarray:
    # Q_i - 1: points strictly below in both coordinates, with 1/2 for a tie in
    # one coordinate and 1/4 for a tie in both (self excluded).
    n = len(x)
    q = np.empty(n)
    for start in range(0, n, chunk):
        xi = x[start:start + chunk, None]
        yi = y[start:start + chunk, None]
        cx = (x[None, :] < xi) + 0.5 * (x[None, :] == xi)
        cy = (y[None, :] < yi) + 0.5 * (y[None, :] == yi)
        # the self term contributes 1/2 * 1/2
        q[start:start + chunk] = (cx * cy).sum(axis=1) - 0.25
    return q


def hoeffding_d(xs, ys) -> float:
    """Hoeffding's D in the classical scaling, range [-1/60, 1/30].

    Ties are handled with midranks and the usual fractional bivariate count.
    Multiply by 30 for the [-1/2, 1] scaling used by some packages.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidArgumentError("xs and ys must be 1-D and equally long")
    n = len(x)
    if n < 5:
        raise InsufficientDataError(f"Hoeffding's D needs n >= 5, got {n}")
    r = rankdata(x)
    s = rankdata(y)
    q = _bivariate_counts(x, y) + 1.0
    d1 = np.sum((q - 1) * (q - 2))
    d2 = np.sum((r - 1) * (r - 2) * (s - 1) * (s - 2))
    d3 = np.sum((r - 2) * (s - 2) * (q - 1))
    num = (n - 2) * (n - 3) * d1 + d2 - 2 * (n - 2) * d3
    return float(num / (n * (n - 1) * (n - 2) * (n - 3) * (n - 4)))


def independence_flag(d: float, threshold: float = INDEPENDENCE_THRESHOLD) -> bool:
    """True when ``d`` is strictly below ``threshold`` (deemed independent)."""
    return bool(d < threshold)
