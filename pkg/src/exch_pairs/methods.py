"""Reference causal-direction scorers.

Every scorer returns a :class:`DirectionScore` whose sign encodes the
decision (positive favors X -> Y). Each is written as ``g(y, x) - g(x, y)``
for a one-sided term ``g`` so that swapping the inputs negates the score
exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateInputError, InsufficientDataError, InvalidArgumentError
from .metrics import hoeffding_d
from .priors import minmax
from .types import Direction

DEFAULT_DEGREE = 3


@dataclass(frozen=True)
class DirectionScore:
    score: float
    decision: Direction
    confidence: float
    tie: bool = False

    @classmethod
    def from_score(cls, score: float) -> "DirectionScore":
        score = float(score)
        if not np.isfinite(score):
            raise InvalidArgumentError(f"non-finite score {score}")
        decision = Direction.YtoX if score < 0 else Direction.XtoY
        return cls(score, decision, abs(score), tie=score == 0.0)


def _prepare(xs, ys, min_n: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(xs, dtype=float).ravel()
    y = np.asarray(ys, dtype=float).ravel()
    if x.shape != y.shape:
        raise InvalidArgumentError("xs and ys must have equal length")
    if len(x) < min_n:
        raise InsufficientDataError(f"need at least {min_n} samples, got {len(x)}")
    try:
        return minmax(x), minmax(y)
    except DegenerateInputError as exc:
        raise InsufficientDataError("constant input") from exc


# --- IGCI -----------------------------------------------------------------

def _slope_term(u: np.ndarray, v: np.ndarray) -> float:
    """Sum of log|dv/du| along u-sorted order, duplicate u merged (mean v)."""
    uu, inv = np.unique(u, return_inverse=True)
    vv = np.bincount(inv, weights=v) / np.bincount(inv)
    du, dv = np.diff(uu), np.diff(vv)
    ok = dv != 0
    if not ok.any():
        raise InsufficientDataError("all increments are zero")
    return float(np.sum(np.log(np.abs(dv[ok] / du[ok]))))


def igci_score(xs, ys) -> DirectionScore:
    """Slope-based IGCI with a uniform reference measure.

    The forward slope term is larger when ``y`` is the noisier, more
    curved variable, so the score is ``(term(y, x) - term(x, y)) / n``.
    """
    x, y = _prepare(xs, ys, 3)
    return DirectionScore.from_score((_slope_term(y, x) - _slope_term(x, y)) / len(x))


# --- RECI -----------------------------------------------------------------

def _design(u: np.ndarray, degree: int) -> np.ndarray:
    if len(np.unique(u)) < degree + 1:
        raise InsufficientDataError(f"fewer than {degree + 1} distinct regressor values")
    return np.vander(u, degree + 1, increasing=True)


def poly_residuals(u: np.ndarray, v: np.ndarray, degree: int) -> np.ndarray:
    """Residuals of the least-squares polynomial regression of v on u."""
    V = _design(u, degree)
    coef, *_ = np.linalg.lstsq(V, v, rcond=None)
    return v - V @ coef


def _mse(u: np.ndarray, v: np.ndarray, degree: int) -> float:
    r = poly_residuals(u, v, degree)
    return float(np.mean(r * r))


def reci_score(xs, ys, degree: int = DEFAULT_DEGREE) -> DirectionScore:
    """MSE(x | y) - MSE(y | x) of polynomial regressions on scaled data."""
    if degree < 1:
        raise InvalidArgumentError("degree must be >= 1")
    x, y = _prepare(xs, ys, degree + 2)
    return DirectionScore.from_score(_mse(y, x, degree) - _mse(x, y, degree))


# --- ANM with Hoeffding's D ---------------------------------------------

def _residual_dependence(u: np.ndarray, v: np.ndarray, degree: int) -> float:
    return hoeffding_d(poly_residuals(u, v, degree), u)


def anm_hoeffding_score(xs, ys, degree: int = DEFAULT_DEGREE) -> DirectionScore:
    """Additive-noise fit in both directions, residual dependence by Hoeffding's D.

    score = D(resid_x|y, y) - D(resid_y|x, x): the direction whose residuals
    look more independent of the regressor wins.
    """
    if degree < 1:
        raise InvalidArgumentError("degree must be >= 1")
    x, y = _prepare(xs, ys, max(5, degree + 2))
    return DirectionScore.from_score(_residual_dependence(y, x, degree)
                                     - _residual_dependence(x, y, degree))


METHODS: dict[str, Callable[..., DirectionScore]] = {
    "IGCI": igci_score,
    "RECI": reci_score,
    "ANM": anm_hoeffding_score,
}


def get_method(name: str) -> Callable[..., DirectionScore]:
    for key, fn in METHODS.items():
        if key.lower() == name.lower():
            return fn
    raise InvalidArgumentError(f"unknown method {name!r}; choose from {sorted(METHODS)}")
