"""Latent-variable priors and the shape-preserving rescale operator."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateInputError, InvalidArgumentError


class PriorKind(str, Enum):
    Uniform = "Uniform"
    Normal = "Normal"
    Rayleigh = "Rayleigh"


@dataclass(frozen=True)
class LatentDraw:
    values: np.ndarray
    kind: PriorKind

    def __len__(self) -> int:
        return len(self.values)


def minmax(values, *, constant: float | None = None) -> np.ndarray:
    """Map ``values`` linearly onto [0, 1].

    A constant input raises :class:`DegenerateInputError` unless ``constant``
    is given, in which case every entry maps to that value.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise InvalidArgumentError("cannot min-max scale an empty vector")
    lo, hi = v.min(), v.max()
    if not hi > lo:
        if constant is None:
            raise DegenerateInputError("constant vector cannot be min-max scaled")
        return np.full_like(v, constant)
    out = (v - lo) / (hi - lo)
    # pin the extremes; (hi - lo) / (hi - lo) can round below 1
    out[v == lo] = 0.0
    out[v == hi] = 1.0
    return out


def draw_base(kind: PriorKind, n: int, rng: np.random.Generator) -> np.ndarray:
    """Raw draws from the unscaled base family."""
    kind = PriorKind(kind)
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    if kind is PriorKind.Uniform:
        return rng.random(n)
    if kind is PriorKind.Normal:
        return rng.standard_normal(n)
    return rng.rayleigh(1.0, n)


def sample_prior(kind: PriorKind, n: int, rng: np.random.Generator) -> LatentDraw:
    """Draw ``n`` latent values from ``kind`` and scale them onto [0, 1].

    Scaling uses the sample min and max, so for ``n >= 2`` the output always
    spans exactly [0, 1]. A single draw maps to 0.5.
    """
    kind = PriorKind(kind)
    raw = draw_base(kind, n, rng)
    return LatentDraw(minmax(raw, constant=0.5), kind)


def rescale(values, mu: float, sigma: float) -> np.ndarray:
    """Affine map of ``values`` onto population mean ``mu`` and std ``sigma``."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise InvalidArgumentError("cannot rescale an empty vector")
    if sigma < 0:
        raise InvalidArgumentError(f"sigma must be nonnegative, got {sigma}")
    # exactly rounded sums keep the result independent of element order
    mean = math.fsum(v) / v.size
    sd = math.sqrt(math.fsum((v - mean) ** 2) / v.size)
    if sd == 0.0:
        if sigma > 0:
            raise DegenerateInputError("constant input cannot reach a positive std")
        return np.full_like(v, mu)
    return mu + sigma * (v - mean) / sd
