"""Scatter-plot rasterization, training blur and test-time outlier trimming."""
from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import gaussian_filter

from ..errors import InsufficientDataError, InvalidArgumentError
from ..priors import minmax


def rasterize(xs, ys, n: int = 50) -> np.ndarray:
    """Binary ``n x n`` image with ``I[floor(y (n-1)), floor(x (n-1))] = 1``.

    Rows index y, columns index x. Coordinates must already lie in [0, 1].
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape:
        raise InvalidArgumentError("xs and ys must have equal length")
    if np.any((x < 0) | (x > 1) | (y < 0) | (y > 1)) or np.isnan(x).any() or np.isnan(y).any():
        raise InvalidArgumentError("coordinates must lie in [0, 1]; scale them first")
    img = np.zeros((n, n))
    i = np.floor(x * (n - 1)).astype(int)
    j = np.floor(y * (n - 1)).astype(int)
    img[j, i] = 1.0
    return img


def gaussian_blur(image, sigma: float, renormalize: bool = True) -> np.ndarray:
    """Separable Gaussian filter, reflective borders, radius ``ceil(3 sigma)``."""
    img = np.asarray(image, dtype=float)
    if sigma < 0:
        raise InvalidArgumentError("sigma must be >= 0")
    if sigma == 0:
        return img.copy()
    out = gaussian_filter(img, sigma, mode="reflect", radius=math.ceil(3 * sigma))
    if renormalize:
        peak = out.max()
        if peak > 0:
            out = out / peak
    return out


def trim_outliers(xs, ys, q: float = 0.9) -> tuple[np.ndarray, np.ndarray]:
    """Keep points whose distance from the median is within the ``q``
    quantile of such distances, in both coordinates."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    keep = np.ones(len(x), dtype=bool)
    for v in (x, y):
        dev = np.abs(v - np.median(v))
        keep &= dev <= np.quantile(dev, q)
    return x[keep], y[keep]


def pair_images(xs, ys, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Images of (X, Y) and (Y, X) after min-max scaling."""
    try:
        x, y = minmax(xs), minmax(ys)
    except ValueError as exc:
        raise InsufficientDataError("constant coordinate") from exc
    return rasterize(x, y, n), rasterize(y, x, n)
