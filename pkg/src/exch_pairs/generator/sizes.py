"""Three-component Gaussian mixture over per-example sample counts."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from ..errors import InvalidArgumentError

MIN_SIZE = 20
MAX_SIZE = 10_000


@dataclass
class SizeModel:
    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    loglik_history: list[float] = field(default_factory=list)

    def sample(self, rng: np.random.Generator, size: int | None = None):
        """Draw sample counts, rounded and clamped to [20, 10000]."""
        k = rng.choice(len(self.weights), p=self.weights, size=size)
        raw = rng.normal(self.means[k], self.stds[k])
        out = np.clip(np.rint(raw), MIN_SIZE, MAX_SIZE).astype(int)
        return int(out) if size is None else out

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "means": self.means.tolist(),
                "stds": self.stds.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "SizeModel":
        return cls(np.asarray(d["weights"], float), np.asarray(d["means"], float),
                   np.asarray(d["stds"], float))


def _loglik_terms(x, w, m, s):
    return (np.log(w)[None, :] - np.log(s)[None, :] - 0.5 * np.log(2 * np.pi)
            - 0.5 * ((x[:, None] - m[None, :]) / s[None, :]) ** 2)


def fit_size_model(sizes, n_components: int = 3, max_iter: int = 500,
                   tol: float = 1e-10, min_std: float = 0.5) -> SizeModel:
    """EM fit of a univariate Gaussian mixture.

    Component stds are floored at ``min_std`` (counts are integers, so a
    component collapsing onto one value would otherwise diverge); the
    floored M-step is still the constrained maximizer, so the log-likelihood
    never decreases.
    """
    x = np.asarray(sizes, dtype=float)
    if x.ndim != 1 or np.any(x <= 0):
        raise InvalidArgumentError("sizes must be a 1-D vector of positive counts")
    if len(np.unique(x)) < n_components:
        raise InvalidArgumentError(f"need >= {n_components} distinct sizes")

    w = np.full(n_components, 1.0 / n_components)
    m = np.quantile(x, (np.arange(n_components) + 0.5) / n_components)
    s = np.full(n_components, max(x.std(), min_std))
    history = []
    for _ in range(max_iter):
        terms = _loglik_terms(x, w, m, s)
        norm = logsumexp(terms, axis=1)
        history.append(float(norm.sum()))
        if len(history) > 1 and history[-1] - history[-2] < tol * abs(history[-2]):
            break
        resp = np.exp(terms - norm[:, None])
        nk = resp.sum(axis=0) + 1e-300
        w = nk / nk.sum()
        m = (resp * x[:, None]).sum(axis=0) / nk
        var = (resp * (x[:, None] - m[None, :]) ** 2).sum(axis=0) / nk
        s = np.maximum(np.sqrt(var), min_std)
    return SizeModel(w, m, s, history)
