"""Simplex-constrained weight fitting against a reference benchmark.

Solves ``min_w ||A w - b||^2 + reg * ||w||_2`` subject to ``w >= 0`` and
``sum(w) = 1`` by projected gradient descent with backtracking.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError


@dataclass
class WeightProblem:
    A: np.ndarray
    b: np.ndarray
    reg: float = 1.0

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float).ravel()
        if self.A.shape[0] != self.b.shape[0]:
            raise InvalidArgumentError(
                f"A has {self.A.shape[0]} rows but b has {self.b.shape[0]} entries")
        if self.A.size == 0:
            raise InvalidArgumentError("empty problem")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))
                and np.isfinite(self.reg)):
            raise InvalidArgumentError("non-finite entries in weight problem")
        if self.reg < 0:
            raise InvalidArgumentError("reg must be >= 0")

    def objective(self, w: np.ndarray) -> float:
        r = self.A @ w - self.b
        return float(r @ r + self.reg * np.linalg.norm(w))

    def gradient(self, w: np.ndarray) -> np.ndarray:
        g = 2.0 * self.A.T @ (self.A @ w - self.b)
        nrm = np.linalg.norm(w)
        if self.reg and nrm > 0:
            g = g + self.reg * w / nrm
        return g

    def drop_row(self, i: int) -> "WeightProblem":
        keep = np.arange(self.A.shape[0]) != i
        return WeightProblem(self.A[keep], self.b[keep], self.reg)


@dataclass
class WeightFit:
    w: np.ndarray
    objective: float
    iterations: int
    history: list[float] = field(default_factory=list, repr=False)


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    tau = css[rho] / (rho + 1)
    return np.maximum(v - tau, 0.0)


def _descend(problem: WeightProblem, w0: np.ndarray, tol: float, max_iter: int) -> WeightFit:
    w = project_simplex(w0)
    f = problem.objective(w)
    history = [f]
    step = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        g = problem.gradient(w)
        while True:
            cand = project_simplex(w - step * g)
            fc = problem.objective(cand)
            d = cand - w
            # sufficient decrease along the projection arc
            if fc <= f + g @ d + (d @ d) / (2.0 * step) or step < 1e-16:
                break
            step *= 0.5
        if fc > f:
            break
        decrease = f - fc
        w, f = cand, fc
        history.append(f)
        if decrease < tol:
            break
        step *= 2.0
    return WeightFit(w, f, it, history)


def fit_weights(problem: WeightProblem, tol: float = 1e-12, max_iter: int = 10_000,
                restarts: int = 20, seed: int = 0) -> WeightFit:
    """Best of ``restarts`` projected-gradient runs.

    Run 0 starts at the barycenter, the rest at Dirichlet(1) draws. Ties in
    objective (within 1e-12) go to the lowest run index.
    """
    d = problem.A.shape[1]
    rng = np.random.default_rng(seed)
    starts = [np.full(d, 1.0 / d)] + [rng.dirichlet(np.ones(d)) for _ in range(restarts - 1)]
    best = None
    for w0 in starts:
        fit = _descend(problem, w0, tol, max_iter)
        if best is None or fit.objective < best.objective - 1e-12:
            best = fit
    return best


def weighted_performance(per_cell, w) -> np.ndarray:
    """Per-method weighted average ``A @ w`` of per-cell performance."""
    A = np.atleast_2d(np.asarray(per_cell, dtype=float))
    w = np.asarray(w, dtype=float).ravel()
    if A.shape[1] != w.shape[0]:
        raise InvalidArgumentError(f"A has {A.shape[1]} columns but w has {w.shape[0]} entries")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise InvalidArgumentError("w must lie on the probability simplex")
    return A @ w


def distance_report(ours, reference) -> tuple[float, float]:
    """Mean absolute and mean squared difference between two performance vectors."""
    a = np.asarray(ours, dtype=float).ravel()
    r = np.asarray(reference, dtype=float).ravel()
    if a.shape != r.shape:
        raise InvalidArgumentError("vectors must have equal length")
    if a.size == 0:
        raise InvalidArgumentError("empty vectors")
    diff = a - r
    return float(np.mean(np.abs(diff))), float(np.mean(diff ** 2))


@dataclass
class LooReport:
    abs_errors: np.ndarray
    sq_errors: np.ndarray
    weights: list[np.ndarray]

    @property
    def l1(self) -> float:
        return float(np.mean(self.abs_errors))

    @property
    def l2(self) -> float:
        return float(np.mean(self.sq_errors))


def loo_cross_validation(problem: WeightProblem, **fit_kwargs) -> LooReport:
    """Refit without each method in turn and score the held-out method."""
    m = problem.A.shape[0]
    if m < 2:
        raise InvalidArgumentError("leave-one-out needs at least two methods")
    abs_err, sq_err, ws = [], [], []
    for i in range(m):
        fit = fit_weights(problem.drop_row(i), **fit_kwargs)
        delta = float(problem.A[i] @ fit.w - problem.b[i])
        abs_err.append(abs(delta))
        sq_err.append(delta * delta)
        ws.append(fit.w)
    return LooReport(np.array(abs_err), np.array(sq_err), ws)
