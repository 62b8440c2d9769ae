"""The eight causal mechanisms ``y_true = f(x, psi)``.

Every mechanism receives ``x`` already min-max scaled onto [0, 1] and the
scaled latent draw ``psi``; each sample's latent value is pushed through the
rescale operator so that the output is increasing in ``psi`` (the polynomial
mechanism excepted, see :func:`polynomial_mechanism`).
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from ..errors import InternalConsistencyError, InvalidArgumentError
from ..priors import LatentDraw, rescale

log = logging.getLogger(__name__)

DOMAIN_FLOOR = 0.05
COS_EPS = 1e-3


class MechanismKind(str, Enum):
    Linear = "Linear"
    PiecewiseLinear = "PiecewiseLinear"
    Exponential = "Exponential"
    Logarithmic = "Logarithmic"
    InverseProportional = "InverseProportional"
    BrownianLike = "BrownianLike"
    Polynomial = "Polynomial"
    PowerLaw = "PowerLaw"


SCALAR_KINDS = frozenset({
    MechanismKind.Exponential,
    MechanismKind.Logarithmic,
    MechanismKind.InverseProportional,
    MechanismKind.PowerLaw,
})


@dataclass(frozen=True)
class HyperParams:
    """Fixed hyperparameters of the mechanism priors.

    ``mu_psi ~ Normal(mu_mu, sigma_mu)`` and ``sigma_psi ~ InvGamma`` with
    mean ``mu_sigma`` and std ``sigma_sigma``; endpoint stds are
    ``InvGamma(shape=gamma_m, scale=gamma_v)``.
    """

    mu_mu: float = 1.0
    sigma_mu: float = 0.75
    mu_sigma: float = 1.0
    sigma_sigma: float = 0.5
    gamma_m: float = 3.0
    gamma_v: float = 1.0
    max_K: int = 6
    max_o: int = 5
    P: float = 2.0

    def __post_init__(self):
        if self.gamma_m <= 0 or self.gamma_v <= 0:
            raise InvalidArgumentError("gamma_m and gamma_v must be positive")
        if self.mu_sigma <= 0 or self.sigma_sigma <= 0:
            raise InvalidArgumentError("mu_sigma and sigma_sigma must be positive")
        if self.max_K < 2 or self.max_o < 2:
            raise InvalidArgumentError("max_K and max_o must be >= 2")
        if self.P <= 0:
            raise InvalidArgumentError("P must be positive")


@dataclass
class MechanismParams:
    """Example-level parameters of one mechanism draw.

    Only the fields relevant to ``kind`` are meaningful; the rest keep their
    defaults. ``knots``/``phis``/``sigmas`` describe the slice endpoints of
    the piecewise and polynomial mechanisms.
    """

    kind: MechanismKind
    mu_psi: float = 0.0
    sigma_psi: float = 0.0
    mu0: float = 0.0
    mu1: float = 0.0
    sigma0: float = 1.0
    sigma1: float = 1.0
    phi: float = 0.0
    gamma_m: float = 3.0
    gamma_v: float = 1.0
    K: int = 1
    max_K: int = 6
    o: int = 2
    max_o: int = 5
    P: float = 2.0
    delta_t: float | None = None
    flip_y: bool = False
    flip_x: bool = False
    knots: list[float] = field(default_factory=list)
    phis: list[float] = field(default_factory=list)
    sigmas: list[float] = field(default_factory=list)
    knot_ranks: list[int] = field(default_factory=list)
    path_seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = MechanismKind(self.kind).value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MechanismParams":
        d = dict(d)
        d["kind"] = MechanismKind(d["kind"])
        return cls(**d)


def inv_gamma(shape: float, scale: float, rng: np.random.Generator) -> float:
    return float(scale / rng.gamma(shape))


def _inv_gamma_from_moments(mean: float, std: float, rng: np.random.Generator) -> float:
    shape = 2.0 + (mean / std) ** 2
    return inv_gamma(shape, mean * (shape - 1.0), rng)


def sample_phi(rng: np.random.Generator) -> float:
    """Slope angle on [0, 2pi), redrawn while tan(phi) is near-singular."""
    while True:
        phi = float(rng.uniform(0.0, 2.0 * math.pi))
        if abs(math.cos(phi)) >= COS_EPS:
            return phi


def sample_mechanism_params(kind: MechanismKind, hyper: HyperParams, n: int,
                            rng: np.random.Generator) -> MechanismParams:
    kind = MechanismKind(kind)
    p = MechanismParams(kind=kind, gamma_m=hyper.gamma_m, gamma_v=hyper.gamma_v,
                        max_K=hyper.max_K, max_o=hyper.max_o, P=hyper.P)
    ig = lambda: inv_gamma(hyper.gamma_m, hyper.gamma_v, rng)  # noqa: E731

    if kind in SCALAR_KINDS:
        p.mu_psi = float(rng.normal(hyper.mu_mu, hyper.sigma_mu))
        p.sigma_psi = _inv_gamma_from_moments(hyper.mu_sigma, hyper.sigma_sigma, rng)
        p.flip_y = bool(rng.integers(2))
        p.flip_x = bool(rng.integers(2))
    elif kind is MechanismKind.Linear:
        p.sigma0, p.sigma1 = ig(), ig()
        p.phi = sample_phi(rng)
        p.mu1 = math.tan(p.phi)
    elif kind is MechanismKind.PiecewiseLinear:
        p.K = int(rng.integers(2, hyper.max_K + 1))
        inner = np.sort(rng.random(p.K - 1))
        p.knots = [0.0, *map(float, inner), 1.0]
        p.phis = [sample_phi(rng) for _ in range(p.K)]
        p.sigmas = [ig() for _ in range(p.K + 1)]
    elif kind is MechanismKind.BrownianLike:
        p.sigma0 = ig()
        p.phi = sample_phi(rng)
        p.path_seed = int(rng.integers(2**63))
    elif kind is MechanismKind.Polynomial:
        p.o = int(rng.integers(2, hyper.max_o + 1))
        m = min(p.o + 1, n)
        p.knot_ranks = sorted(int(r) for r in rng.choice(n, size=m, replace=False))
        p.phis = [sample_phi(rng) for _ in range(m - 1)]
        p.sigmas = [ig() for _ in range(m)]
    return p


def _psi_values(psi) -> np.ndarray:
    return np.asarray(psi.values if isinstance(psi, LatentDraw) else psi, dtype=float)


def _check_finite(y: np.ndarray, kind: MechanismKind) -> np.ndarray:
    if not np.all(np.isfinite(y)):
        raise InternalConsistencyError(f"{kind.value} produced non-finite output")
    return y


def scalar_mechanism(kind: MechanismKind, x, psi, params: MechanismParams) -> np.ndarray:
    """Exponential, logarithmic, inverse-proportional and power-law maps.

    ``a = rescale(psi)`` for the exponential and logarithm; the inverse and
    power law use the reversed latent ``1 - psi`` so that ``y`` still
    increases with ``psi``. Where the formula needs a positive argument,
    ``a`` is shifted up until ``min(x + a) >= 0.05`` (``min(a)`` for the
    power law).
    """
    kind = MechanismKind(kind)
    if kind not in SCALAR_KINDS:
        raise InvalidArgumentError(f"{kind.value} is not a scalar mechanism")
    x = np.asarray(x, dtype=float)
    v = _psi_values(psi)
    if kind in (MechanismKind.InverseProportional, MechanismKind.PowerLaw):
        v = 1.0 - v
    a = rescale(v, params.mu_psi, params.sigma_psi)

    with np.errstate(over="ignore"):  # overflow is reported by the finite check
        if kind is MechanismKind.Exponential:
            y = np.exp(x * a)
        elif kind is MechanismKind.PowerLaw:
            a = a + max(0.0, DOMAIN_FLOOR - a.min())
            y = np.power(x, a)
        else:
            a = a + max(0.0, DOMAIN_FLOOR - (x + a).min())
            y = np.log(x + a) if kind is MechanismKind.Logarithmic else 1.0 / (x + a)
    return _check_finite(y, kind)


def linear_mechanism(x, psi, params: MechanismParams) -> np.ndarray:
    """``y = a + (b - a) x`` with endpoint draws ``a``, ``b`` of the latent."""
    x = np.asarray(x, dtype=float)
    v = _psi_values(psi)
    a = rescale(v, params.mu0, params.sigma0)
    b = rescale(v, params.mu1, params.sigma1)
    return a + (b - a) * x


def _endpoint_means(knots, phis) -> np.ndarray:
    # continuity: each slice starts where the previous one ended
    mu = [0.0]
    for k, phi in enumerate(phis):
        mu.append(mu[-1] + math.tan(phi) * (knots[k + 1] - knots[k]))
    return np.array(mu)


def piecewise_mechanism(x, psi, params: MechanismParams) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    v = _psi_values(psi)
    knots = np.asarray(params.knots, dtype=float)
    if len(knots) < 3 or len(params.phis) != len(knots) - 1 or len(params.sigmas) != len(knots):
        raise InvalidArgumentError("piecewise params need K+1 knots, K angles and K+1 stds")
    mu = _endpoint_means(knots, params.phis)
    ends = np.stack([rescale(v, m, s) for m, s in zip(mu, params.sigmas)])  # (K+1, n)
    k = np.clip(np.searchsorted(knots, x, side="right") - 1, 0, len(knots) - 2)
    left, right = knots[k], knots[k + 1]
    t = (x - left) / (right - left)
    idx = np.arange(len(x))
    return ends[k, idx] + (ends[k + 1, idx] - ends[k, idx]) * t


def _local_slope(t: np.ndarray, mu: np.ndarray, fallback: float) -> float:
    # degree <= 2 least-squares fit over the window, derivative at the last point
    h = t[-1] - t[0]
    if len(t) < 2 or h <= 0:
        return fallback
    u = (t - t[-1]) / h
    deg = min(2, len(np.unique(u)) - 1)
    V = np.vander(u, deg + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(V, mu, rcond=None)
    return float(coef[1] / h)


def brownian_path(t_sorted: np.ndarray, z: np.ndarray, slope0: float, P: float,
                  window: int = 5) -> np.ndarray:
    """Slice means along sorted positions with a momentum term.

    ``mu[k+1] = mu[k] + slope * dt + sqrt(dt**P / P) * z[k]`` where ``slope``
    is the derivative of a local quadratic fit over the last ``window``
    means (``slope0`` until two points exist).
    """
    n = len(t_sorted)
    mu = np.zeros(n)
    slope = slope0
    for k in range(n - 1):
        lo = max(0, k + 1 - window)
        if k >= 1:
            slope = _local_slope(t_sorted[lo:k + 1], mu[lo:k + 1], slope)
        dt = t_sorted[k + 1] - t_sorted[k]
        mu[k + 1] = mu[k] + slope * dt + math.sqrt(dt ** P / P) * z[k]
    return mu


def brownian_mechanism(x, psi, params: MechanismParams,
                       rng: np.random.Generator | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    v = _psi_values(psi)
    if len(x) < 3:
        lin = MechanismParams(MechanismKind.Linear, sigma0=params.sigma0,
                              sigma1=params.sigma0, mu1=math.tan(params.phi))
        return linear_mechanism(x, v, lin)
    if rng is None:
        rng = np.random.default_rng(params.path_seed)
    order = np.argsort(x, kind="stable")
    z = rng.standard_normal(len(x))
    mu_sorted = brownian_path(x[order], z, math.tan(params.phi), params.P)
    mu = np.empty_like(mu_sorted)
    mu[order] = mu_sorted
    return mu + rescale(v, 0.0, params.sigma0)


def lagrange_basis(knot_x, x) -> np.ndarray:
    """Matrix ``L[k, i]`` of Lagrange basis polynomials at ``x[i]``."""
    knot_x = np.asarray(knot_x, dtype=float)
    x = np.asarray(x, dtype=float)
    L = np.ones((len(knot_x), len(x)))
    for k, xk in enumerate(knot_x):
        for j, xj in enumerate(knot_x):
            if j != k:
                L[k] *= (x - xj) / (xk - xj)
    return L


def interpolate_knots(knot_x, knot_values, x) -> np.ndarray:
    """Evaluate, for each sample ``i``, the polynomial through
    ``(knot_x[k], knot_values[k, i])`` at ``x[i]``."""
    L = lagrange_basis(knot_x, x)
    return np.sum(L * np.asarray(knot_values, dtype=float), axis=0)


def polynomial_mechanism(x, psi, params: MechanismParams,
                         rng: np.random.Generator | None = None) -> np.ndarray:
    """Per-sample interpolating polynomial through rescaled latent knots.

    Knots are taken at ``params.knot_ranks`` positions of the sorted ``x``
    (drawn from ``rng`` if empty). Duplicate knot locations lower the order.
    """
    x = np.asarray(x, dtype=float)
    v = _psi_values(psi)
    ranks = list(params.knot_ranks)
    if not ranks:
        if rng is None:
            raise InvalidArgumentError("polynomial mechanism needs knot_ranks or an rng")
        m = min(params.o + 1, len(x))
        ranks = sorted(int(r) for r in rng.choice(len(x), size=m, replace=False))
    knot_x = np.sort(x)[ranks]
    keep = np.concatenate(([True], np.diff(knot_x) > 0))
    phis, sigmas = list(params.phis), list(params.sigmas)
    if not keep.all():
        log.warning("polynomial: %d duplicate knot(s), order reduced to %d",
                    int((~keep).sum()), int(keep.sum()) - 1)
        idx = np.flatnonzero(keep)
        knot_x = knot_x[idx]
        sigmas = [sigmas[i] for i in idx]
        phis = phis[:len(idx) - 1]
    if len(knot_x) < 2:
        return rescale(v, 0.0, sigmas[0] if sigmas else 0.0)
    mu = _endpoint_means(knot_x, phis)
    values = np.stack([rescale(v, m, s) for m, s in zip(mu, sigmas)])
    return interpolate_knots(knot_x, values, x)


def evaluate(params: MechanismParams, x, psi) -> np.ndarray:
    """Dispatch to the mechanism named by ``params.kind``."""
    kind = MechanismKind(params.kind)
    if kind in SCALAR_KINDS:
        return scalar_mechanism(kind, x, psi, params)
    if kind is MechanismKind.Linear:
        return linear_mechanism(x, psi, params)
    if kind is MechanismKind.PiecewiseLinear:
        return piecewise_mechanism(x, psi, params)
    if kind is MechanismKind.BrownianLike:
        return brownian_mechanism(x, psi, params)
    return polynomial_mechanism(x, psi, params)
