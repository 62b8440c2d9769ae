"""Example generation, balanced dataset assembly and the noisy variant."""
from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..errors import DegenerateExampleError, DegenerateInputError, InvalidArgumentError
from ..priors import LatentDraw, PriorKind, draw_base, minmax
from ..types import Direction
from . import mechanisms as mech
from .mechanisms import HyperParams, MechanismKind, MechanismParams
from .sizes import SizeModel

MAX_RETRIES = 10
DEFAULT_SIGMA = 0.01
DEFAULT_N_SAMPLES = 500


@dataclass(frozen=True)
class GenConfig:
    prior_theta: PriorKind
    prior_psi: PriorKind
    mechanism: MechanismKind
    sigma_x: float = DEFAULT_SIGMA
    sigma_y: float = DEFAULT_SIGMA
    n_samples: int = DEFAULT_N_SAMPLES
    seed: int = 0
    hyper: HyperParams = field(default_factory=HyperParams)

    def __post_init__(self):
        object.__setattr__(self, "prior_theta", PriorKind(self.prior_theta))
        object.__setattr__(self, "prior_psi", PriorKind(self.prior_psi))
        object.__setattr__(self, "mechanism", MechanismKind(self.mechanism))
        if self.sigma_x < 0 or self.sigma_y < 0:
            raise InvalidArgumentError("sigma_x and sigma_y must be >= 0")
        if self.n_samples < 2:
            raise InvalidArgumentError("n_samples must be >= 2")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(prior_theta=self.prior_theta.value, prior_psi=self.prior_psi.value,
                 mechanism=self.mechanism.value)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        d = dict(d)
        d["hyper"] = HyperParams(**d.get("hyper", {}))
        return cls(**d)


@dataclass
class ExampleMeta:
    config: GenConfig
    params: MechanismParams
    weight: float = 1.0
    cell: int | None = None
    noise: dict | None = None

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(), "params": self.params.to_dict(),
                "weight": self.weight, "cell": self.cell, "noise": self.noise}

    @classmethod
    def from_dict(cls, d: dict) -> "ExampleMeta":
        return cls(GenConfig.from_dict(d["config"]), MechanismParams.from_dict(d["params"]),
                   d.get("weight", 1.0), d.get("cell"), d.get("noise"))


@dataclass
class Example:
    xs: np.ndarray
    ys: np.ndarray
    label: Direction
    meta: ExampleMeta

    def swapped(self) -> "Example":
        """Exchange the axes; the label flips with them."""
        return Example(self.ys.copy(), self.xs.copy(), self.label.flipped(), self.meta)


@dataclass
class SampleDraws:
    """Per-sample randomness; row ``i`` belongs to sample ``i`` only."""

    theta_raw: np.ndarray
    psi_raw: np.ndarray
    eps_x: np.ndarray
    eps_y: np.ndarray

    def permuted(self, perm) -> "SampleDraws":
        return SampleDraws(self.theta_raw[perm], self.psi_raw[perm],
                           self.eps_x[perm], self.eps_y[perm])


def draw_samples(config: GenConfig, rng: np.random.Generator) -> SampleDraws:
    n = config.n_samples
    return SampleDraws(draw_base(config.prior_theta, n, rng), draw_base(config.prior_psi, n, rng),
                       rng.standard_normal(n), rng.standard_normal(n))


def build_example(config: GenConfig, params: MechanismParams, draws: SampleDraws) -> Example:
    """Deterministic core of the generation algorithm.

    Scale the latent draws, add measurement noise to the cause, evaluate the
    mechanism, add measurement noise to the effect and min-max scale both.
    """
    theta = minmax(draws.theta_raw, constant=0.5)
    psi = LatentDraw(minmax(draws.psi_raw, constant=0.5), config.prior_psi)
    X = theta + config.sigma_x * draws.eps_x
    try:
        x_unit = minmax(X)
    except DegenerateInputError as exc:
        raise DegenerateExampleError("constant cause") from exc

    y_true = mech.evaluate(params, x_unit, psi)
    if params.flip_y:
        y_true = -y_true
    if params.flip_x:
        X = -X
    Y = y_true + config.sigma_y * draws.eps_y
    try:
        xs, ys = minmax(X), minmax(Y)
    except DegenerateInputError as exc:
        raise DegenerateExampleError("constant effect") from exc
    return Example(xs, ys, Direction.XtoY, ExampleMeta(config, params))


def generate_example(config: GenConfig, rng: np.random.Generator | None = None) -> Example:
    """One labeled XtoY example; degenerate draws are retried up to 10 times."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    for _ in range(MAX_RETRIES):
        draws = draw_samples(config, rng)
        params = mech.sample_mechanism_params(config.mechanism, config.hyper,
                                              config.n_samples, rng)
        try:
            return build_example(config, params, draws)
        except DegenerateExampleError:
            continue
    raise DegenerateExampleError(
        f"{config.mechanism.value}: {MAX_RETRIES} consecutive degenerate draws")


Cell = tuple  # (prior_theta, prior_psi, mechanism)


def all_cells() -> list[Cell]:
    """The 72 combinations: mechanism x prior(theta) x prior(psi)."""
    return [(pt, pp, m) for m, pt, pp in
            itertools.product(MechanismKind, PriorKind, PriorKind)]


def cell_id(cell: Cell) -> str:
    pt, pp, m = cell
    return f"{MechanismKind(m).value}/{PriorKind(pt).value}/{PriorKind(pp).value}"


def parse_cells(spec: str) -> list[Cell]:
    """``all`` or a comma list of mechanism names (all 9 prior pairs each)."""
    if spec.strip().lower() == "all":
        return all_cells()
    wanted = []
    for name in spec.split(","):
        name = name.strip()
        matches = [k for k in MechanismKind if k.value.lower() == name.lower()]
        if not matches:
            raise InvalidArgumentError(f"unknown mechanism {name!r}")
        wanted.append(matches[0])
    return [c for c in all_cells() if c[2] in wanted]


@dataclass
class Dataset:
    examples: list[Example]
    cells: list[Cell]
    seed: int
    per_cell: int
    settings: dict = field(default_factory=dict)
    cell_weights: list[float] | None = None

    def cell_of(self) -> np.ndarray:
        return np.array([ex.meta.cell for ex in self.examples])


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("EXCH_PAIRS_THREADS", "1")))
    except ValueError:
        return 1


def _seed_int(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, np.uint64)[0])


def _generate_cell(ci: int, cell: Cell, per_cell: int, ss: np.random.SeedSequence,
                   sigma_x: float, sigma_y: float, n_samples: int,
                   size_model: SizeModel | None, hyper: HyperParams) -> list[Example]:
    cell_rng = np.random.default_rng(ss)
    swap = np.zeros(per_cell, dtype=bool)
    swap[cell_rng.permutation(per_cell)[: per_cell // 2]] = True
    out = []
    for j, child in enumerate(ss.spawn(per_cell)):
        n = size_model.sample(cell_rng) if size_model is not None else n_samples
        cfg = GenConfig(cell[0], cell[1], cell[2], sigma_x, sigma_y, n, _seed_int(child), hyper)
        ex = generate_example(cfg)
        ex.meta.cell = ci
        out.append(ex.swapped() if swap[j] else ex)
    return out


def assemble_dataset(cells: list[Cell], per_cell: int, seed: int, *,
                     sigma_x: float = DEFAULT_SIGMA, sigma_y: float = DEFAULT_SIGMA,
                     n_samples: int = DEFAULT_N_SAMPLES,
                     size_model: SizeModel | None = None,
                     hyper: HyperParams | None = None,
                     threads: int | None = None) -> Dataset:
    """Generate ``per_cell`` examples per cell, exactly half of them YtoX.

    Each cell draws from its own seed sequence derived from ``seed``, so the
    result does not depend on the number of threads.
    """
    if per_cell < 2 or per_cell % 2:
        raise InvalidArgumentError(f"per_cell must be a positive even number, got {per_cell}")
    if not cells:
        raise InvalidArgumentError("no cells given")
    hyper = hyper or HyperParams()
    seqs = np.random.SeedSequence(seed).spawn(len(cells))
    jobs = [(ci, cell, per_cell, seqs[ci], sigma_x, sigma_y, n_samples, size_model, hyper)
            for ci, cell in enumerate(cells)]
    workers = threads or _thread_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda a: _generate_cell(*a), jobs))
    else:
        parts = [_generate_cell(*a) for a in jobs]
    settings = {"sigma_x": sigma_x, "sigma_y": sigma_y, "n_samples": n_samples,
                "size_model": size_model.to_dict() if size_model else None,
                "hyper": asdict(hyper)}
    return Dataset([ex for part in parts for ex in part], list(cells), seed, per_cell, settings)


def noisify(example: Example, add_std: float, mult_std: float,
            rng: np.random.Generator) -> Example:
    """``y <- y (1 + m) + a`` with per-sample Gaussian ``m``, ``a``; then rescale y."""
    if add_std < 0 or mult_std < 0:
        raise InvalidArgumentError("noise levels must be >= 0")
    n = len(example.ys)
    m = rng.normal(0.0, mult_std, n) if mult_std > 0 else np.zeros(n)
    a = rng.normal(0.0, add_std, n) if add_std > 0 else np.zeros(n)
    if add_std == 0 and mult_std == 0:
        ys = example.ys.copy()
    else:
        ys = minmax(example.ys * (1.0 + m) + a)
    meta = replace(example.meta, noise={"add_std": add_std, "mult_std": mult_std})
    return Example(example.xs.copy(), ys, example.label, meta)


def noisify_dataset(ds: Dataset, add_std: float, mult_std: float, seed: int) -> Dataset:
    seqs = np.random.SeedSequence(seed).spawn(len(ds.examples))
    examples = [noisify(ex, add_std, mult_std, np.random.default_rng(s))
                for ex, s in zip(ds.examples, seqs)]
    settings = dict(ds.settings, noise={"add_std": add_std, "mult_std": mult_std,
                                        "seed": seed})
    return Dataset(examples, ds.cells, ds.seed, ds.per_cell, settings, ds.cell_weights)
