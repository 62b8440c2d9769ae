"""Training loop, asymmetry scoring and checkpoints for the image classifier."""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import InsufficientDataError, InvalidArgumentError, LoadError, TrainingDivergedError
from ..metrics import auroc_arrays
from ..priors import minmax
from ..types import Direction
from .network import (CnnArch, Params, bce_from_logits, forward, forward_logits, init_params,
                      loss_and_grad, sigmoid, weight_penalty, zeros_like_params)
from .raster import gaussian_blur, pair_images, rasterize, trim_outliers

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    alpha: float = 1e-4
    lam: float = 0.01
    batch: int = 32
    epochs: int = 10
    blur_sigma: float = 0.5
    seed: int = 0
    scale: str = "full"
    val_fraction: float = 0.2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidArgumentError("alpha must be > 0")
        if self.lam < 0 or self.blur_sigma < 0:
            raise InvalidArgumentError("lam and blur_sigma must be >= 0")
        if self.batch < 1 or self.epochs < 0:
            raise InvalidArgumentError("batch must be >= 1 and epochs >= 0")
        if not 0 <= self.val_fraction < 1:
            raise InvalidArgumentError("val_fraction must lie in [0, 1)")

    @property
    def arch(self) -> CnnArch:
        return CnnArch.for_scale(self.scale)


@dataclass
class AdamState:
    m: Params
    v: Params
    t: int = 0

    @classmethod
    def zeros(cls, params: Params) -> "AdamState":
        return cls(zeros_like_params(params), zeros_like_params(params))


def train_step(params: Params, state: AdamState, images, labels, config: TrainConfig,
               arch: CnnArch | None = None) -> tuple[Params, float]:
    """One Adam update on a minibatch; returns new params and the pre-update loss."""
    if len(labels) == 0:
        raise InvalidArgumentError("empty batch")
    arch = arch or config.arch
    loss, _, grads = loss_and_grad(params, arch, images, labels, config.lam)
    if not np.isfinite(loss):
        raise TrainingDivergedError(f"non-finite loss {loss}")
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    new = {}
    for k, p in params.items():
        g = grads[k]
        state.m[k] = b1 * state.m[k] + (1 - b1) * g
        state.v[k] = b2 * state.v[k] + (1 - b2) * g * g
        new[k] = p - config.alpha * (state.m[k] / c1) / (np.sqrt(state.v[k] / c2) + config.eps)
    return new, loss


def example_image(xs, ys, n: int) -> np.ndarray:
    return rasterize(minmax(xs), minmax(ys), n)


@dataclass
class History:
    rows: list[dict] = field(default_factory=list)

    def column(self, key: str) -> list:
        return [r[key] for r in self.rows]

    def to_csv(self, path) -> None:
        keys = list(self.rows[0]) if self.rows else ["epoch"]
        lines = [",".join(keys)]
        for r in self.rows:
            lines.append(",".join(f"{r[k]:.10g}" if isinstance(r[k], float) else str(r[k])
                                  for k in keys))
        Path(path).write_text("\n".join(lines) + "\n")


def _evaluate(params, arch, images, labels, lam) -> dict:
    logits = np.concatenate([forward_logits(params, arch, images[i:i + 256])
                             for i in range(0, len(images), 256)])
    p = sigmoid(logits)
    pos = labels.astype(bool)
    auc = auroc_arrays(p, pos) if pos.any() and (~pos).any() else float("nan")
    return {"loss": bce_from_logits(logits, labels),
            "penalty": weight_penalty(params, lam),
            "auroc": auc,
            "accuracy": float(np.mean((p > 0.5) == pos))}


def split_indices(labels: np.ndarray, val_fraction: float, rng: np.random.Generator):
    """Class-stratified train/validation split."""
    train, val = [], []
    for cls in (0, 1):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        k = int(round(val_fraction * len(idx)))
        val.extend(idx[:k])
        train.extend(idx[k:])
    return np.sort(np.array(train, dtype=int)), np.sort(np.array(val, dtype=int))


def images_from_examples(examples, n: int) -> tuple[np.ndarray, np.ndarray]:
    images = np.stack([example_image(ex.xs, ex.ys, n) for ex in examples])
    labels = np.array([Direction(ex.label).as_int for ex in examples], dtype=float)
    return images, labels


def train(examples, config: TrainConfig, arch: CnnArch | None = None,
          params: Params | None = None, progress: bool = False):
    """Fit the classifier on generated examples.

    Returns ``(params, history)``. History row 0 is the untrained network;
    row ``e`` holds train/validation metrics after epoch ``e``. The blur is
    applied to training images only.
    """
    arch = arch or config.arch
    rng = np.random.default_rng(config.seed)
    images, labels = images_from_examples(examples, arch.input_size)
    tr, va = split_indices(labels, config.val_fraction, rng)
    train_imgs = images[tr]
    if config.blur_sigma > 0:
        train_imgs = np.stack([gaussian_blur(im, config.blur_sigma) for im in train_imgs])
    train_lab, val_imgs, val_lab = labels[tr], images[va], labels[va]

    if params is None:
        params = init_params(arch, rng)
    state = AdamState.zeros(params)
    history = History()

    def record(epoch, seconds):
        row = {"epoch": epoch}
        for prefix, imgs, labs in (("train", train_imgs, train_lab), ("val", val_imgs, val_lab)):
            if len(labs):
                for k, v in _evaluate(params, arch, imgs, labs, config.lam).items():
                    row[f"{prefix}_{k}"] = v
        row["seconds"] = seconds
        history.rows.append(row)
        if progress:
            log.info("epoch %d: %s", epoch, row)

    start = time.perf_counter()
    record(0, 0.0)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_lab))
        for b in range(0, len(order), config.batch):
            idx = order[b:b + config.batch]
            params, _ = train_step(params, state, train_imgs[idx], train_lab[idx], config, arch)
        record(epoch, time.perf_counter() - start)
    return params, history


def asymmetry_from_probs(p_xy: float, p_yx: float) -> float:
    return (p_xy - p_yx) / (p_xy + p_yx)


def asymmetry_score(params: Params, arch: CnnArch, xs, ys, quantile: float = 0.9) -> float:
    """Direction score in [-1, 1] from the (X, Y) and (Y, X) images."""
    x, y = trim_outliers(xs, ys, quantile)
    if len(x) < 5:
        raise InsufficientDataError(f"{len(x)} points left after outlier trimming")
    img_xy, img_yx = pair_images(x, y, arch.input_size)
    # one image per call so the two probabilities do not depend on batch layout
    p_xy = float(forward(params, arch, img_xy[None])[0])
    p_yx = float(forward(params, arch, img_yx[None])[0])
    return asymmetry_from_probs(p_xy, p_yx)


def save_checkpoint(path, params: Params, arch: CnnArch, config: TrainConfig) -> None:
    meta = {"version": CHECKPOINT_VERSION, "arch": arch.to_dict(), "config": asdict(config),
            "order": list(params), "shapes": {k: list(v.shape) for k, v in params.items()},
            "seed": config.seed}
    arrays = {f"p{i:02d}_{k}": v for i, (k, v) in enumerate(params.items())}
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta)), **arrays)


def load_checkpoint(path) -> tuple[Params, CnnArch, TrainConfig]:
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            stored = {k.split("_", 1)[1]: data[k] for k in data.files if k != "meta"}
    except (OSError, KeyError, ValueError) as exc:
        raise LoadError(f"{path}: cannot read checkpoint ({exc})") from exc
    if meta.get("version") != CHECKPOINT_VERSION:
        raise LoadError(f"{path}: unsupported checkpoint version {meta.get('version')}")
    arch = CnnArch.from_dict(meta["arch"])
    config = TrainConfig(**meta["config"])
    params = {}
    for name, shape in arch.param_shapes():
        if name not in stored or tuple(stored[name].shape) != tuple(shape):
            got = None if name not in stored else stored[name].shape
            raise LoadError(f"{path}: parameter {name} has shape {got}, expected {shape}")
        params[name] = stored[name]
    return params, arch, config
