"""Convolutional direction classifier written directly in numpy.

Layout is NHWC. Each block is a 3x3 same-padded convolution, ReLU and a 2x2
max-pool that rounds odd sizes up; the flattened features go through three
ReLU dense layers and a single sigmoid unit. Gradients are computed by hand
(reverse mode over the exact forward pass).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import InvalidArgumentError

Params = dict  # ordered name -> ndarray


@dataclass(frozen=True)
class CnnArch:
    input_size: int = 50
    filters: tuple[int, ...] = (32, 64, 128)
    dense: tuple[int, ...] = (256, 128, 64)

    @classmethod
    def full(cls) -> "CnnArch":
        return cls()

    @classmethod
    def desk(cls, input_size: int = 32) -> "CnnArch":
        return cls(input_size, (8, 16, 32), (64, 32, 16))

    @classmethod
    def for_scale(cls, scale: str, input_size: int | None = None) -> "CnnArch":
        if scale == "full":
            return cls(input_size or 50)
        if scale == "desk":
            return cls.desk(input_size or 32)
        raise InvalidArgumentError(f"unknown scale {scale!r}")

    def spatial_sizes(self) -> list[int]:
        sizes = [self.input_size]
        for _ in self.filters:
            sizes.append(math.ceil(sizes[-1] / 2))
        return sizes

    @property
    def flat_size(self) -> int:
        return self.spatial_sizes()[-1] ** 2 * self.filters[-1]

    def param_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        shapes = []
        c_in = 1
        for i, c in enumerate(self.filters, 1):
            shapes += [(f"conv{i}_w", (3, 3, c_in, c)), (f"conv{i}_b", (c,))]
            c_in = c
        d_in = self.flat_size
        for i, d in enumerate(self.dense, 1):
            shapes += [(f"dense{i}_w", (d_in, d)), (f"dense{i}_b", (d,))]
            d_in = d
        shapes += [("out_w", (d_in, 1)), ("out_b", (1,))]
        return shapes

    def param_count(self) -> int:
        return sum(int(np.prod(s)) for _, s in self.param_shapes())

    def shape_chain(self) -> list[tuple[str, tuple, int]]:
        """(layer, output shape without batch, #params) rows, Keras-summary style."""
        rows = []
        size = self.input_size
        c_in = 1
        for c in self.filters:
            rows.append((f"Conv2D (3x3, {c} filters)", (size, size, c), 9 * c_in * c + c))
            size = math.ceil(size / 2)
            rows.append(("MaxPooling2D (2x2)", (size, size, c), 0))
            c_in = c
        rows.append(("Flatten", (self.flat_size,), 0))
        d_in = self.flat_size
        for d in self.dense:
            rows.append((f"Dense ({d} units)", (d,), d_in * d + d))
            d_in = d
        rows.append(("Dense (1 unit, sigmoid)", (1,), d_in + 1))
        return rows

    def to_dict(self) -> dict:
        return {"input_size": self.input_size, "filters": list(self.filters),
                "dense": list(self.dense)}

    @classmethod
    def from_dict(cls, d: dict) -> "CnnArch":
        return cls(int(d["input_size"]), tuple(d["filters"]), tuple(d["dense"]))


def init_params(arch: CnnArch, rng: np.random.Generator, dtype=np.float64) -> Params:
    """Glorot-uniform kernels, zero biases."""
    params = {}
    for name, shape in arch.param_shapes():
        if name.endswith("_b"):
            params[name] = np.zeros(shape, dtype=dtype)
            continue
        if len(shape) == 4:
            fan_in, fan_out = 9 * shape[2], 9 * shape[3]
        else:
            fan_in, fan_out = shape
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        params[name] = rng.uniform(-limit, limit, shape).astype(dtype)
    return params


def zeros_like_params(params: Params) -> Params:
    return {k: np.zeros_like(v) for k, v in params.items()}


def kernel_names(params: Params) -> list[str]:
    return [k for k in params if k.endswith("_w")]


# --- layers -----------------------------------------------------------------

def _im2col(x: np.ndarray) -> np.ndarray:
    B, H, W, C = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    win = sliding_window_view(xp, (3, 3), axis=(1, 2))  # (B, H, W, C, 3, 3)
    return win.transpose(0, 1, 2, 4, 5, 3).reshape(B * H * W, 9 * C)


def conv_forward(x, w, b):
    B, H, W, _ = x.shape
    cols = _im2col(x)
    out = cols @ w.reshape(-1, w.shape[-1]) + b
    return out.reshape(B, H, W, -1), cols


def conv_backward(dout, cols, x_shape, w):
    B, H, W, C = x_shape
    cout = w.shape[-1]
    d2 = dout.reshape(-1, cout)
    dw = (cols.T @ d2).reshape(w.shape)
    db = d2.sum(axis=0)
    dcols = (d2 @ w.reshape(-1, cout).T).reshape(B, H, W, 3, 3, C)
    dxp = np.zeros((B, H + 2, W + 2, C), dtype=dout.dtype)
    for i in range(3):
        for j in range(3):
            dxp[:, i:i + H, j:j + W, :] += dcols[:, :, :, i, j, :]
    return dxp[:, 1:-1, 1:-1, :], dw, db


def pool_forward(x):
    B, H, W, C = x.shape
    H2, W2 = -(-H // 2), -(-W // 2)
    xp = np.full((B, 2 * H2, 2 * W2, C), -np.inf, dtype=x.dtype)
    xp[:, :H, :W, :] = x
    win = xp.reshape(B, H2, 2, W2, 2, C).transpose(0, 1, 3, 5, 2, 4).reshape(B, H2, W2, C, 4)
    arg = win.argmax(axis=-1)
    out = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    return out, arg


def pool_backward(dout, arg, x_shape):
    B, H, W, C = x_shape
    H2, W2 = dout.shape[1], dout.shape[2]
    dwin = np.zeros((B, H2, W2, C, 4), dtype=dout.dtype)
    np.put_along_axis(dwin, arg[..., None], dout[..., None], axis=-1)
    dxp = dwin.reshape(B, H2, W2, C, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(B, 2 * H2, 2 * W2, C)
    return dxp[:, :H, :W, :]


def _check_input(arch: CnnArch, images: np.ndarray) -> np.ndarray:
    x = np.asarray(images)
    if x.ndim == 2:
        x = x[None]
    if x.ndim == 3:
        x = x[..., None]
    n = arch.input_size
    if x.ndim != 4 or x.shape[1:] != (n, n, 1):
        raise InvalidArgumentError(
            f"expected images of shape (B, {n}, {n}[, 1]), got {np.shape(images)}")
    return x


def forward_logits(params: Params, arch: CnnArch, images, keep_cache: bool = False):
    x = _check_input(arch, images).astype(params["conv1_w"].dtype, copy=False)
    cache = []
    for i in range(1, len(arch.filters) + 1):
        z, cols = conv_forward(x, params[f"conv{i}_w"], params[f"conv{i}_b"])
        a = np.maximum(z, 0.0)
        p, arg = pool_forward(a)
        if keep_cache:
            cache.append(("conv", i, x.shape, cols, z, a.shape, arg))
        x = p
    conv_shape = x.shape
    h = x.reshape(x.shape[0], -1)
    for i in range(1, len(arch.dense) + 1):
        z = h @ params[f"dense{i}_w"] + params[f"dense{i}_b"]
        if keep_cache:
            cache.append(("dense", i, h, z))
        h = np.maximum(z, 0.0)
    logits = (h @ params["out_w"] + params["out_b"])[:, 0]
    if keep_cache:
        return logits, (cache, conv_shape, h)
    return logits


def sigmoid(z):
    z = np.asarray(z)
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(params: Params, arch: CnnArch, images) -> np.ndarray:
    """Probability of X -> Y for each image."""
    return sigmoid(forward_logits(params, arch, images))


def bce_from_logits(logits, labels) -> float:
    z = np.asarray(logits, dtype=float)
    y = np.asarray(labels, dtype=float)
    # log(1 + e^z) - y z, evaluated stably
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def weight_penalty(params: Params, lam: float) -> float:
    return float(lam * sum(np.sum(params[k] ** 2) for k in kernel_names(params)))


def loss_and_grad(params: Params, arch: CnnArch, images, labels, lam: float):
    """Mean BCE + lam * (sum of squared kernel weights) and its gradient."""
    y = np.asarray(labels, dtype=float)
    logits, (cache, conv_shape, h_last) = forward_logits(params, arch, images, keep_cache=True)
    B = len(y)
    data_loss = bce_from_logits(logits, y)
    loss = data_loss + weight_penalty(params, lam)

    grads = {}
    dz = ((sigmoid(logits) - y) / B)[:, None]
    grads["out_w"] = h_last.T @ dz
    grads["out_b"] = dz.sum(axis=0)
    dh = dz @ params["out_w"].T
    for entry in reversed(cache):
        if entry[0] == "dense":
            _, i, h_in, z = entry
            dz = dh * (z > 0)
            grads[f"dense{i}_w"] = h_in.T @ dz
            grads[f"dense{i}_b"] = dz.sum(axis=0)
            dh = dz @ params[f"dense{i}_w"].T
            if i == 1:
                dx = dh.reshape(conv_shape)
        else:
            _, i, x_shape, cols, z, a_shape, arg = entry
            da = pool_backward(dx, arg, a_shape)
            dz = da * (z > 0)
            dx, dw, db = conv_backward(dz, cols, x_shape, params[f"conv{i}_w"])
            grads[f"conv{i}_w"] = dw
            grads[f"conv{i}_b"] = db
    for k in kernel_names(params):
        grads[k] = grads[k] + 2.0 * lam * params[k]
    return loss, data_loss, {k: grads[k] for k in params}
