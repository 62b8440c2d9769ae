"""Image-based cause-effect classifier."""
from .network import CnnArch, forward, init_params, loss_and_grad
from .raster import gaussian_blur, pair_images, rasterize, trim_outliers
from .train import (AdamState, History, TrainConfig, asymmetry_from_probs, asymmetry_score,
                    load_checkpoint, save_checkpoint, train, train_step)

__all__ = [
    "CnnArch", "forward", "init_params", "loss_and_grad", "gaussian_blur", "pair_images",
    "rasterize", "trim_outliers", "AdamState", "History", "TrainConfig",
    "asymmetry_from_probs", "asymmetry_score", "load_checkpoint", "save_checkpoint",
    "train", "train_step",
]
