"""Image-space error measures for illumination maps.

All functions take HDR images or plain arrays whose last axis holds colour
channels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError
from .hdrio import HdrImage


def _pair(x, y):
    x = np.asarray(x.pixels if isinstance(x, HdrImage) else x, dtype=np.float64)
    y = np.asarray(y.pixels if isinstance(y, HdrImage) else y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    return x, y


def rmse(x, y) -> float:
    x, y = _pair(x, y)
    return float(np.sqrt(np.mean((x - y) ** 2)))


def si_rmse(x, y) -> float:
    """RMSE after scaling ``x`` by the least-squares factor ``<x,y>/<x,x>``.

    One global scale over all pixels and channels; not symmetric.
    """
    x, y = _pair(x, y)
    xx = float(np.sum(x * x))
    if xx == 0:
        raise DegenerateInputError("si-RMSE is undefined for an all-zero prediction")
    alpha = float(np.sum(x * y)) / xx
    return rmse(alpha * x, y)


def pixel_angles(x, y):
    """Per-pixel angle (radians) between colour vectors and a validity mask.

    Pixels where either colour vector is zero are marked invalid.
    """
    x, y = _pair(x, y)
    xs = x.reshape(-1, x.shape[-1])
    ys = y.reshape(-1, y.shape[-1])
    nx = np.linalg.norm(xs, axis=1)
    ny = np.linalg.norm(ys, axis=1)
    valid = (nx > 0) & (ny > 0)
    cos = np.ones(xs.shape[0])
    cos[valid] = np.sum(xs[valid] * ys[valid], axis=1) / (nx[valid] * ny[valid])
    return np.arccos(np.clip(cos, -1.0, 1.0)), valid


def angular_error(x, y) -> float:
    """Mean per-pixel RGB angle in degrees, skipping zero pixels."""
    ang, valid = pixel_angles(x, y)
    if not valid.any():
        raise DegenerateInputError("every pixel has a zero colour vector")
    return float(np.degrees(ang[valid].mean()))


def cosine_loss(x, y, lambda_cos: float = 1.0) -> float:
    """``(1 - cos(x, y)) * lambda_cos`` over the flattened images."""
    x, y = _pair(x, y)
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    if nx == 0 or ny == 0:
        raise DegenerateInputError("cosine similarity needs non-zero inputs")
    cos = float(np.sum(x * y) / (nx * ny))
    return (1.0 - min(cos, 1.0)) * lambda_cos


@dataclass(frozen=True)
class MetricReport:
    rmse: float
    si_rmse: float
    angular_error_deg: float
    cosine_loss: float
    skipped_pixels: int

    def to_json(self) -> dict:
        return {
            "rmse": self.rmse,
            "si_rmse": self.si_rmse,
            "angular_error_deg": self.angular_error_deg,
            "cosine_loss": self.cosine_loss,
            "skipped_pixels": self.skipped_pixels,
        }


def evaluate(pred, true, lambda_cos: float = 1.0) -> MetricReport:
    _, valid = pixel_angles(pred, true)
    return MetricReport(
        rmse=rmse(pred, true),
        si_rmse=si_rmse(pred, true),
        angular_error_deg=angular_error(pred, true),
        cosine_loss=cosine_loss(pred, true, lambda_cos),
        skipped_pixels=int((~valid).sum()),
    )
