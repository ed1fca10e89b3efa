"""Render illumination parameters as a sum of spherical Gaussian lobes.

    M(u) = sum_i P_i I exp((d_i . u - 1) / s) + A
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decompose import DEFAULT_FRACTION, IlluminationParams, decompose
from .hdrio import HdrImage, Panorama
from .sphere import AnchorSet, pixel_directions

DEFAULT_ANGULAR_SIZE = 0.0025


@dataclass(frozen=True)
class GaussianMapConfig:
    angular_size: float = DEFAULT_ANGULAR_SIZE
    width: int = 256
    height: int = 128

    def __post_init__(self):
        if not self.angular_size > 0:
            raise ValueError(f"angular size must be positive, got {self.angular_size}")
        if self.height < 1 or self.width != 2 * self.height:
            raise ValueError(f"map must be 2:1, got {self.width}x{self.height}")


def evaluate_gaussian_map(params: IlluminationParams, anchors: AnchorSet, directions, angular_size=DEFAULT_ANGULAR_SIZE):
    """RGB radiance of the lobe map at unit ``directions`` (``(..., 3)``)."""
    if params.n != anchors.n:
        raise ValueError(f"params have n={params.n} but anchors have n={anchors.n}")
    if not angular_size > 0:
        raise ValueError(f"angular size must be positive, got {angular_size}")
    dirs = np.asarray(directions, dtype=np.float64)
    values = params.light_values()
    # anchors carrying no energy in any channel contribute nothing
    live = np.flatnonzero(values.max(axis=0) > 0)
    out = np.broadcast_to(params.ambient, dirs.shape[:-1] + (3,)).copy()
    if live.size:
        lobes = np.exp((dirs @ anchors.directions[live].T - 1.0) / angular_size)
        out += lobes @ values[:, live].T
    return out


def render_gaussian_map(params: IlluminationParams, anchors: AnchorSet, cfg: GaussianMapConfig | None = None) -> Panorama:
    cfg = cfg or GaussianMapConfig()
    dirs = pixel_directions(cfg.width, cfg.height)
    return Panorama(evaluate_gaussian_map(params, anchors, dirs, cfg.angular_size))


def reconstruct_params(
    p: HdrImage, anchors: AnchorSet, fraction: float = DEFAULT_FRACTION, weighted: bool = False
) -> IlluminationParams:
    """Recover parameters from a (rendered) panorama; same contract as ``decompose``."""
    return decompose(p, anchors, fraction=fraction, weighted=weighted)
