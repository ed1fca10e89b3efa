"""Split an HDR panorama into light distribution, intensity and ambient term."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .hdrio import HdrImage, Panorama
from .sphere import AnchorSet, pixel_directions, solid_angle_weights

LUMINANCE = np.array([0.2126, 0.7152, 0.0722])
DEFAULT_FRACTION = 0.05


@dataclass(frozen=True)
class IlluminationParams:
    """Per-channel distribution over anchors plus RGB intensity and ambient.

    ``distribution`` has shape ``(3, n)``; each row sums to one.
    """

    distribution: np.ndarray = field(repr=False)
    intensity: np.ndarray
    ambient: np.ndarray
    fraction: float = DEFAULT_FRACTION
    weighted: bool = False

    def __post_init__(self):
        dist = np.array(self.distribution, dtype=np.float64)
        inten = np.array(self.intensity, dtype=np.float64).reshape(-1)
        amb = np.array(self.ambient, dtype=np.float64).reshape(-1)
        if dist.ndim != 2 or dist.shape[0] != 3 or dist.shape[1] < 1:
            raise ValueError(f"distribution must have shape (3, n), got {dist.shape}")
        if inten.shape != (3,) or amb.shape != (3,):
            raise ValueError("intensity and ambient must be RGB triples")
        for name, arr in (("distribution", dist), ("intensity", inten), ("ambient", amb)):
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValueError(f"{name} must be finite and non-negative")
        if np.any(np.abs(dist.sum(axis=1) - 1.0) > 1e-6):
            raise ValueError("each distribution channel must sum to 1")
        for name, arr in (("distribution", dist), ("intensity", inten), ("ambient", amb)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.distribution.shape[1]

    def light_values(self) -> np.ndarray:
        """``(3, n)`` per-anchor RGB energy ``P * I``."""
        return self.distribution * self.intensity[:, None]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "fraction": float(self.fraction),
            "weighted": bool(self.weighted),
            "distribution": self.distribution.tolist(),
            "intensity": self.intensity.tolist(),
            "ambient": self.ambient.tolist(),
        }

    @classmethod
    def from_json(cls, obj) -> "IlluminationParams":
        if isinstance(obj, str):
            obj = json.loads(obj)
        p = cls(
            distribution=obj["distribution"],
            intensity=obj["intensity"],
            ambient=obj["ambient"],
            fraction=obj.get("fraction", DEFAULT_FRACTION),
            weighted=obj.get("weighted", False),
        )
        if p.n != obj["n"]:
            raise ValueError(f"distribution length {p.n} does not match n={obj['n']}")
        return p


@dataclass(frozen=True)
class LightMask:
    selected: np.ndarray = field(repr=False)

    @property
    def height(self) -> int:
        return self.selected.shape[0]

    @property
    def width(self) -> int:
        return self.selected.shape[1]

    @property
    def count(self) -> int:
        return int(self.selected.sum())


def luminance(pixels) -> np.ndarray:
    return np.asarray(pixels, dtype=np.float64) @ LUMINANCE


def selected_count(fraction: float, total: int) -> int:
    # round half up; avoids ceil() turning 0.07*100 = 7.000000000000001 into 8
    return int(np.floor(fraction * total + 0.5))


def light_mask(p: HdrImage, fraction: float = DEFAULT_FRACTION) -> LightMask:
    """Select the brightest ``fraction`` of pixels by luminance.

    Ties are broken by row-major scan order, earlier pixels first.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    lum = luminance(p.pixels).ravel()
    k = selected_count(fraction, lum.size)
    order = np.argsort(-lum, kind="stable")
    sel = np.zeros(lum.size, dtype=bool)
    sel[order[:k]] = True
    return LightMask(sel.reshape(p.height, p.width))


def _pixel_weights(width, height, weighted):
    if weighted:
        return np.broadcast_to(solid_angle_weights(width, height)[:, None], (height, width))
    return np.ones((height, width))


def bin_to_anchors(p: HdrImage, mask: LightMask, anchors: AnchorSet, weighted: bool = False) -> np.ndarray:
    """Sum masked pixel values onto their geodesically nearest anchor.

    Returns a ``(3, n)`` array. With ``weighted`` each pixel is scaled by its
    solid angle first.
    """
    pano = Panorama.from_image(p)
    if mask.selected.shape != (pano.height, pano.width):
        raise ValueError("mask and panorama dimensions differ")
    rows, cols = np.nonzero(mask.selected)
    out = np.zeros((3, anchors.n))
    if rows.size == 0:
        return out
    dirs = pixel_directions(pano.width, pano.height)[rows, cols]
    idx = anchors.nearest(dirs)
    vals = pano.pixels[rows, cols] * _pixel_weights(pano.width, pano.height, weighted)[rows, cols][:, None]
    for c in range(3):
        out[c] = np.bincount(idx, weights=vals[:, c], minlength=anchors.n)
    return out


def decompose(
    p: HdrImage,
    anchors: AnchorSet,
    fraction: float = DEFAULT_FRACTION,
    weighted: bool = False,
) -> IlluminationParams:
    pixels = np.asarray(p.pixels if isinstance(p, HdrImage) else p, dtype=np.float64)
    if np.any(np.isnan(pixels)):
        raise ValueError("panorama contains NaN pixels")
    pano = Panorama.from_image(p) if isinstance(p, HdrImage) else Panorama(pixels)
    mask = light_mask(pano, fraction)
    raw = bin_to_anchors(pano, mask, anchors, weighted)
    intensity = raw.sum(axis=1)
    dist = np.full_like(raw, 1.0 / anchors.n)
    lit = intensity > 0
    dist[lit] = raw[lit] / intensity[lit, None]
    rest = ~mask.selected
    ambient = pano.pixels[rest].mean(axis=0) if rest.any() else np.zeros(3)
    return IlluminationParams(dist, intensity, ambient, fraction=fraction, weighted=weighted)
