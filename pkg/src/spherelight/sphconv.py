"""Distortion-aware convolution sampling on equirectangular images.

Each output pixel gets a k x k kernel laid out on the plane tangent to the
sphere at that pixel's direction (angular step equal to the equator pixel
pitch) and projected back with the inverse gnomonic map. Forward only: there
are no learned weights here.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hdrio import HdrImage

# column offsets are snapped to multiples of 2**-20 px so that integer
# longitude shifts commute exactly with bilinear sampling
_SNAP = 2.0**20


@dataclass(frozen=True)
class KernelGrid:
    width: int
    height: int
    k: int
    rows: np.ndarray = field(repr=False)  # (height, width, k, k)
    cols: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "k": self.k,
            "rows": self.rows.tolist(),
            "cols": self.cols.tolist(),
        }


def _gnomonic_offsets(lat0, k, step):
    """Latitude/longitude offsets of the k x k tangent grid around ``lat0``.

    Grid row index increases southwards (down the image).
    """
    h = k // 2
    a, b = np.meshgrid(np.arange(-h, h + 1), np.arange(-h, h + 1), indexing="ij")
    x = b * step
    y = -a * step
    rho = np.hypot(x, y)
    c = np.arctan(rho)
    lat0 = np.asarray(lat0, dtype=np.float64)[:, None, None]
    sl, cl = np.sin(lat0), np.cos(lat0)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(rho > 0, np.sin(c) / np.where(rho > 0, rho, 1.0), 1.0)
    sin_lat = np.cos(c) * sl + y * ratio * cl
    lat = np.arcsin(np.clip(sin_lat, -1.0, 1.0))
    dlon = np.arctan2(x * np.sin(c), rho * cl * np.cos(c) - y * sl * np.sin(c))
    centre = rho == 0
    dlat = np.where(centre, 0.0, lat - lat0)
    dlon = np.where(centre, 0.0, dlon)
    return dlat, dlon


def kernel_sample_grid(width: int, height: int, k: int) -> KernelGrid:
    if width != 2 * height or height < 1:
        raise ValueError(f"equirectangular images need width == 2*height, got {width}x{height}")
    if k < 1 or k % 2 == 0:
        raise ValueError(f"kernel size must be a positive odd integer, got {k}")
    step = 2 * np.pi / width
    lat0 = np.pi / 2 - np.pi * (np.arange(height) + 0.5) / height
    dlat, dlon = _gnomonic_offsets(lat0, k, step)
    drow = -dlat * height / np.pi
    dcol = np.rint(dlon * width / (2 * np.pi) * _SNAP) / _SNAP
    r = np.arange(height, dtype=np.float64)[:, None, None, None]
    c = np.arange(width, dtype=np.float64)[None, :, None, None]
    rows = np.clip(r + drow[:, None], 0.0, height - 1.0)
    rows = np.broadcast_to(rows, (height, width, k, k)).copy()
    cols = np.mod(c + dcol[:, None], width)
    return KernelGrid(width, height, k, rows, cols)


def _image_array(p):
    arr = p.pixels if isinstance(p, HdrImage) else np.asarray(p, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[..., None]
    return arr


def sample_bilinear(p, row, col):
    """Bilinear lookup at continuous coordinates; rows clamp, columns wrap."""
    img = _image_array(p)
    h, w = img.shape[:2]
    row = np.clip(np.asarray(row, dtype=np.float64), 0.0, h - 1.0)
    col = np.asarray(col, dtype=np.float64)
    r0 = np.floor(row)
    c0 = np.floor(col)
    fr = (row - r0)[..., None]
    fc = (col - c0)[..., None]
    r0 = r0.astype(np.int64)
    r1 = np.minimum(r0 + 1, h - 1)
    c0 = np.mod(c0.astype(np.int64), w)
    c1 = np.mod(c0 + 1, w)
    top = img[r0, c0] * (1 - fc) + img[r0, c1] * fc
    bot = img[r1, c0] * (1 - fc) + img[r1, c1] * fc
    return top * (1 - fr) + bot * fr


def spherical_convolve(p, weights, grid: KernelGrid) -> np.ndarray:
    """Apply a k x k kernel through the sphere-aware sample grid.

    Returns an array shaped like the input, one output plane per channel.
    """
    img = _image_array(p)
    weights = np.asarray(weights, dtype=np.float64)
    if img.shape[:2] != (grid.height, grid.width):
        raise ValueError(f"grid built for {grid.width}x{grid.height}, image is {img.shape[1]}x{img.shape[0]}")
    if weights.shape != (grid.k, grid.k):
        raise ValueError(f"weights must be {grid.k}x{grid.k}, got {weights.shape}")
    out = np.zeros(img.shape)
    for a in range(grid.k):
        for b in range(grid.k):
            if weights[a, b] != 0:
                out += weights[a, b] * sample_bilinear(img, grid.rows[:, :, a, b], grid.cols[:, :, a, b])
    return out
