"""Directions on the unit sphere, anchor lattices and equirectangular geometry.

Conventions
-----------
Directions are plain ``(..., 3)`` float arrays in a right-handed world frame
with +y up. Equirectangular images put the north pole (+y) on the top edge
and longitude 0 (+z) at the horizontal centre; longitude increases towards
+x.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))
UNIT_TOL = 1e-6


def _as_directions(d, name="direction"):
    d = np.asarray(d, dtype=np.float64)
    if d.shape[-1:] != (3,):
        raise ValueError(f"{name} must have a trailing dimension of 3, got shape {d.shape}")
    norms = np.linalg.norm(d, axis=-1)
    if not np.all(np.isfinite(norms)) or np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise ValueError(f"{name} must be unit norm (tolerance {UNIT_TOL})")
    return d


def normalize(v):
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise ValueError("cannot normalize a zero vector")
    return v / n


def geodesic_distance(a, b):
    """Great-circle distance in radians between unit directions (broadcasts)."""
    a = _as_directions(a, "a")
    b = _as_directions(b, "b")
    dot = np.clip(np.sum(a * b, axis=-1), -1.0, 1.0)
    out = np.arccos(dot)
    return float(out) if out.ndim == 0 else out


def pairwise_geodesic(a, b=None):
    a = np.asarray(a, dtype=np.float64)
    b = a if b is None else np.asarray(b, dtype=np.float64)
    return np.arccos(np.clip(a @ b.T, -1.0, 1.0))


@dataclass(frozen=True)
class AnchorSet:
    """``n`` unit directions that support a discrete spherical distribution."""

    directions: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = _as_directions(self.directions, "anchor directions")
        if d.ndim != 2 or d.shape[0] < 1:
            raise ValueError("anchor directions must be a non-empty (n, 3) array")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "directions", d)

    @property
    def n(self) -> int:
        return self.directions.shape[0]

    def __len__(self):
        return self.n

    @cached_property
    def cost(self) -> np.ndarray:
        """Pairwise geodesic cost matrix (cached, read-only)."""
        c = cost_matrix(self)
        c.setflags(write=False)
        return c

    def nearest_neighbor_distances(self) -> np.ndarray:
        if self.n == 1:
            return np.zeros(0)
        c = np.array(self.cost)
        np.fill_diagonal(c, np.inf)
        return c.min(axis=1)

    def nearest(self, dirs) -> np.ndarray:
        """Index of the geodesically nearest anchor for each direction.

        Ties go to the lowest anchor index.
        """
        dirs = np.asarray(dirs, dtype=np.float64)
        flat = dirs.reshape(-1, 3)
        idx = np.argmax(flat @ self.directions.T, axis=1)
        return idx.reshape(dirs.shape[:-1])

    def to_json(self) -> dict:
        return {"n": self.n, "directions": self.directions.tolist()}

    @classmethod
    def from_json(cls, obj) -> "AnchorSet":
        if isinstance(obj, str):
            obj = json.loads(obj)
        anchors = cls(np.asarray(obj["directions"], dtype=np.float64))
        if anchors.n != obj["n"]:
            raise ValueError(f"anchor count {anchors.n} does not match n={obj['n']}")
        return anchors


def generate_anchors(n: int) -> AnchorSet:
    """Golden-spiral lattice: ``z_k = 1 - (2k+1)/n``, azimuth ``k * golden angle``."""
    if int(n) != n or n < 1:
        raise ValueError(f"number of anchors must be a positive integer, got {n}")
    k = np.arange(int(n), dtype=np.float64)
    z = 1.0 - (2.0 * k + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = k * GOLDEN_ANGLE
    return AnchorSet(np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1))


def cost_matrix(anchors: AnchorSet) -> np.ndarray:
    """Geodesic distances between all anchor pairs, exactly symmetric with zero diagonal."""
    c = pairwise_geodesic(anchors.directions)
    c = np.triu(c, 1)
    return c + c.T


# -- equirectangular mapping ------------------------------------------------


def _check_dims(width, height):
    if width != 2 * height or height < 1:
        raise ValueError(f"equirectangular images need width == 2*height, got {width}x{height}")


def pixel_to_direction(row, col, width: int, height: int):
    """Direction through continuous pixel coordinates ``(row, col)``.

    Pixel centres sit at half-integer offsets; ``row=0`` is the top edge row.
    """
    _check_dims(width, height)
    row = np.asarray(row, dtype=np.float64)
    col = np.asarray(col, dtype=np.float64)
    lat = np.pi / 2 - np.pi * (row + 0.5) / height
    lon = 2 * np.pi * (col + 0.5) / width - np.pi
    return latlon_to_direction(lat, lon)


def latlon_to_direction(lat, lon):
    lat = np.asarray(lat, dtype=np.float64)
    lon = np.asarray(lon, dtype=np.float64)
    cl = np.cos(lat)
    return np.stack([cl * np.sin(lon), np.sin(lat), cl * np.cos(lon)], axis=-1)


def direction_to_latlon(d):
    d = np.asarray(d, dtype=np.float64)
    x, y, z = d[..., 0], d[..., 1], d[..., 2]
    return np.arctan2(y, np.hypot(x, z)), np.arctan2(x, z)


def direction_to_pixel(d, width: int, height: int):
    """Continuous ``(row, col)`` of a unit direction; columns wrap into ``[0, width)``."""
    _check_dims(width, height)
    d = _as_directions(d)
    lat, lon = direction_to_latlon(d)
    row = (np.pi / 2 - lat) * height / np.pi - 0.5
    col = np.mod((lon + np.pi) * width / (2 * np.pi) - 0.5, width)
    if row.ndim == 0:
        return float(row), float(col)
    return row, col


def pixel_directions(width: int, height: int) -> np.ndarray:
    """``(height, width, 3)`` array of pixel-centre directions."""
    _check_dims(width, height)
    rows, cols = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    return pixel_to_direction(rows, cols, width, height)


def solid_angle_weights(width: int, height: int) -> np.ndarray:
    """Solid angle (steradians) of one pixel in each row.

    Exact band area ``dlon * (sin(top) - sin(bottom))``, which equals
    ``2 dlon sin(dlat/2) cos(lat_centre)``; the full image sums to 4*pi.
    """
    _check_dims(width, height)
    lat = np.pi / 2 - np.pi * (np.arange(height) + 0.5) / height
    return (2 * np.pi / width) * 2 * np.sin(np.pi / (2 * height)) * np.cos(lat)
