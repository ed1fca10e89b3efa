"""HDR image containers and codecs (Radiance RGBE ``.hdr`` and ``.pfm``).

Images are held as ``(height, width, 3)`` float64 arrays of linear RGB,
top row first.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import HeaderError, TruncatedDataError, UnsupportedFormatError


@dataclass(frozen=True)
class HdrImage:
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"expected a (height, width, 3) array, got shape {px.shape}")
        if not np.all(np.isfinite(px)):
            raise ValueError("pixel values must be finite")
        if np.any(px < 0):
            raise ValueError("pixel values must be non-negative")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.pixels if dtype is None else self.pixels.astype(dtype)


class Panorama(HdrImage):
    """Equirectangular HDR image; width must be twice the height."""

    def __post_init__(self):
        super().__post_init__()
        if self.width != 2 * self.height:
            raise ValueError(f"panorama must be 2:1, got {self.width}x{self.height}")

    @classmethod
    def from_image(cls, img: HdrImage) -> "Panorama":
        return img if isinstance(img, cls) else cls(img.pixels)


def _pixels_of(img) -> np.ndarray:
    return img.pixels if isinstance(img, HdrImage) else HdrImage(img).pixels


# -- Radiance RGBE ----------------------------------------------------------

_RES_RE = re.compile(rb"^([-+])Y (\d+) ([-+])X (\d+)$")


def float_to_rgbe(rgb) -> np.ndarray:
    """Encode linear RGB to RGBE bytes with round-to-nearest mantissas."""
    rgb = np.asarray(rgb, dtype=np.float64)
    v = rgb.max(axis=-1)
    _, e = np.frexp(v)
    mant = np.rint(np.ldexp(v, 8 - e))
    # rounding can carry the brightest channel up to 256
    e = np.where(mant >= 256, e + 1, e)
    if np.any((v > 0) & (e + 128 > 255)):
        raise ValueError("pixel value too large for RGBE")
    out = np.zeros(rgb.shape[:-1] + (4,), dtype=np.uint8)
    ok = (v > 0) & (e + 128 >= 1)
    m = np.rint(np.ldexp(rgb, (8 - e)[..., None]))
    out[..., :3] = np.where(ok[..., None], np.clip(m, 0, 255), 0).astype(np.uint8)
    out[..., 3] = np.where(ok, e + 128, 0).astype(np.uint8)
    return out


def rgbe_to_float(rgbe) -> np.ndarray:
    """Decode ``mantissa/256 * 2**(exponent-128)``; exponent byte 0 is black."""
    rgbe = np.asarray(rgbe, dtype=np.uint8)
    e = rgbe[..., 3].astype(np.int64)
    out = np.ldexp(rgbe[..., :3].astype(np.float64), (e - 136)[..., None])
    out[e == 0] = 0.0
    return out


def _encode_channel_rle(data: bytes) -> bytearray:
    out = bytearray()
    n = len(data)
    i = 0
    while i < n:
        # find next run of at least 4 identical bytes
        run_start = i
        run_len = 0
        while run_start < n:
            run_len = 1
            while run_start + run_len < n and run_len < 127 and data[run_start + run_len] == data[run_start]:
                run_len += 1
            if run_len >= 4:
                break
            run_start += run_len
        # literal bytes before the run
        while i < run_start:
            k = min(128, run_start - i)
            out.append(k)
            out += data[i : i + k]
            i += k
        if run_start < n and run_len >= 4:
            out.append(128 + run_len)
            out.append(data[run_start])
            i = run_start + run_len
    return out


def write_radiance_hdr(img) -> bytes:
    px = _pixels_of(img)
    h, w, _ = px.shape
    rgbe = float_to_rgbe(px)
    out = bytearray(b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n")
    out += f"-Y {h} +X {w}\n".encode("ascii")
    rle = 8 <= w <= 0x7FFF
    for r in range(h):
        line = rgbe[r]
        if not rle:
            out += line.tobytes()
            continue
        out += bytes([2, 2, w >> 8, w & 0xFF])
        for c in range(4):
            out += _encode_channel_rle(line[:, c].tobytes())
    return bytes(out)


def _read_header(buf: bytes):
    if not (buf.startswith(b"#?RADIANCE") or buf.startswith(b"#?RGBE")):
        raise HeaderError("missing '#?RADIANCE' or '#?RGBE' signature", 0)
    pos = 0
    while True:
        end = buf.find(b"\n", pos)
        if end < 0:
            raise HeaderError("header not terminated by a blank line", pos)
        line = buf[pos:end].strip()
        if line == b"":
            pos = end + 1
            break
        if line.startswith(b"FORMAT=") and line != b"FORMAT=32-bit_rle_rgbe":
            raise UnsupportedFormatError(f"unsupported pixel format {line[7:].decode(errors='replace')!r}", pos)
        pos = end + 1
    end = buf.find(b"\n", pos)
    if end < 0:
        raise HeaderError("missing resolution line", pos)
    m = _RES_RE.match(buf[pos:end].strip())
    if m is None:
        raise HeaderError(f"bad resolution line {buf[pos:end][:40]!r}", pos)
    if m.group(1) != b"-" or m.group(3) != b"+":
        raise UnsupportedFormatError("unsupported pixel order (only '-Y H +X W')", pos)
    return int(m.group(2)), int(m.group(4)), end + 1


def read_radiance_hdr(buf: bytes) -> HdrImage:
    height, width, pos = _read_header(buf)
    n = len(buf)
    rgbe = np.empty((height, width, 4), dtype=np.uint8)
    mv = memoryview(buf)
    for r in range(height):
        if pos + 4 <= n and 8 <= width <= 0x7FFF and buf[pos] == 2 and buf[pos + 1] == 2 and not (buf[pos + 2] & 0x80):
            if (buf[pos + 2] << 8 | buf[pos + 3]) != width:
                raise TruncatedDataError(f"scanline {r} width mismatch", pos)
            pos += 4
            for c in range(4):
                chan = bytearray()
                while len(chan) < width:
                    if pos >= n:
                        raise TruncatedDataError(f"truncated scanline {r}", pos)
                    count = buf[pos]
                    if count > 128:
                        count -= 128
                        if pos + 1 >= n:
                            raise TruncatedDataError(f"truncated run in scanline {r}", pos)
                        if len(chan) + count > width:
                            raise TruncatedDataError(f"run overflows scanline {r}", pos)
                        chan += bytes([buf[pos + 1]]) * count
                        pos += 2
                    else:
                        if count == 0 or len(chan) + count > width:
                            raise TruncatedDataError(f"bad literal count in scanline {r}", pos)
                        if pos + 1 + count > n:
                            raise TruncatedDataError(f"truncated scanline {r}", pos)
                        chan += mv[pos + 1 : pos + 1 + count]
                        pos += 1 + count
                rgbe[r, :, c] = np.frombuffer(bytes(chan), dtype=np.uint8)
        else:
            end = pos + 4 * width
            if end > n:
                raise TruncatedDataError(f"truncated flat scanline {r}", pos)
            rgbe[r] = np.frombuffer(buf[pos:end], dtype=np.uint8).reshape(width, 4)
            pos = end
    return HdrImage(rgbe_to_float(rgbe))


# -- PFM --------------------------------------------------------------------


def write_pfm(img, little_endian: bool = True) -> bytes:
    px = _pixels_of(img)
    h, w, _ = px.shape
    dt = np.dtype("<f4" if little_endian else ">f4")
    scale = -1.0 if little_endian else 1.0
    header = f"PF\n{w} {h}\n{scale}\n".encode("ascii")
    return header + np.ascontiguousarray(px[::-1].astype(dt)).tobytes()


def read_pfm(buf: bytes) -> HdrImage:
    pos = 0
    fields = []
    while len(fields) < 3:
        end = buf.find(b"\n", pos)
        if end < 0:
            raise HeaderError("truncated PFM header", pos)
        line = buf[pos:end].strip()
        if not fields:
            if line == b"Pf":
                raise UnsupportedFormatError("greyscale PFM ('Pf') is not supported", pos)
            if line != b"PF":
                raise HeaderError(f"bad PFM signature {line[:10]!r}", pos)
            fields.append(line)
        elif len(fields) == 1:
            parts = line.split()
            if len(parts) != 2 or not all(p.isdigit() for p in parts):
                raise HeaderError("bad PFM dimensions line", pos)
            fields.append((int(parts[0]), int(parts[1])))
        else:
            try:
                scale = float(line)
            except ValueError:
                raise HeaderError("bad PFM scale line", pos) from None
            if scale == 0.0:
                raise HeaderError("PFM scale must be non-zero", pos)
            fields.append(scale)
        pos = end + 1
    (w, h), scale = fields[1], fields[2]
    dt = np.dtype("<f4" if scale < 0 else ">f4")
    nbytes = w * h * 3 * 4
    if len(buf) - pos < nbytes:
        raise TruncatedDataError(f"PFM payload needs {nbytes} bytes", pos)
    data = np.frombuffer(buf, dtype=dt, count=w * h * 3, offset=pos)
    return HdrImage(data.reshape(h, w, 3)[::-1].astype(np.float64))


# -- file helpers -----------------------------------------------------------

_READERS = {".hdr": read_radiance_hdr, ".pfm": read_pfm}
_WRITERS = {".hdr": write_radiance_hdr, ".pfm": write_pfm}


def read_image(path) -> HdrImage:
    path = Path(path)
    reader = _READERS.get(path.suffix.lower())
    if reader is None:
        raise UnsupportedFormatError(f"unknown image extension {path.suffix!r}")
    return reader(path.read_bytes())


def write_image(path, img) -> None:
    path = Path(path)
    writer = _WRITERS.get(path.suffix.lower())
    if writer is None:
        raise UnsupportedFormatError(f"unknown image extension {path.suffix!r}")
    path.write_bytes(writer(img))


def write_preview_png(path, img, exposure: float = 1.0) -> None:
    """8-bit gamma-2.2 preview, clipped after scaling by ``exposure``."""
    from PIL import Image

    px = np.clip(_pixels_of(img) * exposure, 0.0, 1.0)
    ldr = np.rint(255.0 * px ** (1 / 2.2)).astype(np.uint8)
    Image.fromarray(ldr, mode="RGB").save(path, format="PNG")
