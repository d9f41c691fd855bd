"""Grayscale image and map file I/O.

Supported containers:

* PNG, 8- or 16-bit grayscale (via Pillow).
* Binary PGM (P5), 8- or 16-bit (16-bit samples big-endian per the format).
* GGMAP: parameter-map rasters; ASCII header ``GGMAP <d1> <d2> <field>``
  followed by d1*d2 little-endian float64 values, row-major.
* Sidecar metadata: one ``key=value`` pair per line, UTF-8.

Integer images normalize to [0, 1] on read (divide by the max representable
value) and denormalize with round-half-away-from-zero on write.  Writing
clamps to [0, 1]; quantized containers are display artifacts, lossless
float data travels as .npy.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from .operators import as_image

GGMAP_FIELDS = ("p", "alpha", "image")


def _quantize(u: np.ndarray, maxval: int) -> np.ndarray:
    clipped = np.clip(as_image(u), 0.0, 1.0)
    return np.floor(clipped * maxval + 0.5)


def write_png(path: str | os.PathLike, u: np.ndarray, depth: int = 16) -> None:
    """Write a grayscale PNG at the given bit depth (8 or 16)."""
    if depth == 8:
        img = Image.fromarray(_quantize(u, 255).astype(np.uint8))
    elif depth == 16:
        img = Image.fromarray(_quantize(u, 65535).astype(np.uint16))
    else:
        raise ValueError(f"depth must be 8 or 16, got {depth}")
    img.save(path, format="PNG")


def read_png(path: str | os.PathLike) -> np.ndarray:
    """Read a grayscale PNG, normalized to [0, 1]."""
    with Image.open(path) as img:
        if img.mode == "L":
            maxval = 255
        elif img.mode in ("I", "I;16"):
            maxval = 65535
        else:
            raise ValueError(f"unsupported PNG mode {img.mode!r} in {path}")
        data = np.asarray(img, dtype=np.float64)
    return data / maxval


def write_pgm(path: str | os.PathLike, u: np.ndarray, depth: int = 16) -> None:
    """Write a binary (P5) PGM; 16-bit samples are big-endian."""
    if depth == 8:
        maxval, dtype = 255, np.uint8
    elif depth == 16:
        maxval, dtype = 65535, np.dtype(">u2")
    else:
        raise ValueError(f"depth must be 8 or 16, got {depth}")
    q = _quantize(u, maxval).astype(dtype)
    d1, d2 = q.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{d2} {d1}\n{maxval}\n".encode("ascii"))
        fh.write(q.tobytes())


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    """Read a binary (P5) PGM, normalized to [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path} is not a binary PGM (P5) file")
    # header: magic, width, height, maxval, then a single whitespace byte
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1
    d2, d1, maxval = fields
    if maxval <= 0 or maxval > 65535:
        raise ValueError(f"invalid PGM maxval {maxval} in {path}")
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    raw = np.frombuffer(data, dtype=dtype, count=d1 * d2, offset=pos)
    return raw.reshape(d1, d2).astype(np.float64) / maxval


def read_image(path: str | os.PathLike) -> np.ndarray:
    """Read PNG, PGM or .npy by extension, normalized floats either way."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".png":
        return read_png(path)
    if ext == ".pgm":
        return read_pgm(path)
    if ext == ".npy":
        return as_image(np.load(path))
    raise ValueError(f"unsupported image extension {ext!r} for {path}")


def write_ggmap(path: str | os.PathLike, values: np.ndarray, field: str) -> None:
    """Write a parameter-map raster in the GGMAP container."""
    if field not in GGMAP_FIELDS:
        raise ValueError(f"field must be one of {GGMAP_FIELDS}, got {field!r}")
    values = as_image(values, "map")
    d1, d2 = values.shape
    with open(path, "wb") as fh:
        fh.write(f"GGMAP {d1} {d2} {field}\n".encode("ascii"))
        fh.write(values.astype("<f8").tobytes())


def read_ggmap(path: str | os.PathLike) -> tuple[np.ndarray, str]:
    """Read a GGMAP raster; returns (values, field)."""
    with open(path, "rb") as fh:
        header = fh.readline()
        parts = header.decode("ascii").split()
        if len(parts) != 4 or parts[0] != "GGMAP":
            raise ValueError(f"{path} is not a GGMAP file")
        d1, d2, field = int(parts[1]), int(parts[2]), parts[3]
        if field not in GGMAP_FIELDS:
            raise ValueError(f"unknown GGMAP field {field!r} in {path}")
        raw = fh.read(8 * d1 * d2)
    if len(raw) != 8 * d1 * d2:
        raise ValueError(f"truncated GGMAP payload in {path}")
    return np.frombuffer(raw, dtype="<f8").reshape(d1, d2).copy(), field


def write_map_preview(path: str | os.PathLike, values: np.ndarray) -> None:
    """8-bit PNG visualization rescaled to the map's [min, max] range."""
    values = as_image(values, "map")
    lo, hi = float(values.min()), float(values.max())
    scaled = np.zeros_like(values) if hi <= lo else (values - lo) / (hi - lo)
    write_png(path, scaled, depth=8)


def write_sidecar(path: str | os.PathLike, entries: dict) -> None:
    """Write key=value metadata, one pair per line, keys in given order."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in entries.items():
            if isinstance(value, float):
                value = repr(value)
            fh.write(f"{key}={value}\n")


def read_sidecar(path: str | os.PathLike) -> dict[str, str]:
    """Read key=value metadata written by :func:`write_sidecar`."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or "=" not in line:
                continue
            key, _, value = line.partition("=")
            out[key] = value
    return out
