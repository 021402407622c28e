"""Readers and writers for the small binary image containers used by the toolkit.

* PGM (P5)  -- raw sensor frames, 8 or 16 bit, big-endian samples for 16 bit.
* PPM (P6)  -- rendered 8-bit RGB visualizations.
* PFM       -- float planes (Stokes, DoLP, AoLP), little-endian, scale -1.0.
"""

from __future__ import annotations

import os

import numpy as np


class FormatError(ValueError):
    """Raised when a file does not follow the container it claims to be."""


def _read_header_tokens(buf: bytes, magic: bytes, ntokens: int) -> tuple[list[int], int]:
    """Parse a netpbm header and return its integer fields and the payload offset."""
    if not buf.startswith(magic):
        raise FormatError(f"bad magic number, expected {magic.decode()}")
    pos = len(magic)
    tokens: list[int] = []
    n = len(buf)
    while len(tokens) < ntokens:
        # whitespace and comments between header fields
        while pos < n and (buf[pos : pos + 1].isspace() or buf[pos : pos + 1] == b"#"):
            if buf[pos : pos + 1] == b"#":
                while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            else:
                pos += 1
        start = pos
        while pos < n and buf[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise FormatError("malformed header")
        tokens.append(int(buf[start:pos]))
    # exactly one whitespace byte separates the header from the raster
    if pos >= n or not buf[pos : pos + 1].isspace():
        raise FormatError("malformed header")
    return tokens, pos + 1


def read_pgm(path: str | os.PathLike) -> tuple[np.ndarray, int]:
    """Read a binary PGM and return ``(pixels, maxval)``.

    Pixels come back as ``uint8`` for maxval < 256 and ``uint16`` otherwise.
    """
    with open(path, "rb") as f:
        buf = f.read()
    return decode_pgm(buf)


def decode_pgm(buf: bytes) -> tuple[np.ndarray, int]:
    (width, height, maxval), offset = _read_header_tokens(buf, b"P5", 3)
    if width <= 0 or height <= 0:
        raise FormatError("malformed header: non-positive dimensions")
    if not 0 < maxval < 65536:
        raise FormatError(f"malformed header: maxval {maxval} out of range")
    dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
    expected = width * height * dtype.itemsize
    payload = buf[offset:]
    if len(payload) < expected:
        raise FormatError(
            f"truncated payload: expected {expected} bytes, got {len(payload)}"
        )
    if len(payload) > expected:
        raise FormatError(
            f"trailing data: expected {expected} bytes, got {len(payload)}"
        )
    pixels = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    if pixels.dtype != np.uint8:
        pixels = pixels.astype(np.uint16)
    return pixels, maxval


def encode_pgm(pixels: np.ndarray, maxval: int) -> bytes:
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValueError("PGM needs a 2-D array")
    height, width = pixels.shape
    if maxval < 256:
        data = pixels.astype(np.uint8).tobytes()
    else:
        data = pixels.astype(">u2").tobytes()
    return b"P5\n%d %d\n%d\n" % (width, height, maxval) + data


def write_pgm(path: str | os.PathLike, pixels: np.ndarray, maxval: int) -> None:
    data = encode_pgm(pixels, maxval)
    with open(path, "wb") as f:
        f.write(data)


def encode_ppm(rgb: np.ndarray) -> bytes:
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("PPM needs an (H, W, 3) array")
    if rgb.dtype != np.uint8:
        raise ValueError("PPM writer expects uint8 samples")
    height, width = rgb.shape[:2]
    return b"P6\n%d %d\n255\n" % (width, height) + np.ascontiguousarray(rgb).tobytes()


def write_ppm(path: str | os.PathLike, rgb: np.ndarray) -> None:
    data = encode_ppm(rgb)  # validate before touching the file
    with open(path, "wb") as f:
        f.write(data)


def read_ppm(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as f:
        buf = f.read()
    (width, height, maxval), offset = _read_header_tokens(buf, b"P6", 3)
    if maxval != 255:
        raise FormatError("only 8-bit PPM is supported")
    payload = buf[offset:]
    if len(payload) != width * height * 3:
        raise FormatError("truncated payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3).copy()


def write_pfm(path: str | os.PathLike, plane: np.ndarray) -> None:
    """Write a single-channel float plane as little-endian PFM.

    PFM stores scanlines bottom-to-top; the array is flipped on the way out so
    that :func:`read_pfm` returns it in the usual top-to-bottom order.
    """
    plane = np.asarray(plane, dtype="<f4")
    if plane.ndim != 2:
        raise ValueError("PFM writer expects a 2-D plane")
    height, width = plane.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n%d %d\n-1.0\n" % (width, height))
        f.write(np.ascontiguousarray(plane[::-1]).tobytes())


def read_pfm(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as f:
        ident = f.readline().strip()
        if ident == b"Pf":
            channels = 1
        elif ident == b"PF":
            channels = 3
        else:
            raise FormatError("not a PFM file")
        try:
            width, height = (int(t) for t in f.readline().split())
            scale = float(f.readline().strip())
        except ValueError as exc:
            raise FormatError("malformed header") from exc
        dtype = "<f4" if scale < 0 else ">f4"
        payload = f.read()
    expected = width * height * channels * 4
    if len(payload) < expected:
        raise FormatError("truncated payload")
    if len(payload) > expected:
        raise FormatError("trailing data after payload")
    data = np.frombuffer(payload, dtype=dtype)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return data.reshape(shape)[::-1].astype(np.float32)
