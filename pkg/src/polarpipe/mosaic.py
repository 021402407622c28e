"""Raw frame ingestion and the polarizer microgrid layout.

The sensor carries a 2x2 grid of wire-grid polarizers (0, 45, 90, 135 deg)
on top of an RGGB Bayer filter, where each Bayer cell covers one complete
polarizer quad.  A 4x4 tile therefore holds every angle/colour combination.
Splitting the frame by polarizer offset gives four half-resolution images
that are still RGGB-patterned.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .formats import FormatError, decode_pgm, encode_pgm

ANGLES = (0, 45, 90, 135)

DEFAULT_ANGLE_AT_OFFSET = {(0, 0): 90, (0, 1): 45, (1, 0): 135, (1, 1): 0}


@dataclass(frozen=True)
class MosaicLayout:
    """Mapping from ``(row % 2, col % 2)`` to polarizer angle in degrees."""

    angle_at_offset: dict = field(default_factory=lambda: dict(DEFAULT_ANGLE_AT_OFFSET))
    bayer_order: str = "RGGB"

    def __post_init__(self):
        keys = set(self.angle_at_offset)
        if keys != {(0, 0), (0, 1), (1, 0), (1, 1)}:
            raise ValueError("layout must cover the four offsets (0,0),(0,1),(1,0),(1,1)")
        if sorted(self.angle_at_offset.values()) != list(ANGLES):
            raise ValueError("layout must map the four offsets to four distinct angles")
        if self.bayer_order != "RGGB":
            raise ValueError("only RGGB Bayer order is supported")

    def offset_of(self, angle: int) -> tuple[int, int]:
        for off, a in self.angle_at_offset.items():
            if a == angle:
                return off
        raise KeyError(angle)

    @classmethod
    def from_json(cls, obj: dict) -> "MosaicLayout":
        """Build from the descriptor form ``{"00": "90", "01": "45", ...}``."""
        mapping = {}
        for key, angle in obj.items():
            key = str(key)
            if len(key) != 2 or not set(key) <= {"0", "1"}:
                raise ValueError(f"bad layout offset {key!r}")
            mapping[(int(key[0]), int(key[1]))] = int(angle)
        return cls(mapping)

    def to_json(self) -> dict:
        return {f"{r}{c}": str(a) for (r, c), a in sorted(self.angle_at_offset.items())}

    @classmethod
    def parse(cls, text: str) -> "MosaicLayout":
        """Parse the CLI form ``"90,45,135,0"`` (offsets 00,01,10,11 in order)."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError("layout needs four comma-separated angles for offsets 00,01,10,11")
        offsets = [(0, 0), (0, 1), (1, 0), (1, 1)]
        return cls({off: int(a) for off, a in zip(offsets, parts)})


@dataclass(frozen=True)
class RawMosaicImage:
    pixels: np.ndarray  # (height, width) unsigned integer codes
    bit_depth: int
    layout: MosaicLayout = field(default_factory=MosaicLayout)

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 2:
            raise ValueError("raw pixels must be a 2-D array")
        if self.bit_depth not in (8, 16):
            raise ValueError(f"unsupported bit depth {self.bit_depth}")
        h, w = px.shape
        if h % 4 or w % 4:
            raise ValueError(f"odd dimensions {w}x{h}: width and height must be multiples of 4")
        if px.size and int(px.max()) > self.max_code:
            raise ValueError("pixel code exceeds bit depth")
        px.setflags(write=False)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def max_code(self) -> int:
        return (1 << self.bit_depth) - 1


@dataclass(frozen=True)
class AngleMosaics:
    """Four half-resolution RGGB planes keyed by polarizer angle."""

    planes: dict
    bit_depth: int

    def __getitem__(self, angle: int) -> np.ndarray:
        return self.planes[angle]

    @property
    def shape(self) -> tuple[int, int]:
        return self.planes[0].shape


def _bit_depth_for_maxval(maxval: int) -> int:
    if maxval == 255:
        return 8
    if maxval == 65535:
        return 16
    raise FormatError(f"unsupported maxval {maxval}; expected 255 or 65535")


def load_descriptor(path: str | os.PathLike) -> dict:
    with open(path) as f:
        desc = json.load(f)
    for key in ("width", "height", "bit_depth"):
        if key not in desc:
            raise FormatError(f"descriptor missing {key!r}")
    return desc


def load_raw(
    path: str | os.PathLike,
    descriptor: str | os.PathLike | dict | None = None,
    layout: MosaicLayout | None = None,
) -> RawMosaicImage:
    """Load a raw sensor frame from a P5 PGM or a headerless ``.raw`` dump.

    Headerless files need a JSON descriptor with ``width``, ``height``,
    ``bit_depth`` and optionally ``layout`` and ``byte_order`` ("little" by
    default).  When no descriptor is given for a ``.raw`` file, a sibling
    ``<name>.json`` is used.  An explicit ``layout`` argument overrides the
    descriptor's layout.
    """
    path = Path(path)
    with open(path, "rb") as f:
        buf = f.read()

    if isinstance(descriptor, (str, os.PathLike)):
        descriptor = load_descriptor(descriptor)
    if descriptor is None and not buf.startswith(b"P5"):
        sidecar = path.with_suffix(".json")
        if sidecar.exists():
            descriptor = load_descriptor(sidecar)

    if descriptor is None:
        pixels, maxval = decode_pgm(buf)
        bit_depth = _bit_depth_for_maxval(maxval)
    else:
        width, height = int(descriptor["width"]), int(descriptor["height"])
        bit_depth = int(descriptor["bit_depth"])
        if bit_depth not in (8, 16):
            raise FormatError(f"unsupported bit depth {bit_depth}")
        if bit_depth == 8:
            dtype = np.dtype(np.uint8)
        else:
            order = descriptor.get("byte_order", "little")
            dtype = np.dtype("<u2" if order == "little" else ">u2")
        expected = width * height * dtype.itemsize
        if len(buf) != expected:
            raise FormatError(
                f"size mismatch: descriptor implies {expected} bytes, file has {len(buf)}"
            )
        pixels = np.frombuffer(buf, dtype=dtype).reshape(height, width)
        if bit_depth == 16:
            pixels = pixels.astype(np.uint16)
        if layout is None and "layout" in descriptor:
            layout = MosaicLayout.from_json(descriptor["layout"])

    try:
        return RawMosaicImage(pixels, bit_depth, layout or MosaicLayout())
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def save_raw(raw: RawMosaicImage, path: str | os.PathLike) -> None:
    """Write ``raw`` as a P5 PGM (16-bit samples big-endian)."""
    with open(path, "wb") as f:
        f.write(encode_pgm(raw.pixels, raw.max_code))


def split_planes(raw: RawMosaicImage) -> AngleMosaics:
    """Split the frame into one half-resolution RGGB image per polarizer angle.

    The returned planes are strided views into ``raw.pixels``; no copy is made.
    """
    planes = {
        angle: raw.pixels[dr::2, dc::2]
        for (dr, dc), angle in raw.layout.angle_at_offset.items()
    }
    return AngleMosaics(planes, raw.bit_depth)


def merge_planes(mosaics: AngleMosaics, layout: MosaicLayout) -> RawMosaicImage:
    """Inverse of :func:`split_planes`."""
    h, w = mosaics.shape
    first = mosaics[0]
    pixels = np.empty((2 * h, 2 * w), dtype=first.dtype)
    for (dr, dc), angle in layout.angle_at_offset.items():
        pixels[dr::2, dc::2] = mosaics[angle]
    return RawMosaicImage(pixels, mosaics.bit_depth, layout)


def saturation_mask(raw: RawMosaicImage, margin: int = 0) -> np.ndarray:
    """Half-resolution validity mask: False where any angle code is saturated.

    ``margin`` widens the saturation band to codes ``>= max_code - margin``
    for sensors whose clipping level sits slightly below full scale.
    """
    threshold = raw.max_code - margin
    px = raw.pixels
    peak = np.maximum(
        np.maximum(px[0::2, 0::2], px[0::2, 1::2]),
        np.maximum(px[1::2, 0::2], px[1::2, 1::2]),
    )
    return peak < threshold
