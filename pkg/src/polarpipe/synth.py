"""Synthetic scenes pushed through an ideal inverse sensor model.

A :class:`SceneSpec` describes ground-truth colour, DoLP and AoLP per
rectangular region at *output* resolution (one value per half-resolution
site, i.e. per 2x2 polarizer quad).  :func:`mosaicize` samples the truth
through ideal linear polarizers and lays the codes out on the microgrid, so
the analysis pipeline can be checked against known answers.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .demosaic import LUMA_WEIGHTS
from .formats import write_pfm
from .mosaic import MosaicLayout, RawMosaicImage

# cos(2 phi), sin(2 phi) at the microgrid angles, exact
_EXACT_TRIG = {0: (1.0, 0.0), 45: (0.0, 1.0), 90: (-1.0, 0.0), 135: (0.0, -1.0)}


@dataclass(frozen=True)
class RegionSpec:
    rgb: tuple = (0.5, 0.5, 0.5)
    dolp: float = 0.0
    aolp_deg: float = 0.0
    rect: tuple | None = None  # (x, y, w, h); None covers the whole frame

    def __post_init__(self):
        if len(self.rgb) != 3 or not all(0.0 <= v <= 1.0 for v in self.rgb):
            raise ValueError(f"rgb must be three values in [0, 1], got {self.rgb}")
        if not 0.0 <= self.dolp <= 1.0:
            raise ValueError(f"dolp {self.dolp} outside [0, 1]")
        if not 0.0 <= self.aolp_deg < 180.0:
            raise ValueError(f"aolp {self.aolp_deg} outside [0, 180)")

    @classmethod
    def from_json(cls, obj: dict) -> "RegionSpec":
        rect = obj.get("rect")
        return cls(
            rgb=tuple(float(v) for v in obj.get("rgb", (0.5, 0.5, 0.5))),
            dolp=float(obj.get("dolp", 0.0)),
            aolp_deg=float(obj.get("aolp_deg", 0.0)),
            rect=tuple(int(v) for v in rect) if rect is not None else None,
        )

    def to_json(self) -> dict:
        obj = {"rgb": list(self.rgb), "dolp": self.dolp, "aolp_deg": self.aolp_deg}
        if self.rect is not None:
            obj["rect"] = list(self.rect)
        return obj


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    background: RegionSpec = field(default_factory=RegionSpec)
    regions: tuple = ()

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0 or self.width % 2 or self.height % 2:
            raise ValueError("scene dimensions must be positive and even")
        for reg in self.regions:
            if reg.rect is None:
                continue
            x, y, w, h = reg.rect
            if w <= 0 or h <= 0 or x < 0 or y < 0 or x + w > self.width or y + h > self.height:
                raise ValueError(f"region rect {reg.rect} outside {self.width}x{self.height} scene")

    @classmethod
    def from_json(cls, obj: dict) -> "SceneSpec":
        return cls(
            width=int(obj["width"]),
            height=int(obj["height"]),
            background=RegionSpec.from_json(obj.get("background", {})),
            regions=tuple(RegionSpec.from_json(r) for r in obj.get("regions", [])),
        )

    def to_json(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "background": self.background.to_json(),
            "regions": [r.to_json() for r in self.regions],
        }


def load_scene(path: str | os.PathLike) -> SceneSpec:
    with open(path) as f:
        return SceneSpec.from_json(json.load(f))


@dataclass(frozen=True)
class TruthPlanes:
    """Ground-truth Stokes planes per channel (R, G, B, M) plus DoLP/AoLP."""

    s0: dict
    s1: dict
    s2: dict
    dolp: np.ndarray
    aolp: np.ndarray
    labels: np.ndarray  # region index per pixel, 0 = background

    @property
    def shape(self):
        return self.dolp.shape


def polarizer_intensity(s0, s1, s2, phi_deg):
    """Irradiance behind an ideal linear polarizer at ``phi_deg``.

    Exact trigonometric values are used at 0/45/90/135 deg so that sampling
    at the microgrid angles and re-applying the Stokes sums is an identity.
    """
    s0, s1, s2 = (np.asarray(v, dtype=float) for v in (s0, s1, s2))
    if np.any(np.hypot(s1, s2) > s0 * (1 + 1e-12) + 1e-15):
        raise ValueError("unphysical Stokes vector: sqrt(S1^2 + S2^2) > S0")
    if phi_deg in _EXACT_TRIG:
        c, s = _EXACT_TRIG[phi_deg]
    else:
        c, s = np.cos(np.radians(2 * phi_deg)), np.sin(np.radians(2 * phi_deg))
    out = 0.5 * (s0 + s1 * c + s2 * s)
    return out if out.ndim else float(out)


def bake_truth(spec: SceneSpec) -> TruthPlanes:
    h, w = spec.height, spec.width
    rgb = np.empty((h, w, 3))
    dolp = np.empty((h, w))
    aolp = np.empty((h, w))
    labels = np.zeros((h, w), dtype=np.int32)
    rgb[:] = spec.background.rgb
    dolp[:] = spec.background.dolp
    aolp[:] = spec.background.aolp_deg
    for k, reg in enumerate(spec.regions, start=1):
        if reg.rect is None:
            sl = (slice(None), slice(None))
        else:
            x, y, rw, rh = reg.rect
            sl = (slice(y, y + rh), slice(x, x + rw))
        rgb[sl] = reg.rgb
        dolp[sl] = reg.dolp
        aolp[sl] = reg.aolp_deg
        labels[sl] = k

    two_a = np.radians(2 * aolp)
    cos2, sin2 = np.cos(two_a), np.sin(two_a)
    s0, s1, s2 = {}, {}, {}
    for ch, idx in (("R", 0), ("G", 1), ("B", 2)):
        s0[ch] = 2.0 * rgb[..., idx]
        s1[ch] = dolp * s0[ch] * cos2
        s2[ch] = dolp * s0[ch] * sin2
    for planes in (s0, s1, s2):
        wr, wg, wb = LUMA_WEIGHTS
        planes["M"] = wr * planes["R"] + wg * planes["G"] + wb * planes["B"]
    return TruthPlanes(s0, s1, s2, dolp, aolp, labels)


def bayer_color_index(h: int, w: int) -> np.ndarray:
    """Per-site colour index (0=R, 1=G, 2=B) of an RGGB pattern."""
    idx = np.ones((h, w), dtype=np.int8)
    idx[0::2, 0::2] = 0
    idx[1::2, 1::2] = 2
    return idx


def mosaicize(
    truth: TruthPlanes,
    layout: MosaicLayout | None = None,
    bit_depth: int = 16,
    noise_sigma: float | None = None,
    seed: int | None = None,
) -> RawMosaicImage:
    """Sample ``truth`` through the polarizer microgrid into raw codes.

    Every half-resolution site ``(r, c)`` has one Bayer colour and owns the
    raw quad ``(2r:2r+2, 2c:2c+2)``; each pixel of the quad sees that colour
    through the polarizer the layout assigns to its offset.  Optional noise is
    additive Gaussian with standard deviation ``noise_sigma`` of full scale
    and requires a ``seed``.
    """
    layout = layout or MosaicLayout()
    h, w = truth.shape
    if h % 2 or w % 2:
        raise ValueError("truth planes must have even dimensions")
    for planes in (truth.s0, truth.s1, truth.s2):
        if any(planes[ch].shape != (h, w) for ch in ("R", "G", "B")):
            raise ValueError("truth plane size mismatch")
    full = float((1 << bit_depth) - 1)
    color = bayer_color_index(h, w)
    sel = {}
    for name, planes in (("s0", truth.s0), ("s1", truth.s1), ("s2", truth.s2)):
        stacked = np.stack([planes["R"], planes["G"], planes["B"]])
        sel[name] = np.take_along_axis(stacked, color[None].astype(np.intp), axis=0)[0]

    rng = None
    if noise_sigma:
        if seed is None:
            raise ValueError("noise requires an explicit seed")
        rng = np.random.default_rng(seed)

    dtype = np.uint8 if bit_depth == 8 else np.uint16
    pixels = np.empty((2 * h, 2 * w), dtype=dtype)
    for (dr, dc), angle in sorted(layout.angle_at_offset.items()):
        level = polarizer_intensity(sel["s0"], sel["s1"], sel["s2"], angle) * full
        if rng is not None:
            level = level + rng.normal(0.0, noise_sigma * full, size=level.shape)
        pixels[dr::2, dc::2] = np.clip(np.floor(level + 0.5), 0, full).astype(dtype)
    return RawMosaicImage(pixels, bit_depth, layout)


def write_truth(truth: TruthPlanes, directory: str | os.PathLike) -> list[Path]:
    """Export truth planes as PFM files (``s0_R.pfm`` ... ``dolp.pfm``, ``aolp.pfm``)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, planes in (("s0", truth.s0), ("s1", truth.s1), ("s2", truth.s2)):
        for ch, plane in planes.items():
            path = directory / f"{name}_{ch}.pfm"
            write_pfm(path, plane)
            written.append(path)
    for name, plane in (("dolp", truth.dolp), ("aolp", truth.aolp), ("labels", truth.labels)):
        path = directory / f"{name}.pfm"
        write_pfm(path, plane)
        written.append(path)
    return written


def read_truth(directory: str | os.PathLike) -> TruthPlanes:
    from .formats import read_pfm

    directory = Path(directory)
    planes = {}
    for name in ("s0", "s1", "s2"):
        planes[name] = {ch: read_pfm(directory / f"{name}_{ch}.pfm").astype(float) for ch in "RGBM"}
    return TruthPlanes(
        planes["s0"],
        planes["s1"],
        planes["s2"],
        read_pfm(directory / "dolp.pfm").astype(float),
        read_pfm(directory / "aolp.pfm").astype(float),
        read_pfm(directory / "labels.pfm").astype(np.int32),
    )


def interior_mask(labels: np.ndarray, margin: int = 4) -> np.ndarray:
    """Pixels at least ``margin`` sites (two superpixels by default) away from
    any region boundary."""
    h, w = labels.shape
    keep = np.ones((h, w), dtype=bool)
    padded = np.pad(labels, margin, mode="edge")
    for dy in range(-margin, margin + 1):
        for dx in range(-margin, margin + 1):
            shifted = padded[margin + dy : margin + dy + h, margin + dx : margin + dx + w]
            keep &= shifted == labels
    return keep
