"""Raw frame to the six visualizations, processed in horizontal strips.

Strip boundaries are fixed (``STRIP_ROWS`` half-resolution rows) and do
not depend on the worker count, so the arithmetic applied to each pixel is
identical however the strips are scheduled.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import render
from .demosaic import LUMA_WEIGHTS, debayer_padded
from .mosaic import ANGLES, RawMosaicImage, saturation_mask, split_planes
from .stokes import ChannelStack, aolp, default_eps, dolp, stokes_from_intensities

STRIP_ROWS = 64
PLANE_NAMES = ("s0", "s1", "s2", "dolp", "aolp", "valid")


@dataclass
class FrameResult:
    images: dict = field(default_factory=dict)  # modality -> (h, w, 3) uint8
    planes: dict = field(default_factory=dict)  # monochrome float planes


def parse_channels(text: str | list) -> tuple:
    names = text.split(",") if isinstance(text, str) else list(text)
    names = tuple(n.strip().lower() for n in names if n.strip())
    if not names:
        raise ValueError("channel selection is empty")
    bad = [n for n in names if n not in render.MODALITIES]
    if bad:
        raise ValueError(f"unknown channel(s) {bad}; choose from {render.MODALITIES}")
    return names


def _channel_stokes(padded: dict, full, method: str, valid) -> tuple[dict, dict]:
    """Debayer padded per-angle code planes and form R, G, B and M Stokes images.

    Also returns the per-angle grayscale planes (PAULI needs the 45 deg one).
    """
    wr, wg, wb = (np.float32(w) for w in LUMA_WEIGHTS)
    rgb, mono = {}, {}
    for angle in ANGLES:
        planes = debayer_padded(padded[angle].astype(np.float32) / full, method)
        rgb[angle] = planes
        m = planes[0] * wr + planes[1] * wg + planes[2] * wb
        mono[angle] = np.clip(m, 0, 1, out=m)
    stokes = {}
    for idx, ch in enumerate("RGB"):
        stack = ChannelStack(*(rgb[a][idx] for a in ANGLES))
        stokes[ch] = stokes_from_intensities(stack, ch, valid)
    stokes["M"] = stokes_from_intensities(ChannelStack(*(mono[a] for a in ANGLES)), "M", valid)
    return stokes, mono


def _process_strip(padded, r0, r1, bit_depth, method, channels, want_planes, eps, sat_valid):
    full = np.float32((1 << bit_depth) - 1)
    valid = sat_valid[r0:r1]
    strip = {a: padded[a][r0 : r1 + 2] for a in ANGLES}
    stokes, mono = _channel_stokes(strip, full, method, valid)
    s_m = stokes["M"]

    need_dolp = want_planes or {"dolp", "pol"} & set(channels)
    need_aolp = want_planes or "pol" in channels
    d = dolp(s_m, eps) if need_dolp else None
    a = aolp(s_m) if need_aolp else None

    out = {}
    for ch in channels:
        if ch == "rgb":
            out[ch] = render.render_rgb(stokes["R"], stokes["G"], stokes["B"])
        elif ch == "dif":
            out[ch] = render.render_dif(stokes["R"], stokes["G"], stokes["B"])
        elif ch == "mono":
            out[ch] = render.render_mono(s_m)
        elif ch == "dolp":
            out[ch] = render.render_dolp(d)
        elif ch == "pol":
            out[ch] = render.render_pol(d, a)
        elif ch == "pauli":
            out[ch] = render.render_pauli(s_m, mono[45])
    planes = {}
    if want_planes:
        planes = {
            "s0": s_m.s0,
            "s1": s_m.s1,
            "s2": s_m.s2,
            "dolp": d,
            "aolp": a,
            "valid": valid & (s_m.s0 >= eps),
        }
    return out, planes


def extract_frame(
    raw: RawMosaicImage,
    channels=render.MODALITIES,
    method: str = "bilinear",
    workers: int = 1,
    keep_planes: bool = False,
    eps: float | None = None,
    saturation_margin: int = 0,
) -> FrameResult:
    """Run the full extraction on one raw frame.

    Returns the requested rendered modalities and, with ``keep_planes``, the
    monochrome Stokes/DoLP/AoLP planes and the validity mask.
    """
    channels = parse_channels(channels)
    if eps is None:
        eps = default_eps(raw.bit_depth)
    mosaics = split_planes(raw)
    padded = {a: np.pad(mosaics[a], 1, mode="reflect") for a in ANGLES}
    sat_valid = saturation_mask(raw, saturation_margin)
    h, w = mosaics.shape

    bounds = [(r0, min(r0 + STRIP_ROWS, h)) for r0 in range(0, h, STRIP_ROWS)]

    def work(b):
        return _process_strip(
            padded, b[0], b[1], raw.bit_depth, method, channels, keep_planes, eps, sat_valid
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]

    result = FrameResult()
    for ch in channels:
        result.images[ch] = np.concatenate([p[0][ch] for p in parts], axis=0)
    if keep_planes:
        for name in PLANE_NAMES:
            result.planes[name] = np.concatenate([p[1][name] for p in parts], axis=0)
    return result


def stokes_planes(raw: RawMosaicImage, method: str = "bilinear") -> dict:
    """Per-channel Stokes images for a whole frame (R, G, B and M)."""
    mosaics = split_planes(raw)
    padded = {a: np.pad(mosaics[a], 1, mode="reflect") for a in ANGLES}
    stokes, _ = _channel_stokes(padded, np.float32(raw.max_code), method, saturation_mask(raw))
    return stokes

