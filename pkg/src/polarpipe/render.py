"""The six 8-bit visualizations: RGB, DIF, MONO, DOLP, POL and PAULI.

Every renderer is pointwise and returns an ``(h, w, 3)`` uint8 array.
Stokes intensities live in [0, 2] for unit-range sensor input, hence the
``/ 2`` wherever S0 is displayed.
"""

from __future__ import annotations

import numpy as np

from .stokes import StokesImage, i_dif

MODALITIES = ("mono", "rgb", "dif", "dolp", "pol", "pauli")


def quantize(x: np.ndarray) -> np.ndarray:
    """Round-half-up of ``255 * x`` clamped to [0, 255]."""
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(np.float64)
    y = np.floor(x * x.dtype.type(255) + x.dtype.type(0.5))
    return np.clip(y, 0, 255).astype(np.uint8)


def _as_float(x) -> np.ndarray:
    x = np.asarray(x)
    return x if np.issubdtype(x.dtype, np.floating) else x.astype(np.float64)


def hsv_to_rgb(hue_deg, sat, val) -> np.ndarray:
    """Vectorized HSV to RGB with hue in degrees; returns float ``(..., 3)``.

    At least one output channel always equals ``val`` exactly.
    """
    hue_deg, sat, val = (_as_float(v) for v in (hue_deg, sat, val))
    dtype = np.result_type(hue_deg, sat, val)
    hp = np.mod(hue_deg, dtype.type(360)) / dtype.type(60)
    vs = val * sat
    shape = np.broadcast_shapes(hp.shape, vs.shape, val.shape)
    out = np.empty(shape + (3,), dtype=dtype)
    for ch, n in enumerate((5, 3, 1)):
        k = hp + dtype.type(n)
        k = np.where(k >= 6, k - 6, k)
        ramp = np.clip(np.minimum(k, dtype.type(4) - k), 0, 1)
        out[..., ch] = val - vs * ramp
    return out


def _stack(r, g, b) -> np.ndarray:
    return np.stack([r, g, b], axis=-1)


def render_rgb(s_r: StokesImage, s_g: StokesImage, s_b: StokesImage) -> np.ndarray:
    return _stack(*(quantize(np.asarray(s.s0) * 0.5) for s in (s_r, s_g, s_b)))


def render_dif(s_r: StokesImage, s_g: StokesImage, s_b: StokesImage) -> np.ndarray:
    # I_dif shares the S0/2 display scale with render_rgb, so an unpolarized
    # pixel renders identically in both
    return _stack(*(quantize(i_dif(s)) for s in (s_r, s_g, s_b)))


def render_mono(s_m: StokesImage) -> np.ndarray:
    g = quantize(np.asarray(s_m.s0) * 0.5)
    return _stack(g, g, g)


def render_dolp(dolp: np.ndarray) -> np.ndarray:
    """Pseudo-color DoLP: hue sweeps 240 deg (blue, dolp 0) to 0 deg (red, dolp 1)."""
    d = np.clip(_as_float(dolp), 0, 1)
    one = d.dtype.type(1)
    return quantize(hsv_to_rgb(d.dtype.type(240) * (one - d), one, one))


def render_pol(dolp: np.ndarray, aolp_deg: np.ndarray) -> np.ndarray:
    """HSV image with hue = 2 * AoLP, saturation 1 and value = DoLP.

    Unpolarized regions go dark whatever their (noisy) angle.
    """
    d = np.clip(_as_float(dolp), 0, 1)
    a = _as_float(aolp_deg)
    return quantize(hsv_to_rgb(a * a.dtype.type(2), d.dtype.type(1), d))


def render_pauli(s_m: StokesImage, i45_m: np.ndarray) -> np.ndarray:
    return _stack(
        quantize(np.abs(np.asarray(s_m.s1))),
        quantize(i45_m),
        quantize(np.asarray(s_m.s0) * 0.5),
    )
