"""Bayer demosaicking of the per-angle RGGB planes and grayscale conversion."""

from __future__ import annotations

import numpy as np

METHODS = ("bilinear", "nearest")

# Rec.601 luma
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def normalize(plane: np.ndarray, bit_depth: int | None = None, dtype=np.float32) -> np.ndarray:
    """Map integer sensor codes to [0, 1]; float input is passed through."""
    plane = np.asarray(plane)
    if np.issubdtype(plane.dtype, np.floating):
        return plane.astype(dtype, copy=False)
    if bit_depth is None:
        bit_depth = 8 * plane.dtype.itemsize
    return plane.astype(dtype) / dtype((1 << bit_depth) - 1)


def pad_plane(plane: np.ndarray) -> np.ndarray:
    """Mirror-pad by one pixel.

    Mirroring (without repeating the edge sample) keeps the Bayer phase, so
    an out-of-bounds neighbour is replaced by the nearest in-bounds sample of
    the same colour.
    """
    return np.pad(plane, 1, mode="reflect")


def _site(P: np.ndarray, pr: int, pc: int, dr: int, dc: int) -> np.ndarray:
    # neighbour (dr, dc) of every output pixel with parity (pr, pc); P has a 1-px border
    h, w = P.shape[0] - 2, P.shape[1] - 2
    r0, c0 = 1 + pr + dr, 1 + pc + dc
    return P[r0 : r0 + h - 1 : 2, c0 : c0 + w - 1 : 2]


def debayer_padded(P: np.ndarray, method: str = "bilinear") -> np.ndarray:
    """Demosaic a mirror-padded RGGB plane (the interior starts on an R site).

    Returns a planar ``(3, h, w)`` array for the unpadded interior.  Working on a
    padded array lets callers process horizontal strips independently and
    still get results identical to a whole-frame pass.
    """
    if method not in METHODS:
        raise ValueError(f"unknown debayer method {method!r}; expected one of {METHODS}")
    h, w = P.shape[0] - 2, P.shape[1] - 2
    if h % 2 or w % 2:
        raise ValueError("Bayer plane dimensions must be even")
    out = np.empty((3, h, w), dtype=P.dtype)
    R, G, B = out

    def s(pr, pc, dr=0, dc=0):
        return _site(P, pr, pc, dr, dc)

    # sample sites: R at (0,0), G at (0,1) and (1,0), B at (1,1)
    R[0::2, 0::2] = s(0, 0)
    G[0::2, 1::2] = s(0, 1)
    G[1::2, 0::2] = s(1, 0)
    B[1::2, 1::2] = s(1, 1)

    if method == "nearest":
        # every pixel of a quad takes the quad's R and B; the missing G at R/B
        # sites is the G sharing the same row
        for pr in (0, 1):
            for pc in (0, 1):
                R[pr::2, pc::2] = s(pr, pc, -pr, -pc)
                B[pr::2, pc::2] = s(pr, pc, 1 - pr, 1 - pc)
        G[0::2, 0::2] = s(0, 0, 0, 1)
        G[1::2, 1::2] = s(1, 1, 0, -1)
        return out

    half = P.dtype.type(0.5)
    quarter = P.dtype.type(0.25)

    def horiz(pr, pc):
        return (s(pr, pc, 0, -1) + s(pr, pc, 0, 1)) * half

    def vert(pr, pc):
        return (s(pr, pc, -1, 0) + s(pr, pc, 1, 0)) * half

    def cross(pr, pc):
        return (((s(pr, pc, -1, 0) + s(pr, pc, 0, -1)) + s(pr, pc, 0, 1)) + s(pr, pc, 1, 0)) * quarter

    def diag(pr, pc):
        return (((s(pr, pc, -1, -1) + s(pr, pc, -1, 1)) + s(pr, pc, 1, -1)) + s(pr, pc, 1, 1)) * quarter

    R[0::2, 1::2] = horiz(0, 1)
    R[1::2, 0::2] = vert(1, 0)
    R[1::2, 1::2] = diag(1, 1)
    G[0::2, 0::2] = cross(0, 0)
    G[1::2, 1::2] = cross(1, 1)
    B[1::2, 0::2] = horiz(1, 0)
    B[0::2, 1::2] = vert(0, 1)
    B[0::2, 0::2] = diag(0, 0)
    return out


def debayer(
    plane: np.ndarray,
    method: str = "bilinear",
    bit_depth: int | None = None,
    dtype=np.float32,
) -> np.ndarray:
    """Demosaic one RGGB plane into an ``(h, w, 3)`` RGB image in [0, 1].

    Integer planes are normalized by ``2**bit_depth - 1`` first (bit depth
    inferred from the dtype when not given).
    """
    if method not in METHODS:
        raise ValueError(f"unknown debayer method {method!r}; expected one of {METHODS}")
    x = normalize(plane, bit_depth, dtype)
    if x.ndim != 2 or x.shape[0] % 2 or x.shape[1] % 2:
        raise ValueError("Bayer plane dimensions must be even")
    return np.moveaxis(debayer_padded(pad_plane(x), method), 0, -1)


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    """Rec.601 luma of an ``(..., 3)`` RGB array, clipped to [0, 1]."""
    rgb = np.asarray(rgb)
    if not np.issubdtype(rgb.dtype, np.floating):
        rgb = rgb.astype(np.float64)
    wr, wg, wb = (rgb.dtype.type(w) for w in LUMA_WEIGHTS)
    gray = rgb[..., 0] * wr + rgb[..., 1] * wg + rgb[..., 2] * wb
    return np.clip(gray, 0, 1)
