"""Linear Stokes vectors from four polarizer-angle intensities and the
quantities derived from them: DoLP, AoLP and the diffuse (unpolarized)
intensity.  Circular polarization is not measured, so S3 is never stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CHANNELS = ("R", "G", "B", "M")


@dataclass(frozen=True)
class ChannelStack:
    """Co-registered intensities behind polarizers at 0, 45, 90 and 135 deg."""

    i0: np.ndarray
    i45: np.ndarray
    i90: np.ndarray
    i135: np.ndarray

    def __post_init__(self):
        shapes = {np.shape(p) for p in (self.i0, self.i45, self.i90, self.i135)}
        if len(shapes) != 1:
            raise ValueError(f"dimension mismatch between angle planes: {sorted(shapes)}")

    @classmethod
    def from_mapping(cls, planes: dict) -> "ChannelStack":
        return cls(planes[0], planes[45], planes[90], planes[135])


@dataclass(frozen=True)
class StokesImage:
    s0: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    channel: str = "M"
    validity: np.ndarray | None = None

    def __post_init__(self):
        if not (np.shape(self.s0) == np.shape(self.s1) == np.shape(self.s2)):
            raise ValueError("dimension mismatch between Stokes planes")
        if self.validity is not None and np.shape(self.validity) != np.shape(self.s0):
            raise ValueError("validity mask does not match Stokes planes")

    @property
    def shape(self):
        return np.shape(self.s0)

    @property
    def valid(self) -> np.ndarray:
        if self.validity is None:
            return np.ones(self.shape, dtype=bool)
        return self.validity


@dataclass(frozen=True)
class PolarPlanes:
    dolp: np.ndarray
    aolp: np.ndarray  # degrees in [0, 180)
    idif: np.ndarray
    valid: np.ndarray  # DoLP trustworthy (not saturated, S0 above eps)
    aolp_valid: np.ndarray = field(default=None)


def stokes_from_intensities(
    stack: ChannelStack, channel: str = "M", validity: np.ndarray | None = None
) -> StokesImage:
    i0, i45, i90, i135 = (np.asarray(p) for p in (stack.i0, stack.i45, stack.i90, stack.i135))
    return StokesImage(i0 + i90, i0 - i90, i45 - i135, channel, validity)


def polarized_intensity(s: StokesImage) -> np.ndarray:
    """sqrt(S1^2 + S2^2), the linearly polarized part of S0."""
    return np.hypot(s.s1, s.s2)


def default_eps(bit_depth: int) -> float:
    """One code step in normalized units."""
    return 1.0 / (1 << bit_depth)


def degenerate(s: StokesImage, eps: float) -> np.ndarray:
    """Pixels too dark for a meaningful polarization ratio."""
    return np.asarray(s.s0) < eps


def dolp(s: StokesImage, eps: float = 1.0 / 65536) -> np.ndarray:
    """Degree of linear polarization, clamped to [0, 1]; 0 where S0 < eps."""
    s0 = np.asarray(s.s0)
    dark = s0 < eps
    with np.errstate(divide="ignore", invalid="ignore"):
        d = polarized_intensity(s) / np.where(dark, 1, s0).astype(s0.dtype, copy=False)
    d = np.clip(d, 0, 1, out=d)
    d[dark] = 0
    return d


def dolp_validity(s: StokesImage, eps: float = 1.0 / 65536) -> np.ndarray:
    return s.valid & ~degenerate(s, eps)


def aolp(s: StokesImage) -> np.ndarray:
    """Angle of linear polarization in degrees, in [0, 180).

    Uses the two-argument arctangent so the orientation is resolved over the
    full half-turn.  Undefined (S1 = S2 = 0) pixels get 0.
    """
    s1, s2 = np.asarray(s.s1), np.asarray(s.s2)
    if not np.issubdtype(s1.dtype, np.floating):
        s1, s2 = s1.astype(np.float64), s2.astype(np.float64)
    a = np.degrees(np.arctan2(s2, s1)) * s1.dtype.type(0.5)
    a = np.where(a < 0, a + 180, a)
    # -0.0 and values rounding up to exactly 180 fold back to 0
    a[a >= 180] = 0
    a[(s1 == 0) & (s2 == 0)] = 0
    return a + 0.0


def aolp_validity(s: StokesImage) -> np.ndarray:
    return s.valid & ~((np.asarray(s.s1) == 0) & (np.asarray(s.s2) == 0))


def i_dif(s: StokesImage) -> np.ndarray:
    """Diffuse intensity (S0 - sqrt(S1^2 + S2^2)) / 2, floored at 0."""
    s0 = np.asarray(s.s0)
    if not np.issubdtype(s0.dtype, np.floating):
        s0 = s0.astype(np.float64)
    d = (s0 - polarized_intensity(s)) * s0.dtype.type(0.5)
    return np.maximum(d, 0, out=d)


def polar_planes(s: StokesImage, eps: float = 1.0 / 65536) -> PolarPlanes:
    return PolarPlanes(
        dolp=dolp(s, eps),
        aolp=aolp(s),
        idif=i_dif(s),
        valid=dolp_validity(s, eps),
        aolp_valid=aolp_validity(s),
    )


def compute_all(stacks: dict, validity: np.ndarray | None = None, eps: float = 1.0 / 65536):
    """Stokes images for R, G, B and M plus polarization planes from M.

    ``stacks`` maps channel name to :class:`ChannelStack`.  DoLP, AoLP and
    I_dif come from the monochrome Stokes vector only, on the assumption that
    polarization does not vary much with wavelength.
    """
    shapes = {np.shape(st.i0) for st in stacks.values()}
    if len(shapes) != 1:
        raise ValueError(f"dimension mismatch between channel stacks: {sorted(shapes)}")
    stokes = {
        ch: stokes_from_intensities(stacks[ch], ch, validity) for ch in CHANNELS if ch in stacks
    }
    return stokes, polar_planes(stokes["M"], eps)
