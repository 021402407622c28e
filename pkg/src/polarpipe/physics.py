"""Analytic polarization models for a camera looking at open water.

Reflection off the water surface is fully polarized at Brewster's angle;
with a camera a fixed height above flat water, that angle corresponds to a
fixed horizontal distance.  Skylight polarization follows the single
scattering Rayleigh law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

N_AIR = 1.0
N_WATER = 1.33


@dataclass(frozen=True)
class InterfaceSpec:
    n1: float = N_AIR  # incidence medium
    n2: float = N_WATER  # transmission medium

    def __post_init__(self):
        if not (self.n1 > 0 and self.n2 > 0):
            raise ValueError("refractive indices must be positive")


@dataclass(frozen=True)
class CameraGeometry:
    height_m: float = 0.75

    def __post_init__(self):
        if not self.height_m > 0:
            raise ValueError("camera height must be positive")


def brewster_angle(iface: InterfaceSpec = InterfaceSpec()) -> float:
    """Brewster's angle in degrees."""
    return math.degrees(math.atan2(iface.n2, iface.n1))


def fresnel_reflectances(theta_i: float, iface: InterfaceSpec = InterfaceSpec()) -> tuple[float, float]:
    """Power reflectances ``(Rs, Rp)`` for incidence angle ``theta_i`` in degrees."""
    if not 0.0 <= theta_i < 90.0:
        raise ValueError(f"incidence angle {theta_i} outside [0, 90)")
    n1, n2 = iface.n1, iface.n2
    ti = math.radians(theta_i)
    sin_t = n1 * math.sin(ti) / n2
    if sin_t > 1.0:
        raise ValueError(f"total internal reflection at {theta_i} deg (no transmitted wave)")
    cos_i = math.cos(ti)
    cos_t = math.sqrt(1.0 - sin_t * sin_t)
    rs = (n1 * cos_i - n2 * cos_t) / (n1 * cos_i + n2 * cos_t)
    rp = (n2 * cos_i - n1 * cos_t) / (n2 * cos_i + n1 * cos_t)
    return rs * rs, rp * rp


def fresnel_dolp(theta_i: float, iface: InterfaceSpec = InterfaceSpec()) -> float:
    """DoLP of initially unpolarized light after specular reflection."""
    rs, rp = fresnel_reflectances(theta_i, iface)
    total = rs + rp
    if total == 0.0:
        # index-matched interface reflects nothing
        return 0.0
    return (rs - rp) / total


def incidence_from_distance(geom: CameraGeometry, d: float) -> float:
    """Incidence angle (deg from the surface normal) of the ray that meets
    flat water at horizontal distance ``d`` from the camera."""
    if not d > 0:
        raise ValueError("distance must be positive")
    return math.degrees(math.atan2(d, geom.height_m))


def rayleigh_dolp(scatter_angle: float, d_max: float = 1.0) -> float:
    """Single-scattering Rayleigh DoLP for a scattering angle in degrees."""
    if not 0.0 <= scatter_angle <= 180.0:
        raise ValueError("scattering angle must lie in [0, 180]")
    if not 0.0 < d_max <= 1.0:
        raise ValueError("d_max must lie in (0, 1]")
    t = math.radians(scatter_angle)
    s, c = math.sin(t), math.cos(t)
    return d_max * s * s / (1.0 + c * c)


def dolp_distance_profile(
    geom: CameraGeometry, iface: InterfaceSpec, distances
) -> list[tuple[float, float, float]]:
    """Rows of ``(distance_m, incidence_deg, dolp)`` for reflected skylight."""
    rows = []
    for d in distances:
        theta = incidence_from_distance(geom, d)
        rows.append((float(d), theta, fresnel_dolp(theta, iface)))
    return rows


def distance_grid(d_min: float, d_max: float, step: float) -> list[float]:
    """Inclusive grid, computed by integer stepping so no float drift accumulates."""
    n = int(round((d_max - d_min) / step))
    return [round(d_min + k * step, 10) for k in range(n + 1)]


def peak_distance(geom: CameraGeometry, iface: InterfaceSpec = InterfaceSpec()) -> float:
    """Distance at which the reflection is seen exactly at Brewster's angle."""
    return geom.height_m * iface.n2 / iface.n1
