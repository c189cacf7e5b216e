"""Visibility-degradation mechanisms with closed-form corrections.

Two mechanisms are modeled: beam-splitter imbalance (corrective factor
2RT/(R^2+T^2)) and spatial-mode mismatch at the beam splitter (squared Airy
overlap of the two tilted beams over the coupling-lens apertures).  The
combined budget multiplies the factors; that treats the mechanisms as
independent, which is an approximation, not a derivation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "BeamSplitter",
    "SpatialGeometry",
    "bessel_j1",
    "bs_visibility_factor",
    "spatial_overlap",
    "solve_angle_for_overlap",
    "visibility_budget",
    "J1_FIRST_ZERO",
]

J1_FIRST_ZERO = 3.8317059702075123


@dataclass(frozen=True)
class BeamSplitter:
    """Non-ideal beam splitter with reflectance R and transmittance T, R + T = 1."""

    reflectance: float
    transmittance: float

    def __post_init__(self) -> None:
        if self.reflectance < 0 or self.transmittance < 0:
            raise ValueError("R and T must be nonnegative")
        if abs(self.reflectance + self.transmittance - 1.0) > 1e-9:
            raise ValueError(
                f"R + T must equal 1, got {self.reflectance + self.transmittance}"
            )


@dataclass(frozen=True)
class SpatialGeometry:
    """Coupling-lens diameter d, wavelength, and beam intersection angle theta."""

    lens_diameter_m: float
    wavelength_m: float
    angle_rad: float

    def __post_init__(self) -> None:
        if not self.lens_diameter_m > 0:
            raise ValueError("lens diameter must be positive")
        if not self.wavelength_m > 0:
            raise ValueError("wavelength must be positive")
        if not abs(self.angle_rad) < math.pi / 2:
            raise ValueError("|theta| must be below pi/2")


def bessel_j1(x: float) -> float:
    """First-order Bessel function J1, |error| < 1e-12 for |x| <= 20.

    Power series below |x| = 9; Miller's downward recurrence with the
    J0 + 2 sum J_{2k} = 1 normalization beyond (the ascending series loses
    digits to cancellation there, upward recurrence is unstable).
    """
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    ax = abs(x)
    sign = -1.0 if x < 0 else 1.0  # J1 is odd
    if ax == 0.0:
        return 0.0
    if ax < 9.0:
        # sum_k (-1)^k (x/2)^{2k+1} / (k! (k+1)!)
        half = ax / 2.0
        term = half
        total = term
        k = 0
        while True:
            k += 1
            term *= -(half * half) / (k * (k + 1))
            total += term
            if abs(term) < 1e-18 * abs(total) + 1e-300:
                return sign * total

    # Miller's algorithm: recurse J_{n-1} = (2n/x) J_n - J_{n+1} downward
    # from a start order well above x, then normalize.
    nstart = int(ax + 20 + 10 * math.sqrt(ax))
    if nstart % 2:
        nstart += 1
    jp, jc = 0.0, 1e-300
    norm = 0.0
    j1 = 0.0
    for n in range(nstart, 0, -1):
        jm = (2.0 * n / ax) * jc - jp
        jp, jc = jc, jm
        if n - 1 == 1:
            j1 = jc
        if (n - 1) % 2 == 0:
            norm += 2.0 * jc if n - 1 > 0 else jc
        # rescale to avoid overflow during the growth phase
        if abs(jc) > 1e250:
            jp *= 1e-250
            jc *= 1e-250
            norm *= 1e-250
            j1 *= 1e-250
    return sign * j1 / norm


def bs_visibility_factor(bs: BeamSplitter) -> float:
    """Visibility correction 2RT/(R^2 + T^2) for an imbalanced splitter."""
    r, t = bs.reflectance, bs.transmittance
    return 2.0 * r * t / (r * r + t * t)


def _airy_amplitude(x: float) -> float:
    """2 J1(x)/x with the series limit 1 at x = 0."""
    if abs(x) < 1e-6:
        x2 = x * x
        return 1.0 - x2 / 8.0 + x2 * x2 / 192.0
    return 2.0 * bessel_j1(x) / x


def spatial_overlap(geom: SpatialGeometry) -> float:
    """Squared amplitude overlap [2 J1(x)/x]^2, x = pi d |sin theta| / lambda."""
    x = math.pi * geom.lens_diameter_m * abs(math.sin(geom.angle_rad)) / geom.wavelength_m
    return _airy_amplitude(x) ** 2


def solve_angle_for_overlap(target: float, lens_diameter_m: float,
                            wavelength_m: float) -> float:
    """Angle theta (rad) at which the spatial overlap equals ``target``.

    Bisection on the monotone branch x in (0, first J1 zero); unique solution.
    """
    if not 0.0 < target < 1.0:
        raise ValueError(f"target overlap must be in (0, 1), got {target}")
    amp_target = math.sqrt(target)
    lo, hi = 0.0, J1_FIRST_ZERO
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _airy_amplitude(mid) > amp_target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(hi, 1.0):
            break
    x = 0.5 * (lo + hi)
    s = x * wavelength_m / (math.pi * lens_diameter_m)
    if s >= 1.0:
        raise ValueError("target overlap unreachable for this geometry (sin theta >= 1)")
    return math.asin(s)


def visibility_budget(ideal_visibility: float, bs: BeamSplitter | None = None,
                      geom: SpatialGeometry | None = None) -> float:
    """Multiply the ideal visibility by the independent correction factors."""
    v = ideal_visibility
    if bs is not None:
        v *= bs_visibility_factor(bs)
    if geom is not None:
        v *= spatial_overlap(geom)
    return v
