"""Surface-noise magnitude in the presence of voltage-independent technical noise.

Surface and technical PSDs add.  Measured at the ↔ angle phi with total
ratio R_tot, technical ratio R_techn and surface ratio R_surf,phi =
R_surf cos^2(phi), the surface share of the ↔ PSD is

    f = (R_tot - R_techn) / (R_surf,phi - R_techn),

and the surface PSD parallel to the trap follows from the projection
S_h = S_x (R_surf sin^2 phi + cos^2 phi).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from . import fields, noise_models
from .errors import DegenerateDenominator, UnphysicalFraction, ValidationError
from .fields import DrivePoint
from .geometry import TrapLayout
from .heating import CA40


@dataclass(frozen=True)
class DisentangleInput:
    r_tot: float
    r_techn: float
    phi: float  # degrees
    s_tot_h: float  # (V/m)^2/Hz along ↔
    r_tot_sigma: float = 0.0
    s_tot_h_sigma: float = 0.0
    r_surf: float = 2.0

    def __post_init__(self):
        if self.s_tot_h < 0:
            raise ValidationError("total PSD must be non-negative")

    @property
    def r_surf_phi(self) -> float:
        return self.r_surf * math.cos(math.radians(self.phi)) ** 2

    @property
    def projection(self) -> float:
        """S_h / S_x for the surface model at angle phi."""
        t = math.radians(self.phi)
        return self.r_surf * math.sin(t) ** 2 + math.cos(t) ** 2


@dataclass(frozen=True)
class SurfaceEstimate:
    s_surf_h: float
    s_surf_h_sigma: float
    s_surf_x: float
    s_surf_x_sigma: float
    surface_fraction: float
    surface_fraction_sigma: float
    flagged: bool = False

    def as_dict(self) -> dict:
        return {
            "s_surf_h": self.s_surf_h,
            "s_surf_x": self.s_surf_x,
            "surface_fraction": self.surface_fraction,
            "sigmas": {
                "s_surf_h": self.s_surf_h_sigma,
                "s_surf_x": self.s_surf_x_sigma,
                "surface_fraction": self.surface_fraction_sigma,
            },
            "flagged": self.flagged,
        }


def extract_surface(inp: DisentangleInput) -> SurfaceEstimate:
    den = inp.r_surf_phi - inp.r_techn
    if abs(den) < 1e-12 * max(1.0, abs(inp.r_techn)):
        raise DegenerateDenominator("technical ratio equals the surface ratio at this angle")
    frac = (inp.r_tot - inp.r_techn) / den
    frac_sigma = inp.r_tot_sigma / abs(den)
    s_h = inp.s_tot_h * frac
    s_h_sigma = math.hypot(frac * inp.s_tot_h_sigma, inp.s_tot_h * frac_sigma)
    proj = inp.projection
    flagged = frac < -2 * frac_sigma or frac > 1 + 2 * frac_sigma
    if flagged:
        warnings.warn(f"surface fraction {frac:.3g} outside [0, 1]", UnphysicalFraction)
    return SurfaceEstimate(
        s_surf_h=s_h, s_surf_h_sigma=s_h_sigma,
        s_surf_x=s_h / proj, s_surf_x_sigma=s_h_sigma / proj,
        surface_fraction=frac, surface_fraction_sigma=frac_sigma,
        flagged=flagged,
    )


def center_field_angle_at(layout: TrapLayout, drive: DrivePoint, ion=CA40) -> float:
    """phi_g: tilt of the center-electrode field at the trap equilibrium."""
    eq = fields.find_equilibrium(layout, drive, ion)
    return fields.center_field_angle(layout, eq.position)


def technical_ratio_at(layout: TrapLayout, drive: DrivePoint, angle: float | None = None,
                       ion=CA40) -> float:
    """Voltage-independent model ratio ↕/↔ at the given ↔ angle (default phi_g)."""
    eq = fields.find_equilibrium(layout, drive, ion)
    if angle is None:
        angle = fields.center_field_angle(layout, eq.position)
    t = noise_models.technical_indep_psd(layout, eq.position)
    return float(noise_models.ratio_at(t, angle))
