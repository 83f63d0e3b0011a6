"""Multipole expansion of electrode potentials and voltage solving.

Basis, in coordinates u = (r - center) / scale with x axial and z normal::

    Y0 = 2x^2 - y^2 - z^2   axial confinement (rotationally symmetric about x)
    Y1 = y^2 - z^2          radial quadrupole, axes along y and z
    Y2 = 2 y z              radial quadrupole, axes at 45 deg
    x, y, z                 uniform fields
    Yxy = 2 x y, Yxz = 2 x z  axial tilt terms, held at zero when solving

``Y2`` carries the factor 2 so that ``C cos(2 phi) Y1 + C sin(2 phi) Y2`` is
exactly ``C Y1`` rotated by ``phi`` about the axial direction.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import fields
from .errors import DomainError, RankDeficiency, ValidationError
from .fields import DrivePoint, ModeSet
from .geometry import TrapLayout
from .heating import CA40, IonSpecies

BASIS = ("Y0", "Y1", "Y2", "x", "y", "z", "Yxy", "Yxz")
QUADRUPOLES = ("Y0", "Y1", "Y2", "Yxy", "Yxz")
DIPOLES = ("x", "y", "z")
RCOND = 1e-10


def basis_values(u) -> np.ndarray:
    """Basis functions evaluated at scaled points ``u`` (..., 3) -> (..., 8)."""
    x, y, z = np.moveaxis(np.asarray(u, float), -1, 0)
    return np.stack([2 * x * x - y * y - z * z, y * y - z * z, 2 * y * z, x, y, z, 2 * x * y, 2 * x * z], axis=-1)


def _project(g, h) -> np.ndarray:
    """Basis coefficients of the local expansion g.u + u.H.u/2 (H traceless)."""
    return np.array([
        h[0, 0] / 4,
        h[1, 1] / 2 + h[0, 0] / 4,
        h[1, 2] / 2,
        g[0], g[1], g[2],
        h[0, 1] / 2,
        h[0, 2] / 2,
    ])


@dataclass(frozen=True)
class MultipoleMatrix:
    """C[i, k]: coefficient of basis function i for 1 V on electrode k."""

    coefficients: np.ndarray
    names: tuple[str, ...]
    center: np.ndarray
    scale: float
    offsets: np.ndarray  # potential at the center, per electrode

    def column(self, name: str) -> np.ndarray:
        return self.coefficients[:, self.names.index(name)]

    def local_potential(self, voltages, r) -> np.ndarray:
        """Second-order reconstruction of the potential at physical points ``r``."""
        v = np.array([voltages.get(n, 0.0) for n in self.names]) if isinstance(voltages, dict) else np.asarray(voltages)
        u = (np.asarray(r, float) - self.center) / self.scale
        return basis_values(u) @ (self.coefficients @ v) + self.offsets @ v


def expand(layout: TrapLayout, center, scale: float | None = None, names=None) -> MultipoleMatrix:
    """Expand the DC electrodes' unit potentials about ``center``."""
    center = np.asarray(center, float)
    if center[2] <= 0:
        raise DomainError("expansion center must lie above the electrode plane")
    scale = float(center[2] if scale is None else scale)
    names = tuple(layout.dc_names if names is None else names)
    cols, offsets = [], []
    for n in names:
        e = layout[n]
        g = fields.unit_gradient(e, center) * scale
        h = fields.unit_hessian(e, center) * scale**2
        cols.append(_project(g, h))
        offsets.append(float(fields.unit_potential(e, center)))
    return MultipoleMatrix(np.column_stack(cols), names, center, scale, np.array(offsets))


def physical_target(scale: float, **coeffs) -> np.ndarray:
    """Target vector from physical coefficients (V/m^2 for quadrupoles, V/m for dipoles)."""
    unknown = set(coeffs) - set(BASIS)
    if unknown:
        raise ValidationError(f"unknown basis functions {sorted(unknown)}")
    t = np.zeros(len(BASIS))
    for k, v in coeffs.items():
        t[BASIS.index(k)] = v * (scale if k in DIPOLES else scale**2)
    return t


@dataclass(frozen=True)
class VoltageSet:
    voltages: dict[str, float]
    achieved_multipoles: np.ndarray
    target: np.ndarray
    residual: float

    def as_array(self, names) -> np.ndarray:
        return np.array([self.voltages[n] for n in names])

    def scaled(self, factor: float) -> VoltageSet:
        return replace(
            self,
            voltages={k: factor * v for k, v in self.voltages.items()},
            achieved_multipoles=factor * self.achieved_multipoles,
            target=factor * self.target,
            residual=factor * self.residual,
        )


def solve_voltages(m: MultipoleMatrix, target) -> VoltageSet:
    """Minimum-norm least-squares voltages for a scaled multipole target."""
    target = np.asarray(target, float)
    if target.shape != (len(BASIS),):
        raise ValidationError(f"target must have {len(BASIS)} entries")
    v = np.linalg.pinv(m.coefficients, rcond=RCOND) @ target
    achieved = m.coefficients @ v
    residual = float(np.linalg.norm(achieved - target))
    tn = np.linalg.norm(target)
    if tn > 0 and residual > 1e-3 * tn:
        warnings.warn(f"multipole target not reachable (residual {residual / tn:.2e} of target)", RankDeficiency)
    return VoltageSet(dict(zip(m.names, v.tolist())), achieved, target, residual)


def curvature_floor(ion: IonSpecies = CA40, radial_frequency: float = 2 * np.pi * 2.6e6,
                    splitting: float = 2 * np.pi * 50e3) -> float:
    """Rotation curvature C (V/m^2) giving the requested radial frequency splitting."""
    lo = radial_frequency - splitting / 2
    hi = radial_frequency + splitting / 2
    return ion.mass * (hi**2 - lo**2) / (4 * ion.charge)


CURVATURE_FLOOR = curvature_floor()


def rotation_voltages(m: MultipoleMatrix, phi: float, c: float, c0: float,
                      floor: float = CURVATURE_FLOOR) -> VoltageSet:
    """Voltages for C0*Y0 + C cos(2 phi)*Y1 + C sin(2 phi)*Y2, no uniform field.

    ``phi`` in degrees; ``c`` and ``c0`` in V/m^2.  The stiff radial axis of the
    applied quadrupole sits at ``phi`` to the surface plane.
    """
    if not c >= floor:
        raise ValidationError(f"rotation curvature {c:.3g} V/m^2 below floor {floor:.3g}")
    t = np.radians(2 * phi)
    target = physical_target(m.scale, Y0=c0, Y1=c * np.cos(t), Y2=c * np.sin(t))
    return solve_voltages(m, target)


def rf_bias_rotation(layout: TrapLayout, drive: DrivePoint, bias: float,
                     ion: IonSpecies = CA40, guess=None) -> tuple[fields.EquilibriumPoint, ModeSet]:
    """Equilibrium and modes with a negative static ``bias`` (V) on the RF electrodes."""
    if not bias < 0:
        raise ValidationError("RF bias rotation needs a negative bias")
    return fields.solve_modes(layout, replace(drive, rf_bias=bias), ion, guess)
