"""Directional electric-field noise PSD tensors at the ion.

Surface models (patch potentials, uncorrelated surface dipoles) return
diagonal tensors whose overall amplitude is free.  Technical models build the
tensor from the unit fields of the trap electrodes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import integrate

from . import fields
from .errors import DegenerateProjection, DomainError, QuadratureFailure, ValidationError
from .geometry import TrapLayout
from .heating import rate_from_psd

QUAD_EPSREL = 1e-12
EXP_CUTOFF = -math.log(1e-16)  # truncate exp(-u) below 1e-16
DIPOLE_RMAX = 1e3  # radial truncation, in units of d


@dataclass(frozen=True)
class PsdTensor:
    s: np.ndarray
    amplitude_known: bool = False
    label: str = ""

    def __post_init__(self):
        s = np.asarray(self.s, float)
        if s.shape != (3, 3):
            raise ValidationError("PSD tensor must be 3x3")
        if not np.allclose(s, s.T, rtol=0, atol=1e-12 * max(np.abs(s).max(), 1e-300)):
            raise ValidationError("PSD tensor must be symmetric")
        object.__setattr__(self, "s", 0.5 * (s + s.T))

    def project(self, vec) -> float:
        v = np.asarray(vec, float)
        return float(v @ self.s @ v)

    @property
    def polarization(self) -> float:
        """S_zz / S_xx."""
        return float(self.s[2, 2] / self.s[0, 0])

    def __add__(self, other: PsdTensor) -> PsdTensor:
        return PsdTensor(self.s + other.s, self.amplitude_known and other.amplitude_known, "sum")

    def __mul__(self, c: float) -> PsdTensor:
        return PsdTensor(c * self.s, self.amplitude_known, self.label)

    __rmul__ = __mul__


@dataclass(frozen=True)
class PatchParams:
    d: float
    xi: float

    def __post_init__(self):
        if not (self.d > 0 and self.xi > 0):
            raise ValidationError("ion height and correlation length must be positive")


def exponential_patch_spectrum(xi: float) -> Callable:
    """2D Fourier transform of an exponential patch autocorrelation."""
    def s(kx, ky):
        return 2 * np.pi * xi**2 / (1 + xi**2 * (kx * kx + ky * ky)) ** 1.5
    return s


def _quad(fn, a, b, points=None):
    val, err = integrate.quad(fn, a, b, epsabs=0.0, epsrel=QUAD_EPSREL, limit=500, points=points)
    if not np.isfinite(val) or err > 1e-9 * abs(val) + 1e-300:
        raise QuadratureFailure(f"quadrature error {err:.3g} on value {val:.3g}")
    return val


def _patch_radial(d: float, xi: float) -> float:
    """int_0^inf k^3 exp(-2dk) S_xi(k) dk, with u = 2dk."""
    c = xi / (2 * d)
    spectrum = exponential_patch_spectrum(xi)

    def integrand(u):
        return u**3 * np.exp(-u) * spectrum(u / (2 * d), 0.0)

    knee = 1.0 / c
    pts = [knee] if 0 < knee < EXP_CUTOFF else None
    return _quad(integrand, 0.0, EXP_CUTOFF, points=pts) / (2 * d) ** 4


def patch_psd(p: PatchParams, theta: str = "analytic") -> PsdTensor:
    """PSD shape for fluctuating patch potentials with exponential correlations.

    Integrates k^3 exp(-2dk) S_xi * (cos^2, sin^2, 1) over the k-plane.  With
    ``theta="analytic"`` the angular integral is done in closed form (pi, pi,
    2 pi); ``theta="numeric"`` integrates both variables numerically.
    """
    if theta == "analytic":
        radial = _patch_radial(p.d, p.xi)
        return PsdTensor(np.diag([np.pi, np.pi, 2 * np.pi]) * radial, label="patch")
    if theta != "numeric":
        raise ValueError("theta must be 'analytic' or 'numeric'")
    spectrum = exponential_patch_spectrum(p.xi)
    d = p.d
    weights = (lambda t: np.cos(t) ** 2, lambda t: np.sin(t) ** 2, lambda t: 1.0)
    knee = 2 * d / p.xi
    pts = [knee] if 0 < knee < EXP_CUTOFF else None
    out = []
    for w in weights:
        def inner(t, w=w):
            c, s = np.cos(t), np.sin(t)
            fn = lambda u: u**3 * np.exp(-u) * spectrum(u / (2 * d) * c, u / (2 * d) * s)
            return w(t) * _quad(fn, 0.0, EXP_CUTOFF, points=pts)
        out.append(_quad(inner, 0.0, 2 * np.pi, points=[np.pi / 2, np.pi, 3 * np.pi / 2]) / (2 * d) ** 4)
    return PsdTensor(np.diag(out), label="patch")


def dipole_field(x, y, d):
    """Field at (0, 0, d) of a unit vertical dipole at (x, y, 0), without 1/(4 pi eps0)."""
    r2 = x * x + y * y + d * d
    r5 = r2 * r2 * np.sqrt(r2)
    return np.stack(np.broadcast_arrays(3 * d * x / r5, 3 * d * y / r5, (x * x + y * y - 2 * d * d) / r5), axis=-1)


def dipole_psd(d: float) -> PsdTensor:
    """PSD shape for uncorrelated vertical surface dipoles of unit density.

    Plane integral of the squared dipole field, in polar coordinates; the
    azimuthal integral is analytic, the radial one is numeric up to 1000 d
    with the leading-order tail added in closed form.
    """
    if not d > 0:
        raise DomainError("ion height must be positive")
    rmax = DIPOLE_RMAX * d

    def inplane(rho):
        e = dipole_field(rho, 0.0, d)
        return rho * e[0] ** 2  # <cos^2> over azimuth handled below

    def normal(rho):
        e = dipole_field(rho, 0.0, d)
        return rho * e[2] ** 2

    # split the range: resolve the near region at the scale of d
    brk = [0.0, d, 10 * d, 100 * d, rmax]
    sxx = sum(_quad(inplane, a, b) for a, b in zip(brk, brk[1:]))
    szz = sum(_quad(normal, a, b) for a, b in zip(brk, brk[1:]))
    # tails: rho*(3 d rho)^2/rho^10 and rho*rho^4/rho^10
    sxx += 9 * d * d / (6 * rmax**6)
    szz += 1 / (4 * rmax**4)
    sxx *= np.pi
    szz *= 2 * np.pi
    return PsdTensor(np.diag([sxx, sxx, szz]), label="dipole")


def dipole_closed_form(d: float) -> np.ndarray:
    return 3 * np.pi / (8 * d**4) * np.array([1.0, 1.0, 2.0])


def _check_point(p):
    p = np.asarray(p, float)
    if p[2] <= 0:
        raise DomainError("ion position must lie above the electrode plane")
    return p


def technical_indep_psd(layout: TrapLayout, ion_position, names: Sequence[str] | None = None,
                        amplitude: float = 1.0) -> PsdTensor:
    """Equal, uncorrelated voltage noise on every DC electrode: s0 * sum_k E_k E_k^T."""
    p = _check_point(ion_position)
    names = layout.dc_names if names is None else list(names)
    e = fields.fields(layout, names, p)
    return PsdTensor(amplitude * np.einsum("ki,kj->ij", e, e), label="indep")


def technical_dep_psd(layout: TrapLayout, dc_voltages: Mapping[str, float], ion_position,
                      amplitude: float = 1.0) -> PsdTensor:
    """Noise amplitude proportional to each electrode's voltage: s0 * sum_k V_k^2 E_k E_k^T."""
    p = _check_point(ion_position)
    missing = set(layout.dc_names) - set(dc_voltages)
    if missing:
        raise ValidationError(f"no voltage for DC electrodes {sorted(missing)}")
    names = layout.dc_names
    v = np.array([dc_voltages[n] for n in names], float)
    e = fields.fields(layout, names, p) * v[:, None]
    return PsdTensor(amplitude * np.einsum("ki,kj->ij", e, e), label="dep")


def pickup_psd(layout: TrapLayout, ion_position, amplitude: float = 1.0) -> PsdTensor:
    """Noise common to every non-ground electrode: the trap acts as one electrode."""
    p = _check_point(ion_position)
    e = fields.fields(layout, layout.active_names, p).sum(axis=0)
    return PsdTensor(amplitude * np.outer(e, e), label="pickup")


def electrode_contributions(layout: TrapLayout, ion_position, names=None) -> dict[str, float]:
    """|E_k|^2 per electrode, the trace of each term of the voltage-independent sum."""
    p = _check_point(ion_position)
    names = layout.dc_names if names is None else list(names)
    e = fields.fields(layout, names, p)
    return dict(zip(names, np.sum(e * e, axis=1).tolist()))


# ---------------------------------------------------------------------------
# ratio curves


def mode_vectors(phi):
    """(↕, ↔) unit vectors for the ↔ mode at ``phi`` degrees to the surface."""
    t = np.radians(np.asarray(phi, float))
    zero = np.zeros_like(t)
    h = np.stack([zero, np.cos(t), np.sin(t)], axis=-1)
    v = np.stack([zero, -np.sin(t), np.cos(t)], axis=-1)
    return v, h


@dataclass(frozen=True)
class RatioCurve:
    angles: np.ndarray
    ratios: np.ndarray
    max_ratio: float
    max_angle: float  # degrees in [-90, 90)

    def at(self, phi: float) -> float:
        return float(np.interp(phi, self.angles, self.ratios))


def ratio_at(t: PsdTensor, phi) -> np.ndarray:
    v, h = mode_vectors(phi)
    sv = np.einsum("...i,ij,...j->...", v, t.s, v)
    sh = np.einsum("...i,ij,...j->...", h, t.s, h)
    if np.any((np.abs(sv) < 1e-30) & (np.abs(sh) < 1e-30)):
        raise DegenerateProjection("tensor has no weight in the radial plane")
    with np.errstate(divide="ignore"):
        return sv / sh


def principal_ratio(t: PsdTensor) -> tuple[float, float]:
    """Exact maximum of the ↕/↔ ratio over mode angle, and the angle attaining it."""
    rad = t.s[1:, 1:]
    lam, vec = np.linalg.eigh(rad)
    if lam[1] < 1e-30:
        raise DegenerateProjection("tensor has no weight in the radial plane")
    vmax = vec[:, 1]
    angle = fields.field_angle(np.array([0.0, vmax[0], vmax[1]]))
    ratio = lam[1] / lam[0] if lam[0] > 1e-15 * lam[1] else math.inf
    return float(ratio), angle


def ratio_curve(t: PsdTensor, angle_grid=None) -> RatioCurve:
    """↕/↔ PSD ratio versus ↔-mode angle (degrees).

    ``max_ratio``/``max_angle`` come from the principal axes of the radial
    block rather than the grid, so they are exact for any grid spacing.
    """
    angles = np.arange(0.0, 90.0 + 1e-9, 1.0) if angle_grid is None else np.asarray(angle_grid, float)
    if angles.size == 0:
        raise ValidationError("empty angle grid")
    ratios = ratio_at(t, angles)
    rmax, amax = principal_ratio(t)
    return RatioCurve(angles, ratios, rmax, amax)


def rate_for_mode(t: PsdTensor, vec, ion, omega) -> float:
    """Heating rate (quanta/s) of the mode along ``vec``."""
    return float(rate_from_psd(t.project(vec), ion, omega))
