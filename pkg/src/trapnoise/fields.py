"""Electrostatics of rectangular electrodes in a grounded plane.

A rectangle held at 1 V inside an otherwise grounded infinite plane has the
closed-form potential (sum over its four corners)

    phi = 1/(2 pi) * sum_ij s_ij * atan(a_i b_j / (z R_ij)),

a_i = x_i - x, b_j = y_j - y, R_ij = sqrt(a_i^2 + b_j^2 + z^2), s_ij = +1 on
the (x1, y1) and (x2, y2) corners and -1 on the other two.  Gradients and
Hessians below are the analytic derivatives of that expression.  The
pseudopotential Hessian away from the RF null needs third derivatives; they
are taken by complex-step differentiation of the analytic Hessian, which is
exact to rounding.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, NonConvergence, UnstablePoint, ValidationError
from .geometry import RectElectrode, TrapLayout
from .heating import IonSpecies

_INV_2PI = 1.0 / (2.0 * np.pi)
_SIGNS = np.array([[1.0, -1.0], [-1.0, 1.0]])  # [i over x-edges, j over y-edges]


def _as_points(p):
    p = np.asarray(p)
    if p.shape[-1] != 3:
        raise ValueError("points must have a trailing dimension of 3")
    z = p[..., 2]
    if np.any(np.real(z) <= 0):
        raise DomainError("evaluation point must lie strictly above the electrode plane")
    return p


def _corners(e: RectElectrode, p):
    """Corner offsets broadcast to shape (..., 2, 2)."""
    xs = np.array(e.x_range)
    ys = np.array(e.y_range)
    a = xs[:, None] - p[..., 0, None, None]
    b = ys[None, :] - p[..., 1, None, None]
    z = p[..., 2, None, None] + 0.0 * a
    return a, b, z


def unit_potential(e: RectElectrode, p) -> np.ndarray:
    """Potential at ``p`` with 1 V on ``e`` and the rest of the plane grounded."""
    p = _as_points(p)
    a, b, z = _corners(e, p)
    r = np.sqrt(a * a + b * b + z * z)
    terms = np.arctan(a * b / (z * r))
    return _INV_2PI * np.sum(_SIGNS * terms, axis=(-2, -1))


def unit_gradient(e: RectElectrode, p) -> np.ndarray:
    p = _as_points(p)
    a, b, z = _corners(e, p)
    a2, b2, z2 = a * a, b * b, z * z
    r = np.sqrt(a2 + b2 + z2)
    fa = b * z / ((a2 + z2) * r)
    fb = a * z / ((b2 + z2) * r)
    fz = -a * b * (a2 + b2 + 2 * z2) / ((a2 + z2) * (b2 + z2) * r)
    # a = x_i - x, b = y_j - y
    g = np.stack([-fa, -fb, fz], axis=-1)
    return _INV_2PI * np.einsum("ij,...ijk->...k", _SIGNS, g)


def unit_field(e: RectElectrode, p) -> np.ndarray:
    """Electric field (V/m per volt on ``e``), i.e. minus the potential gradient."""
    return -unit_gradient(e, p)


def unit_hessian(e: RectElectrode, p) -> np.ndarray:
    """Second derivatives of :func:`unit_potential`, shape (..., 3, 3), in 1/m^2.

    Complex ``p`` is accepted (used for complex-step third derivatives).
    """
    p = _as_points(p)
    a, b, z = _corners(e, p)
    a2, b2, z2 = a * a, b * b, z * z
    r2 = a2 + b2 + z2
    r3 = r2 * np.sqrt(r2)
    az = a2 + z2
    bz = b2 + z2
    faa = -a * b * z * (3 * a2 + 2 * b2 + 3 * z2) / (az * az * r3)
    fbb = -a * b * z * (2 * a2 + 3 * b2 + 3 * z2) / (bz * bz * r3)
    fab = z / r3
    faz = -b * (-a2 * a2 - a2 * b2 + a2 * z2 + b2 * z2 + 2 * z2 * z2) / (az * az * r3)
    fbz = -a * (-a2 * b2 + a2 * z2 - b2 * b2 + b2 * z2 + 2 * z2 * z2) / (bz * bz * r3)
    poly = (
        2 * a2**3 + 3 * a2**2 * b2 + 7 * a2**2 * z2 + 3 * a2 * b2**2 + 12 * a2 * b2 * z2
        + 11 * a2 * z2**2 + 2 * b2**3 + 7 * b2**2 * z2 + 11 * b2 * z2**2 + 6 * z2**3
    )
    fzz = a * b * z * poly / (az * az * bz * bz * r3)
    xx, yy, zz, xy, xz, yz = faa, fbb, fzz, fab, -faz, -fbz
    rows = [
        np.stack([xx, xy, xz], axis=-1),
        np.stack([xy, yy, yz], axis=-1),
        np.stack([xz, yz, zz], axis=-1),
    ]
    h = np.stack(rows, axis=-2)
    return _INV_2PI * np.einsum("ij,...ijkl->...kl", _SIGNS, h)


def hessian_directional_derivative(e: RectElectrode, p, direction, step: float = 1e-30):
    """d/dt H(p + t*direction) at t = 0 via complex step."""
    p = np.asarray(p, float)
    d = np.asarray(direction, float)
    scale = max(float(np.real(p[..., 2]).min()), 1e-12)
    h = step * scale
    return np.imag(unit_hessian(e, p + 1j * h * d)) / h


# ---------------------------------------------------------------------------
# layout-level superposition


def potentials(layout: TrapLayout, names: Sequence[str], p) -> np.ndarray:
    return np.stack([unit_potential(layout[n], p) for n in names], axis=-1)


def fields(layout: TrapLayout, names: Sequence[str], p) -> np.ndarray:
    """Unit fields of the named electrodes, shape (..., n, 3)."""
    return np.stack([unit_field(layout[n], p) for n in names], axis=-2)


def hessians(layout: TrapLayout, names: Sequence[str], p) -> np.ndarray:
    return np.stack([unit_hessian(layout[n], p) for n in names], axis=-3)


def combined_unit_gradient(layout: TrapLayout, names: Sequence[str], p) -> np.ndarray:
    """Gradient of the potential with 1 V on every named electrode at once."""
    return sum(unit_gradient(layout[n], p) for n in names)


def combined_unit_hessian(layout: TrapLayout, names: Sequence[str], p) -> np.ndarray:
    return sum(unit_hessian(layout[n], p) for n in names)


def layout_field(layout: TrapLayout, voltages: Mapping[str, float], p) -> np.ndarray:
    """Field from an arbitrary voltage assignment (missing electrodes at 0 V)."""
    p = _as_points(p)
    out = np.zeros(np.shape(p), dtype=float)
    for name, v in voltages.items():
        if v:
            out = out + v * unit_field(layout[name], p)
    return out


def rf_null(layout: TrapLayout, guess=None, tol: float = 1e-15, max_iter: int = 100) -> np.ndarray:
    """Point where the RF field vanishes, solved in the radial (y, z) plane at fixed x."""
    if guess is None:
        c = layout.center_electrode
        a = c.y_range[1] - c.y_range[0]
        b = np.mean([layout[n].y_range[1] - layout[n].y_range[0] for n in layout.rf_names])
        # symmetric gapless five-wire null height
        guess = (c.center[0], c.center[1], 0.5 * np.sqrt(a * a + 2 * a * b))
    p = np.array(guess, float)
    names = layout.rf_names
    for _ in range(max_iter):
        g = combined_unit_gradient(layout, names, p)[1:]
        h = combined_unit_hessian(layout, names, p)[1:, 1:]
        step = np.linalg.solve(h, -g)
        limit = 0.25 * p[2]
        n = np.linalg.norm(step)
        if n > limit:
            step *= limit / n
        p[1:] += step
        if p[2] <= 0:
            p[2] = 0.5 * (p[2] - step[1])
        if np.linalg.norm(step) < tol * p[2]:
            return p
    raise NonConvergence("RF null search did not converge")


# ---------------------------------------------------------------------------
# drive, pseudopotential, equilibrium


@dataclass(frozen=True)
class DrivePoint:
    rf_amplitude: float
    rf_frequency: float  # angular, rad/s
    rf_bias: float = 0.0
    dc_voltages: Mapping[str, float] = field(default_factory=dict)
    stray_field: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.rf_frequency > 0:
            raise ValidationError("rf_frequency must be positive")
        object.__setattr__(self, "dc_voltages", dict(self.dc_voltages))

    def with_dc(self, voltages: Mapping[str, float]) -> DrivePoint:
        return replace(self, dc_voltages=dict(voltages))

    def static_voltages(self, layout: TrapLayout) -> dict[str, float]:
        """Every electrode's static voltage (RF bias included)."""
        unknown = set(self.dc_voltages) - set(layout.dc_names)
        if unknown:
            raise ValidationError(f"voltages given for non-DC electrodes: {sorted(unknown)}")
        out = {n: float(self.dc_voltages.get(n, 0.0)) for n in layout.dc_names}
        for n in layout.rf_names:
            out[n] = float(self.rf_bias)
        return out


def _pseudo_prefactor(drive: DrivePoint, ion: IonSpecies) -> float:
    return ion.charge**2 * drive.rf_amplitude**2 / (4 * ion.mass * drive.rf_frequency**2)


def pseudopotential(layout: TrapLayout, drive: DrivePoint, ion: IonSpecies, p) -> np.ndarray:
    """Time-averaged RF energy q^2 |E_RF|^2 / (4 m Omega^2) in joules."""
    g = combined_unit_gradient(layout, layout.rf_names, p)
    return _pseudo_prefactor(drive, ion) * np.sum(g * g, axis=-1)


def pseudopotential_gradient(layout, drive, ion, p) -> np.ndarray:
    g = combined_unit_gradient(layout, layout.rf_names, p)
    h = combined_unit_hessian(layout, layout.rf_names, p)
    return 2 * _pseudo_prefactor(drive, ion) * (h @ g)


def pseudopotential_hessian(layout, drive, ion, p) -> np.ndarray:
    p = np.asarray(p, float)
    g = combined_unit_gradient(layout, layout.rf_names, p)
    h = combined_unit_hessian(layout, layout.rf_names, p)
    gn = np.linalg.norm(g)
    third = np.zeros((3, 3))
    if gn > 0:
        d = g / gn
        third = gn * sum(hessian_directional_derivative(layout[n], p, d) for n in layout.rf_names)
    return 2 * _pseudo_prefactor(drive, ion) * (h @ h + third)


def static_potential_energy(layout, drive, ion, p) -> np.ndarray:
    p = _as_points(p)
    u = sum(v * unit_potential(layout[n], p) for n, v in drive.static_voltages(layout).items())
    return ion.charge * (u - p @ np.asarray(drive.stray_field, float))


def static_gradient(layout, drive, ion, p) -> np.ndarray:
    g = sum(v * unit_gradient(layout[n], p) for n, v in drive.static_voltages(layout).items() if v)
    g = g - np.asarray(drive.stray_field, float)
    return ion.charge * g


def static_hessian(layout, drive, ion, p) -> np.ndarray:
    h = np.zeros((3, 3))
    for n, v in drive.static_voltages(layout).items():
        if v:
            h = h + v * unit_hessian(layout[n], p)
    return ion.charge * h


def total_energy(layout, drive, ion, p):
    return pseudopotential(layout, drive, ion, p) + static_potential_energy(layout, drive, ion, p)


def total_gradient(layout, drive, ion, p) -> np.ndarray:
    return pseudopotential_gradient(layout, drive, ion, p) + static_gradient(layout, drive, ion, p)


def total_hessian(layout, drive, ion, p) -> np.ndarray:
    return pseudopotential_hessian(layout, drive, ion, p) + static_hessian(layout, drive, ion, p)


@dataclass(frozen=True)
class EquilibriumPoint:
    position: np.ndarray
    iterations: int = 0

    @property
    def height_d(self) -> float:
        return float(self.position[2])


def _characteristic_force(layout, drive, ion, height) -> float:
    energy = _pseudo_prefactor(drive, ion) / height**2
    static = max([abs(v) for v in drive.static_voltages(layout).values()] + [0.0])
    energy = max(energy, ion.charge * static)
    return energy / height


def find_equilibrium(
    layout: TrapLayout,
    drive: DrivePoint,
    ion: IonSpecies,
    guess=None,
    rtol: float = 1e-12,
    max_iter: int = 200,
) -> EquilibriumPoint:
    """Newton iteration on the total-potential gradient with backtracking."""
    p = np.array(rf_null(layout) if guess is None else guess, float)
    if p[2] <= 0:
        raise DomainError("initial guess must lie above the electrode plane")
    tol = rtol * _characteristic_force(layout, drive, ion, p[2])
    g = total_gradient(layout, drive, ion, p)
    for it in range(max_iter):
        gn = np.linalg.norm(g)
        if gn < tol:
            break
        h = total_hessian(layout, drive, ion, p)
        try:
            step = np.linalg.solve(h, -g)
        except np.linalg.LinAlgError as exc:
            raise UnstablePoint("singular Hessian during equilibrium search") from exc
        limit = 0.25 * p[2]
        sn = np.linalg.norm(step)
        if sn > limit:
            step *= limit / sn
        t = 1.0
        while True:
            trial = p + t * step
            if trial[2] > 0:
                g_trial = total_gradient(layout, drive, ion, trial)
                if np.linalg.norm(g_trial) < gn or t < 1e-6:
                    break
            t *= 0.5
            if t < 1e-12:
                raise NonConvergence("line search failed")
        p, g = trial, g_trial
    else:
        raise NonConvergence(f"equilibrium not found in {max_iter} iterations")
    ev = np.linalg.eigvalsh(total_hessian(layout, drive, ion, p))
    if ev[0] <= 0:
        raise UnstablePoint(f"Hessian not positive definite at equilibrium (min eigenvalue {ev[0]:.3g})")
    return EquilibriumPoint(position=p, iterations=it)


# ---------------------------------------------------------------------------
# normal modes

AXIAL, H, V = 0, 1, 2
LABELS = ("axial", "h", "v")


def radial_angle(vec) -> float:
    """Angle of a mode vector to the surface plane, measured in the y-z plane, in [-90, 90)."""
    a = np.degrees(np.arctan2(vec[2], vec[1]))
    return float((a + 90.0) % 180.0 - 90.0)


@dataclass(frozen=True)
class ModeSet:
    """Secular frequencies (rad/s) and unit mode vectors ordered (axial, h, v).

    ``h`` is the radial mode closer to the surface plane ("↔"), ``v`` the one
    closer to the normal ("↕").
    """

    frequencies: np.ndarray
    vectors: np.ndarray  # rows
    labels: tuple[str, str, str] = LABELS

    @property
    def axial(self):
        return self.frequencies[AXIAL], self.vectors[AXIAL]

    @property
    def h(self):
        return self.frequencies[H], self.vectors[H]

    @property
    def v(self):
        return self.frequencies[V], self.vectors[V]

    def angles(self) -> np.ndarray:
        return np.array([radial_angle(v) for v in self.vectors])


def _label_modes(freqs, vecs) -> ModeSet:
    axial = int(np.argmax(np.abs(vecs[:, 0])))
    radial = [i for i in range(3) if i != axial]
    ang = [abs(radial_angle(vecs[i])) for i in radial]
    if np.isclose(ang[0], ang[1], atol=1e-9):
        radial.sort(key=lambda i: freqs[i])
    else:
        radial.sort(key=lambda i: abs(radial_angle(vecs[i])))
    order = [axial] + radial
    vecs = vecs[order].copy()
    for k, v in enumerate(vecs):
        # fixed sign convention: largest component positive
        if v[np.argmax(np.abs(v))] < 0:
            vecs[k] = -v
    return ModeSet(frequencies=np.asarray(freqs)[order], vectors=vecs)


def normal_modes(layout, drive, ion, eq: EquilibriumPoint) -> ModeSet:
    k = total_hessian(layout, drive, ion, eq.position)
    k = 0.5 * (k + k.T)
    lam, vec = np.linalg.eigh(k)
    if lam[0] <= 0:
        raise UnstablePoint(f"negative curvature {lam[0]:.3g} J/m^2")
    vecs = vec.T
    axial = int(np.argmax(np.abs(vecs[:, 0])))
    radial = [i for i in range(3) if i != axial]
    if abs(lam[radial[0]] - lam[radial[1]]) <= 1e-9 * lam[radial[1]]:
        # degenerate pair: pick the basis that diagonalises the static curvature
        basis = vecs[radial]
        ks = basis @ static_hessian(layout, drive, ion, eq.position) @ basis.T
        _, rot = np.linalg.eigh(0.5 * (ks + ks.T))
        vecs[radial] = rot.T @ basis
    return _label_modes(np.sqrt(lam / ion.mass), vecs)


def mode_angle(modes: ModeSet) -> float:
    """Angle (degrees) of the ↔ mode to the surface plane."""
    return radial_angle(modes.vectors[H])


def solve_modes(layout, drive, ion, guess=None) -> tuple[EquilibriumPoint, ModeSet]:
    eq = find_equilibrium(layout, drive, ion, guess)
    return eq, normal_modes(layout, drive, ion, eq)


def field_angle(vec) -> float:
    """Angle (degrees) of a field direction from the surface normal, in [-90, 90).

    Positive angles tilt from +z toward -y, so a direction at angle ``a``
    is parallel to the ↕ mode of a trap rotated to ``mode_angle == a``.
    """
    a = np.degrees(np.arctan2(-vec[1], vec[2]))
    return float((a + 90.0) % 180.0 - 90.0)


def center_field_angle(layout: TrapLayout, p) -> float:
    return field_angle(unit_field(layout.center_electrode, p))
