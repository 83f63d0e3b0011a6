"""Heating rates, the two-radial-mode angle model, and fitting it to data.

A mode k heats at

    ndot = q^2 S_k / (4 m hbar omega),

where S_k is the field-noise PSD projected on the mode vector.  For the two
radial modes with the ↔ mode at angle phi to the surface,

    S_v(phi) = S_max cos^2(phi - phi_max) + S_min sin^2(phi - phi_max)
    S_h(phi) = S_max sin^2(phi - phi_max) + S_min cos^2(phi - phi_max).
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import constants

from .errors import InsufficientData, NegativeSmin, ParseError, ValidationError

PER_MS = 1e3  # quanta/ms -> quanta/s


@dataclass(frozen=True)
class IonSpecies:
    mass: float
    charge: float = constants.e
    name: str = ""

    def __post_init__(self):
        if not (self.mass > 0 and self.charge > 0):
            raise ValidationError("ion mass and charge must be positive")


CA40 = IonSpecies(mass=39.962590863 * constants.atomic_mass, name="40Ca+")
SPECIES = {"40Ca+": CA40, "Ca40": CA40}


def rate_from_psd(s_dir, ion: IonSpecies = CA40, omega: float = 2 * np.pi * 2.6e6):
    """Heating rate in quanta/s for a projected PSD ``s_dir`` in (V/m)^2/Hz."""
    return ion.charge**2 * np.asarray(s_dir) / (4 * ion.mass * constants.hbar * omega)


def psd_from_rate(rate, ion: IonSpecies = CA40, omega: float = 2 * np.pi * 2.6e6):
    """Inverse of :func:`rate_from_psd`; ``rate`` in quanta/s."""
    return np.asarray(rate) * 4 * ion.mass * constants.hbar * omega / ion.charge**2


def angle_model(s_max, s_min, phi_max, phi):
    """Return ``(S_v, S_h)`` for the ↔ mode at ``phi`` degrees."""
    d = np.radians(np.asarray(phi) - phi_max)
    c2, s2 = np.cos(d) ** 2, np.sin(d) ** 2
    return s_max * c2 + s_min * s2, s_max * s2 + s_min * c2


@dataclass(frozen=True)
class HeatingMeasurement:
    angle: float  # degrees, ↔ mode to the surface
    rate_h: float  # quanta/ms
    rate_v: float
    sigma_h: float
    sigma_v: float
    mode_frequency: float  # rad/s
    label: str = ""

    def __post_init__(self):
        if self.rate_h < 0 or self.rate_v < 0:
            raise ValidationError("heating rates must be non-negative")
        if not (self.sigma_h > 0 and self.sigma_v > 0):
            raise ValidationError("uncertainties must be positive")
        if not self.mode_frequency > 0:
            raise ValidationError("mode frequency must be positive")

    @property
    def ratio(self) -> float:
        return self.rate_v / self.rate_h


MEASUREMENT_COLUMNS = (
    "angle_deg", "rate_h_quanta_per_ms", "sigma_h",
    "rate_v_quanta_per_ms", "sigma_v", "mode_freq_MHz",
)


def read_measurements(path) -> list[HeatingMeasurement]:
    """Read the measurement CSV; lines starting with ``#`` are comments."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    reader = csv.DictReader(lines, skipinitialspace=True)
    missing = set(MEASUREMENT_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise ParseError(f"{path}: missing columns {sorted(missing)}")
    out = []
    for row in reader:
        try:
            out.append(HeatingMeasurement(
                angle=float(row["angle_deg"]),
                rate_h=float(row["rate_h_quanta_per_ms"]),
                sigma_h=float(row["sigma_h"]),
                rate_v=float(row["rate_v_quanta_per_ms"]),
                sigma_v=float(row["sigma_v"]),
                mode_frequency=2 * np.pi * 1e6 * float(row["mode_freq_MHz"]),
                label=(row.get("label") or "").strip(),
            ))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}: bad row {row}: {exc}") from exc
    return out


def write_measurements(path, data: Iterable[HeatingMeasurement]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MEASUREMENT_COLUMNS + ("label",))
        for m in data:
            w.writerow([m.angle, m.rate_h, m.sigma_h, m.rate_v, m.sigma_v,
                        m.mode_frequency / (2 * np.pi * 1e6), m.label])


@dataclass(frozen=True)
class AngleModelFit:
    s_max: float
    s_min: float
    phi_max: float  # degrees in [0, 180)
    covariance: np.ndarray  # over (s_max, s_min, phi_max[deg])
    chi2: float = 0.0
    dof: int = 0
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))  # normalised, (n, 2): (h, v)

    @property
    def sigmas(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))

    def predict(self, phi):
        return angle_model(self.s_max, self.s_min, self.phi_max, phi)

    def ratio_at(self, phi) -> float:
        sv, sh = self.predict(phi)
        return sv / sh


def _design(angles):
    t = np.radians(2 * np.asarray(angles, float))
    one = np.ones_like(t)
    rows_v = np.column_stack([one, np.cos(t), np.sin(t)])
    rows_h = np.column_stack([one, -np.cos(t), -np.sin(t)])
    return rows_h, rows_v


def fit_angle_model(data: Sequence[HeatingMeasurement], ion: IonSpecies = CA40) -> AngleModelFit:
    """Joint weighted least-squares fit of both radial modes.

    Each mode is linear in (A, B, C) after writing S(phi) = A +- (B cos 2phi +
    C sin 2phi); s_max/min = A +- sqrt(B^2 + C^2), phi_max = atan2(C, B)/2.
    Parameters are PSDs in (V/m)^2/Hz.
    """
    data = list(data)
    angles = np.array([m.angle for m in data])
    if len(data) < 3 or len(np.unique(np.round(angles % 180.0, 9))) < 3:
        raise InsufficientData("need at least 3 measurements at 3 distinct angles")
    omega = np.array([m.mode_frequency for m in data])
    conv = psd_from_rate(PER_MS, ion, omega)  # (V/m)^2/Hz per quanta/ms
    y = np.concatenate([conv * [m.rate_h for m in data], conv * [m.rate_v for m in data]])
    sig = np.concatenate([conv * [m.sigma_h for m in data], conv * [m.sigma_v for m in data]])
    xh, xv = _design(angles)
    x = np.vstack([xh, xv])
    xw = x / sig[:, None]
    yw = y / sig
    if np.linalg.matrix_rank(xw) < 3:
        raise InsufficientData("angles do not constrain the model (all equal modulo 90 deg)")
    coef, *_ = np.linalg.lstsq(xw, yw, rcond=None)
    cov_abc = np.linalg.inv(xw.T @ xw)
    a, b, c = coef
    d = math.hypot(b, c)
    phi_max = (0.5 * math.degrees(math.atan2(c, b))) % 180.0
    if d > 0:
        jac = np.array([
            [1.0, b / d, c / d],
            [1.0, -b / d, -c / d],
            [0.0, -c / (2 * d * d) * 180 / np.pi, b / (2 * d * d) * 180 / np.pi],
        ])
    else:
        jac = np.array([[1.0, 0, 0], [1.0, 0, 0], [0, 0, 0]])
    cov = jac @ cov_abc @ jac.T
    resid = (yw - xw @ coef).reshape(2, -1).T
    s_min = a - d
    if s_min < -2 * math.sqrt(max(cov[1, 1], 0.0)):
        warnings.warn(f"fitted S_min = {s_min:.3g} is significantly negative", NegativeSmin)
    return AngleModelFit(
        s_max=a + d, s_min=s_min, phi_max=phi_max, covariance=cov,
        chi2=float(np.sum(resid**2)), dof=len(y) - 3, residuals=resid,
    )


def two_rate_ratio(m: HeatingMeasurement) -> tuple[float, float]:
    """Direct ↕/↔ ratio of one measurement with first-order uncertainty."""
    return ratio_with_error(m.rate_v, m.sigma_v, m.rate_h, m.sigma_h)


def ratio_with_error(num, sigma_num, den, sigma_den) -> tuple[float, float]:
    r = num / den
    return r, abs(r) * math.hypot(sigma_num / num, sigma_den / den)


def voltage_scaling_factor(rate_i, sigma_i, rate_ii, sigma_ii) -> tuple[float, float]:
    """Ratio of two heating rates measured at different electrode voltage sets."""
    if not (rate_i > 0 and rate_ii > 0):
        raise ValidationError("rates must be positive")
    return ratio_with_error(rate_i, sigma_i, rate_ii, sigma_ii)


def voltage_dependent_prediction(voltage_ratio: float) -> float:
    """Expected heating-rate ratio when the noise amplitude scales with the voltage."""
    return voltage_ratio**2
