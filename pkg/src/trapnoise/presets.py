"""Operating point used with the reference layout.

The RF drive is a choice (the experiment's is not published): 30 MHz with
the amplitude set so the radial modes sit at 2.6 MHz next to a 1 MHz axial
mode.  ``scripts/calibrate_drive.py`` reproduces the amplitude.
"""
from __future__ import annotations

import numpy as np

from . import fields, multipole
from .fields import DrivePoint
from .geometry import TrapLayout, reference_layout
from .heating import CA40, IonSpecies

RF_FREQUENCY = 2 * np.pi * 30e6
RF_AMPLITUDE = 112.7  # V, zero-to-peak
RADIAL_FREQUENCY = 2 * np.pi * 2.6e6
AXIAL_FREQUENCY = 2 * np.pi * 1.0e6
ROTATION_CURVATURE = 2.0e6  # V/m^2, ~95 kHz radial splitting
RF_BIAS = -0.4  # V


def axial_curvature(omega_axial: float = AXIAL_FREQUENCY, ion: IonSpecies = CA40) -> float:
    """C0 (V/m^2) for an axial frequency; the Y0 term contributes k_x = 4 q C0."""
    return ion.mass * omega_axial**2 / (4 * ion.charge)


def drive_for(
    layout: TrapLayout | None = None,
    phi: float | None = None,
    c: float = ROTATION_CURVATURE,
    c0: float | None = None,
    rf_amplitude: float = RF_AMPLITUDE,
    rf_frequency: float = RF_FREQUENCY,
    rf_bias: float = 0.0,
    ion: IonSpecies = CA40,
) -> DrivePoint:
    """Drive with DC voltages solved about the RF null.

    With ``phi=None`` only the axial confinement is applied; otherwise the
    radial modes are rotated so the stiffer one sits at ``phi`` (degrees).
    """
    layout = reference_layout() if layout is None else layout
    c0 = axial_curvature(ion=ion) if c0 is None else c0
    m = multipole.expand(layout, fields.rf_null(layout))
    if phi is None:
        vs = multipole.solve_voltages(m, multipole.physical_target(m.scale, Y0=c0))
    else:
        vs = multipole.rotation_voltages(m, phi, c, c0)
    return DrivePoint(rf_amplitude, rf_frequency, rf_bias=rf_bias, dc_voltages=vs.voltages)


def bias_drive(layout: TrapLayout | None = None, bias: float = RF_BIAS, **kw) -> DrivePoint:
    return drive_for(layout, None, rf_bias=bias, **kw)
