"""Find the RF amplitude that puts the mean radial frequency at 2.6 MHz.

Drive frequency 30 MHz, DC set for a 1 MHz axial mode, no rotation.  The
amplitude is rounded to 0.1 V and compared with the value in presets.

    python scripts/calibrate_drive.py
"""
import sys

import numpy as np
from scipy.optimize import brentq

from trapnoise import fields, presets
from trapnoise.geometry import reference_layout
from trapnoise.heating import CA40


def radial_mean(layout, amplitude):
    _, m = fields.solve_modes(layout, presets.drive_for(layout, rf_amplitude=amplitude), CA40)
    return float(np.mean(m.frequencies[1:]))


def main():
    layout = reference_layout()
    v = brentq(lambda a: radial_mean(layout, a) - presets.RADIAL_FREQUENCY, 80.0, 1000.0, xtol=1e-6)
    f = radial_mean(layout, round(v, 1)) / (2 * np.pi * 1e6)
    print(f"amplitude {v:.4f} V -> {round(v, 1)} V, mean radial {f:.5f} MHz")
    ok = round(v, 1) == presets.RF_AMPLITUDE
    print("presets.RF_AMPLITUDE matches" if ok else f"presets.RF_AMPLITUDE = {presets.RF_AMPLITUDE} differs")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
