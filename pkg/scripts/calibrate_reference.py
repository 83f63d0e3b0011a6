"""Calibrate the reference five-wire layout and write it to the package data.

The two RF rail widths are found by nested bisection: the inner search sets
the overall rail width for a 107 um RF-null height at a fixed width ratio,
the outer search sets the ratio for a 15 deg center-electrode field angle.
Center width and segment pitch are design choices (see README).

    python scripts/calibrate_reference.py [--check]
"""
import argparse
import sys
from pathlib import Path

from scipy.optimize import brentq

from trapnoise import fields
from trapnoise.geometry import UM, dumps_layout, five_wire_layout

CENTER_WIDTH = 160 * UM
SEGMENT_PITCH = 80 * UM
TARGET_HEIGHT = 107 * UM
TARGET_ANGLE = 15.0

OUT = Path(__file__).resolve().parents[1] / "src" / "trapnoise" / "data" / "reference_layout.json"


def build(w_lo, w_hi):
    return five_wire_layout(CENTER_WIDTH, (w_lo, w_hi), segment_pitch=SEGMENT_PITCH,
                            name="reference asymmetric five-wire")


def width_for_height(ratio):
    def err(w):
        return fields.rf_null(build(w, ratio * w))[2] - TARGET_HEIGHT
    return brentq(err, 20 * UM, 1000 * UM, xtol=1e-15)


def angle_error(ratio):
    w = width_for_height(ratio)
    layout = build(w, ratio * w)
    return fields.center_field_angle(layout, fields.rf_null(layout)) - TARGET_ANGLE


def calibrate():
    ratio = brentq(angle_error, 1.01, 6.0, xtol=1e-12)
    w = width_for_height(ratio)
    # freeze at 1 nm resolution so the file is human-readable
    return build(round(w / UM, 3) * UM, round(ratio * w / UM, 3) * UM)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--check", action="store_true", help="compare against the shipped file only")
    args = ap.parse_args(argv)
    layout = calibrate()
    text = dumps_layout(layout)
    p = fields.rf_null(layout)
    print(f"RF1 {layout['RF1'].y_range[1] - layout['RF1'].y_range[0]:.4e} m, "
          f"RF2 {layout['RF2'].y_range[1] - layout['RF2'].y_range[0]:.4e} m")
    print(f"height {p[2] / UM:.3f} um, center-field angle {fields.center_field_angle(layout, p):.3f} deg")
    if args.check:
        same = OUT.read_text() == text
        print("shipped layout matches" if same else "shipped layout differs")
        return 0 if same else 1
    OUT.write_text(text)
    print(f"wrote {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
