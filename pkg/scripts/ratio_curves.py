"""Write ratio-vs-angle CSVs for every noise model on the reference layout.

The voltage-dependent curve needs a voltage set; the one used here rotates
the radial modes to phi_g (the experiment's own set is not published).

    python scripts/ratio_curves.py OUT_DIR
"""
import sys
from pathlib import Path

from trapnoise import fields
from trapnoise.cli import main as cli
from trapnoise.geometry import reference_layout


def main(argv):
    out = Path(argv[0] if argv else "curves")
    out.mkdir(parents=True, exist_ok=True)
    layout = reference_layout()
    phi_g = fields.center_field_angle(layout, fields.rf_null(layout))
    code = cli(["--out-dir", str(out), "voltages", "--angle", f"{phi_g:.6f}"])
    for model in ("patch", "dipole", "indep", "pickup"):
        code = code or cli(["--out-dir", str(out), "curve", "--model", model])
    return code or cli(["--out-dir", str(out), "curve", "--model", "dep", "--voltages", str(out / "voltages.csv")])


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
