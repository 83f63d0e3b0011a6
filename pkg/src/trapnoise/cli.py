"""Command-line front end.

Exit codes: 0 ok, 2 bad input, 3 numerical failure, 4 not enough data.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__, disentangle, fields, heating, multipole, noise_models, presets
from ._data import data_path
from .errors import (
    DegenerateDenominator, DegenerateProjection, DomainError, InsufficientData,
    NonConvergence, ParseError, QuadratureFailure, UnstablePoint, ValidationError,
)
from .geometry import UM, load_layout

EXIT_INPUT, EXIT_NUMERIC, EXIT_DATA = 2, 3, 4
NUMERIC_ERRORS = (UnstablePoint, NonConvergence, QuadratureFailure, DegenerateDenominator, DegenerateProjection)
INPUT_ERRORS = (ValidationError, ParseError, DomainError, FileNotFoundError, KeyError)


class RunConfig:
    """Parsed global options plus the files the run reads."""

    def __init__(self, args):
        self.args = args
        self.layout_path = Path(args.layout) if args.layout else data_path("reference_layout.json")
        self.layout = load_layout(self.layout_path)
        if args.ion not in heating.SPECIES:
            raise ValidationError(f"unknown ion {args.ion!r}; known: {sorted(heating.SPECIES)}")
        self.ion = heating.SPECIES[args.ion]
        self.inputs = [self.layout_path]
        self.out_dir = Path(args.out_dir) if args.out_dir else None

    def length(self, value):
        """Command-line length in the active unit system -> meters."""
        return value * (UM if self.args.units == "lab" else 1.0)

    def frequency(self, value):
        """Command-line frequency -> rad/s (lab: MHz, si: Hz)."""
        return 2 * np.pi * value * (1e6 if self.args.units == "lab" else 1.0)

    def read(self, path) -> Path:
        p = Path(path)
        if not p.exists():
            raise FileNotFoundError(f"{p} does not exist")
        self.inputs.append(p)
        return p

    def header(self) -> str:
        h = hashlib.sha256()
        for p in self.inputs:
            h.update(Path(p).read_bytes())
        return f"trapnoise {__version__} inputs-sha256={h.hexdigest()}"

    def emit(self, filename: str, text: str) -> None:
        if self.out_dir is None:
            sys.stdout.write(text)
            return
        self.out_dir.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.out_dir, prefix=f".{filename}.")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, self.out_dir / filename)
        print(f"wrote {self.out_dir / filename}", file=sys.stderr)


def _csv(header: str, rows, columns) -> str:
    buf = io.StringIO()
    buf.write(f"# {header}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _json(header: str, payload: dict) -> str:
    return json.dumps({"header": header, **payload}, indent=2) + "\n"


def read_voltage_table(path) -> dict[str, float]:
    text = Path(path).read_text().splitlines()
    rows = [ln for ln in text if ln.strip() and not ln.startswith("#")]
    out = {}
    for row in csv.DictReader(rows, skipinitialspace=True):
        try:
            out[row["name"].strip()] = float(row["volts"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: expected columns name,volts") from exc
    return out


def _grid(text: str) -> np.ndarray:
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise ValidationError("grid must be start:stop:step") from exc
    if step <= 0 or stop < start:
        raise ValidationError("grid must be increasing with positive step")
    return np.arange(start, stop + step * 1e-9, step)


def _drive(cfg: RunConfig, a) -> fields.DrivePoint:
    c0 = a.c0 if a.c0 is not None else presets.axial_curvature(cfg.frequency(a.axial_freq), cfg.ion)
    drive = presets.drive_for(
        cfg.layout, a.angle, c=a.curvature, c0=c0, rf_amplitude=a.rf_amplitude,
        rf_frequency=cfg.frequency(a.rf_freq), rf_bias=a.rf_bias, ion=cfg.ion,
    )
    if getattr(a, "voltages", None):
        drive = drive.with_dc(read_voltage_table(cfg.read(a.voltages)))
    return drive


# ---------------------------------------------------------------------------


def cmd_curve(cfg: RunConfig, a) -> int:
    layout = cfg.layout
    p = fields.rf_null(layout)
    if a.model == "patch":
        xi = cfg.length(a.xi) if a.xi is not None else p[2]
        t = noise_models.patch_psd(noise_models.PatchParams(p[2], xi))
    elif a.model == "dipole":
        t = noise_models.dipole_psd(p[2])
    elif a.model == "indep":
        t = noise_models.technical_indep_psd(layout, p)
    elif a.model == "pickup":
        t = noise_models.pickup_psd(layout, p)
    else:
        if not a.voltages:
            raise ValidationError("model 'dep' needs --voltages FILE (name,volts)")
        v = {n: 0.0 for n in layout.dc_names}
        v.update(read_voltage_table(cfg.read(a.voltages)))
        t = noise_models.technical_dep_psd(layout, v, p)
    curve = noise_models.ratio_curve(t, _grid(a.grid))
    head = cfg.header() + f" model={a.model} max_ratio={curve.max_ratio:.6g} max_angle_deg={curve.max_angle:.4f}"
    rows = [(f"{x:g}", f"{r:.12g}") for x, r in zip(curve.angles, curve.ratios)]
    cfg.emit(f"curve_{a.model}.csv", _csv(head, rows, ("angle_deg", "ratio")))
    return 0


def cmd_modes(cfg: RunConfig, a) -> int:
    drive = _drive(cfg, a)
    eq, modes = fields.solve_modes(cfg.layout, drive, cfg.ion)
    f = modes.frequencies / (2 * np.pi * 1e6)
    ang = modes.angles()
    lines = [
        f"# {cfg.header()}",
        f"position_um      {eq.position[0] / UM:.4f} {eq.position[1] / UM:.4f} {eq.position[2] / UM:.4f}",
        f"height_um        {eq.height_d / UM:.4f}",
        f"freq_axial_MHz   {f[0]:.6f}",
        f"freq_h_MHz       {f[1]:.6f}",
        f"freq_v_MHz       {f[2]:.6f}",
        f"angle_h_deg      {ang[1]:.4f}",
        f"angle_v_deg      {ang[2]:.4f}",
        f"center_field_deg {fields.center_field_angle(cfg.layout, eq.position):.4f}",
    ]
    cfg.emit("modes.txt", "\n".join(lines) + "\n")
    return 0


def cmd_voltages(cfg: RunConfig, a) -> int:
    m = multipole.expand(cfg.layout, fields.rf_null(cfg.layout))
    c0 = a.c0 if a.c0 is not None else presets.axial_curvature(ion=cfg.ion)
    if a.sweep:
        text = cfg.read(a.sweep).read_text().split()
        angles = [float(v) for v in text if not v.startswith("#")]
        rows = []
        for phi in angles:
            vs = multipole.rotation_voltages(m, phi, a.curvature, c0)
            rows += [(f"{phi:g}", n, f"{v:.12g}") for n, v in vs.voltages.items()]
        cfg.emit("voltages_sweep.csv", _csv(cfg.header(), rows, ("angle_deg", "name", "volts")))
        return 0
    if a.angle is None:
        raise ValidationError("give --angle or --sweep")
    vs = multipole.rotation_voltages(m, a.angle, a.curvature, c0)
    rows = [(n, f"{v:.12g}") for n, v in vs.voltages.items()]
    head = cfg.header() + f" angle_deg={a.angle:g} curvature={a.curvature:g} c0={c0:g}"
    cfg.emit("voltages.csv", _csv(head, rows, ("name", "volts")))
    return 0


def cmd_fit(cfg: RunConfig, a) -> int:
    path = cfg.read(a.data if a.data else data_path("published_measurements.csv"))
    data = heating.read_measurements(path)
    fit = heating.fit_angle_model(data, cfg.ion)
    phi_g = a.angle if a.angle is not None else fields.center_field_angle(cfg.layout, fields.rf_null(cfg.layout))
    conv = heating.psd_from_rate(heating.PER_MS, cfg.ion, np.array([m.mode_frequency for m in data]))
    payload = {
        "s_max": fit.s_max, "s_min": fit.s_min, "phi_max_deg": fit.phi_max,
        "sigmas": dict(zip(("s_max", "s_min", "phi_max_deg"), fit.sigmas.tolist())),
        "covariance": fit.covariance.tolist(),
        "chi2": fit.chi2, "dof": fit.dof,
        "ratio_at_phi_g": {"angle_deg": phi_g, "ratio": fit.ratio_at(phi_g)},
        "points": [
            {"angle_deg": m.angle, "psd_h": m.rate_h * k, "psd_v": m.rate_v * k,
             "residual_h": r[0], "residual_v": r[1], "label": m.label}
            for m, k, r in zip(data, conv, fit.residuals.tolist())
        ],
    }
    cfg.emit("fit.json", _json(cfg.header(), payload))
    return 0


def _published_values() -> dict:
    return json.loads(data_path("published_values.json").read_text())


def cmd_extract(cfg: RunConfig, a) -> int:
    if a.published:
        pv = _published_values()
        cfg.inputs.append(data_path("published_values.json"))
        a.ratio = pv["ratio_at_phi_g"]["value"] if a.ratio is None else a.ratio
        a.ratio_sigma = pv["ratio_at_phi_g"]["sigma"] if a.ratio_sigma is None else a.ratio_sigma
        a.rate_h = pv["rate_h_at_phi_g"]["rate"] if a.rate_h is None else a.rate_h
        a.rate_h_sigma = pv["rate_h_at_phi_g"]["sigma"] if a.rate_h_sigma is None else a.rate_h_sigma
        a.angle = pv["phi_g_deg"] if a.angle is None else a.angle
        a.r_techn = pv["model_predictions"]["bias_ratio"] if a.r_techn is None else a.r_techn
    if a.ratio is None or a.rate_h is None:
        raise ValidationError("--ratio and --rate-h are required (or use --published)")
    drive = presets.bias_drive(cfg.layout, ion=cfg.ion)
    if a.angle is None:
        a.angle = disentangle.center_field_angle_at(cfg.layout, drive, cfg.ion)
    if a.r_techn is None:
        a.r_techn = disentangle.technical_ratio_at(cfg.layout, drive, a.angle, cfg.ion)
    omega = cfg.frequency(a.mode_freq)
    to_psd = float(heating.psd_from_rate(heating.PER_MS, cfg.ion, omega))
    inp = disentangle.DisentangleInput(
        r_tot=a.ratio, r_tot_sigma=a.ratio_sigma or 0.0, r_techn=a.r_techn, phi=a.angle,
        s_tot_h=a.rate_h * to_psd, s_tot_h_sigma=(a.rate_h_sigma or 0.0) * to_psd, r_surf=a.r_surf,
    )
    est = disentangle.extract_surface(inp)
    payload = {
        "inputs": {"r_tot": inp.r_tot, "r_tot_sigma": inp.r_tot_sigma, "r_techn": inp.r_techn,
                   "phi_deg": inp.phi, "s_tot_h": inp.s_tot_h, "s_tot_h_sigma": inp.s_tot_h_sigma,
                   "r_surf": inp.r_surf},
        **est.as_dict(),
    }
    cfg.emit("extract.json", _json(cfg.header(), payload))
    return 0


def cmd_scaling(cfg: RunConfig, a) -> int:
    pv = _published_values()
    cfg.inputs.append(data_path("published_values.json"))
    vi, vii = pv["voltage_set_rates_v"]["i"], pv["voltage_set_rates_v"]["ii"]
    args = [
        a.rate_i if a.rate_i is not None else vi["rate"],
        a.sigma_i if a.sigma_i is not None else vi["sigma"],
        a.rate_ii if a.rate_ii is not None else vii["rate"],
        a.sigma_ii if a.sigma_ii is not None else vii["sigma"],
    ]
    factor, sigma = heating.voltage_scaling_factor(*args)
    ratio = a.voltage_ratio if a.voltage_ratio is not None else pv["voltage_set_ratio"]
    payload = {
        "rates": {"i": args[:2], "ii": args[2:]},
        "factor": factor, "sigma": sigma,
        "voltage_ratio": ratio,
        "voltage_dependent_prediction": heating.voltage_dependent_prediction(ratio),
    }
    cfg.emit("scaling.json", _json(cfg.header(), payload))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="trapnoise", description=__doc__.splitlines()[0])
    ap.add_argument("--layout", help="layout JSON (default: bundled reference layout)")
    ap.add_argument("--ion", default="40Ca+")
    ap.add_argument("--units", choices=("lab", "si"), default="lab",
                    help="lab: um and MHz on the command line; si: m and Hz")
    ap.add_argument("--out-dir", help="write output files here instead of stdout")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("curve", help="ratio vs mode angle for one noise model")
    p.add_argument("--model", required=True, choices=("patch", "dipole", "indep", "dep", "pickup"))
    p.add_argument("--xi", type=float, help="patch correlation length (default: ion height)")
    p.add_argument("--voltages", help="CSV name,volts for the voltage-dependent model")
    p.add_argument("--grid", default="0:90:1", help="start:stop:step in degrees")
    p.set_defaults(func=cmd_curve)

    def drive_opts(p):
        p.add_argument("--rf-amplitude", type=float, default=presets.RF_AMPLITUDE, help="V")
        p.add_argument("--rf-freq", type=float, default=30.0, help="RF drive frequency (MHz)")
        p.add_argument("--rf-bias", type=float, default=0.0, help="static RF offset (V)")
        p.add_argument("--axial-freq", type=float, default=1.0, help="target axial frequency (MHz)")
        p.add_argument("--c0", type=float, help="axial curvature (V/m^2), overrides --axial-freq")
        p.add_argument("--curvature", type=float, default=presets.ROTATION_CURVATURE, help="V/m^2")

    p = sub.add_parser("modes", help="equilibrium and normal modes")
    drive_opts(p)
    p.add_argument("--angle", type=float, help="rotate radial modes to this angle (deg)")
    p.add_argument("--voltages", help="CSV name,volts replacing the solved DC set")
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("voltages", help="mode-rotation voltage sets")
    p.add_argument("--angle", type=float)
    p.add_argument("--curvature", type=float, default=presets.ROTATION_CURVATURE, help="V/m^2")
    p.add_argument("--c0", type=float, help="axial curvature (V/m^2), default 1 MHz")
    p.add_argument("--sweep", help="file with one angle (deg) per line")
    p.set_defaults(func=cmd_voltages)

    p = sub.add_parser("fit", help="fit the two-mode angle model to heating rates")
    p.add_argument("data", nargs="?", help="measurement CSV (default: bundled data)")
    p.add_argument("--angle", type=float, help="angle for the reported ratio (default phi_g)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("extract", help="surface-noise PSD from a measured ratio")
    p.add_argument("--ratio", type=float)
    p.add_argument("--ratio-sigma", type=float)
    p.add_argument("--rate-h", type=float, help="↔ heating rate (quanta/ms)")
    p.add_argument("--rate-h-sigma", type=float)
    p.add_argument("--angle", type=float, help="↔ mode angle (deg, default phi_g)")
    p.add_argument("--r-techn", type=float, help="technical ratio (default: layout model)")
    p.add_argument("--r-surf", type=float, default=2.0)
    p.add_argument("--mode-freq", type=float, default=2.6, help="MHz")
    p.add_argument("--published", action="store_true", help="fill unset inputs from bundled published values")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("scaling", help="heating-rate ratio between two voltage sets")
    p.add_argument("--rate-i", type=float)
    p.add_argument("--sigma-i", type=float)
    p.add_argument("--rate-ii", type=float)
    p.add_argument("--sigma-ii", type=float)
    p.add_argument("--voltage-ratio", type=float)
    p.set_defaults(func=cmd_scaling)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(args)
        return args.func(cfg, args)
    except InsufficientData as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
