"""Planar trap layouts.

Coordinates: x runs along the rails (axial), y is the in-plane transverse
direction and z is the surface normal.  Every electrode is an axis-aligned
rectangle in the z = 0 plane; whatever part of the plane is not covered by
an electrode is grounded.  Gaps between electrodes are not modelled.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from ._data import data_path
from .errors import ParseError, ValidationError

SCHEMA_VERSION = 1
UM = 1e-6


class Role(str, Enum):
    RF = "RF"
    DC = "DC"
    CENTER = "CENTER"
    GROUND = "GROUND"


@dataclass(frozen=True)
class CoordinateConvention:
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    axial_axis: tuple[float, float, float] = (1.0, 0.0, 0.0)
    surface_normal: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        ax = np.asarray(self.axial_axis, float)
        n = np.asarray(self.surface_normal, float)
        if not (np.isclose(ax @ ax, 1.0) and np.isclose(n @ n, 1.0) and abs(ax @ n) < 1e-12):
            raise ValidationError("axial axis and surface normal must be orthonormal")
        if self.origin[2] != 0.0:
            raise ValidationError("origin must lie in the electrode plane")


@dataclass(frozen=True)
class RectElectrode:
    name: str
    x_range: tuple[float, float]
    y_range: tuple[float, float]
    role: Role = Role.DC

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        object.__setattr__(self, "x_range", tuple(float(v) for v in self.x_range))
        object.__setattr__(self, "y_range", tuple(float(v) for v in self.y_range))
        if not (self.x_range[1] > self.x_range[0] and self.y_range[1] > self.y_range[0]):
            raise ValidationError(f"electrode {self.name!r} has empty extent")

    @property
    def center(self) -> np.ndarray:
        return np.array([sum(self.x_range) / 2, sum(self.y_range) / 2, 0.0])

    def overlaps(self, other: RectElectrode) -> bool:
        dx = min(self.x_range[1], other.x_range[1]) - max(self.x_range[0], other.x_range[0])
        dy = min(self.y_range[1], other.y_range[1]) - max(self.y_range[0], other.y_range[0])
        return dx > 0 and dy > 0

    def mirrored(self) -> RectElectrode:
        y0, y1 = self.y_range
        return replace(self, y_range=(-y1, -y0))


@dataclass(frozen=True)
class TrapLayout:
    electrodes: tuple[RectElectrode, ...]
    rf_names: tuple[str, ...]
    convention: CoordinateConvention = field(default_factory=CoordinateConvention)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "electrodes", tuple(self.electrodes))
        object.__setattr__(self, "rf_names", tuple(self.rf_names))
        names = [e.name for e in self.electrodes]
        if len(set(names)) != len(names):
            raise ValidationError("electrode names must be unique")
        if not self.rf_names:
            raise ValidationError("layout needs at least one RF electrode")
        missing = set(self.rf_names) - set(names)
        if missing:
            raise ValidationError(f"rf_names not in layout: {sorted(missing)}")
        n_center = sum(e.role is Role.CENTER for e in self.electrodes)
        if n_center != 1:
            raise ValidationError(f"exactly one CENTER electrode required, found {n_center}")
        for i, a in enumerate(self.electrodes):
            for b in self.electrodes[i + 1:]:
                if a.overlaps(b):
                    raise ValidationError(f"electrodes {a.name!r} and {b.name!r} overlap")

    def __getitem__(self, name: str) -> RectElectrode:
        for e in self.electrodes:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.electrodes]

    @property
    def center_electrode(self) -> RectElectrode:
        return next(e for e in self.electrodes if e.role is Role.CENTER)

    @property
    def dc_names(self) -> list[str]:
        """Statically biased electrodes (DC segments and the center rail)."""
        return [
            e.name for e in self.electrodes
            if e.role in (Role.DC, Role.CENTER) and e.name not in self.rf_names
        ]

    @property
    def active_names(self) -> list[str]:
        """Every non-ground electrode."""
        return [e.name for e in self.electrodes if e.role is not Role.GROUND]

    def mirrored(self) -> TrapLayout:
        """Reflection about the y = 0 plane."""
        return replace(self, electrodes=tuple(e.mirrored() for e in self.electrodes))


def layout_to_dict(layout: TrapLayout) -> dict:
    def um(v):
        return [round(x / UM, 6) for x in v]

    return {
        "schema": SCHEMA_VERSION,
        "units": "um",
        "name": layout.name,
        "origin_um": um(layout.convention.origin),
        "rf_names": list(layout.rf_names),
        "electrodes": [
            {"name": e.name, "role": e.role.value, "x_um": um(e.x_range), "y_um": um(e.y_range)}
            for e in layout.electrodes
        ],
    }


def layout_from_dict(tree: dict) -> TrapLayout:
    try:
        if tree["schema"] != SCHEMA_VERSION:
            raise ParseError(f"unsupported layout schema {tree['schema']!r}")
        if tree.get("units", "um") != "um":
            raise ParseError("layout lengths must be given in micrometers")
        electrodes = [
            RectElectrode(
                name=str(e["name"]),
                role=Role(e["role"]),
                x_range=tuple(v * UM for v in e["x_um"]),
                y_range=tuple(v * UM for v in e["y_um"]),
            )
            for e in tree["electrodes"]
        ]
        origin = tuple(v * UM for v in tree.get("origin_um", (0.0, 0.0, 0.0)))
        rf_names = tuple(tree["rf_names"])
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed layout: {exc}") from exc
    return TrapLayout(
        electrodes=tuple(electrodes),
        rf_names=rf_names,
        convention=CoordinateConvention(origin=origin),
        name=str(tree.get("name", "")),
    )


def dumps_layout(layout: TrapLayout) -> str:
    return json.dumps(layout_to_dict(layout), indent=2) + "\n"


def save_layout(layout: TrapLayout, path) -> None:
    Path(path).write_text(dumps_layout(layout))


def load_layout(path) -> TrapLayout:
    try:
        tree = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(tree, dict):
        raise ParseError(f"{path}: top level must be an object")
    return layout_from_dict(tree)


def reference_layout() -> TrapLayout:
    """Calibrated asymmetric five-wire trap (see ``scripts/calibrate_reference.py``)."""
    return load_layout(data_path("reference_layout.json"))


def five_wire_layout(
    center_width: float,
    rf_widths: tuple[float, float],
    dc_width: float = 500 * UM,
    rail_length: float = 3000 * UM,
    segment_pitch: float = 100 * UM,
    n_segments: int = 7,
    ground_width: float = 200 * UM,
    name: str = "five-wire",
) -> TrapLayout:
    """Build a gapless five-wire trap.

    ``rf_widths`` are the widths of the RF rails on the -y and +y side of the
    center rail.  The outer DC regions are cut into ``n_segments`` segments
    of pitch ``segment_pitch`` centred on x = 0, with one extra long segment
    closing each end of the rail.
    """
    half = rail_length / 2
    w_lo, w_hi = rf_widths
    yc = center_width / 2
    lo_edge, hi_edge = -yc - w_lo, yc + w_hi
    electrodes = [
        RectElectrode("C", (-half, half), (-yc, yc), Role.CENTER),
        RectElectrode("RF1", (-half, half), (lo_edge, -yc), Role.RF),
        RectElectrode("RF2", (-half, half), (yc, hi_edge), Role.RF),
    ]
    span = n_segments * segment_pitch
    edges = list(-span / 2 + segment_pitch * np.arange(n_segments + 1))
    edges = [-half] + edges + [half]
    sides = {"L": (lo_edge - dc_width, lo_edge), "R": (hi_edge, hi_edge + dc_width)}
    for side, y_range in sides.items():
        for i in range(len(edges) - 1):
            electrodes.append(
                RectElectrode(f"DC{side}{i}", (edges[i], edges[i + 1]), y_range, Role.DC)
            )
    gy_lo, gy_hi = sides["L"][0], sides["R"][1]
    electrodes += [
        RectElectrode("GNDL", (-half, half), (gy_lo - ground_width, gy_lo), Role.GROUND),
        RectElectrode("GNDR", (-half, half), (gy_hi, gy_hi + ground_width), Role.GROUND),
    ]
    return TrapLayout(electrodes=tuple(electrodes), rf_names=("RF1", "RF2"), name=name)
