"""Polarization of electric-field noise above planar ion traps."""

__version__ = "0.1.0"

from .geometry import RectElectrode, Role, TrapLayout, load_layout, reference_layout  # noqa: E402
from .heating import CA40, IonSpecies  # noqa: E402

__all__ = ["RectElectrode", "Role", "TrapLayout", "load_layout", "reference_layout", "CA40", "IonSpecies"]
