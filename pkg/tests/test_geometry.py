import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trapnoise import fields
from trapnoise._data import data_path
from trapnoise.errors import ParseError, ValidationError
from trapnoise.geometry import (
    UM, RectElectrode, Role, TrapLayout, dumps_layout, five_wire_layout,
    layout_from_dict, layout_to_dict, load_layout, reference_layout, save_layout,
)


def small_layout():
    return TrapLayout(
        electrodes=(
            RectElectrode("C", (-1e-3, 1e-3), (-50e-6, 50e-6), Role.CENTER),
            RectElectrode("RF1", (-1e-3, 1e-3), (-150e-6, -50e-6), Role.RF),
            RectElectrode("RF2", (-1e-3, 1e-3), (50e-6, 150e-6), Role.RF),
            RectElectrode("DL", (-1e-3, 1e-3), (-450e-6, -150e-6), Role.DC),
            RectElectrode("DR", (-1e-3, 1e-3), (150e-6, 450e-6), Role.DC),
        ),
        rf_names=("RF1", "RF2"),
    )


def test_five_electrode_round_trip(tmp_path):
    lay = small_layout()
    save_layout(lay, tmp_path / "l.json")
    back = load_layout(tmp_path / "l.json")
    assert len(back.electrodes) == 5
    assert back.names == lay.names
    # meters -> um -> meters can move the last bit; the file form is exact
    assert dumps_layout(back) == dumps_layout(lay)


def test_overlap_rejected(tmp_path):
    tree = layout_to_dict(small_layout())
    tree["electrodes"][3]["y_um"] = [-450.0, -100.0]
    (tmp_path / "bad.json").write_text(json.dumps(tree))
    with pytest.raises(ValidationError):
        load_layout(tmp_path / "bad.json")


def test_touching_edges_allowed():
    a = RectElectrode("a", (0, 1), (0, 1))
    b = RectElectrode("b", (1, 2), (0, 1))
    assert not a.overlaps(b)


@pytest.mark.parametrize("mutate", [
    lambda t: t.update(rf_names=[]),
    lambda t: t["electrodes"][0].update(role="DC"),
    lambda t: t["electrodes"].append(dict(t["electrodes"][0], name="C2", y_um=[600.0, 700.0])),
    lambda t: t.update(rf_names=["nope"]),
])
def test_invariant_violations(mutate):
    tree = layout_to_dict(small_layout())
    mutate(tree)
    with pytest.raises(ValidationError):
        layout_from_dict(tree)


@pytest.mark.parametrize("text", ["{", "[]", '{"schema": 2, "electrodes": [], "rf_names": []}',
                                  '{"schema": 1}', '{"schema": 1, "rf_names": ["a"], "electrodes": [{"name": "a"}]}'])
def test_parse_errors(tmp_path, text):
    (tmp_path / "x.json").write_text(text)
    with pytest.raises(ParseError):
        load_layout(tmp_path / "x.json")


def test_bad_rectangle():
    with pytest.raises(ValidationError):
        RectElectrode("a", (1, 0), (0, 1))


def test_reference_file_round_trips_bytes():
    path = data_path("reference_layout.json")
    lay = load_layout(path)
    assert lay == reference_layout()
    assert dumps_layout(lay) == path.read_text()


def test_reference_observables(layout, null):
    assert abs(null[2] / UM - 107) < 3
    assert abs(fields.center_field_angle(layout, null) - 15) < 2


def test_symmetric_variant_angle_zero():
    lay = five_wire_layout(160 * UM, (80 * UM, 80 * UM))
    p = fields.rf_null(lay)
    assert abs(p[1]) < 1e-12
    assert abs(fields.center_field_angle(lay, p)) < 1e-9


def test_mirror_negates_y_field(layout):
    mir = layout.mirrored()
    p = np.array([13e-6, 21e-6, 95e-6])
    pm = p * [1, -1, 1]
    for name in layout.names:
        e = fields.unit_field(layout[name], p)
        em = fields.unit_field(mir[name], pm)
        np.testing.assert_allclose(em, e * [1, -1, 1], rtol=1e-12, atol=1e-12 * np.abs(e).max())


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1.0, 500.0), min_size=4, max_size=4))
def test_serialization_round_trip_bit_exact(w):
    lay = five_wire_layout(round(w[0], 3) * UM, (round(w[1], 3) * UM, round(w[2], 3) * UM),
                           dc_width=round(w[3], 3) * UM)
    text = dumps_layout(lay)
    again = dumps_layout(layout_from_dict(json.loads(text)))
    assert again == text
