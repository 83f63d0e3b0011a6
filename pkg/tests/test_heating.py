import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trapnoise import heating
from trapnoise._data import data_path
from trapnoise.errors import InsufficientData, NegativeSmin, ParseError, ValidationError
from trapnoise.heating import CA40, HeatingMeasurement, angle_model, fit_angle_model

W = 2 * np.pi * 2.6e6


def synthetic(s_max, s_min, phi_max, angles, rel_sigma=0.05, rng=None, omega=W):
    conv = heating.rate_from_psd(1.0, CA40, omega) / heating.PER_MS  # quanta/ms per PSD unit
    sv, sh = angle_model(s_max, s_min, phi_max, np.asarray(angles))
    rv, rh = sv * conv, sh * conv
    out = []
    for a, v, h in zip(angles, rv, rh):
        nv = v + (rng.normal() * rel_sigma * v if rng is not None else 0.0)
        nh = h + (rng.normal() * rel_sigma * h if rng is not None else 0.0)
        out.append(HeatingMeasurement(a, max(nh, 0.0), max(nv, 0.0), rel_sigma * h, rel_sigma * v, omega))
    return out


def test_conversion_value():
    s = heating.psd_from_rate(0.12 * heating.PER_MS, CA40, W)
    assert s == pytest.approx(2.1e-12, rel=0.03)
    # independent arithmetic from the constants
    e, hbar, u = 1.602176634e-19, 1.054571817e-34, 1.66053906660e-27
    assert s == pytest.approx(120.0 * 4 * 39.962590863 * u * hbar * W / e**2, rel=1e-9)


def test_conversion_linear_and_zero():
    assert heating.rate_from_psd(0.0) == 0
    assert heating.rate_from_psd(2e-12) == pytest.approx(2 * heating.rate_from_psd(1e-12), rel=1e-15)


@settings(max_examples=100)
@given(st.floats(1e-16, 1e-8), st.floats(2 * np.pi * 1e5, 2 * np.pi * 1e7))
def test_round_trip(s, w):
    assert heating.psd_from_rate(heating.rate_from_psd(s, CA40, w), CA40, w) == pytest.approx(s, rel=1e-12)


def test_angle_model_examples():
    assert angle_model(3.0, 1.0, 20.0, 20.0) == pytest.approx((3.0, 1.0))
    sv, sh = angle_model(3.0, 1.0, 20.0, 65.0)
    assert sv == pytest.approx(2.0) and sh == pytest.approx(2.0)
    sv, sh = angle_model(2.0, 1.0, 0.0, 0.0)
    assert sv / sh == 2


@settings(max_examples=200)
@given(st.floats(0, 10), st.floats(0, 10), st.floats(0, 180), st.floats(-180, 180))
def test_angle_model_sum_rule(a, b, pm, phi):
    sv, sh = angle_model(a, b, pm, phi)
    assert sv + sh == pytest.approx(a + b, rel=1e-12, abs=1e-12)


def test_noiseless_recovery():
    data = synthetic(4e-12, 1e-12, 33.0, np.linspace(0, 170, 7))
    fit = fit_angle_model(data)
    assert fit.s_max == pytest.approx(4e-12, rel=1e-9)
    assert fit.s_min == pytest.approx(1e-12, rel=1e-9)
    assert fit.phi_max == pytest.approx(33.0, abs=1e-9)
    assert fit.chi2 == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 100.0))
def test_scale_equivariance(c):
    rng = np.random.default_rng(5)
    data = synthetic(3e-12, 1e-12, 70.0, np.linspace(0, 90, 10), rng=rng)
    scaled = [HeatingMeasurement(m.angle, c * m.rate_h, c * m.rate_v, c * m.sigma_h, c * m.sigma_v,
                                 m.mode_frequency) for m in data]
    a, b = fit_angle_model(data), fit_angle_model(scaled)
    assert b.s_max == pytest.approx(c * a.s_max, rel=1e-9)
    assert b.s_min == pytest.approx(c * a.s_min, rel=1e-9)
    assert b.phi_max == pytest.approx(a.phi_max, abs=1e-9)


def test_fit_ratio_matches_direct_ratio():
    data = synthetic(5e-12, 1e-12, 15.0, [15.0, 40.0, 70.0])
    fit = fit_angle_model(data)
    m = data[0]
    assert fit.ratio_at(15.0) == pytest.approx(heating.two_rate_ratio(m)[0], rel=1e-9)


def test_insufficient_data():
    data = synthetic(3e-12, 1e-12, 10.0, [0.0, 30.0])
    with pytest.raises(InsufficientData):
        fit_angle_model(data)
    with pytest.raises(InsufficientData):
        fit_angle_model(synthetic(3e-12, 1e-12, 10.0, [0.0, 90.0, 180.0, 270.0]))


def test_negative_smin_warns():
    data = synthetic(3e-12, 1e-12, 10.0, np.linspace(0, 90, 8))
    # make the ↔ rates far too small at every angle
    data = [HeatingMeasurement(m.angle, 0.01 * m.rate_h, m.rate_v, 1e-3 * m.sigma_h, 1e-3 * m.sigma_v,
                               m.mode_frequency) for m in data]
    with pytest.warns(NegativeSmin):
        fit_angle_model(data)


def test_measurement_validation():
    with pytest.raises(ValidationError):
        HeatingMeasurement(0, -1.0, 1.0, 0.1, 0.1, W)
    with pytest.raises(ValidationError):
        HeatingMeasurement(0, 1.0, 1.0, 0.0, 0.1, W)


def test_csv_round_trip(tmp_path):
    data = synthetic(3e-12, 1e-12, 10.0, [0.0, 30.0, 60.0])
    heating.write_measurements(tmp_path / "m.csv", data)
    back = heating.read_measurements(tmp_path / "m.csv")
    for a, b in zip(data, back):
        assert a.angle == b.angle and a.rate_h == b.rate_h
        assert b.mode_frequency == pytest.approx(a.mode_frequency, rel=1e-14)


def test_csv_missing_column(tmp_path):
    (tmp_path / "m.csv").write_text("angle_deg,rate_h_quanta_per_ms\n1,2\n")
    with pytest.raises(ParseError):
        heating.read_measurements(tmp_path / "m.csv")


def test_bundled_dataset():
    data = heating.read_measurements(data_path("published_measurements.csv"))
    assert [m.rate_h for m in data] == [0.12, 0.15]
    assert [m.rate_v for m in data] == [1.3, 5.5]
    # the angle-resolved data were not tabulated, so a fit is not possible
    with pytest.raises(InsufficientData):
        fit_angle_model(data)
    pv = json.loads(data_path("published_values.json").read_text())
    assert pv["ratio_at_phi_g"] == {"value": 4.2, "sigma": 0.5}


def test_scaling_factor():
    f, s = heating.voltage_scaling_factor(0.69, 0.06, 0.52, 0.03)
    assert f == pytest.approx(1.33, abs=0.005) and s == pytest.approx(0.14, abs=0.005)
    assert heating.voltage_scaling_factor(0.5, 0.1, 0.5, 0.1)[0] == 1.0
    assert heating.voltage_dependent_prediction(2.0) == 4.0
    with pytest.raises(ValidationError):
        heating.voltage_scaling_factor(0.0, 0.1, 0.5, 0.1)
