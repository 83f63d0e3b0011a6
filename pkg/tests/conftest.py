import numpy as np
import pytest

from trapnoise import fields, presets
from trapnoise.geometry import reference_layout
from trapnoise.heating import CA40


@pytest.fixture(scope="session")
def layout():
    return reference_layout()


@pytest.fixture(scope="session")
def null(layout):
    return fields.rf_null(layout)


@pytest.fixture(scope="session")
def drive(layout):
    return presets.drive_for(layout)


@pytest.fixture(scope="session")
def ion():
    return CA40


@pytest.fixture
def rng():
    return np.random.default_rng(20240314)
