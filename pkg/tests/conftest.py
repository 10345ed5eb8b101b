import numpy as np
import pytest

from thzpa import MeasurementCurve, load_builtin_model
from thzpa.files import builtin_model_path
from thzpa.pa_models import rapp_amplitude, rapp_phase
from thzpa.units import dbm_to_volts, volts_to_dbm


@pytest.fixture(scope="session")
def rapp315():
    return load_builtin_model("rapp").params


@pytest.fixture(scope="session")
def saleh315():
    return load_builtin_model("saleh").params


@pytest.fixture(scope="session")
def ghorbani315():
    return load_builtin_model("ghorbani").params


@pytest.fixture(scope="session")
def poly315():
    return load_builtin_model("polynomial").params


@pytest.fixture(scope="session")
def poly_model315():
    return load_builtin_model("polynomial")


@pytest.fixture(scope="session")
def synth_csv_path():
    return str(builtin_model_path("polynomial").parent / "measurement_315ghz_synth.csv")


@pytest.fixture(scope="session")
def rapp_synth_curve(rapp315):
    """Noise-free measurement curve generated from the 315 GHz Rapp model."""
    pin = np.arange(-40.0, 0.0 + 1e-9, 1.0)
    x = dbm_to_volts(pin)
    return MeasurementCurve(
        fc=315e9,
        p_in=pin,
        p_out=volts_to_dbm(rapp_amplitude(x, rapp315)),
        phase=rapp_phase(x, rapp315),
    )
