"""Unit conversions between envelope voltage, watts, and dBm.

The package-wide convention interprets a baseband envelope amplitude rho
as an RMS voltage across a 1-ohm reference load, so P[W] = rho**2 and
P[dBm] = 20*log10(rho) + 30. All file formats use dBm for powers, Hz for
frequencies, and degrees for angles.
"""

import numpy as np

# Reference load for the voltage <-> power conversion.
REFERENCE_RESISTANCE_OHMS = 1.0

BOLTZMANN_J_PER_K = 1.380649e-23
SPEED_OF_LIGHT_M_PER_S = 2.99792458e8


def volts_to_watts(rho, r=REFERENCE_RESISTANCE_OHMS):
    return np.asarray(rho) ** 2 / r


def watts_to_volts(p, r=REFERENCE_RESISTANCE_OHMS):
    return np.sqrt(np.asarray(p) * r)


def watts_to_dbm(p):
    return 10.0 * np.log10(np.asarray(p)) + 30.0


def dbm_to_watts(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm) - 30.0) / 10.0)


def volts_to_dbm(rho, r=REFERENCE_RESISTANCE_OHMS):
    return 20.0 * np.log10(np.asarray(rho)) + 30.0 - 10.0 * np.log10(r)


def dbm_to_volts(p_dbm, r=REFERENCE_RESISTANCE_OHMS):
    return 10.0 ** ((np.asarray(p_dbm) - 30.0 + 10.0 * np.log10(r)) / 20.0)


def db(x):
    """Power ratio in dB."""
    return 10.0 * np.log10(np.asarray(x))


def undb(x_db):
    """Inverse of :func:`db`."""
    return 10.0 ** (np.asarray(x_db) / 10.0)
