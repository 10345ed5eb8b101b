"""Quasi-memoryless AM-AM / AM-PM power amplifier behavioral models.

Four classic model families are implemented, each as a pair of amplitude
and phase characteristics over the instantaneous envelope:

- modified Rapp (C. Rapp, 1991; AM-PM extension per IEEE 802.16m EMD):
  F_A(x) = G x / (1 + |G x / Vsat|^(2p))^(1/(2p)),
  F_P(x) = A x^q1 / (1 + |x / B|^q2)
- Saleh (A. A. M. Saleh, 1981), in its general form
  z(x) = alpha x^n / (1 + beta x^2)^nu
- Ghorbani, y1 x^y2 / (1 + y3 x^y2) + y4 x for both branches
- polynomial in the dBm domain, sum_m a_m alpha_i^m (Horner evaluation)

Voltage-domain models take the envelope amplitude in volts (1-ohm RMS
convention, see :mod:`thzpa.units`) and return volts (amplitude) or
degrees (phase). The polynomial model works on powers in dBm over a
bounded fitting range.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .buffers import SampleBuffer
from .errors import DomainError, InputRangeError, NumericalError
from .units import dbm_to_volts, volts_to_dbm

__all__ = [
    "RappParams",
    "SalehParams",
    "GhorbaniParams",
    "PolyParams",
    "PaModel",
    "MODEL_KINDS",
    "rapp_amplitude",
    "rapp_phase",
    "saleh_amplitude",
    "saleh_phase",
    "ghorbani_amplitude",
    "ghorbani_phase",
    "poly_amplitude",
    "poly_phase",
    "apply_pa",
    "vsat_trend",
    "compression_point_1db",
    "compression_point_1db_bisect",
    "gain_drop",
]

MODEL_KINDS = ("polynomial", "ghorbani", "saleh", "rapp")


@dataclass(frozen=True)
class RappParams:
    """Modified Rapp parameters.

    g_lin: linear small-signal gain, v_sat: saturation voltage [V],
    p: smoothness factor; (a_pm, b_pm, q1, q2) shape the AM-PM curve
    (a_pm in deg/V^q1, b_pm in V).
    """

    g_lin: float
    v_sat: float
    p: float
    a_pm: float = 0.0
    b_pm: float = 1.0
    q1: float = 1.0
    q2: float = 1.0

    def __post_init__(self):
        for name in ("g_lin", "v_sat", "p", "b_pm", "q2"):
            if not getattr(self, name) > 0:
                raise DomainError(f"RappParams.{name} must be positive")


@dataclass(frozen=True)
class SalehParams:
    """Saleh parameters: branch 1 is AM-AM, branch 2 is AM-PM (degrees).

    Each branch follows the general form alpha x^n / (1 + beta x^2)^nu;
    the classic Saleh model is (n1, nu1) = (1, 1) and (n2, nu2) = (2, 1).
    """

    alpha1: float
    beta1: float
    alpha2: float = 0.0
    beta2: float = 1.0
    n1: int = 1
    nu1: int = 1
    n2: int = 2
    nu2: int = 1

    def __post_init__(self):
        if not self.beta1 > 0 or not self.beta2 > 0:
            raise DomainError("SalehParams beta coefficients must be positive")
        if self.n1 not in (1, 2, 3) or self.n2 not in (1, 2, 3):
            raise DomainError("SalehParams exponents n must be in {1, 2, 3}")
        if self.nu1 not in (1, 2) or self.nu2 not in (1, 2):
            raise DomainError("SalehParams exponents nu must be in {1, 2}")


@dataclass(frozen=True)
class GhorbaniParams:
    """Ghorbani parameters: y1..y4 for AM-AM, z1..z4 for AM-PM (degrees)."""

    y1: float
    y2: float
    y3: float
    y4: float
    z1: float = 0.0
    z2: float = 1.0
    z3: float = 0.0
    z4: float = 0.0

    def __post_init__(self):
        if not self.y2 > 0 or not self.z2 > 0:
            raise DomainError("Ghorbani exponents y2/z2 must be positive")
        if self.y3 < 0 or self.z3 < 0:
            raise DomainError("Ghorbani denominators require y3 >= 0 and z3 >= 0")


@dataclass(frozen=True)
class PolyParams:
    """dBm-domain polynomial model: coefficients ascending in power."""

    a: tuple
    b: tuple
    valid_range: tuple = (-40.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(c) for c in self.a))
        object.__setattr__(self, "b", tuple(float(c) for c in self.b))
        object.__setattr__(self, "valid_range", tuple(float(v) for v in self.valid_range))
        if len(self.a) < 2 or len(self.b) < 2:
            raise DomainError("polynomial model needs order >= 1 for both branches")
        lo, hi = self.valid_range
        if not lo < hi:
            raise DomainError("valid_range must satisfy lo < hi")

    @property
    def order(self):
        return max(len(self.a), len(self.b)) - 1


_PARAM_TYPES = {
    "rapp": RappParams,
    "saleh": SalehParams,
    "ghorbani": GhorbaniParams,
    "polynomial": PolyParams,
}


@dataclass(frozen=True)
class PaModel:
    """A tagged model parameter set with its operating center frequency."""

    kind: str
    params: object
    fc: float

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise DomainError(f"unknown model kind {self.kind!r}")
        expected = _PARAM_TYPES[self.kind]
        if not isinstance(self.params, expected):
            raise DomainError(
                f"model kind {self.kind!r} requires {expected.__name__}, "
                f"got {type(self.params).__name__}"
            )
        if not self.fc > 0:
            raise DomainError("center frequency fc must be positive")


def _check_envelope(rho, allow_negative=False):
    rho = np.asarray(rho, dtype=np.float64)
    if not np.all(np.isfinite(rho)):
        raise DomainError("envelope amplitude must be finite")
    if not allow_negative and np.any(rho < 0):
        raise DomainError("envelope amplitude must be non-negative")
    return rho


def rapp_amplitude(rho_in, params: RappParams):
    """AM-AM response G x / (1 + |G x / Vsat|^(2p))^(1/(2p)) in volts."""
    rho = _check_envelope(rho_in)
    return _kernels.dispatch("rapp_amp", rho, params.g_lin, params.v_sat, params.p)


def rapp_phase(rho_in, params: RappParams):
    """AM-PM response A x^q1 / (1 + |x / B|^q2) in degrees."""
    rho = _check_envelope(rho_in)
    return _kernels.dispatch(
        "rapp_phase", rho, params.a_pm, params.b_pm, params.q1, params.q2
    )


def saleh_amplitude(x, params: SalehParams):
    rho = _check_envelope(x)
    return _kernels.dispatch(
        "saleh_general", rho, params.alpha1, params.beta1, float(params.n1), float(params.nu1)
    )


def saleh_phase(x, params: SalehParams):
    rho = _check_envelope(x)
    return _kernels.dispatch(
        "saleh_general", rho, params.alpha2, params.beta2, float(params.n2), float(params.nu2)
    )


def ghorbani_amplitude(x, params: GhorbaniParams):
    rho = _check_envelope(x)
    return _kernels.dispatch(
        "ghorbani", rho, params.y1, params.y2, params.y3, params.y4
    )


def ghorbani_phase(x, params: GhorbaniParams):
    rho = _check_envelope(x)
    return _kernels.dispatch(
        "ghorbani", rho, params.z1, params.z2, params.z3, params.z4
    )


def _check_poly_range(alpha_i, params: PolyParams, clamp):
    lo, hi = params.valid_range
    if clamp:
        return np.clip(alpha_i, lo, hi)
    bad = (alpha_i < lo) | (alpha_i > hi) | ~np.isfinite(alpha_i)
    if np.any(bad):
        value = float(np.atleast_1d(alpha_i)[np.atleast_1d(bad)][0])
        raise InputRangeError(
            f"input power {value:g} dBm outside model range [{lo:g}, {hi:g}] dBm",
            value=value,
            lo=lo,
            hi=hi,
        )
    return alpha_i


def poly_amplitude(alpha_i, params: PolyParams, clamp=False):
    """Output power in dBm for input power alpha_i in dBm."""
    x = np.asarray(alpha_i, dtype=np.float64)
    x = _check_poly_range(x, params, clamp)
    coeffs = np.ascontiguousarray(params.a, dtype=np.float64)
    return _kernels.dispatch("horner", x, coeffs)


def poly_phase(alpha_i, params: PolyParams, clamp=False):
    """Output phase in degrees for input power alpha_i in dBm."""
    x = np.asarray(alpha_i, dtype=np.float64)
    x = _check_poly_range(x, params, clamp)
    coeffs = np.ascontiguousarray(params.b, dtype=np.float64)
    return _kernels.dispatch("horner", x, coeffs)


def model_amplitude(rho_v, model: PaModel, clamp=False):
    """Amplitude response in volts for envelope rho_v in volts, any kind."""
    if model.kind == "rapp":
        return rapp_amplitude(rho_v, model.params)
    if model.kind == "saleh":
        return saleh_amplitude(rho_v, model.params)
    if model.kind == "ghorbani":
        return ghorbani_amplitude(rho_v, model.params)
    rho = np.asarray(rho_v, dtype=np.float64)
    with np.errstate(divide="ignore"):
        pin_dbm = volts_to_dbm(rho)
    return dbm_to_volts(poly_amplitude(pin_dbm, model.params, clamp=clamp))


def model_phase(rho_v, model: PaModel, clamp=False):
    """Phase response in degrees for envelope rho_v in volts, any kind."""
    if model.kind == "rapp":
        return rapp_phase(rho_v, model.params)
    if model.kind == "saleh":
        return saleh_phase(rho_v, model.params)
    if model.kind == "ghorbani":
        return ghorbani_phase(rho_v, model.params)
    rho = np.asarray(rho_v, dtype=np.float64)
    with np.errstate(divide="ignore"):
        pin_dbm = volts_to_dbm(rho)
    return poly_phase(pin_dbm, model.params, clamp=clamp)


def apply_pa(buffer: SampleBuffer, model: PaModel, clamp=False) -> SampleBuffer:
    """Apply the quasi-memoryless map z = F_A(|y|) exp(j(arg y + F_P(|y|))).

    Phase responses are in degrees and converted to radians here. For the
    polynomial model the envelope is converted to dBm first; out-of-range
    samples raise :class:`InputRangeError` with the offending index unless
    ``clamp`` is set.
    """
    rho = np.abs(buffer.samples)
    try:
        amp = model_amplitude(rho, model, clamp=clamp)
        phase_deg = model_phase(rho, model, clamp=clamp)
    except InputRangeError as exc:
        idx = _first_out_of_range(rho, model.params)
        raise InputRangeError(
            f"sample {idx}: {exc}", value=exc.value, lo=exc.lo, hi=exc.hi
        ) from exc
    theta = np.angle(buffer.samples) + np.deg2rad(phase_deg)
    return SampleBuffer(amp * np.exp(1j * theta), buffer.sample_rate)


def _first_out_of_range(rho, params: PolyParams):
    with np.errstate(divide="ignore"):
        pin = volts_to_dbm(rho)
    lo, hi = params.valid_range
    bad = np.nonzero((pin < lo) | (pin > hi))[0]
    return int(bad[0]) if bad.size else -1


# Fitted first-order trend of the Rapp saturation voltage over carrier
# frequency, valid across the characterized 270-330 GHz band.
VSAT_TREND_SLOPE_V_PER_HZ = -2.5585e-13
VSAT_TREND_INTERCEPT_V = 0.1345


def vsat_trend(f_hz):
    """Saturation-voltage trend Vsat(f) = -2.5585e-13 f + 0.1345 [V]."""
    if not f_hz > 0:
        raise DomainError("frequency must be positive")
    v = VSAT_TREND_SLOPE_V_PER_HZ * f_hz + VSAT_TREND_INTERCEPT_V
    if v <= 0:
        raise InputRangeError(
            f"Vsat trend extrapolates to {v:g} V <= 0 at {f_hz:g} Hz",
            value=f_hz,
            hi=-VSAT_TREND_INTERCEPT_V / VSAT_TREND_SLOPE_V_PER_HZ,
        )
    return v


def compression_point_1db(params: RappParams):
    """Input amplitude [V] where gain is 1 dB below small-signal, closed form.

    For the Rapp AM-AM curve this is (Vsat/G) (10^(p/10) - 1)^(1/(2p)).
    """
    return (params.v_sat / params.g_lin) * (10.0 ** (params.p / 10.0) - 1.0) ** (
        1.0 / (2.0 * params.p)
    )


def compression_point_1db_bisect(amplitude_fn, g_lin, x_hi, tol=1e-12, max_iter=200):
    """1-dB compression input of an arbitrary monotone AM-AM curve by bisection.

    amplitude_fn maps input volts to output volts; g_lin is the
    small-signal gain the 1-dB drop is referenced to. x_hi must bracket
    the compression point from above.
    """
    target = 10.0 ** (-1.0 / 20.0)

    def drop(x):
        return amplitude_fn(x) / (g_lin * x) - target

    lo, hi = x_hi * 1e-9, x_hi
    if drop(lo) < 0 or drop(hi) > 0:
        raise NumericalError("1-dB compression point not bracketed")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if drop(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * hi:
            break
    return 0.5 * (lo + hi)


def compression_point_for_model(model: PaModel):
    """1-dB compression input amplitude for any volt-domain model kind."""
    if model.kind == "rapp":
        return compression_point_1db(model.params)
    if model.kind == "saleh":
        prm = model.params
        g0 = prm.alpha1 if prm.n1 == 1 else None
        if g0 is None:
            raise NumericalError("small-signal gain undefined for n1 != 1")
        return compression_point_1db_bisect(
            lambda x: float(saleh_amplitude(x, prm)), g0, 1.0 / math.sqrt(prm.beta1)
        )
    raise NumericalError(
        f"no 1-dB compression point defined for model kind {model.kind!r}"
    )


def gain_drop(p_out_dbm, p_in_dbm, s21_db):
    """Band-power gain decrease: simulated gain normalized to small-signal S21."""
    for v in (p_out_dbm, p_in_dbm, s21_db):
        if not math.isfinite(v):
            raise DomainError("gain_drop requires finite inputs")
    return p_out_dbm - p_in_dbm - s21_db
