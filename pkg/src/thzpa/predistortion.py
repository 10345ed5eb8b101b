"""Amplitude/phase predistortion built on the Rapp model inverse.

The ideal amplitude predistorter inverts the Rapp AM-AM curve so the
amplifier cascade is linear, rho -> rho / (1 - (G rho / Vsat)^(2p))^(1/(2p)),
and the ideal phase predistorter cancels the AM-PM curve. The inverse
diverges at rho = Vsat/G, so inputs are clipped at a level chi below it;
gamma denotes the corresponding predistorter output ceiling.

Deployable approximations replace both ideal functions by polynomials
fitted in the least-squares sense over [0, chi] and [0, gamma]. The
phase compensator is always evaluated at the predistorted amplitude, as
in the cascade y = A_PD(|x|) * exp(j(arg x + Theta(A_PD(|x|)))).
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .buffers import SampleBuffer
from .errors import DomainError, NumericalError
from .pa_models import RappParams, rapp_phase
from .fitting import polynomial_ls

__all__ = [
    "Predistorter",
    "design_predistorter",
    "ideal_amplitude_pd",
    "ideal_phase_pd",
    "fit_pd_polynomials",
    "apply_predistorter",
    "DEFAULT_CHI_FRACTION",
    "PD_GRID_POINTS",
]

# Default input clipping level as a fraction of the inverse-function pole
# at Vsat/G; 0.935 of the pole keeps the amplitude expansion bounded while
# linearizing essentially the whole usable drive range.
DEFAULT_CHI_FRACTION = 0.935
PD_GRID_POINTS = 4096


@dataclass(frozen=True)
class Predistorter:
    """Rapp-inverse predistorter with input clipping.

    mode "ideal" evaluates the exact inverse; mode "polynomial" uses the
    fitted coefficient vectors eta (amplitude, volts domain) and nu
    (phase, degrees over the predistorted amplitude).
    """

    rapp: RappParams
    chi: float
    gamma: float
    mode: str = "ideal"
    eta: tuple | None = None
    nu: tuple | None = None

    def __post_init__(self):
        pole = self.rapp.v_sat / self.rapp.g_lin
        if not 0 < self.chi < pole:
            raise DomainError(
                f"clipping level chi={self.chi:g} V must lie in (0, Vsat/G={pole:g} V)"
            )
        expected = _ideal_amp(np.float64(self.chi), self.rapp)
        if abs(self.gamma - expected) > 1e-12 * max(1.0, abs(expected)):
            raise DomainError("gamma must equal the ideal amplitude response at chi")
        if self.mode not in ("ideal", "polynomial"):
            raise DomainError(f"unknown predistorter mode {self.mode!r}")
        if self.mode == "polynomial":
            if self.eta is None or self.nu is None:
                raise DomainError("polynomial mode requires eta and nu coefficients")
            object.__setattr__(self, "eta", tuple(float(c) for c in self.eta))
            object.__setattr__(self, "nu", tuple(float(c) for c in self.nu))


def _ideal_amp(rho, rapp: RappParams):
    return _kernels.dispatch("rapp_inverse_amp", rho, rapp.g_lin, rapp.v_sat, rapp.p)


def ideal_amplitude_pd(rho_x, pd: Predistorter):
    """Clip at chi, then invert the Rapp AM-AM curve. Output is <= gamma."""
    rho = np.asarray(rho_x, dtype=np.float64)
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise DomainError("predistorter input amplitude must be finite and >= 0")
    clipped = np.minimum(rho, pd.chi)
    out = _ideal_amp(clipped, pd.rapp)
    return float(out) if np.ndim(rho_x) == 0 else out


def ideal_phase_pd(rho_y, pd: Predistorter):
    """Phase compensation Theta(rho) = -F_P(rho), in degrees."""
    return -rapp_phase(rho_y, pd.rapp)


def fit_pd_polynomials(pd: Predistorter, n_amp, n_phase, grid_points=PD_GRID_POINTS):
    """LS polynomial approximations of both ideal predistortion functions.

    The continuous squared-error integrals over [0, chi] (amplitude) and
    [0, gamma] (phase) are discretized on uniform grids with composite
    trapezoid weights. Returns (eta, nu, amp_residual, phase_residual)
    where the residuals are the discretized integrals at the optimum.
    """
    if n_amp < 1 or n_phase < 1:
        raise DomainError("polynomial orders must be >= 1")
    if grid_points < 10 * max(n_amp, n_phase):
        raise DomainError("grid_points must be at least 10x the largest order")

    def branch(upper, target_fn, order):
        grid = np.linspace(0.0, upper, grid_points)
        weights = np.full(grid_points, upper / (grid_points - 1))
        weights[0] *= 0.5
        weights[-1] *= 0.5
        target = target_fn(grid)
        coef = polynomial_ls(grid, target, order, weights=weights)
        resid = float(np.sum(weights * (target - np.polyval(coef[::-1], grid)) ** 2))
        if not np.all(np.isfinite(coef)):
            raise NumericalError("ill-conditioned PD approximation; lower the order")
        return coef, resid

    eta, amp_resid = branch(pd.chi, lambda g: ideal_amplitude_pd(g, pd), n_amp)
    nu, phase_resid = branch(pd.gamma, lambda g: ideal_phase_pd(g, pd), n_phase)
    return eta, nu, amp_resid, phase_resid


def design_predistorter(
    rapp: RappParams,
    chi=None,
    mode="ideal",
    n_amp=8,
    n_phase=8,
    grid_points=PD_GRID_POINTS,
):
    """Build a predistorter for a Rapp amplifier model.

    chi defaults to DEFAULT_CHI_FRACTION of the Vsat/G pole. Polynomial
    mode fits the approximation coefficients immediately.
    """
    if chi is None:
        chi = DEFAULT_CHI_FRACTION * rapp.v_sat / rapp.g_lin
    pole = rapp.v_sat / rapp.g_lin
    if not 0 < chi < pole:
        raise DomainError(
            f"clipping level chi={chi:g} V must lie in (0, Vsat/G={pole:g} V)"
        )
    gamma = float(_ideal_amp(np.float64(chi), rapp))
    pd = Predistorter(rapp=rapp, chi=float(chi), gamma=gamma)
    if mode == "ideal":
        return pd
    eta, nu, _, _ = fit_pd_polynomials(pd, n_amp, n_phase, grid_points)
    return Predistorter(
        rapp=rapp,
        chi=float(chi),
        gamma=gamma,
        mode="polynomial",
        eta=tuple(eta),
        nu=tuple(nu),
    )


def apply_predistorter(buffer: SampleBuffer, pd: Predistorter):
    """Predistort a baseband buffer; returns (buffer, clipped sample count).

    Per sample: the amplitude is clipped at chi and mapped through the
    amplitude function, then the phase compensation (evaluated at the
    mapped amplitude) is added to the sample phase. Clipping is silent
    apart from the returned counter. Polynomial amplitude outputs are
    floored at zero since amplitudes cannot be negative.
    """
    rho = np.abs(buffer.samples)
    n_clipped = int(np.count_nonzero(rho > pd.chi))
    clipped = np.minimum(rho, pd.chi)
    if pd.mode == "ideal":
        rho_y = _ideal_amp(clipped, pd.rapp)
        theta_comp = ideal_phase_pd(rho_y, pd)
    else:
        eta = np.ascontiguousarray(pd.eta, dtype=np.float64)
        nu = np.ascontiguousarray(pd.nu, dtype=np.float64)
        rho_y = np.maximum(_kernels.dispatch("horner", clipped, eta), 0.0)
        theta_comp = _kernels.dispatch("horner", rho_y, nu)
    theta = np.angle(buffer.samples) + np.deg2rad(theta_comp)
    out = SampleBuffer(rho_y * np.exp(1j * theta), buffer.sample_rate)
    return out, n_clipped
