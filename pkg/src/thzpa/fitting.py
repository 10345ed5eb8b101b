"""Model parameter extraction from AM-AM / AM-PM measurement curves.

Polynomial branches are solved by linear least squares, the Saleh
branches by the classic closed-form transformed least squares, and the
Rapp / Ghorbani branches by an L2 envelope-domain cost driven through a
derivative-free simplex search with deterministic multi-start.

Measurement powers are in dBm; voltage-domain fitting converts them with
the package 1-ohm convention. Residuals are reported as RMS errors: dB
and degrees for the polynomial model, volts and degrees for the
voltage-domain models.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DomainError, NumericalError
from .pa_models import (
    GhorbaniParams,
    PaModel,
    PolyParams,
    RappParams,
    SalehParams,
)
from .units import dbm_to_volts

__all__ = [
    "MeasurementCurve",
    "FitReport",
    "SimplexResult",
    "normalize_phase",
    "polynomial_ls",
    "fit_polynomial",
    "fit_saleh",
    "minimize_simplex",
    "fit_rapp",
    "fit_ghorbani",
    "fit_error_vs_order",
]

DEFAULT_REFERENCE_PIN_DBM = -40.0
SIMPLEX_TOL = 1e-10
SIMPLEX_MAX_ITER = 2000
N_RESTARTS = 8


@dataclass(frozen=True)
class MeasurementCurve:
    """Sorted (Pin dBm -> Pout dBm, phase deg) samples at one frequency."""

    fc: float
    p_in: np.ndarray
    p_out: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        p_in = np.asarray(self.p_in, dtype=np.float64)
        p_out = np.asarray(self.p_out, dtype=np.float64)
        phase = np.asarray(self.phase, dtype=np.float64)
        object.__setattr__(self, "p_in", p_in)
        object.__setattr__(self, "p_out", p_out)
        object.__setattr__(self, "phase", phase)
        if p_in.size < 2:
            raise DataError("measurement curve needs at least 2 points")
        if p_in.size != p_out.size or p_in.size != phase.size:
            raise DataError("measurement columns must have equal length")
        if not (np.all(np.isfinite(p_in)) and np.all(np.isfinite(p_out)) and np.all(np.isfinite(phase))):
            raise DataError("measurement curve contains non-finite values")
        if not np.all(np.diff(p_in) > 0):
            raise DataError(f"p_in must be strictly increasing (fc={self.fc:g} Hz)")
        if not self.fc > 0:
            raise DataError("curve frequency must be positive")

    @property
    def x_volts(self):
        return dbm_to_volts(self.p_in)

    @property
    def out_volts(self):
        return dbm_to_volts(self.p_out)


@dataclass
class FitReport:
    model: PaModel
    residual_amplitude: float
    residual_phase: float
    iterations: int
    converged: bool = True
    seed: int | None = None

    def __post_init__(self):
        if self.residual_amplitude < 0 or self.residual_phase < 0:
            raise DataError("fit residuals must be non-negative")


# ---------------------------------------------------------------------------
# measurement preprocessing
# ---------------------------------------------------------------------------

def normalize_phase(raw, reference_pin=DEFAULT_REFERENCE_PIN_DBM, interp_window_db=0.5):
    """Reference raw phase-vs-power data to the linear operating point.

    `raw` is an iterable of (freq_hz, pin_dbm, phase_deg) samples. Per
    frequency the phase is unwrapped along increasing Pin and the phase
    at `reference_pin` is subtracted, so the normalized shift is zero at
    the reference for every frequency. When no sample sits exactly at
    the reference, a linear interpolation is used provided the nearest
    sample is within `interp_window_db`.

    Returns {freq_hz: (pin array, normalized phase array)}.
    """
    by_freq = {}
    for f, pin, phi in raw:
        by_freq.setdefault(float(f), []).append((float(pin), float(phi)))

    out = {}
    for f, rows in by_freq.items():
        rows.sort(key=lambda r: r[0])
        pin = np.array([r[0] for r in rows])
        phi = np.unwrap(np.array([r[1] for r in rows]), period=360.0)
        nearest = np.argmin(np.abs(pin - reference_pin))
        if abs(pin[nearest] - reference_pin) > interp_window_db:
            raise DataError(
                f"no sample within {interp_window_db} dB of the {reference_pin} dBm "
                f"reference for frequency {f:g} Hz"
            )
        ref = float(np.interp(reference_pin, pin, phi))
        out[f] = (pin, phi - ref)
    return out


# ---------------------------------------------------------------------------
# linear least squares (polynomial branches, PD approximations)
# ---------------------------------------------------------------------------

def polynomial_ls(x, y, order, weights=None):
    """Least-squares polynomial fit, coefficients ascending.

    Columns of the Vandermonde are norm-scaled before the solve to keep
    high orders usable; rank deficiency raises NumericalError.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if order < 1:
        raise DomainError("polynomial order must be >= 1")
    if x.size <= order:
        raise DataError(f"need more than {order} points for an order-{order} fit")
    v = np.vander(x, order + 1, increasing=True)
    if weights is not None:
        w = np.sqrt(np.asarray(weights, dtype=np.float64))
        v = v * w[:, None]
        y = y * w
    scale = np.linalg.norm(v, axis=0)
    if np.any(scale == 0):
        raise NumericalError("degenerate Vandermonde column")
    coef, _, rank, _ = np.linalg.lstsq(v / scale, y, rcond=None)
    if rank < order + 1:
        raise NumericalError(
            f"rank-deficient system (rank {rank} < {order + 1}); duplicate abscissae?"
        )
    return coef / scale


def _rms(residual):
    residual = np.asarray(residual)
    return float(np.sqrt(np.mean(residual**2)))


def fit_polynomial(curve: MeasurementCurve, order: int):
    """Independent dBm-domain LS fits of the AM-AM and AM-PM branches."""
    a = polynomial_ls(curve.p_in, curve.p_out, order)
    b = polynomial_ls(curve.p_in, curve.phase, order)
    params = PolyParams(
        a=tuple(a), b=tuple(b), valid_range=(float(curve.p_in[0]), float(curve.p_in[-1]))
    )
    model = PaModel(kind="polynomial", params=params, fc=curve.fc)
    va = np.vander(curve.p_in, order + 1, increasing=True)
    report = FitReport(
        model=model,
        residual_amplitude=_rms(curve.p_out - va @ a),
        residual_phase=_rms(curve.phase - va @ b),
        iterations=0,
    )
    return params, report


def fit_error_vs_order(curve: MeasurementCurve, orders):
    """RMS fit error of both polynomial branches for each requested order."""
    rows = []
    for order in orders:
        _, report = fit_polynomial(curve, int(order))
        rows.append((int(order), report.residual_amplitude, report.residual_phase))
    return rows


# ---------------------------------------------------------------------------
# Saleh closed-form least squares
# ---------------------------------------------------------------------------

def saleh_closed_form(x, z, n, nu):
    """Optimal (alpha, beta) of alpha x^n / (1 + beta x^2)^nu in the
    transformed mean-square sense, via the classic closed form.

    The transform w = (z / x^n)^(-1/nu) maps the model onto a straight
    line in x^2; an even root (nu = 2) therefore requires z / x^n > 0.
    For nu = 1 the reciprocal is sign-preserving and negative branches
    (phase curves) are allowed.
    """
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if np.any(x <= 0):
        raise DomainError("Saleh closed form requires x > 0")
    ratio = z / x**n
    if nu == 1:
        if np.any(ratio == 0):
            raise DomainError("Saleh closed form requires z != 0 at every point")
        w = 1.0 / ratio
    else:
        if np.any(ratio <= 0):
            raise DomainError("Saleh closed form with nu = 2 requires z / x^n > 0")
        w = ratio ** (-1.0 / nu)
    n_pts = x.size
    s2 = np.sum(x**2)
    s4 = np.sum(x**4)
    sw = np.sum(w)
    swx2 = np.sum(w * x**2)
    den = s2 * swx2 - s4 * sw
    scale = abs(s2 * swx2) + abs(s4 * sw)
    if not np.isfinite(den) or abs(den) <= 1e-12 * scale:
        raise NumericalError("degenerate data: zero denominator in Saleh closed form")
    alpha = ((s2**2 - n_pts * s4) / den) ** nu
    beta = (s2 * sw - n_pts * swx2) / den
    return float(alpha), float(beta)


def fit_saleh(curve: MeasurementCurve, branch="amplitude", n=None, nu=None):
    """Closed-form LS fit of one Saleh branch.

    branch "amplitude" fits Pout (converted to volts) with default
    (n, nu) = (1, 1); branch "phase" fits the phase curve in degrees
    with default (n, nu) = (2, 1).
    """
    if branch not in ("amplitude", "phase"):
        raise DomainError(f"unknown Saleh branch {branch!r}")
    x = curve.x_volts
    if branch == "amplitude":
        z = curve.out_volts
        n = 1 if n is None else int(n)
        nu = 1 if nu is None else int(nu)
    else:
        z = curve.phase
        n = 2 if n is None else int(n)
        nu = 1 if nu is None else int(nu)
    alpha, beta = saleh_closed_form(x, z, n, nu)
    if branch == "amplitude":
        params = SalehParams(alpha1=alpha, beta1=beta, n1=n, nu1=nu)
        fitted = alpha * x**n / (1.0 + beta * x**2) ** nu
        resid_amp, resid_phase = _rms(z - fitted), 0.0
    else:
        params = SalehParams(alpha1=0.0, beta1=1.0, alpha2=alpha, beta2=beta, n2=n, nu2=nu)
        fitted = alpha * x**n / (1.0 + beta * x**2) ** nu
        resid_amp, resid_phase = 0.0, _rms(z - fitted)
    model = PaModel(kind="saleh", params=params, fc=curve.fc)
    report = FitReport(model, resid_amp, resid_phase, iterations=0)
    return params, report


# ---------------------------------------------------------------------------
# Nelder-Mead simplex
# ---------------------------------------------------------------------------

@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool


def minimize_simplex(objective, start, tolerance=SIMPLEX_TOL, max_iter=SIMPLEX_MAX_ITER):
    """Derivative-free Nelder-Mead minimization.

    Iterates until the simplex diameter (max infinity-norm distance of
    any vertex to the best vertex) falls below `tolerance`, or max_iter
    is reached (result flagged as not converged). Non-finite objective
    values are treated as +inf; a non-finite value at the start point is
    a domain error.
    """
    x0 = np.asarray(start, dtype=np.float64)
    if x0.ndim != 1 or x0.size == 0:
        raise DomainError("start point must be a non-empty 1-D vector")

    def f(x):
        v = objective(x)
        return float(v) if np.isfinite(v) else np.inf

    f0 = objective(x0)
    if not np.isfinite(f0):
        raise DomainError("objective is not finite at the start point")

    n = x0.size
    verts = [x0]
    for j in range(n):
        xj = x0.copy()
        xj[j] = xj[j] * 1.05 if xj[j] != 0 else 0.00025
        verts.append(xj)
    verts = np.array(verts)
    fvals = np.array([f0] + [f(v) for v in verts[1:]], dtype=np.float64)

    iterations = 0
    converged = False
    while iterations < max_iter:
        order = np.argsort(fvals, kind="stable")
        verts, fvals = verts[order], fvals[order]
        diameter = np.max(np.abs(verts[1:] - verts[0]))
        if diameter < tolerance:
            converged = True
            break
        iterations += 1

        centroid = verts[:-1].mean(axis=0)
        worst = verts[-1]
        reflected = centroid + (centroid - worst)
        f_r = f(reflected)
        if f_r < fvals[0]:
            expanded = centroid + 2.0 * (centroid - worst)
            f_e = f(expanded)
            if f_e < f_r:
                verts[-1], fvals[-1] = expanded, f_e
            else:
                verts[-1], fvals[-1] = reflected, f_r
        elif f_r < fvals[-2]:
            verts[-1], fvals[-1] = reflected, f_r
        else:
            if f_r < fvals[-1]:
                contracted = centroid + 0.5 * (reflected - centroid)
                f_c = f(contracted)
                accept = f_c <= f_r
            else:
                contracted = centroid + 0.5 * (worst - centroid)
                f_c = f(contracted)
                accept = f_c < fvals[-1]
            if accept:
                verts[-1], fvals[-1] = contracted, f_c
            else:
                for k in range(1, n + 1):
                    verts[k] = verts[0] + 0.5 * (verts[k] - verts[0])
                    fvals[k] = f(verts[k])

    order = np.argsort(fvals, kind="stable")
    verts, fvals = verts[order], fvals[order]
    return SimplexResult(verts[0].copy(), float(fvals[0]), iterations, converged)


def _multistart_simplex(objective, start, seed, jitter=0.2):
    """Deterministic jittered multi-start around `start` in log-space.

    Restart 0 uses the plain start; half of the remaining restarts
    jitter the start, the other half polish the incumbent best. Ties in
    the final residual go to the lowest restart index.
    """
    rng = np.random.default_rng(seed)
    best = None
    total_iter = 0
    any_converged = False
    for k in range(N_RESTARTS):
        if k == 0:
            point = start
        elif k < N_RESTARTS // 2 or best is None:
            point = start + rng.normal(0.0, jitter, size=len(start))
        else:
            point = best.x + rng.normal(0.0, jitter / 4.0, size=len(start))
        try:
            res = minimize_simplex(objective, point)
        except DomainError:
            continue
        total_iter += res.iterations
        any_converged = any_converged or res.converged
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise NumericalError("all simplex restarts failed")
    return best, total_iter, any_converged


# ---------------------------------------------------------------------------
# Rapp and Ghorbani simplex fits
# ---------------------------------------------------------------------------

def _rapp_amp_model(x, g, vsat, p):
    return g * x / (1.0 + np.abs(g * x / vsat) ** (2.0 * p)) ** (1.0 / (2.0 * p))


def fit_rapp(curve: MeasurementCurve, seed=0):
    """Fit the modified Rapp model by envelope-domain L2 minimization.

    The AM-AM branch searches (G, Vsat, p) in log-space. The AM-PM
    branch searches (B, q1, q2) with the linear coefficient A eliminated
    by least squares inside the objective.
    """
    x = curve.x_volts
    d = curve.out_volts
    phase = curve.phase

    def amp_objective(theta):
        g, vsat, p = np.exp(theta)
        r = d - _rapp_amp_model(x, g, vsat, p)
        return float(r @ r)

    n_lo = min(5, x.size)
    g0 = float(np.mean(d[:n_lo] / x[:n_lo]))
    start_amp = np.log([g0, float(d.max()), 1.0])
    best_amp, iters_amp, conv_amp = _multistart_simplex(amp_objective, start_amp, seed)
    g, vsat, p = np.exp(best_amp.x)

    def _pm_basis(theta):
        b, q1, q2 = np.exp(theta)
        return x**q1 / (1.0 + np.abs(x / b) ** q2)

    def pm_objective(theta):
        basis = _pm_basis(theta)
        den = basis @ basis
        if not np.isfinite(den) or den == 0:
            return np.inf
        a_opt = (phase @ basis) / den
        r = phase - a_opt * basis
        return float(r @ r)

    i_ext = int(np.argmax(np.abs(phase)))
    b0 = float(x[i_ext]) if x[i_ext] > 0 else float(x[-1])
    start_pm = np.log([b0, 1.5, 1.5])
    best_pm, iters_pm, conv_pm = _multistart_simplex(pm_objective, start_pm, seed + 1)
    b_pm, q1, q2 = np.exp(best_pm.x)
    basis = _pm_basis(best_pm.x)
    a_pm = float((phase @ basis) / (basis @ basis))

    params = RappParams(g_lin=g, v_sat=vsat, p=p, a_pm=a_pm, b_pm=b_pm, q1=q1, q2=q2)
    model = PaModel(kind="rapp", params=params, fc=curve.fc)
    report = FitReport(
        model=model,
        residual_amplitude=np.sqrt(best_amp.fun / x.size),
        residual_phase=np.sqrt(best_pm.fun / x.size),
        iterations=iters_amp + iters_pm,
        converged=conv_amp and conv_pm,
        seed=seed,
    )
    return params, report


def fit_ghorbani(curve: MeasurementCurve, seed=0):
    """Fit the Ghorbani model by envelope-domain L2 minimization.

    Each branch searches the nonlinear pair (exponent, denominator
    coefficient) in log-space; the two linear coefficients are solved by
    least squares inside the objective. The landscape is known to be
    underdetermined, so recovery of a particular parameter vector is not
    guaranteed, only the residual.
    """
    x = curve.x_volts

    def branch_fit(z, seed_k):
        def design(theta):
            e, c3 = np.exp(theta)
            t = x**e
            return np.stack([t / (1.0 + c3 * t), x], axis=1)

        def objective(theta):
            mat = design(theta)
            if not np.all(np.isfinite(mat)):
                return np.inf
            coef, _, _, _ = np.linalg.lstsq(mat, z, rcond=None)
            r = z - mat @ coef
            return float(r @ r)

        zmax = float(np.max(np.abs(z)))
        c1_0 = float(np.mean(np.abs(z[: min(5, x.size)]) / x[: min(5, x.size)]))
        c3_0 = max(c1_0 / zmax, 1e-3) if zmax > 0 else 1.0
        start = np.log([1.0, c3_0])
        best, iters, conv = _multistart_simplex(objective, start, seed_k)
        e, c3 = np.exp(best.x)
        mat = design(best.x)
        coef, _, _, _ = np.linalg.lstsq(mat, z, rcond=None)
        return (float(coef[0]), float(e), float(c3), float(coef[1])), best.fun, iters, conv

    (y1, y2, y3, y4), fun_a, it_a, conv_a = branch_fit(curve.out_volts, seed)
    (z1, z2, z3, z4), fun_p, it_p, conv_p = branch_fit(curve.phase, seed + 1)
    params = GhorbaniParams(y1=y1, y2=y2, y3=y3, y4=y4, z1=z1, z2=z2, z3=z3, z4=z4)
    model = PaModel(kind="ghorbani", params=params, fc=curve.fc)
    report = FitReport(
        model=model,
        residual_amplitude=np.sqrt(fun_a / x.size),
        residual_phase=np.sqrt(fun_p / x.size),
        iterations=it_a + it_p,
        converged=conv_a and conv_p,
        seed=seed,
    )
    return params, report
