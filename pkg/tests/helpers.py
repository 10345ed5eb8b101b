"""Shared independent oracles for the test suite.

Everything here deliberately avoids the package's own computation paths:
scalar math-module arithmetic, Fraction-exact polynomial evaluation, and
closed-form communication-theory results.
"""

import math
from fractions import Fraction

import numpy as np

# 315 GHz reference parameter values used across tests.
RAPP315 = {
    "g_lin": 13.0732,
    "v_sat": 0.0559,
    "p": 0.878,
    "a_pm": -1.7204e5,
    "b_pm": 8.5695e-3,
    "q1": 1.6949,
    "q2": 1.7404,
}
SALEH315 = {"alpha1": 10.127, "beta1": 5995.0, "alpha2": -595236.026, "beta2": 11640.052}
GHORBANI315 = {
    "y1": 101.934, "y2": 1.26, "y3": 1728.859, "y4": -0.0174,
    "z1": -1.667e5, "z2": 1.678, "z3": 2.981e3, "z4": 1.418e2,
}
POLY315_A = (
    "4.93685", "-0.0137525", "-0.0376565", "-0.00671547", "-0.000751183",
    "-4.90554e-05", "-2.02848e-06", "-5.08754e-08", "-6.93973e-10", "-3.92275e-12",
)
POLY315_B = (
    "-46.00981", "-0.475385", "0.172884", "0.029412", "0.00550807",
    "0.000508238", "2.42772e-05", "6.33498e-07", "8.63223e-09", "4.82313e-11",
)
CHI_315_V = 4e-3


def scalar_rapp_amp(x, g, vsat, p):
    return g * x / (1.0 + abs(g * x / vsat) ** (2 * p)) ** (1.0 / (2 * p))


def scalar_rapp_phase(x, a, b, q1, q2):
    return a * x**q1 / (1.0 + abs(x / b) ** q2)


def scalar_rapp_inverse(x, g, vsat, p):
    return x / (1.0 - (g * x / vsat) ** (2 * p)) ** (1.0 / (2 * p))


def scalar_saleh(x, alpha, beta, n=1, nu=1):
    return alpha * x**n / (1.0 + beta * x**2) ** nu


def scalar_ghorbani(x, c1, c2, c3, c4):
    return c1 * x**c2 / (1.0 + c3 * x**c2) + c4 * x


def exact_poly_eval(coeff_strings, x):
    """Exact rational Horner evaluation of decimal-string coefficients."""
    acc = Fraction(0)
    xf = Fraction(str(x))
    for c in reversed(coeff_strings):
        acc = acc * xf + Fraction(c)
    return float(acc)


def dbm_to_volts(p_dbm):
    return 10.0 ** ((p_dbm - 30.0) / 20.0)


def volts_to_dbm(rho):
    return 20.0 * math.log10(rho) + 30.0


def raised_cosine_tap(t, rolloff):
    """Closed-form raised-cosine impulse response at time t (symbol units)."""
    if abs(t) < 1e-12:
        return 1.0
    denom = 1.0 - (2.0 * rolloff * t) ** 2
    if abs(denom) < 1e-9:
        return (np.pi / 4.0) * np.sinc(1.0 / (2.0 * rolloff))
    return np.sinc(t) * math.cos(math.pi * rolloff * t) / denom


def qam_theory_ber(m, snr_db):
    """Exact bit error rate of Gray-mapped square M-QAM over AWGN.

    Enumerates the per-dimension PAM decision cells with reflected Gray
    labels; snr_db is Es/N0 with unit average symbol energy.
    """
    side = int(round(math.sqrt(m)))
    half_bits = int(math.log2(side))
    es_n0 = 10.0 ** (snr_db / 10.0)
    norm = math.sqrt(2.0 * (m - 1) / 3.0)
    sigma = math.sqrt(1.0 / (2.0 * es_n0))

    def b2g(b):
        return b ^ (b >> 1)

    def q(x):
        return 0.5 * math.erfc(x / math.sqrt(2.0))

    levels = [(2 * i - side + 1) / norm for i in range(side)]
    bounds = [(levels[i] + levels[i + 1]) / 2.0 for i in range(side - 1)]
    total = 0.0
    for i in range(side):
        for j in range(side):
            if i == j:
                continue
            p_hi = q((bounds[j - 1] - levels[i]) / sigma) if j > 0 else 1.0
            p_lo = q((bounds[j] - levels[i]) / sigma) if j < side - 1 else 0.0
            total += (p_hi - p_lo) * bin(b2g(i) ^ b2g(j)).count("1")
    return total / (side * half_bits)


def saleh_transformed_objective(x, z, n, nu):
    """The transformed LS objective the Saleh closed form minimizes."""
    w = (z / x**n) ** (-1.0 / nu) if nu != 1 else x**n / z

    def objective(alpha, beta):
        model = (1.0 + beta * x**2) / alpha ** (1.0 / nu)
        return float(np.sum((w - model) ** 2))

    return objective


def brute_force_saleh(x, z, n, nu, grid=41):
    """Grid search plus simplex refinement of the transformed objective.

    The search region is bracketed by an independent straight-line
    regression of w on x^2 (numpy polyfit), since the transform maps the
    model onto w = (1 + beta x^2) / alpha^(1/nu).
    """
    from thzpa.fitting import minimize_simplex

    objective = saleh_transformed_objective(x, z, n, nu)
    w = (z / x**n) ** (-1.0 / nu) if nu != 1 else x**n / z
    slope, intercept = np.polyfit(x**2, w, 1)
    a_ref = math.copysign(abs(intercept) ** (-float(nu)), intercept)
    b_ref = slope / intercept
    best = None
    for la in np.linspace(math.log(abs(a_ref)) - 1.5, math.log(abs(a_ref)) + 1.5, grid):
        for lb in np.linspace(math.log(abs(b_ref)) - 1.5, math.log(abs(b_ref)) + 1.5, grid):
            a = math.copysign(math.exp(la), a_ref)
            b = math.copysign(math.exp(lb), b_ref)
            val = objective(a, b)
            if best is None or val < best[0]:
                best = (val, a, b)

    sign_a, sign_b = math.copysign(1, best[1]), math.copysign(1, best[2])

    def simplex_objective(theta):
        return objective(sign_a * math.exp(theta[0]), sign_b * math.exp(theta[1]))

    res = minimize_simplex(
        simplex_objective,
        np.array([math.log(abs(best[1])), math.log(abs(best[2]))]),
        tolerance=1e-12,
        max_iter=4000,
    )
    return sign_a * math.exp(res.x[0]), sign_b * math.exp(res.x[1])
