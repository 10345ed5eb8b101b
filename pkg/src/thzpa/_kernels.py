"""Elementwise hot kernels with a numba fast path and a pure-numpy fallback.

Every kernel exists twice: a vectorized numpy implementation (suffix
``_np``) and a numba ``@njit`` loop compiled on first use. The active
backend is chosen lazily so that importing the package never pays
numba's import or compile cost. Set ``THZPA_NO_NUMBA=1`` to force the
numpy path (the same fallback engages automatically when numba is not
installed).

All kernels take and return contiguous float64 arrays and are pure
functions, so the two paths are interchangeable up to floating-point
rounding in the last ulps.
"""

import os

import numpy as np

ENV_FLAG = "THZPA_NO_NUMBA"

_KERNEL_NAMES = (
    "rapp_amp",
    "rapp_phase",
    "rapp_inverse_amp",
    "saleh_general",
    "ghorbani",
    "horner",
)


def numba_disabled_by_env():
    return os.environ.get(ENV_FLAG, "").strip().lower() in ("1", "true", "yes")


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------

def rapp_amp_np(rho, g, vsat, p):
    # Split at u = 1 keeps u**(2p) from overflowing deep in saturation.
    u = g * rho / vsat
    two_p = 2.0 * p
    inv_2p = 1.0 / two_p
    lo = u < 1.0
    out = np.empty_like(u)
    out[lo] = vsat * u[lo] / (1.0 + u[lo] ** two_p) ** inv_2p
    hi = ~lo
    out[hi] = vsat / (1.0 + u[hi] ** (-two_p)) ** inv_2p
    return out


def rapp_phase_np(rho, a, b, q1, q2):
    return a * rho ** q1 / (1.0 + (rho / b) ** q2)


def rapp_inverse_amp_np(rho, g, vsat, p):
    # Valid for g*rho < vsat; callers clip beforehand.
    two_p = 2.0 * p
    return rho / (1.0 - (g * rho / vsat) ** two_p) ** (1.0 / two_p)


def saleh_general_np(rho, alpha, beta, n, nu):
    return alpha * rho ** n / (1.0 + beta * rho ** 2) ** nu


def ghorbani_np(rho, c1, c2, c3, c4):
    t = rho ** c2
    return c1 * t / (1.0 + c3 * t) + c4 * rho


def horner_np(rho, coeffs):
    """Evaluate sum_k coeffs[k] * rho**k, coefficients in ascending order."""
    out = np.full_like(rho, coeffs[-1])
    for c in coeffs[-2::-1]:
        out = out * rho + c
    return out


_NUMPY_BACKEND = {
    "rapp_amp": rapp_amp_np,
    "rapp_phase": rapp_phase_np,
    "rapp_inverse_amp": rapp_inverse_amp_np,
    "saleh_general": saleh_general_np,
    "ghorbani": ghorbani_np,
    "horner": horner_np,
}


# ---------------------------------------------------------------------------
# numba loop implementations (built on demand)
# ---------------------------------------------------------------------------

def build_numba_backend():
    """Compile and return the numba kernel table. Raises ImportError without numba."""
    from numba import njit

    @njit(cache=True)
    def rapp_amp_nb(rho, g, vsat, p):
        out = np.empty_like(rho)
        two_p = 2.0 * p
        inv_2p = 1.0 / two_p
        for i in range(rho.shape[0]):
            u = g * rho[i] / vsat
            if u < 1.0:
                out[i] = vsat * u / (1.0 + u ** two_p) ** inv_2p
            else:
                out[i] = vsat / (1.0 + u ** (-two_p)) ** inv_2p
        return out

    @njit(cache=True)
    def rapp_phase_nb(rho, a, b, q1, q2):
        out = np.empty_like(rho)
        for i in range(rho.shape[0]):
            out[i] = a * rho[i] ** q1 / (1.0 + (rho[i] / b) ** q2)
        return out

    @njit(cache=True)
    def rapp_inverse_amp_nb(rho, g, vsat, p):
        out = np.empty_like(rho)
        two_p = 2.0 * p
        inv_2p = 1.0 / two_p
        for i in range(rho.shape[0]):
            out[i] = rho[i] / (1.0 - (g * rho[i] / vsat) ** two_p) ** inv_2p
        return out

    @njit(cache=True)
    def saleh_general_nb(rho, alpha, beta, n, nu):
        out = np.empty_like(rho)
        for i in range(rho.shape[0]):
            out[i] = alpha * rho[i] ** n / (1.0 + beta * rho[i] ** 2) ** nu
        return out

    @njit(cache=True)
    def ghorbani_nb(rho, c1, c2, c3, c4):
        out = np.empty_like(rho)
        for i in range(rho.shape[0]):
            t = rho[i] ** c2
            out[i] = c1 * t / (1.0 + c3 * t) + c4 * rho[i]
        return out

    @njit(cache=True)
    def horner_nb(rho, coeffs):
        out = np.empty_like(rho)
        last = coeffs.shape[0] - 1
        for i in range(rho.shape[0]):
            acc = coeffs[last]
            for k in range(last - 1, -1, -1):
                acc = acc * rho[i] + coeffs[k]
            out[i] = acc
        return out

    return {
        "rapp_amp": rapp_amp_nb,
        "rapp_phase": rapp_phase_nb,
        "rapp_inverse_amp": rapp_inverse_amp_nb,
        "saleh_general": saleh_general_nb,
        "ghorbani": ghorbani_nb,
        "horner": horner_nb,
    }


_backend = None
_backend_name = None


def get_backend():
    """Resolve the active kernel table (numba if available and not disabled)."""
    global _backend, _backend_name
    if _backend is None:
        if numba_disabled_by_env():
            _backend, _backend_name = _NUMPY_BACKEND, "numpy"
        else:
            try:
                _backend, _backend_name = build_numba_backend(), "numba"
            except ImportError:
                _backend, _backend_name = _NUMPY_BACKEND, "numpy"
    return _backend


def backend_name():
    get_backend()
    return _backend_name


def numpy_backend():
    return _NUMPY_BACKEND


def dispatch(name, rho, *args):
    """Run kernel `name` on scalar or array input.

    Scalars always go through the numpy path: the work is trivial and it
    keeps scalar evaluation free of any JIT warm-up.
    """
    rho = np.asarray(rho, dtype=np.float64)
    if rho.ndim == 0:
        return float(_NUMPY_BACKEND[name](rho.reshape(1), *args)[0])
    return get_backend()[name](np.ascontiguousarray(rho), *args)
