"""
Complex Gamma function by the Lanczos approximation (g = 7, 9 terms).

The log form is used throughout so that ratios of Gamma values far up the
imaginary axis neither underflow nor overflow.
"""

import numpy as np

from ..utils.errors import GammaPoleError

LANCZOS_G = 7
LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * np.log(2 * np.pi)


def _check_poles(z: np.ndarray) -> None:
    on_axis = (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))
    if np.any(on_axis):
        raise GammaPoleError(complex(z[on_axis].flat[0]))


def _log_gamma_right(z: np.ndarray) -> np.ndarray:
    """Lanczos log Γ(z) for Re z >= 1/2."""
    w = z - 1
    series = np.full_like(w, LANCZOS_COEFFS[0])
    for i, p in enumerate(LANCZOS_COEFFS[1:], start=1):
        series = series + p / (w + i)
    t = w + LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (w + 0.5) * np.log(t) - t + np.log(series)


def log_gamma(z):
    """
    log Γ(z) for complex z, up to a multiple of 2πi.

    Uses the reflection Γ(z) Γ(1 - z) = π / sin(πz) for Re z < 1/2.

    Args:
        z: Scalar or array

    Returns:
        Complex scalar or array

    Raises:
        GammaPoleError: If z is a nonpositive integer
    """
    arr = np.asarray(z, dtype=np.complex128)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    _check_poles(arr)

    out = np.empty_like(arr)
    right = arr.real >= 0.5
    out[right] = _log_gamma_right(arr[right])
    if np.any(~right):
        zl = arr[~right]
        out[~right] = (
            np.log(np.pi) - np.log(np.sin(np.pi * zl)) - _log_gamma_right(1 - zl)
        )
    return complex(out[0]) if scalar else out


def gamma(z):
    """Γ(z) for complex z (real input still returns complex values)."""
    return np.exp(log_gamma(z))
