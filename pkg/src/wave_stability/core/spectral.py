"""
Fourier tools on uniform periodic grids: collocation differentiation
matrices, trapezoid quadrature, running integrals and spectral derivatives.

All routines assume samples f(x_j) at x_j = start + j * period / n,
j = 0..n-1, of a smooth periodic function.
"""

import numpy as np
from scipy.linalg import toeplitz

from wave_stability.core.errors import DomainError


def check_grid_size(n: int, minimum: int = 2) -> int:
    n = int(n)
    if n < minimum or n % 2:
        raise DomainError(
            f"Grid size must be even and at least {minimum}, got n={n}.", {"n": n}
        )
    return n


def periodic_grid(n: int, period: float, start: float = 0.0) -> np.ndarray:
    return start + period * np.arange(n) / n


def wavenumbers(n: int, period: float) -> np.ndarray:
    """Angular wavenumbers in FFT order."""
    return 2.0 * np.pi / period * np.fft.fftfreq(n, d=1.0 / n)


def fourier_d1(n: int, period: float) -> np.ndarray:
    """
    First-derivative collocation matrix for even n.

    Real antisymmetric Toeplitz matrix; annihilates constants and the
    sawtooth (Nyquist) mode.
    """
    n = check_grid_size(n)
    h = 2.0 * np.pi / n
    j = np.arange(1, n)
    half = n // 2
    topc = 1.0 / np.tan(np.arange(1, half + 1) * h / 2.0)
    temp = np.concatenate((topc, -np.flip(topc[0 : half - 1])))
    col = np.concatenate(([0.0], 0.5 * ((-1.0) ** j) * temp))
    return 2.0 * np.pi / period * toeplitz(col, r=-col)


def fourier_d2(n: int, period: float) -> np.ndarray:
    """Second-derivative collocation matrix for even n (real symmetric Toeplitz)."""
    n = check_grid_size(n)
    h = 2.0 * np.pi / n
    j = np.arange(1, n)
    col = np.concatenate(
        (
            [-np.pi**2 / (3.0 * h**2) - 1.0 / 6.0],
            -0.5 * ((-1.0) ** j) / np.sin(j * h / 2.0) ** 2,
        )
    )
    return (2.0 * np.pi / period) ** 2 * toeplitz(col)


def trapezoid(values: np.ndarray, period: float) -> float:
    """Periodic trapezoid rule over one full period."""
    return float(period * np.mean(values, axis=-1))


def inner(u: np.ndarray, v: np.ndarray, period: float) -> complex:
    """Period-weighted discrete inner product <u, v> = h * sum(conj(u) v)."""
    h = period / np.shape(u)[-1]
    value = h * np.vdot(u, v)
    return complex(value) if np.iscomplexobj(value) else float(value)


def spectral_derivative(values: np.ndarray, period: float, order: int = 1) -> np.ndarray:
    """Derivative of the trigonometric interpolant, Nyquist mode dropped for odd orders."""
    n = len(values)
    omega = wavenumbers(n, period)
    factor = (1j * omega) ** order
    if order % 2:
        factor[n // 2] = 0.0
    return np.real(np.fft.ifft(factor * np.fft.fft(values)))


def _antiderivative_coefficients(values: np.ndarray, period: float):
    n = len(values)
    coef = np.fft.fft(values) / n
    omega = wavenumbers(n, period)
    anti = np.zeros(n, dtype=complex)
    nonzero = omega != 0.0
    anti[nonzero] = coef[nonzero] / (1j * omega[nonzero])
    anti[n // 2] = 0.0
    return coef[0].real, anti, omega


def _evaluate_series(coef: np.ndarray, omega: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    phases = np.exp(1j * np.multiply.outer(offsets, omega))
    return np.real(phases @ coef)


def running_integral(
    values: np.ndarray,
    period: float,
    start: float = 0.0,
    origin: float = 0.0,
    points: np.ndarray = None,
) -> np.ndarray:
    """
    Running integral F(x) = int_origin^x f of a periodic f.

    The zero-mean part is integrated in Fourier space; the mean contributes
    the explicit linear term mean * (x - origin).

    Args:
        values (np.ndarray): Samples of f on the grid starting at `start`.
        period (float): Period of f.
        start (float): First grid point.
        origin (float): Lower integration limit.
        points (np.ndarray): Evaluation points; the grid itself if omitted.

    Returns:
        np.ndarray: F at the grid or at `points`.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    mean, anti, omega = _antiderivative_coefficients(values, period)
    base = _evaluate_series(anti, omega, np.array([origin - start]))[0]
    if points is None:
        x = periodic_grid(n, period, start)
        periodic_part = np.real(np.fft.ifft(anti * n))
    else:
        x = np.asarray(points, dtype=float)
        periodic_part = _evaluate_series(anti, omega, x - start)
    return mean * (x - origin) + periodic_part - base


def first_moment(values: np.ndarray, period: float, start: float = 0.0) -> float:
    """int_start^(start+period) x f(x) dx for periodic f, spectrally accurate."""
    values = np.asarray(values, dtype=float)
    mean, anti, _ = _antiderivative_coefficients(values, period)
    end = start + period
    return float(0.5 * mean * (end**2 - start**2) + period * np.real(np.sum(anti)))


def interpolate(
    values: np.ndarray, period: float, points: np.ndarray, start: float = 0.0
) -> np.ndarray:
    """Evaluate the trigonometric interpolant of periodic samples at arbitrary points."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    coef = np.fft.fft(values) / n
    coef[n // 2] = 0.5 * coef[n // 2]
    omega = wavenumbers(n, period)
    offsets = np.asarray(points, dtype=float) - start
    result = _evaluate_series(coef, omega, offsets)
    # split Nyquist symmetrically between +/- n/2 so the interpolant stays real
    result += np.real(coef[n // 2] * np.exp(-1j * omega[n // 2] * offsets))
    return result
