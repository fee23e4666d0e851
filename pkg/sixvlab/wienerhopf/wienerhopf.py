"""
Half-line Wiener-Hopf equation T = 𝔢 + R * (1_{>=0} T) and the second
derivative of the free energy it encodes.

Fourier transforms use f̂(t) = ∫ f(x) e^{-itx} dx. Two independent routes
are provided: a Neumann series on a Nyström grid, and the explicit solution
T̂_↑(t) = α_+(-t) α(t_ζ) 𝔢̂(t) built from the Gamma-function factorization
of 1 - R̂.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import signal, special

from ..transfer.params import ModelParams
from ..utils.batch import GridRunner
from ..utils.errors import (
    ConvergenceError,
    InvariantViolationError,
    MethodDisagreementError,
)
from ..utils.logger import get_logger
from .gamma import log_gamma

logger = get_logger("sixvlab.wienerhopf")

ZETA_MAX = 2 * math.pi / 3
# Closed-form Fourier grid size
CLOSED_FORM_POINTS = 1 << 16


@dataclass
class WHParams:
    """
    Parameters of a Wiener-Hopf solve.

    Attributes:
        zeta: Anisotropy angle ζ ∈ [0, 2π/3]
        h: Grid spacing in x
        X: Domain cutoff, the solve runs on [0, X]
        T_max: Frequency band limit used when sampling R̂
        tol: Neumann stopping tolerance on the sup-norm change
        max_iter: Neumann iteration budget
    """

    zeta: float
    h: float = 0.01
    X: float = 40.0
    T_max: float = 200.0
    tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self):
        if not 0.0 <= self.zeta <= ZETA_MAX + 1e-12:
            raise ValueError(f"ζ must lie in [0, 2π/3], got {self.zeta}")
        if self.h <= 0:
            raise ValueError(f"Grid spacing must be positive, got {self.h}")
        if self.X < 20:
            raise ValueError(f"Domain cutoff X must be at least 20, got {self.X}")
        if self.T_max <= 0 or self.T_max > math.pi / self.h + 1e-9:
            raise ValueError(
                f"T_max={self.T_max} must be positive and at most the Nyquist "
                f"frequency π/h = {math.pi / self.h:.6g}"
            )
        n = round(self.X / self.h)
        if abs(n * self.h - self.X) > 1e-9 * self.X or n % 2:
            raise ValueError(
                f"X/h must be an even integer, got X={self.X}, h={self.h}"
            )
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be positive, got {self.max_iter}")

    @classmethod
    def from_c(cls, c: float, **kwargs) -> "WHParams":
        """Parameters for the weight c ∈ [1, 2]."""
        if not 1.0 <= c <= 2.0:
            raise ValueError(f"c must lie in [1, 2], got {c}")
        return cls(zeta=ModelParams(c).zeta, **kwargs)

    @property
    def n(self) -> int:
        """Number of grid intervals on [0, X]."""
        return round(self.X / self.h)

    @property
    def c(self) -> float:
        return math.sqrt(2.0 + 2.0 * math.cos(self.zeta))


class FMethod(Enum):
    CLOSED = "closed"
    NEUMANN = "neumann"
    RH = "rh"


@dataclass
class WHSolution:
    """
    Grid solution of the Wiener-Hopf equation.

    ``x`` is the grid, ``T`` the solution on it; ``R`` and ``e`` are the
    kernel and driver on the same grid when the method produced them.
    I1 = ∫_0^∞ T and I2 = ∫_0^∞ (𝔢/𝔢(0)) T.
    """

    params: WHParams
    method: FMethod
    x: np.ndarray
    T: np.ndarray
    e: np.ndarray
    I1: float
    I2: float
    R: np.ndarray | None = None
    residual: float = float("nan")
    iterations: int = 0
    tail_fraction: float = float("nan")
    extras: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.I2 / self.I1**2

    @property
    def expected_ratio(self) -> float:
        return math.pi**2 / (4 * (math.pi - self.params.zeta))

    @property
    def f_second(self) -> float:
        zeta = self.params.zeta
        return -2 * self.I2 / ((math.pi / (math.pi - zeta)) * self.I1) ** 2

    def to_row(self) -> dict:
        return {
            "zeta": self.params.zeta,
            "c": self.params.c,
            "method": self.method.value,
            "I1": self.I1,
            "I2": self.I2,
            "ratio": self.ratio,
            "f_second": self.f_second,
            "residual": self.residual,
        }


@dataclass
class FactorizationData:
    """
    Samples of α_+ on a real grid together with α(t_ζ).

    Attributes:
        zeta: Anisotropy angle
        t: Real sample points
        alpha_plus: α_+(t) at the sample points
        t_zeta: iπ/ζ (iπ when ζ = 0)
        alpha_t_zeta: α(t_ζ), real and positive
    """

    zeta: float
    t: np.ndarray
    alpha_plus: np.ndarray
    t_zeta: complex
    alpha_t_zeta: float

    @property
    def alpha_plus_0_squared(self) -> float:
        return float(abs(alpha_plus(0.0, self.zeta)) ** 2)

    def check(self, tol: float = 1e-8) -> None:
        """
        Raises:
            InvariantViolationError: If α_+(0)² != 2(π-ζ)/π
        """
        expected = 2 * (math.pi - self.zeta) / math.pi
        if abs(self.alpha_plus_0_squared - expected) > tol:
            raise InvariantViolationError(
                f"α_+(0)² = {self.alpha_plus_0_squared!r}, expected {expected!r}"
            )


def kernel_hat(t, zeta: float):
    """
    R̂(t).

    ζ = 0: e^{-|t|/2}/(2cosh(t/2)) = 1/(1 + e^{|t|}).
    ζ > 0: sinh((π-2ζ)t/2)/(2 sinh((π-ζ)t/2) cosh(ζt/2)), evaluated as
    (1 - tanh(ζt/2)/tanh((π-ζ)t/2))/2 with value (π-2ζ)/(2(π-ζ)) at t = 0.
    """
    t = np.asarray(t, dtype=np.float64)
    if zeta == 0:
        return special.expit(-np.abs(t))
    small = np.abs(t) < 1e-8
    safe = np.where(small, 1.0, t)
    ratio = np.tanh(zeta * safe / 2) / np.tanh((math.pi - zeta) * safe / 2)
    ratio = np.where(small, zeta / (math.pi - zeta), ratio)
    return 0.5 * (1.0 - ratio)


def driver(x, zeta: float):
    """𝔢(x): e^{-πx} at ζ = 0, (1/ζ) e^{-πx/ζ} for ζ > 0; zero for x < 0."""
    x = np.asarray(x, dtype=np.float64)
    scale = 1.0 if zeta == 0 else zeta
    values = np.exp(-math.pi * np.clip(x, 0, None) / scale) / scale
    return np.where(x >= 0, values, 0.0)


def driver_hat(t, zeta: float):
    """𝔢̂(t) = 1/(π + iζt), with ζ replaced by 1 at ζ = 0."""
    scale = 1.0 if zeta == 0 else zeta
    return 1.0 / (math.pi + 1j * scale * np.asarray(t, dtype=np.complex128))


def t_zeta(zeta: float) -> complex:
    """Pole of 𝔢̂ in the upper half-plane."""
    return 1j * math.pi / (zeta if zeta > 0 else 1.0)


def _zlogz(z: np.ndarray) -> np.ndarray:
    safe = np.where(z == 0, 1.0, z)
    return np.where(z == 0, 0.0, safe * np.log(safe))


def _log_alpha_upper(t: np.ndarray, zeta: float) -> np.ndarray:
    """log α(t) on the closed upper half-plane."""
    if zeta == 0:
        z = -1j * t / (2 * math.pi)
        return _zlogz(z) - z + 0.5 * math.log(2 * math.pi) - log_gamma(0.5 + z)
    p = zeta / math.pi
    q = 1.0 - p
    return (
        -1j * q * t / 2 * math.log(q)
        - 1j * p * t / 2 * math.log(p)
        + log_gamma(1 - 1j * t / 2)
        - log_gamma(1 - 1j * q * t / 2)
        + 0.5 * math.log(2 * (math.pi - zeta))
        - log_gamma(0.5 - 1j * p * t / 2)
    )


def alpha(t, zeta: float):
    """
    α(t) on ℂ: the Gamma-function formula on the closed upper half-plane and
    1/α(-t) below it.

    Raises:
        GammaPoleError: If a Gamma pole is hit
    """
    arr = np.atleast_1d(np.asarray(t, dtype=np.complex128))
    out = np.empty_like(arr)
    upper = arr.imag >= 0
    if np.any(upper):
        out[upper] = np.exp(_log_alpha_upper(arr[upper], zeta))
    if np.any(~upper):
        out[~upper] = np.exp(-_log_alpha_upper(-arr[~upper], zeta))
    return complex(out[0]) if np.ndim(t) == 0 else out


def alpha_plus(t, zeta: float):
    """
    α_+(t), the boundary value of α from the upper half-plane.

    Real t are evaluated as that limit; the closed form is continuous up to
    the real axis.
    """
    arr = np.asarray(t, dtype=np.complex128)
    if np.any(arr.imag < 0):
        raise ValueError("α_+ is defined on the closed upper half-plane")
    return alpha(t, zeta)


def alpha_at_t_zeta(zeta: float) -> float:
    return float(alpha(t_zeta(zeta), zeta).real)


def factorization_data(zeta: float, t: np.ndarray | None = None) -> FactorizationData:
    t = np.linspace(-20.0, 20.0, 401) if t is None else np.asarray(t, dtype=np.float64)
    data = FactorizationData(
        zeta=zeta,
        t=t,
        alpha_plus=np.asarray(alpha_plus(t, zeta)),
        t_zeta=t_zeta(zeta),
        alpha_t_zeta=alpha_at_t_zeta(zeta),
    )
    data.check()
    return data


def factorization_residual(t, zeta: float) -> float:
    """max |1/(α_+(-t) α_+(t)) - (1 - R̂(t))| over real samples t."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    lhs = 1.0 / (alpha_plus(-t, zeta) * alpha_plus(t, zeta))
    return float(np.abs(lhs - (1.0 - kernel_hat(t, zeta))).max())


def jump_residual(t, zeta: float, eps: float = 1e-10) -> float:
    """
    Check G_- - G_+ = α_+ 𝔢̂ on the real axis for
    G(t) = (α(t_ζ) - α(t) 1_{Im t > 0}) 𝔢̂(t), with one-sided limits taken at
    distance ``eps``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    a_tz = alpha_at_t_zeta(zeta)
    up = t + 1j * eps
    down = t - 1j * eps
    g_plus = (a_tz - alpha(up, zeta)) * driver_hat(up, zeta)
    g_minus = a_tz * driver_hat(down, zeta)
    target = alpha_plus(t, zeta) * driver_hat(t, zeta)
    return float(np.abs(g_minus - g_plus - target).max())


def nystrom_weights(n_points: int, h: float) -> np.ndarray:
    """
    Fourth-order extended closed quadrature weights
    (17, 59, 43, 49)/48 at both ends, 1 in between.
    """
    if n_points < 8:
        raise ValueError(f"Need at least 8 grid points, got {n_points}")
    w = np.ones(n_points)
    ends = np.array([17.0, 59.0, 43.0, 49.0]) / 48.0
    w[:4] = ends
    w[-4:] = ends[::-1]
    return w * h


def _fft_size(n: int) -> int:
    return 1 << math.ceil(math.log2(8 * n))


def kernel_samples(params: WHParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    R on the grid m·h, m = -2n..2n, by inverse FFT of band-limited R̂.

    Returns:
        (x, R, R_periodic) where R_periodic is the whole FFT period
    """
    n, h = params.n, params.h
    size = _fft_size(n)
    t = 2 * math.pi * np.fft.fftfreq(size, d=h)
    rhat = np.where(np.abs(t) <= params.T_max, kernel_hat(t, params.zeta), 0.0)
    periodic = np.fft.ifft(rhat).real / h
    m = np.arange(-2 * n, 2 * n + 1)
    return m * h, periodic[m % size], periodic


def kernel_mass_check(params: WHParams, tol: float = 1e-6) -> tuple[float, float]:
    """
    Constant sign and ∫|R| = |R̂(0)| over one FFT period.

    Returns:
        (∫|R|, |R̂(0)|)

    Raises:
        InvariantViolationError: If R changes sign or the masses disagree
    """
    _, _, periodic = kernel_samples(params)
    rhat0 = float(kernel_hat(0.0, params.zeta))
    sign = 1.0 if rhat0 >= 0 else -1.0
    scale = max(np.abs(periodic).max(), 1e-300)
    if np.min(sign * periodic) < -1e-10 * scale:
        raise InvariantViolationError(f"Kernel changes sign at ζ={params.zeta}")
    mass = float(np.abs(periodic).sum() * params.h)
    if abs(mass - abs(rhat0)) > tol or abs(rhat0) > 0.5 + tol:
        raise InvariantViolationError(
            f"Kernel mass {mass!r} vs |R̂(0)| = {abs(rhat0)!r} at ζ={params.zeta}"
        )
    return mass, abs(rhat0)


def _apply_kernel(R_full: np.ndarray, weighted: np.ndarray, n: int) -> np.ndarray:
    """(R * weighted)(x_i) for i = -n..n; ``weighted`` lives on [0, X]."""
    full = signal.fftconvolve(R_full, weighted)
    return full[n : 3 * n + 1]


def _zeta0_tail(x: np.ndarray, T: np.ndarray, X: float) -> tuple[float, float]:
    """
    Fit y² T(y) = A + B/y + C/y² on [X/8, X/2] and return (∫_{X/2}^∞ fit, A).
    """
    mask = (x >= X / 8) & (x <= X / 2)
    y = x[mask]
    C, B, A = np.polyfit(1.0 / y, y**2 * T[mask], 2)
    y0 = X / 2
    return A / y0 + B / (2 * y0**2) + C / (3 * y0**3), A


def solve_neumann(params: WHParams) -> WHSolution:
    """
    Neumann series T <- 𝔢 + R * (1_{>=0} T) on a Nyström grid.

    At ζ = 0 the kernel tails decay like x^{-2}; I1 then integrates the grid
    solution on [0, X/2] and adds the integral of a fitted
    A/y² + B/y³ + C/y⁴ tail beyond.

    Args:
        params: Solver parameters

    Returns:
        WHSolution on [-X, X]

    Raises:
        ConvergenceError: If the iteration does not settle in ``max_iter`` steps
    """
    n, h, zeta = params.n, params.h, params.zeta
    _, R_full, _ = kernel_samples(params)
    x = np.arange(-n, n + 1) * h
    half = x[n:]
    e = driver(half, zeta)
    w = nystrom_weights(n + 1, h)

    T = e.copy()
    iterations = 0
    try:
        for iterations in range(1, params.max_iter + 1):
            conv = _apply_kernel(R_full, w * T, n)
            new = e + conv[n:]
            change = float(np.abs(new - T).max())
            T = new
            if change < params.tol:
                break
        else:
            raise ConvergenceError(
                f"Neumann series did not converge in {params.max_iter} iterations "
                f"at ζ={zeta} (last change {change:.3e})"
            )
    except Exception as err:
        logger.error(f"Neumann solve failed: {err}")
        raise

    conv = _apply_kernel(R_full, w * T, n)
    residual = float(np.abs(T - conv[n:] - e).max())
    T_full = np.concatenate([conv[:n], T])

    e0 = float(driver(0.0, zeta))
    I2 = float(np.sum(w * (e / e0) * T))
    abs_mass = float(np.sum(w * np.abs(T)))
    mid = n // 2
    w_half = nystrom_weights(mid + 1, h)
    tail_mass = abs_mass - float(np.sum(w_half * np.abs(T[: mid + 1])))
    extras = {}
    if zeta == 0:
        tail, A = _zeta0_tail(half, T, params.X)
        I1 = float(np.sum(w_half * T[: mid + 1])) + tail
        extras = {"tail_correction": tail, "tail_coefficient": A}
    else:
        I1 = float(np.sum(w * T))

    tail_fraction = tail_mass / abs_mass if abs_mass > 0 else 0.0
    if zeta > 0 and tail_fraction > 1e-6:
        logger.warning(
            f"Tail mass beyond X/2 is {tail_fraction:.3e} of the total at ζ={zeta}; "
            f"increase X"
        )

    logger.info(
        f"Neumann ζ={zeta:.6g}: {iterations} iterations, residual {residual:.3e}, "
        f"I1={I1:.10g}, I2={I2:.10g}"
    )
    return WHSolution(
        params=params,
        method=FMethod.NEUMANN,
        x=x,
        T=T_full,
        e=driver(x, zeta),
        I1=I1,
        I2=I2,
        R=R_full[n : 3 * n + 1],
        residual=residual,
        iterations=iterations,
        tail_fraction=tail_fraction,
        extras=extras,
    )


def closed_form_integrals(zeta: float) -> tuple[float, float]:
    """I1 = α_+(0) α(t_ζ)/π and I2 = α(t_ζ)²/(2π)."""
    a_tz = alpha_at_t_zeta(zeta)
    a0 = float(alpha_plus(0.0, zeta).real)
    return a0 * a_tz / math.pi, a_tz**2 / (2 * math.pi)


def T_closed_form(params: WHParams) -> WHSolution:
    """
    T on [0, X] from T̂_↑(t) = α_+(-t) α(t_ζ) 𝔢̂(t).

    The pole part α(t_ζ)𝔢 is added analytically and only the remainder
    (α_+(-t) - 1) α(t_ζ) 𝔢̂(t), which decays like t^{-2}, goes through the
    inverse FFT.
    """
    n, h, zeta = params.n, params.h, params.zeta
    size = max(CLOSED_FORM_POINTS, _fft_size(n))
    t = 2 * math.pi * np.fft.fftfreq(size, d=h)
    a_tz = alpha_at_t_zeta(zeta)
    remainder = (alpha_plus(-t, zeta) - 1.0) * a_tz * driver_hat(t, zeta)
    smooth = np.fft.ifft(remainder).real / h

    x = np.arange(n + 1) * h
    e = driver(x, zeta)
    T = a_tz * e + smooth[: n + 1]
    I1, I2 = closed_form_integrals(zeta)

    w = nystrom_weights(n + 1, h)
    extras = {
        "I1_grid": float(np.sum(w * T)),
        "I2_grid": float(np.sum(w * (e / e[0]) * T)),
        "alpha_t_zeta": a_tz,
    }
    logger.info(f"Closed form ζ={zeta:.6g}: I1={I1:.10g}, I2={I2:.10g}")
    return WHSolution(
        params=params,
        method=FMethod.RH,
        x=x,
        T=T,
        e=e,
        I1=I1,
        I2=I2,
        extras=extras,
    )


def f_second_derivative(params: WHParams, method: FMethod | str = FMethod.CLOSED) -> float:
    """
    f''(0) by one of three routes.

    closed: -(π - ζ)/2 = -arcsin(c/2)
    neumann: -2 I2 / ((π/(π-ζ)) I1)² from the Neumann solution
    rh: the same expression with I1, I2 from the Gamma-function factorization
    """
    method = FMethod(method)
    if method is FMethod.CLOSED:
        return -(math.pi - params.zeta) / 2
    if method is FMethod.NEUMANN:
        return solve_neumann(params).f_second
    I1, I2 = closed_form_integrals(params.zeta)
    return -2 * I2 / ((math.pi / (math.pi - params.zeta)) * I1) ** 2


def compare_methods(params: WHParams) -> dict[str, float]:
    """
    Evaluate f''(0) by all three routes.

    Raises:
        MethodDisagreementError: If two routes differ by more than 1e-2
            relative (differences above 1e-3 are logged)
    """
    values = {m.value: f_second_derivative(params, m) for m in FMethod}
    ref = values[FMethod.CLOSED.value]
    worst = max(abs(v - ref) / abs(ref) for v in values.values())
    if worst > 1e-2:
        msg = f"f''(0) routes disagree at ζ={params.zeta}: {values}"
        logger.error(msg)
        raise MethodDisagreementError(msg)
    if worst > 1e-3:
        logger.warning(f"f''(0) routes differ by {worst:.2e} at ζ={params.zeta}")
    return values


def convergence_study(
    zetas, hs, Xs, T_max: float | None = None, workers: int = 1
) -> list[dict]:
    """
    Ratio error |I2/I1² - π²/(4(π-ζ))| of the Neumann solver over a grid of
    (ζ, h, X). Combinations that are not valid parameters are skipped.
    """
    runner = GridRunner(max_workers=workers)
    for zeta in zetas:
        for h in hs:
            for X in Xs:
                t_max = T_max if T_max is not None else min(200.0, math.pi / h)
                try:
                    params = WHParams(zeta=zeta, h=h, X=X, T_max=t_max)
                except ValueError as e:
                    logger.warning(f"Skipping ζ={zeta}, h={h}, X={X}: {e}")
                    continue
                runner.add_task(f"{zeta}:{h}:{X}", solve_neumann, params=params)

    rows = []
    for result in runner.execute():
        if not result.ok:
            logger.warning(f"Study point {result.task_id} failed: {result.error}")
            continue
        sol = result.value
        rows.append(
            {
                "zeta": sol.params.zeta,
                "h": sol.params.h,
                "X": sol.params.X,
                "ratio": sol.ratio,
                "ratio_error": abs(sol.ratio - sol.expected_ratio),
            }
        )
    return rows
