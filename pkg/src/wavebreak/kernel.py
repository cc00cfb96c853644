"""The Whitham kernel K, its bound constants, and real-space convolutions.

``K`` is the inverse Fourier transform of the water-wave phase speed
``sqrt(tanh k / k)``.  It is even, positive, decreasing on ``x > 0``, blows up
like ``1/sqrt(2 pi x)`` at the origin and decays exponentially at infinity.

Two independent evaluations are provided:

* :func:`kernel_ww` integrates the symbol against ``cos(x k)``.  The symbol is
  split at ``k = split`` into ``k**-1/2`` (integrated in closed form through
  Fresnel integrals) and an exponentially small remainder.
* :func:`kernel_ww_profile` integrates the non-oscillatory profile
  ``f0(z) - 1`` against ``sin(x z) z**-3/2``, which converges for the same
  reason the small-``x`` asymptotics hold.

The convolution operators act on periodic fields by quadrature in real space
and are checked against the Fourier multipliers they represent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicSpline

from .errors import InsufficientData, InvalidArgument, QuadratureFailure
from .grid import Field, PeriodicGrid
from .symbols import DispersionSymbol

SQRT_2PI = math.sqrt(2.0 * math.pi)
_WHITHAM = DispersionSymbol.whitham()


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the oscillatory kernel integrals.

    ``tol`` bounds the combined absolute error estimate of one kernel value;
    the symbol is split at ``split`` and the remainder beyond ``k_upper`` is
    below double precision and dropped.
    """

    tol: float = 1e-10
    split: float = 10.0
    k_upper: float = 60.0
    limit: int = 400

    def __post_init__(self):
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise InvalidArgument("tol must be positive")
        if not 1.0 <= self.split < self.k_upper:
            raise InvalidArgument("need 1 <= split < k_upper")
        if self.limit < 50:
            raise InvalidArgument("limit must be >= 50")


DEFAULT_QUAD = QuadratureSpec()


def _c(k):
    return float(_WHITHAM(k))


def _quad(func, a, b, quad: QuadratureSpec, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(func, a, b, epsabs=quad.tol * 1e-2, epsrel=1e-12,
                                  limit=quad.limit, **kw)
    return val, err


def _check_x(x):
    x = float(x)
    if not (math.isfinite(x) and x > 0.0):
        raise InvalidArgument(f"kernel needs x > 0, got {x!r}")
    return x


def kernel_ww(x: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """K(x) for x > 0 by split Fourier quadrature."""
    x = _check_x(x)
    s = quad.split
    low, e1 = _quad(_c, 0.0, s, quad, weight="cos", wvar=x)
    _, fc = special.fresnel(math.sqrt(2.0 * s * x / math.pi))
    # integral of k**-1/2 cos(xk) over (s, inf)
    tail = math.sqrt(math.pi / (2.0 * x)) * (1.0 - 2.0 * fc)
    corr, e2 = _quad(lambda k: _c(k) - k ** -0.5, s, quad.k_upper, quad, weight="cos", wvar=x)
    err = (e1 + e2) / math.pi
    if err > quad.tol:
        raise QuadratureFailure(f"K({x:g}) error estimate {err:.2e} above tol {quad.tol:g}", err)
    return (low + tail + corr) / math.pi


def kernel_ww_derivative(x: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """K'(x) for x > 0; integrand ``-k c(k) sin(xk)`` with the same split."""
    x = _check_x(x)
    s = quad.split
    low, e1 = _quad(lambda k: k * _c(k), 0.0, s, quad, weight="sin", wvar=x)
    _, fc = special.fresnel(math.sqrt(2.0 * s * x / math.pi))
    # d/dx of the closed-form tail above
    tail = (-0.5 * math.sqrt(math.pi / 2.0) * x ** -1.5 * (1.0 - 2.0 * fc)
            - math.sqrt(s) * math.cos(s * x) / x)
    corr, e2 = _quad(lambda k: k * (_c(k) - k ** -0.5), s, quad.k_upper, quad, weight="sin", wvar=x)
    err = (e1 + e2) / math.pi
    if err > quad.tol * max(1.0, 1.0 / x):
        raise QuadratureFailure(f"K'({x:g}) error estimate {err:.2e} above tol", err)
    return (tail - low - corr) / math.pi


def f0(z):
    """``(1 - 2z/sinh 2z) sqrt(tanh z)``; behaves like ``(2/3) z**2.5`` at 0."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise InvalidArgument("f0 needs z >= 0")
    small = z < 1e-3
    zs = np.where(small, 1.0, np.minimum(z, 300.0))
    ratio = np.where(z > 300.0, 0.0, 2.0 * zs / np.sinh(2.0 * zs))
    big = (1.0 - ratio) * np.sqrt(np.tanh(np.where(small, 1.0, z)))
    z2 = z * z
    series = z ** 2.5 * (2.0 / 3.0 - 19.0 / 45.0 * z2 + 55.0 / 252.0 * z2 * z2)
    out = np.where(small, series, big)
    return out if out.ndim else float(out)


def _f0_prime(z):
    zs = np.minimum(z, 300.0)
    sh = np.sinh(2.0 * zs)
    g = 1.0 - 2.0 * zs / sh
    gp = (4.0 * zs / np.tanh(2.0 * zs) - 2.0) / sh
    t = np.tanh(z)
    return gp * np.sqrt(t) + g / (2.0 * np.sqrt(t) * np.cosh(zs) ** 2)


def f1(z):
    """``sqrt(z) d/dz (sqrt(z) f0(z)) = f0/2 + z f0'``; tends to 1/2."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise InvalidArgument("f1 needs z >= 0")
    small = z < 1e-3
    zs = np.where(small, 1.0, z)
    big = 0.5 * f0(zs) + zs * _f0_prime(zs)
    z2 = z * z
    series = z ** 2.5 * (2.0 - 19.0 / 9.0 * z2 + 55.0 / 36.0 * z2 * z2)
    out = np.where(small, series, big)
    return out if out.ndim else float(out)


def _profile_integral(x, prof, limit_value, z_max=40.0):
    # integral of sin(x z) z**-3/2 (prof(z) - limit) dz with z = s**2
    def g(s):
        if s == 0.0:
            return -2.0 * x * limit_value
        z = s * s
        return 2.0 * math.sin(x * z) * (float(prof(z)) - limit_value) / z
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(g, 0.0, math.sqrt(z_max), limit=400, epsabs=1e-15, epsrel=1e-12)
    return val


def kernel_ww_profile(x: float) -> float:
    """K(x) from the profile integral of ``f0``; independent of :func:`kernel_ww`."""
    x = _check_x(x)
    v = _profile_integral(x, f0, 1.0)
    return (1.0 + v / (SQRT_2PI * math.sqrt(x))) / (SQRT_2PI * math.sqrt(x))


def kernel_ww_derivative_profile(x: float) -> float:
    """K'(x) from the profile integral of ``f1``."""
    x = _check_x(x)
    v = _profile_integral(x, f1, 0.5)
    return -(0.5 + v / (SQRT_2PI * math.sqrt(x))) / (SQRT_2PI * x ** 1.5)


def sine_integral_check(quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Integral of ``sin z * z**-1.5`` over (0, inf); exact value sqrt(2 pi).

    The piece on (0, 1) is regularized by ``z = s**2``; the infinite tail uses
    QUADPACK's Fourier-integral extrapolation.
    """
    head, e1 = integrate.quad(lambda s: 2.0 * math.sin(s * s) / (s * s) if s > 0 else 2.0,
                              0.0, 1.0, epsabs=1e-15, epsrel=1e-13)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            tail, e2 = integrate.quad(lambda z: z ** -1.5, 1.0, np.inf, weight="sin", wvar=1.0,
                                      epsabs=1e-12, limlst=100)
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(f"oscillatory tail did not converge: {exc}") from exc
    if e1 + e2 > 1e-8:
        raise QuadratureFailure(f"sine integral error estimate {e1 + e2:.2e}", e1 + e2)
    return head + tail


def sine_integral_truncated(upper: float = 1e3) -> float:
    """Same integral cut off at ``upper`` with no tail acceleration."""
    if not upper > 1.0:
        raise InvalidArgument("upper must exceed 1")
    head, _ = integrate.quad(lambda s: 2.0 * math.sin(s * s) / (s * s) if s > 0 else 2.0,
                             0.0, 1.0, epsabs=1e-15, epsrel=1e-13)
    body, _ = integrate.quad(lambda z: z ** -1.5, 1.0, upper, weight="sin", wvar=1.0,
                             epsabs=1e-15, limit=20000)
    return head + body


def kernel_mass(quad: QuadratureSpec = DEFAULT_QUAD, x_max: float = 49.0) -> float:
    """Integral of K over the line, using ``x = s**2`` to remove the singularity."""
    val, _ = integrate.quad(lambda s: 2.0 * s * kernel_ww(s * s, quad) if s > 0 else 2.0 / SQRT_2PI,
                            0.0, math.sqrt(x_max), limit=200, epsabs=1e-10)
    return 2.0 * val


# ---------------------------------------------------------------- tables


@dataclass(frozen=True)
class KernelTable:
    """Sampled K and K' with the fitted bound constants.

    ``k0`` and ``k_inf`` include the 10% safety margin; ``k0_raw`` and
    ``k_inf_raw`` are the unpadded suprema and integrals.
    """

    xs: np.ndarray
    k_vals: np.ndarray
    kp_vals: np.ndarray
    k0: float = math.nan
    k_inf: float = math.nan
    delta0: float = 0.5
    k0_raw: float = math.nan
    k_inf_raw: float = math.nan
    quad: QuadratureSpec = DEFAULT_QUAD
    _spline: Optional[CubicSpline] = dc_field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for name in ("xs", "k_vals", "kp_vals"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.xs.ndim == 1 and self.xs.shape == self.k_vals.shape == self.kp_vals.shape):
            raise InvalidArgument("xs, k_vals and kp_vals must be 1-d of equal length")
        if self.xs.size < 2 or np.any(np.diff(self.xs) <= 0) or self.xs[0] <= 0:
            raise InvalidArgument("xs must be positive and strictly increasing")
        if not 0.0 < self.delta0 < 1.0:
            raise InvalidArgument("delta0 must lie in (0, 1)")
        if np.all(self.k_vals > 0):
            object.__setattr__(self, "_spline", CubicSpline(np.log(self.xs), np.log(self.k_vals)))

    @property
    def x_max(self) -> float:
        return float(self.xs[-1])

    def evaluate(self, y) -> np.ndarray:
        """K(|y|) from the table.

        Below the first node the leading asymptote ``1/sqrt(2 pi x)`` is used;
        past the last node log K is continued linearly in x (exponential decay).
        """
        if self._spline is None:
            raise InsufficientData("table has non-positive K values")
        x = np.abs(np.asarray(y, dtype=float))
        out = np.empty_like(x)
        lo = x < self.xs[0]
        hi = x > self.xs[-1]
        mid = ~(lo | hi)
        out[lo] = 1.0 / np.sqrt(2.0 * math.pi * np.maximum(x[lo], 1e-300))
        out[mid] = np.exp(self._spline(np.log(x[mid])))
        rate = math.log(self.k_vals[-1] / self.k_vals[-2]) / (self.xs[-1] - self.xs[-2])
        out[hi] = self.k_vals[-1] * np.exp(rate * (x[hi] - self.xs[-1]))
        return out

    def asymptotic_ratio(self) -> np.ndarray:
        return np.sqrt(2.0 * math.pi * self.xs) * self.k_vals

    def derivative_ratio(self) -> np.ndarray:
        return np.sqrt(2.0 * math.pi * self.xs ** 3) * self.kp_vals


def fit_bound_constants(table: KernelTable, delta0: Optional[float] = None, margin: float = 0.1):
    """Constants ``(k0, k_inf, delta0)`` with a safety margin.

    ``k0`` bounds both ``sqrt(x) K(x)`` and ``x**1.5 |K'(x)|`` on the sampled
    part of ``(0, delta0)`` and at the ``x -> 0`` limit ``1/sqrt(2 pi)``.
    ``k_inf`` bounds the integral of ``|K'|`` over ``(delta0, inf)``; the part
    past the last node equals ``K(x_max)`` because K decreases to 0.

    Returns ``(k0, k_inf, delta0, k0_raw, k_inf_raw)``.
    """
    d0 = table.delta0 if delta0 is None else float(delta0)
    if not 0.0 < d0 < 1.0:
        raise InvalidArgument("delta0 must lie in (0, 1)")
    xs, kv, kp = table.xs, table.k_vals, table.kp_vals
    if xs[0] > 1e-4 * (1 + 1e-9) or xs[-1] < 10.0 * (1 - 1e-9):
        raise InsufficientData(f"table spans [{xs[0]:g}, {xs[-1]:g}], need at least [1e-4, 10]")
    near = xs < d0
    if near.sum() < 8 or (~near).sum() < 4:
        raise InsufficientData("too few samples on one side of delta0")
    sup_k = float(np.max(np.sqrt(xs[near]) * kv[near]))
    sup_kp = float(np.max(xs[near] ** 1.5 * np.abs(kp[near])))
    k0_raw = max(sup_k, sup_kp, 1.0 / SQRT_2PI)

    far_x = xs[~near]
    far_kp = np.abs(kp[~near])
    # linear interpolation of |K'| back to delta0 closes the first gap
    j = int(np.argmax(~near))
    kp_d0 = np.interp(d0, xs[j - 1:j + 1], np.abs(kp[j - 1:j + 1])) if j > 0 else far_kp[0]
    x_all = np.concatenate([[d0], far_x])
    kp_all = np.concatenate([[kp_d0], far_kp])
    k_inf_raw = float(np.trapezoid(kp_all, x_all) + max(kv[-1], 0.0))
    return (1.0 + margin) * k0_raw, (1.0 + margin) * k_inf_raw, d0, k0_raw, k_inf_raw


def build_kernel_table(x_min: float = 1e-4, x_max: float = 10.0, points: int = 200,
                       quad: QuadratureSpec = DEFAULT_QUAD, delta0: float = 0.5,
                       fit: bool = True) -> KernelTable:
    """Tabulate K and K' on log-spaced abscissae and fit the bound constants."""
    if not (0 < x_min < x_max) or points < 2:
        raise InvalidArgument("need 0 < x_min < x_max and points >= 2")
    xs = np.geomspace(x_min, x_max, points)
    kv = np.array([kernel_ww(x, quad) for x in xs])
    kp = np.array([kernel_ww_derivative(x, quad) for x in xs])
    table = KernelTable(xs, kv, kp, delta0=delta0, quad=quad)
    if not fit:
        return table
    k0, k_inf, d0, k0_raw, k_inf_raw = fit_bound_constants(table, delta0)
    return KernelTable(xs, kv, kp, k0, k_inf, d0, k0_raw, k_inf_raw, quad)


@lru_cache(maxsize=4)
def default_kernel_table(points: int = 200) -> KernelTable:
    return build_kernel_table(points=points)


# ----------------------------------------------------------- convolutions


def _lagrange_weights(frac):
    """Quintic Lagrange weights on offsets -2..3 for points ``frac`` in [0, 1)."""
    nodes = np.arange(-2, 4, dtype=float)
    w = np.ones((frac.size, 6))
    for a in range(6):
        for b in range(6):
            if a != b:
                w[:, a] *= (frac - nodes[b]) / (nodes[a] - nodes[b])
    return w


def _spread(y, wts, dx, n):
    """Stencil c with ``sum_j c_j f(x + j dx) ~ sum_i wts_i f(x + y_i)``."""
    s = y / dx
    base = np.floor(s)
    w = _lagrange_weights(s - base) * wts[:, None]
    idx = (base.astype(np.int64)[:, None] + np.arange(-2, 4)[None, :]) % n
    return np.bincount(idx.ravel(), weights=w.ravel(), minlength=n)


def _correlate(values, stencil):
    """``out_i = sum_j stencil_j values_{i+j}`` on a periodic grid."""
    return np.fft.irfft(np.fft.rfft(values) * np.conj(np.fft.rfft(stencil)), values.size)


def _far_nodes(lo, hi, width, order=8):
    """Gauss-Legendre nodes on consecutive panels of about ``width`` covering [lo, hi]."""
    panels = max(1, int(math.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, panels + 1)
    t, w = np.polynomial.legendre.leggauss(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    return (mid[:, None] + half[:, None] * t[None, :]).ravel(), (half[:, None] * w[None, :]).ravel()


def _jacobi_nodes(delta, power, order=12):
    """Nodes and weights for ``int_0^delta y**-power g(y) dy``."""
    t, w = special.roots_jacobi(order, 0.0, -power)
    y = 0.5 * delta * (1.0 + t)
    return y, w * (0.5 * delta) ** (1.0 - power)


def _periodized_power(y, alpha, period, skip_center):
    """Sum over images of ``sgn(y)|y|**-(1+alpha)`` for y in (0, period/2]."""
    s = 1.0 + alpha
    a = y / period
    first = special.zeta(s, 1.0 + a) if skip_center else special.zeta(s, a)
    return period ** -s * (first - special.zeta(s, 1.0 - a))


def _check_fractional(u: Field, alpha, delta):
    if not 0.0 < alpha < 1.0:
        raise InvalidArgument(f"alpha out of range: {alpha} not in (0, 1)")
    if delta is None:
        delta = u.grid.dx
    if not 0.0 < delta < 0.5 * u.grid.period:
        raise InvalidArgument("delta must lie in (0, period/2)")
    return float(alpha), float(delta)


def singular_integral(u: Field, alpha: float, delta: Optional[float] = None) -> Field:
    """Raw integral of ``sgn(y)|y|**-(1+alpha) (u(x) - u(x-y))`` over the line.

    Within ``|y| < delta`` one integration by parts moves the singularity onto
    ``|y|**-alpha u'``; the rest uses the image-summed kernel (Hurwitz zeta).
    """
    alpha, delta = _check_fractional(u, alpha, delta)
    grid = u.grid
    n, dx, period = grid.n_points, grid.dx, grid.period
    half = 0.5 * period

    # far part: odd weight W on (delta, half) against u(x+y) - u(x-y)
    yf, wf = _far_nodes(delta, half, dx)
    kf = _periodized_power(yf, alpha, period, skip_center=False)
    # near part remainder of the images inside |y| < delta
    yn, wn = _far_nodes(0.0, delta, dx)
    kn = _periodized_power(yn, alpha, period, skip_center=True)
    y_odd = np.concatenate([yf, yn])
    w_odd = np.concatenate([wf * kf, wn * kn])
    st_u = _spread(y_odd, w_odd, dx, n) - _spread(-y_odd, w_odd, dx, n)
    # boundary term of the integration by parts
    st_u = st_u - (delta ** -alpha / alpha) * (_spread(np.array([delta]), np.ones(1), dx, n)
                                                - _spread(np.array([-delta]), np.ones(1), dx, n))
    # singular cell against u'
    yj, wj = _jacobi_nodes(delta, alpha)
    st_du = (_spread(yj, wj, dx, n) + _spread(-yj, wj, dx, n)) / alpha

    du = u.derivative(1).values
    out = _correlate(u.values, st_u) + _correlate(du, st_du)
    return Field(grid, out)


@lru_cache(maxsize=64)
def fractional_normalization(alpha: float) -> float:
    """c_alpha making the raw integral equal to the multiplier ``i k |k|**(alpha-1)``.

    Calibrated once on ``sin x`` (whose image is ``cos x``) and cached.
    """
    grid = PeriodicGrid(1024)
    raw = singular_integral(grid.field(np.sin), alpha).values
    target = np.cos(grid.x)
    return float(np.dot(raw, target) / np.dot(raw, raw))


def fractional_normalization_exact(alpha: float) -> float:
    """Closed form ``alpha / (2 Gamma(1-alpha) sin(pi alpha / 2))`` for comparison."""
    return alpha / (2.0 * math.gamma(1.0 - alpha) * math.sin(0.5 * math.pi * alpha))


def singular_convolution(u: Field, alpha: float, delta: Optional[float] = None) -> Field:
    """``Lambda**(alpha-1) d/dx u`` as a normalized real-space singular integral.

    ``delta`` defaults to one grid cell.
    """
    raw = singular_integral(u, alpha, delta)
    return raw * fractional_normalization(float(alpha))


def fractional_multiplier(u: Field, alpha: float) -> Field:
    """Spectral reference: multiplier ``i k |k|**(alpha-1)``."""
    k = u.grid.rfrequencies
    return u.apply_multiplier(1j * k * DispersionSymbol.fractional(alpha)(k) * (k != k[-1]))


def whitham_multiplier(u: Field) -> Field:
    """Spectral reference for ``K * u'``: multiplier ``i k c_WW(k)``."""
    k = u.grid.rfrequencies
    return u.apply_multiplier(1j * k * _WHITHAM(k) * (k != k[-1]))


def _periodized_kernel(table: KernelTable, y, period, images=3, skip_center=False):
    total = np.zeros_like(y) if skip_center else table.evaluate(y)
    for m in range(1, images + 1):
        total = total + table.evaluate(y + m * period) + table.evaluate(y - m * period)
    return total


def whitham_convolution(u: Field, table: Optional[KernelTable] = None,
                        delta: Optional[float] = None, images: int = 3) -> Field:
    """``K * u'`` on the periodic grid by real-space quadrature.

    The cell ``|y| < delta`` uses a ``y**-1/2`` Gauss-Jacobi rule carrying
    ``sqrt(y) K(y)``; the rest of the cell is split into panels and combined
    with images up to ``images`` periods away.
    """
    if table is None:
        table = default_kernel_table()
    grid = u.grid
    n, dx, period = grid.n_points, grid.dx, grid.period
    if table.x_max < 0.5 * period:
        raise InsufficientData(f"table reaches x={table.x_max:g}, shorter than half the period")
    delta = dx if delta is None else float(delta)
    if not 0.0 < delta < 0.5 * period:
        raise InvalidArgument("delta must lie in (0, period/2)")
    half = 0.5 * period

    yf, wf = _far_nodes(delta, half, dx)
    w_far = wf * _periodized_kernel(table, yf, period, images)
    yj, wj = _jacobi_nodes(delta, 0.5)
    w_sing = wj * np.sqrt(yj) * table.evaluate(yj)
    yn, wn = _far_nodes(0.0, delta, dx)
    w_img = wn * _periodized_kernel(table, yn, period, images, skip_center=True)
    y_even = np.concatenate([yf, yj, yn])
    w_even = np.concatenate([w_far, w_sing, w_img])
    st = _spread(y_even, w_even, dx, n) + _spread(-y_even, w_even, dx, n)
    return Field(grid, _correlate(u.derivative(1).values, st))
