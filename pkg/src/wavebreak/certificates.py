"""Checks of the breaking hypotheses on an initial datum.

Every inequality is evaluated literally with the computed slope infimum and
H^3 norm; the record reports margins rather than asserting anything the
numbers do not show.  Gevrey-type derivative bounds can only be checked to a
finite depth, which the record states.

H^3 convention: for a field on a cell of length ``P`` with Fourier coefficients
``c_k = fft(u)[k] / N`` at angular wavenumbers ``kappa_k``,
``||u||^2 = P * sum_k (1 + kappa_k**2)**3 |c_k|**2``.  This matches the
L^2 norm at order zero; ``sin x`` on ``[0, 2 pi)`` has norm ``sqrt(8 pi)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import List, Optional, Tuple

import numpy as np

from .characteristics import breaking_window
from .errors import InvalidArgument, NoNegativeSlope
from .grid import Field, refined_minimum
from .symbols import DispersionSymbol, SymbolKind

H3_CONVENTION = "||u||_H3^2 = P*sum_k (1+kappa_k^2)^3 |fft(u)_k/N|^2"
MAX_GEVREY_DEPTH = 40
EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
# spectral modes below this fraction of the peak are treated as round-off
NOISE_FLOOR = 1e-13


class ResolutionWarning(UserWarning):
    """The datum's spectrum is not negligible in the upper half of the band."""


def _is_resolved(u0: Field, tol=1e-10) -> bool:
    amp = np.abs(u0.spectrum)
    top = amp.max()
    if top == 0.0:
        return True
    return bool(amp[u0.grid.rfrequencies > 0.5 * u0.grid.kappa_max].max() <= tol * top)


def h3_norm(u0: Field) -> float:
    """Sobolev H^3 norm under the convention in the module docstring."""
    grid = u0.grid
    n = grid.n_points
    coef2 = np.abs(u0.spectrum / n) ** 2
    weight = np.full(coef2.shape, 2.0)
    weight[0] = 1.0
    weight[-1] = 1.0  # Nyquist has no partner
    total = grid.period * np.sum(weight * (1.0 + grid.rfrequencies ** 2) ** 3 * coef2)
    if not _is_resolved(u0):
        warnings.warn("spectrum not decayed before kappa_max/2; H3 norm unreliable", ResolutionWarning)
    return float(math.sqrt(total))


def gevrey_exponent(model: DispersionSymbol, n: int) -> float:
    """Exponent e_n in the bound ``((n-1) b)**e_n``."""
    if model.kind is SymbolKind.WHITHAM:
        return 2.0 * (n - 1)
    if model.kind is SymbolKind.FRACTIONAL:
        return (n - 1) / model.alpha
    raise InvalidArgument(f"no derivative bound is defined for {model.label}")


@dataclass(frozen=True)
class Check:
    """One inequality; ``relation`` is read as ``lhs <relation> rhs``."""

    name: str
    lhs: float
    rhs: float
    relation: str
    margin: float
    passed: bool

    def to_line(self) -> str:
        return (f"check name={self.name} lhs={self.lhs!r} rel={self.relation} rhs={self.rhs!r} "
                f"margin={self.margin!r} pass={'true' if self.passed else 'false'}")


def _strict(name, lhs, rhs, greater=True) -> Check:
    margin = lhs - rhs if greater else rhs - lhs
    return Check(name, float(lhs), float(rhs), ">" if greater else "<", float(margin), bool(margin > 0))


def _pow10(x):
    return 10.0 ** x if x < 308.0 else math.inf


def gevrey_check(u0: Field, model: DispersionSymbol, b: float, n_max: int = 20):
    """Derivative bounds ``||u0^(n)||_inf <= ((n-1) b)**e_n`` for 2 <= n <= n_max.

    Sides are compared in log10; the lhs uses spectral derivatives after modes
    below the noise floor are cleared.  Returns ``(checks, depth, truncated)``.
    Margins are ``log10(rhs) - log10(lhs)``.
    """
    if not b >= 1.0:
        raise InvalidArgument("b must be >= 1")
    if n_max < 2:
        raise InvalidArgument("n_max must be >= 2")
    depth = min(int(n_max), MAX_GEVREY_DEPTH)
    truncated = depth < n_max
    checks = []
    for n in range(2, depth + 1):
        sup = u0.derivative(n, clean=NOISE_FLOOR).max_abs()
        lhs_log = math.log10(sup) if sup > 0 else -math.inf
        rhs_log = gevrey_exponent(model, n) * math.log10((n - 1) * b)
        margin = rhs_log - lhs_log
        # a relative slack of 1e-12 absorbs round-off when both sides are equal
        ok = margin >= -1e-12 / math.log(10.0)
        checks.append(Check(f"gevrey_n{n}", float(sup), _pow10(rhs_log), "<=", float(margin), bool(ok)))
    return checks, depth, truncated


def _window(m0: float, epsilon: float) -> Optional[Tuple[float, float]]:
    try:
        return breaking_window(m0, epsilon)
    except NoNegativeSlope:
        return None


def alpha_upper_bound(epsilon: float) -> float:
    return (2.0 / 3.0) * (1.0 - 10.0 * epsilon) / (1.0 + 4.0 * epsilon)


@dataclass
class Certificate:
    model: str
    epsilon: float
    b: float
    n_max: int
    inf_slope: float
    h3_norm: float
    sigma: float
    constants: dict
    checks: List[Check]
    window: Optional[Tuple[float, float]]
    depth: int
    flags: List[str] = dc_field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        return EXIT_PASS if self.overall else EXIT_FAIL

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_record(self) -> str:
        """Line-oriented text form; identical inputs give identical text."""
        lines = [
            f"# certificate; {H3_CONVENTION}; derivative bounds checked to finite depth",
            f"model={self.model}",
            f"epsilon={self.epsilon!r}",
            f"b={self.b!r}",
            f"n_max={self.n_max}",
            f"depth={self.depth}",
            f"inf_slope={self.inf_slope!r}",
            f"h3_norm={self.h3_norm!r}",
            f"sigma={self.sigma!r}",
        ]
        lines += [f"{k}={v!r}" for k, v in self.constants.items()]
        lines += [c.to_line() for c in self.checks]
        if self.window is None:
            lines.append("window none")
        else:
            lines.append(f"window t_lo={self.window[0]!r} t_hi={self.window[1]!r}")
        lines.append("flags=" + (",".join(self.flags) if self.flags else "none"))
        lines.append(f"overall={'pass' if self.overall else 'fail'}")
        return "\n".join(lines) + "\n"


def certify(u0: Field, model: DispersionSymbol, epsilon: float, b: float = 1.0,
            n_max: int = 20) -> Certificate:
    """Evaluate the breaking hypotheses for ``model`` on ``u0``."""
    if not 0.0 < epsilon < 0.5:
        raise InvalidArgument("epsilon must lie in (0, 1/2)")
    if model.kind is SymbolKind.FRACTIONAL and not 0.0 < model.alpha < 1.0:
        raise InvalidArgument(f"alpha out of range: certification needs alpha in (0, 1), got {model.alpha}")
    if model.kind is SymbolKind.KDV:
        raise InvalidArgument("certification is defined for the fractional and Whitham models only")

    flags = []
    if not _is_resolved(u0):
        flags.append("under-resolved")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        h3 = h3_norm(u0)
    du = u0.derivative(1)
    m0 = refined_minimum(du.values, u0.grid.dx)[0]
    steep = max(-m0, 0.0)
    eps = float(epsilon)

    checks = [_strict("negative_slope", 0.0, m0)]
    if model.kind is SymbolKind.FRACTIONAL:
        a = model.alpha
        checks.append(_strict("alpha_range", a, alpha_upper_bound(eps), greater=False))
        checks.append(_strict("slope_vs_h3", eps ** 2 * steep ** 2, 1.0 + h3))
        checks.append(_strict(
            "slope_vs_derivative_constant", eps ** 3 * (1.0 - eps) ** 3 * steep ** 0.75,
            (6.0 / a) * (1.0 + (1.0 + math.exp(1.0 / a)) * b + b ** (1.0 / a))))
        checks.append(_strict(
            "slope_vs_combinatorial_constant", eps ** 2 * steep ** 0.25,
            math.e / (1.0 / a - 1.0) * 1.5 ** (1.0 / a)))
    else:
        checks.append(_strict("slope_vs_h3", eps ** 2 * steep ** 2, 1.0 + h3))

    gev, depth, truncated = gevrey_check(u0, model, b, n_max)
    checks += gev
    if truncated:
        flags.append(f"gevrey-truncated-at-{depth}")

    sup_u = u0.max_abs()
    sup_du = du.max_abs()
    constants = {"C0": 2.0 * (sup_u + sup_du), "C1": 2.0 * sup_du, "C2": steep ** 0.75}
    return Certificate(
        model=model.label, epsilon=eps, b=float(b), n_max=int(n_max), inf_slope=float(m0),
        h3_norm=h3, sigma=1.5 + 6.0 * eps, constants=constants, checks=checks,
        window=_window(m0, eps), depth=depth, flags=flags)
