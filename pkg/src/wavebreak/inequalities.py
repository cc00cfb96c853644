"""Brute-force verification of the combinatorial and splitting inequalities.

The combinatorial sums overflow doubles long before n = 60 at small alpha, so
both sides are carried as natural logarithms and combined by log-sum-exp.
High-precision values for the report are rebuilt from the logs with mpmath.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Iterable, List, Optional

import mpmath
import numpy as np

from .errors import InvalidArgument, OutOfRange
from .grid import Field
from .kernel import KernelTable, default_kernel_table, singular_integral, whitham_convolution


@dataclass(frozen=True)
class InequalityReport:
    name: str
    params: dict
    log_lhs: float
    log_rhs: float
    passed: bool = dc_field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.log_lhs <= self.log_rhs))

    @property
    def lhs(self):
        return mpmath.exp(self.log_lhs) if self.log_lhs > -math.inf else mpmath.mpf(0)

    @property
    def rhs(self):
        return mpmath.exp(self.log_rhs)

    @property
    def ratio(self) -> float:
        if self.log_lhs == -math.inf:
            return 0.0
        return math.exp(self.log_lhs - self.log_rhs)

    def csv_row(self) -> list:
        params = ";".join(f"{k}={v!r}" for k, v in self.params.items())
        return [self.name, params, mpmath.nstr(self.lhs, 17), mpmath.nstr(self.rhs, 17),
                repr(self.ratio), "true" if self.passed else "false"]


CSV_HEADER = ["name", "params", "lhs", "rhs", "ratio", "pass"]


def _logsumexp(logs: Iterable[float]) -> float:
    logs = list(logs)
    if not logs:
        return -math.inf
    top = max(logs)
    if top == -math.inf:
        return top
    return top + math.log(math.fsum(math.exp(v - top) for v in logs))


def _log_binom(n, j):
    return math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1)


def _xlogx_power(m, p):
    # log of m**(m p) with 0**0 = 1
    return 0.0 if m == 0 else m * p * math.log(m)


def lemma_n3_sides(n: int, alpha: float):
    """Return ``(log lhs, log rhs_proof, log rhs_display)`` for the sum bound.

    lhs = sum_{j=2}^{n-1} C(n, j) (j-1)**((j-1)/a) (n-j)**((n-j)/a)
    rhs = e/(1/a - 1) * (3/2)**p * n * (n-1)**((n-1)/a), with p = 1/a - 1
    (proof form) or p = 1/a (displayed form).
    """
    p = 1.0 / alpha
    log_lhs = _logsumexp(
        _log_binom(n, j) + _xlogx_power(j - 1, p) + _xlogx_power(n - j, p) for j in range(2, n))
    base = 1.0 - math.log(p - 1.0) + math.log(n) + (n - 1) * p * math.log(n - 1)
    l15 = math.log(1.5)
    return log_lhs, base + (p - 1.0) * l15, base + p * l15


def _check_n3_args(n, alpha):
    if not isinstance(n, (int, np.integer)) or n < 3:
        raise InvalidArgument("n must be an integer >= 3")
    if n > 200:
        raise InvalidArgument("n must be <= 200")
    if not 0.0 < alpha < 2.0 / 3.0:
        raise OutOfRange(f"alpha={alpha} outside (0, 2/3)")


def lemma_n3_check(n: int, alpha: float, variant: str = "proof") -> InequalityReport:
    """Combinatorial sum bound at one ``(n, alpha)``.

    ``variant="proof"`` uses the factor ``(3/2)**(1/alpha - 1)``;
    ``variant="display"`` uses ``(3/2)**(1/alpha)``.
    """
    _check_n3_args(n, alpha)
    if variant not in ("proof", "display"):
        raise InvalidArgument("variant must be 'proof' or 'display'")
    log_lhs, log_proof, log_display = lemma_n3_sides(int(n), float(alpha))
    rhs = log_proof if variant == "proof" else log_display
    return InequalityReport(f"lemma_n3_{variant}", {"n": int(n), "alpha": float(alpha)}, log_lhs, rhs)


def lemma_n3_sweep(n_max: int = 60, alphas=(0.1, 0.25, 0.5, 0.65), variants=("proof", "display")):
    return [lemma_n3_check(n, a, v) for v in variants for a in alphas for n in range(3, n_max + 1)]


def _log_norm(x):
    return math.log(x) if x > 0 else -math.inf


def splitting_bound_check(u: Field, n: int, alpha: float, delta: float) -> InequalityReport:
    """Bound on the raw singular integral of ``d^n u``.

    lhs = sup |raw integral of d^n u|, rhs = (6/alpha)(delta**-alpha ||d^n u||
    + delta**(1-alpha) ||d^(n+1) u||).
    """
    if n < 0:
        raise InvalidArgument("n must be >= 0")
    v = u.derivative(n) if n else u
    lhs = singular_integral(v, alpha, delta).max_abs()
    sup_n = v.max_abs()
    sup_n1 = v.derivative(1).max_abs()
    rhs = (6.0 / alpha) * (delta ** -alpha * sup_n + delta ** (1.0 - alpha) * sup_n1)
    return InequalityReport("fractional_splitting", {"n": n, "alpha": float(alpha), "delta": float(delta)},
                            _log_norm(lhs), _log_norm(rhs) if rhs > 0 else -math.inf)


def whitham_bound_rhs(table: KernelTable, delta: float, sup_n: float, sup_n1: float) -> float:
    k0, k_inf, d0 = table.k0, table.k_inf, table.delta0
    return (4.0 * k0 * math.sqrt(delta) * sup_n1
            + (2.0 * k0 / math.sqrt(delta) + 4.0 * k0 * (delta ** -0.5 - d0 ** -0.5) + 2.0 * k_inf) * sup_n)


def whitham_splitting_check(u: Field, n: int, delta: float,
                            table: Optional[KernelTable] = None) -> InequalityReport:
    """Bound on ``sup |K * d^(n+1) u|`` assembled from the fitted kernel constants."""
    if table is None:
        table = default_kernel_table()
    if not math.isfinite(table.k0):
        raise InvalidArgument("kernel table carries no fitted constants")
    if not 0.0 < delta < table.delta0:
        raise OutOfRange(f"delta={delta} outside (0, {table.delta0})")
    if n < 0:
        raise InvalidArgument("n must be >= 0")
    v = u.derivative(n) if n else u
    lhs = whitham_convolution(v, table).max_abs()
    rhs = whitham_bound_rhs(table, delta, v.max_abs(), v.derivative(1).max_abs())
    return InequalityReport("whitham_splitting", {"n": n, "delta": float(delta)},
                            _log_norm(lhs), _log_norm(rhs) if rhs > 0 else -math.inf)


def delta_grid(lo: float, hi: float, per_decade: int = 10, include_hi: bool = True) -> np.ndarray:
    """Log-spaced deltas, ``per_decade`` per factor of ten."""
    count = max(2, int(math.ceil(per_decade * math.log10(hi / lo))) + 1)
    grid = np.geomspace(lo, hi, count)
    return grid if include_hi else grid[:-1]


def summary_lines(reports: List[InequalityReport]) -> List[str]:
    """One line per report family: count, failures, max ratio."""
    out = []
    for name in sorted({r.name for r in reports}):
        fam = [r for r in reports if r.name == name]
        fails = sum(not r.passed for r in fam)
        out.append(f"summary name={name} count={len(fam)} failures={fails} "
                   f"max_ratio={max(r.ratio for r in fam)!r} all_pass={'true' if not fails else 'false'}")
    return out
