"""Dispersion symbols c(k) selecting the model.

Three families are supported:

* ``WHITHAM`` -- the water-wave phase speed ``sqrt(tanh k / k)``;
* ``FRACTIONAL`` -- ``|k|**(alpha - 1)``, the symbol of ``Lambda**(alpha - 1)``
  (alpha = 1 Burgers, 2 Benjamin-Ono, 3 KdV up to normalization);
* ``KDV`` -- the long-wave polynomial ``1 - k**2 / 6``.

The equation evolved elsewhere in the package is
``u_t + c(D) u_x + u u_x = 0``, so the full linear multiplier is ``i k c(k)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgument

# below this |k| the tanh(k)/k ratio is taken from its Taylor series
SERIES_THRESHOLD = 1e-3


class SymbolKind(str, enum.Enum):
    WHITHAM = "whitham"
    FRACTIONAL = "fkdv"
    KDV = "kdv"


@dataclass(frozen=True)
class DispersionSymbol:
    kind: SymbolKind
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.kind is SymbolKind.FRACTIONAL:
            if self.alpha is None or not math.isfinite(self.alpha):
                raise InvalidArgument("alpha out of range: fractional symbol needs a finite alpha")
            if not 0.0 < self.alpha <= 3.0:
                raise InvalidArgument(f"alpha out of range: {self.alpha} not in (0, 3]")
        elif self.alpha is not None:
            raise InvalidArgument(f"alpha is only meaningful for the fractional symbol, got {self.alpha}")

    @classmethod
    def whitham(cls) -> "DispersionSymbol":
        return cls(SymbolKind.WHITHAM)

    @classmethod
    def fractional(cls, alpha: float) -> "DispersionSymbol":
        return cls(SymbolKind.FRACTIONAL, float(alpha))

    @classmethod
    def kdv(cls) -> "DispersionSymbol":
        return cls(SymbolKind.KDV)

    @property
    def label(self) -> str:
        if self.kind is SymbolKind.FRACTIONAL:
            return f"fkdv(alpha={self.alpha:g})"
        return self.kind.value

    def __call__(self, kappa):
        """Vectorized evaluation; accepts scalars or arrays."""
        k = np.abs(np.asarray(kappa, dtype=float))
        if not np.all(np.isfinite(k)):
            raise InvalidArgument("kappa must be finite")
        if self.kind is SymbolKind.WHITHAM:
            out = _whitham(k)
        elif self.kind is SymbolKind.KDV:
            out = 1.0 - k * k / 6.0
        else:
            out = _fractional(k, self.alpha)
        return out if out.ndim else float(out)


def _tanh_ratio_series(k):
    k2 = k * k
    return 1.0 - k2 / 3.0 + 2.0 * k2 * k2 / 15.0 - 17.0 * k2 ** 3 / 315.0


def _whitham(k):
    small = k < SERIES_THRESHOLD
    safe = np.where(small, 1.0, k)
    ratio = np.where(small, _tanh_ratio_series(k), np.tanh(safe) / safe)
    return np.sqrt(ratio)


def _fractional(k, alpha):
    zero = k == 0.0
    if alpha == 1.0:
        return np.ones_like(k)
    safe = np.where(zero, 1.0, k)
    # the k=0 entry is the mean mode, which d/dx annihilates; store 0
    return np.where(zero, 0.0, safe ** (alpha - 1.0))


def evaluate(sym: DispersionSymbol, kappa: float) -> float:
    """Return c(kappa) for a single finite wavenumber."""
    if not isinstance(kappa, (int, float, np.floating, np.integer)):
        raise InvalidArgument("kappa must be a real scalar")
    return float(sym(float(kappa)))


def multiplier_array(sym: DispersionSymbol, grid) -> np.ndarray:
    """c evaluated on the grid's full (FFT-ordered) frequency set."""
    return np.asarray(sym(grid.frequencies), dtype=float)
