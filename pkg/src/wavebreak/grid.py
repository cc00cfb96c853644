"""Periodic grids and spectrally represented fields."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import CorruptedState, InvalidArgument


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid on ``[0, period)`` with ``n_points`` nodes."""

    n_points: int
    period: float = 2.0 * math.pi

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 16 or n & (n - 1):
            raise InvalidArgument(f"n_points must be a power of two >= 16, got {n!r}")
        if not (math.isfinite(self.period) and self.period > 0):
            raise InvalidArgument(f"period must be positive, got {self.period!r}")

    @property
    def dx(self) -> float:
        return self.period / self.n_points

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.n_points) * self.dx

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Angular wavenumbers in FFT order (length ``n_points``)."""
        return np.fft.fftfreq(self.n_points, d=self.dx) * 2.0 * math.pi

    @cached_property
    def rfrequencies(self) -> np.ndarray:
        """Non-negative wavenumbers matching ``np.fft.rfft`` output."""
        return np.fft.rfftfreq(self.n_points, d=self.dx) * 2.0 * math.pi

    @property
    def kappa_max(self) -> float:
        return math.pi / self.dx

    def derivative_factor(self, order: int) -> np.ndarray:
        """``(i k)**order`` on rfft modes; the Nyquist mode is dropped for odd orders."""
        fac = (1j * self.rfrequencies) ** order
        if order % 2:
            fac[-1] = 0.0
        return fac

    def field(self, func) -> "Field":
        return Field(self, func(self.x))


class Field:
    """Real grid values with a lazily cached rfft spectrum.

    ``values`` is stored read-only, so the cached spectrum can never go stale.
    """

    __slots__ = ("grid", "_values", "_spectrum")

    def __init__(self, grid: PeriodicGrid, values, spectrum=None):
        vals = np.array(values, dtype=float, copy=True)
        if vals.shape != (grid.n_points,):
            raise InvalidArgument(f"expected {grid.n_points} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise CorruptedState("field contains non-finite values")
        vals.setflags(write=False)
        self.grid = grid
        self._values = vals
        if spectrum is not None:
            spectrum = np.array(spectrum, dtype=complex, copy=True)
            spectrum.setflags(write=False)
        self._spectrum = spectrum

    @classmethod
    def from_spectrum(cls, grid: PeriodicGrid, spectrum) -> "Field":
        spectrum = np.asarray(spectrum, dtype=complex)
        if not np.all(np.isfinite(spectrum)):
            raise CorruptedState("spectrum contains non-finite values")
        return cls(grid, np.fft.irfft(spectrum, grid.n_points), spectrum)

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> "Field":
        return cls(grid, np.zeros(grid.n_points))

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            spec = np.fft.rfft(self._values)
            spec.setflags(write=False)
            self._spectrum = spec
        return self._spectrum

    def __repr__(self):
        return f"Field(n={self.grid.n_points}, period={self.grid.period:g}, max|u|={self.max_abs():.4g})"

    def __add__(self, other):
        if isinstance(other, Field):
            return Field(self.grid, self._values + other._values)
        return Field(self.grid, self._values + other)

    def __sub__(self, other):
        if isinstance(other, Field):
            return Field(self.grid, self._values - other._values)
        return Field(self.grid, self._values - other)

    def __mul__(self, scalar):
        return Field(self.grid, self._values * float(scalar))

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(np.max(np.abs(self._values)))

    def mean(self) -> float:
        return float(self.spectrum[0].real / self.grid.n_points)

    def derivative(self, order: int = 1, clean: float = 0.0) -> "Field":
        """Spectral derivative of the given order.

        ``clean > 0`` zeroes modes whose amplitude is below ``clean`` times the
        largest amplitude before differentiating, which keeps round-off in
        empty modes from being amplified by ``k**order``.
        """
        if order < 0:
            raise InvalidArgument("derivative order must be non-negative")
        spec = self.spectrum
        if clean > 0.0:
            amp = np.abs(spec)
            spec = np.where(amp >= clean * amp.max(), spec, 0.0)
        if order == 0:
            return Field.from_spectrum(self.grid, spec)
        return Field.from_spectrum(self.grid, spec * self.grid.derivative_factor(order))

    def apply_multiplier(self, mult) -> "Field":
        """Apply a Fourier multiplier given on the rfft modes."""
        return Field.from_spectrum(self.grid, self.spectrum * mult)

    def tail_fraction(self, start: float) -> float:
        """Energy fraction carried by modes with ``|k| > start * kappa_max``."""
        amp2 = np.abs(self.spectrum) ** 2
        total = amp2.sum()
        if total == 0.0:
            return 0.0
        return float(amp2[self.grid.rfrequencies > start * self.grid.kappa_max].sum() / total)

    def evaluate(self, points) -> np.ndarray:
        """Trigonometric interpolation at arbitrary (wrapped) points."""
        return spectral_interpolate(self.grid, self.spectrum, points)


def spectral_interpolate(grid: PeriodicGrid, spectrum, points, chunk: int = 256) -> np.ndarray:
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    n = grid.n_points
    coef = np.array(spectrum, dtype=complex) / n
    coef[1:-1] *= 2.0  # conjugate partners folded in; Nyquist counted once
    k = grid.rfrequencies
    out = np.empty(pts.shape)
    for lo in range(0, pts.size, chunk):
        p = pts[lo:lo + chunk]
        phase = np.exp(1j * np.outer(p, k))
        out[lo:lo + chunk] = (phase @ coef).real
    return out


def refined_minimum(values: np.ndarray, dx: float, origin: float = 0.0):
    """Grid minimum refined by a parabola through the argmin and its neighbours.

    Returns ``(value, position, index)``; the refined value never exceeds the
    grid minimum.
    """
    i = int(np.argmin(values))
    n = values.size
    fm, f0, fp = values[(i - 1) % n], values[i], values[(i + 1) % n]
    curv = fm - 2.0 * f0 + fp
    if curv <= 0.0:
        return float(f0), origin + i * dx, i
    shift = 0.5 * (fm - fp) / curv
    value = f0 - 0.125 * (fp - fm) ** 2 / curv
    return float(min(value, f0)), origin + (i + shift) * dx, i


class Trajectory:
    """Time-ordered snapshots of a run together with the model symbol."""

    def __init__(self, grid: PeriodicGrid, symbol, times=(), fields=()):
        self.grid = grid
        self.symbol = symbol
        self._times = list(times)
        self._fields = list(fields)

    def append(self, t: float, field: Field):
        if self._times and t < self._times[-1]:
            raise InvalidArgument("snapshots must be appended in time order")
        self._times.append(float(t))
        self._fields.append(field)

    def thin(self):
        """Drop every other snapshot, always keeping the first and the last."""
        keep = list(range(0, len(self._times), 2))
        if keep[-1] != len(self._times) - 1:
            keep.append(len(self._times) - 1)
        self._times = [self._times[i] for i in keep]
        self._fields = [self._fields[i] for i in keep]

    @property
    def times(self) -> np.ndarray:
        return np.asarray(self._times)

    @property
    def fields(self) -> list:
        return list(self._fields)

    def __len__(self):
        return len(self._times)

    def __getitem__(self, i):
        return self._times[i], self._fields[i]

    def nearest(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))
