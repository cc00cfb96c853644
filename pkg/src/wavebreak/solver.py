"""Pseudospectral evolution of ``u_t + c(D) u_x + u u_x = 0`` on a periodic cell.

Time stepping is the classical four-stage Runge-Kutta rule applied to the
integrating-factor form ``v = exp(i k c(k) t) u_hat``, so the dispersive part
is propagated exactly and only the quadratic nonlinearity is discretized.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .characteristics import SlopeHistory
from .errors import CorruptedState, InvalidArgument, StepFailure, UnderResolved
from .grid import Field, PeriodicGrid, Trajectory, refined_minimum
from .symbols import DispersionSymbol


class Outcome(str, enum.Enum):
    REACHED_TMAX = "ReachedTmax"
    BREAKING_DETECTED = "BreakingDetected"
    STEP_FAILURE = "StepFailure"


@dataclass(frozen=True)
class SolveConfig:
    symbol: DispersionSymbol
    dt_initial: float = 1e-3
    dt_floor: float = 1e-9
    dealias_fraction: float = 2.0 / 3.0
    # None means -1e3 * |m(0)|
    slope_stop: Optional[float] = None
    t_max: float = 1.0
    nonlinear: bool = True
    sample_stride: int = 10
    max_snapshots: int = 1000
    # amplitude ratio of the upper half of the retained band; above it a
    # sample is flagged as under-resolved in the slope history
    resolution_tol: float = 1e-4

    def __post_init__(self):
        if not (self.dt_initial > 0 and self.dt_floor > 0 and self.dt_floor < self.dt_initial):
            raise InvalidArgument("need 0 < dt_floor < dt_initial")
        if not 0.5 < self.dealias_fraction <= 1.0:
            raise InvalidArgument("dealias_fraction must lie in (1/2, 1]")
        if self.slope_stop is not None and not self.slope_stop < -1.0:
            raise InvalidArgument("slope_stop must be < -1")
        if not self.t_max > 0:
            raise InvalidArgument("t_max must be positive")
        if self.sample_stride < 1 or self.max_snapshots < 2:
            raise InvalidArgument("sample_stride >= 1 and max_snapshots >= 2 required")


def suggest_dt(u0: Field, dealias_fraction: float = 2.0 / 3.0, cfl: float = 2.0) -> float:
    """Advective time step ``cfl / (k_cut * max|u0|)``, capped at 1e-2."""
    kcut = dealias_fraction * u0.grid.kappa_max
    umax = u0.max_abs()
    if umax == 0.0:
        return 1e-2
    return min(1e-2, cfl / (kcut * umax))


class _Stepper:
    """Precomputed multipliers for one grid/config; works on rfft arrays."""

    def __init__(self, grid: PeriodicGrid, cfg: SolveConfig):
        self.grid = grid
        self.cfg = cfg
        k = grid.rfrequencies
        self.ik = 1j * k
        self.ik[-1] = 0.0
        self.lin = 1j * k * cfg.symbol(k)
        keep = (k <= cfg.dealias_fraction * grid.kappa_max).astype(float)
        self.keep = keep
        self.neg_keep = -keep
        self.neg_keep[0] = 0.0
        self.upper = k > 0.5 * cfg.dealias_fraction * grid.kappa_max
        self._buf = np.empty((2, k.size), dtype=complex)

    def nonlinear(self, uh):
        """Returns (-P[u u_x] spectrum, u, u_x)."""
        n = self.grid.n_points
        if not self.cfg.nonlinear:
            w = np.fft.irfft(np.stack([uh, self.ik * uh]), n, axis=1)
            return np.zeros_like(uh), w[0], w[1]
        self._buf[0] = uh
        np.multiply(self.ik, uh, out=self._buf[1])
        w = np.fft.irfft(self._buf, n, axis=1)
        return np.fft.rfft(w[0] * w[1]) * self.neg_keep, w[0], w[1]

    def advance(self, uh, dt, k1=None):
        half = np.exp(self.lin * (-0.5 * dt))
        full = half * half
        if k1 is None:
            k1 = self.nonlinear(uh)[0]
        k2 = self.nonlinear(half * (uh + (0.5 * dt) * k1))[0]
        k3 = self.nonlinear(half * uh + (0.5 * dt) * k2)[0]
        k4 = self.nonlinear(full * uh + dt * half * k3)[0]
        out = full * (uh + (dt / 6.0) * k1) + (dt / 6.0) * (2.0 * half * (k2 + k3) + k4)
        out *= self.keep
        if not np.all(np.isfinite(out)):
            raise CorruptedState("non-finite spectrum after step")
        return out

    def tail_ratio(self, uh) -> float:
        amp2 = np.abs(uh) ** 2
        tot = amp2.sum()
        return 0.0 if tot == 0.0 else math.sqrt(amp2[self.upper].sum() / tot)


def rhs(u: Field, sym: DispersionSymbol, dealias_fraction: float = 2.0 / 3.0) -> Field:
    """``-(c(D) u_x + u u_x)`` with the product dealiased above the cut-off."""
    if not np.all(np.isfinite(u.values)):
        raise CorruptedState("NaN in input field")
    grid = u.grid
    k = grid.rfrequencies
    ux = u.derivative(1).values
    prod = np.fft.rfft(u.values * ux)
    prod[k > dealias_fraction * grid.kappa_max] = 0.0
    spec = -(1j * k * sym(k)) * u.spectrum - prod
    spec[0] = 0.0
    spec[-1] = 0.0
    return Field.from_spectrum(grid, spec)


def step(u: Field, cfg: SolveConfig, dt: float) -> Field:
    """Advance ``u`` by one integrating-factor RK4 step of size ``dt``."""
    if dt > cfg.dt_initial:
        raise InvalidArgument(f"dt={dt:g} exceeds dt_initial={cfg.dt_initial:g}")
    if dt < cfg.dt_floor:
        raise StepFailure(f"dt={dt:g} below floor {cfg.dt_floor:g}: breaking region reached", dt)
    stepper = _Stepper(u.grid, cfg)
    return Field.from_spectrum(u.grid, stepper.advance(np.array(u.spectrum), dt))


def conserved_quantities(u: Field):
    """``(integral of u, integral of u**2)`` over one period."""
    dx = u.grid.dx
    return float(dx * np.sum(u.values)), float(dx * np.sum(u.values ** 2))


def check_resolved(u0: Field, tol: float = 1e-10):
    amp = np.abs(u0.spectrum)
    top = amp.max()
    if top == 0.0:
        return
    high = amp[u0.grid.rfrequencies > 0.5 * u0.grid.kappa_max]
    if high.size and high.max() > tol * top:
        raise UnderResolved(
            f"initial spectrum at |k| > kappa_max/2 is {high.max() / top:.2e} of the peak (> {tol:g})")


@dataclass
class RunResult:
    trajectory: Trajectory
    history: SlopeHistory
    outcome: Outcome
    series: dict = dc_field(default_factory=dict)
    message: str = ""

    def timeseries_rows(self):
        s = self.series
        return zip(s["t"], s["min_slope"], s["q"], s["mass"], s["l2"], s["dt"])


def run(u0: Field, cfg: SolveConfig) -> RunResult:
    """Integrate from ``u0`` until ``t_max``, breaking, or the dt floor."""
    check_resolved(u0)
    grid = u0.grid
    stepper = _Stepper(grid, cfg)
    dx, n = grid.dx, grid.n_points
    uh = np.array(u0.spectrum) * stepper.keep

    traj = Trajectory(grid, cfg.symbol)
    cols = {key: [] for key in ("t", "min_slope", "q", "mass", "l2", "dt", "argmin", "resolved", "u_max")}

    k1, u, ux = stepper.nonlinear(uh)
    m0 = refined_minimum(ux, dx)[0]
    grad0 = float(np.max(np.abs(ux)))
    stop = cfg.slope_stop
    if stop is None and m0 < 0:
        stop = -1e3 * abs(m0)

    def record(t, dt, uh, u, ux):
        m, pos, _ = refined_minimum(ux, dx)
        cols["t"].append(t)
        cols["min_slope"].append(m)
        cols["q"].append(m0 / m if m0 < 0 else math.nan)
        cols["mass"].append(grid.period * uh[0].real / n)
        cols["l2"].append(dx * float(np.dot(u, u)))
        cols["dt"].append(dt)
        cols["argmin"].append(pos)
        cols["resolved"].append(stepper.tail_ratio(uh) <= cfg.resolution_tol)
        cols["u_max"].append(float(np.max(np.abs(u))))
        return m

    t = 0.0
    m = record(t, 0.0, uh, u, ux)
    traj.append(t, Field.from_spectrum(grid, uh))
    stride = cfg.sample_stride
    outcome, message = Outcome.REACHED_TMAX, ""
    nsteps = 0
    last_sampled = 0
    while True:
        if stop is not None and m <= stop:
            outcome = Outcome.BREAKING_DETECTED
            break
        if t >= cfg.t_max * (1 - 1e-14):
            break
        grad = float(np.max(np.abs(ux)))
        dt = cfg.dt_initial / (1.0 + grad / grad0) if grad0 > 0 else cfg.dt_initial
        if dt < cfg.dt_floor:
            outcome, message = Outcome.STEP_FAILURE, f"dt={dt:.3e} below floor at t={t:.6g}"
            break
        dt = min(dt, cfg.t_max - t)
        uh = stepper.advance(uh, dt, k1)
        t += dt
        nsteps += 1
        k1, u, ux = stepper.nonlinear(uh)
        m = record(t, dt, uh, u, ux)
        if nsteps % stride == 0:
            traj.append(t, Field.from_spectrum(grid, uh))
            last_sampled = nsteps
            if len(traj) > cfg.max_snapshots:
                traj.thin()
                stride *= 2
    if last_sampled != nsteps:
        traj.append(t, Field.from_spectrum(grid, uh))

    arr = {key: np.asarray(val) for key, val in cols.items()}
    history = SlopeHistory(
        times=arr["t"], m_vals=arr["min_slope"], q_vals=arr["q"], argmin_positions=arr["argmin"],
        resolved=arr["resolved"].astype(bool), u_max=arr["u_max"])
    series = {key: arr[key] for key in ("t", "min_slope", "q", "mass", "l2", "dt")}
    return RunResult(traj, history, outcome, series, message)
