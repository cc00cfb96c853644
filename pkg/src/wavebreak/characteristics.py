"""Particle paths, transported slopes, and breaking diagnostics.

Along ``dX/dt = u(X, t) + drift`` the slope ``v1 = u_x(X, t)`` obeys the
Riccati equation ``dv1/dt + v1**2 + phi1 = 0`` with the nonlocal forcing
``phi1 = ((c(D) - drift) u_xx)(X)``; ``drift = 0`` is the plain particle path.
The Jacobian ``J = dX/dx`` obeys ``dJ/dt = v1 J`` with ``J(0) = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
from scipy import optimize
from scipy.integrate import cumulative_trapezoid

from .errors import InvalidArgument, NoNegativeSlope, OutOfRange
from .grid import Field, Trajectory, refined_minimum, spectral_interpolate


@dataclass
class SlopeHistory:
    times: np.ndarray
    m_vals: np.ndarray
    q_vals: np.ndarray
    argmin_positions: np.ndarray
    # per-sample flag: spectrum still decayed (None when unknown)
    resolved: Optional[np.ndarray] = None
    u_max: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.times)

    def resolved_prefix(self) -> int:
        """Number of leading samples before resolution is first lost."""
        if self.resolved is None:
            return len(self.times)
        bad = np.flatnonzero(~np.asarray(self.resolved, dtype=bool))
        return int(bad[0]) if bad.size else len(self.times)


@dataclass
class SigmaSet:
    gamma: float
    t: float
    member_indices: frozenset
    m: float = math.nan

    def __contains__(self, i):
        return i in self.member_indices

    def __len__(self):
        return len(self.member_indices)


@dataclass
class CharacteristicBundle:
    seeds: np.ndarray
    times: np.ndarray
    paths: np.ndarray
    v0: np.ndarray
    v1: np.ndarray
    jac: np.ndarray
    phi1: np.ndarray
    drift: float = 0.0
    wrapped: np.ndarray = None
    m_grid: np.ndarray = None  # grid minimum of u_x at each recorded time

    @property
    def n_seeds(self) -> int:
        return self.seeds.size

    def path_rows(self, j: int):
        return zip(self.times, self.paths[:, j], self.v0[:, j], self.v1[:, j], self.jac[:, j], self.phi1[:, j])


@dataclass
class BreakingReport:
    detected: bool
    m0: float
    epsilon: float
    window_lo: float
    window_hi: float
    T_estimate: float = math.nan
    exponent: float = math.nan
    fit_residual: float = math.nan
    inside_window: bool = False
    n_fit: int = 0
    reason: str = ""

    def to_record(self) -> str:
        items = [
            ("detected", self.detected),
            ("T_estimate", self.T_estimate),
            ("exponent", self.exponent),
            ("window_lo", self.window_lo),
            ("window_hi", self.window_hi),
            ("inside_window", self.inside_window),
            ("fit_residual", self.fit_residual),
            ("epsilon", self.epsilon),
            ("m0", self.m0),
            ("n_fit", self.n_fit),
            ("reason", self.reason),
        ]
        return "".join(f"{k}={_fmt(v)}\n" for k, v in items)


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def breaking_window(m0: float, epsilon: float):
    """Interval ``(-1/((1+eps) m0), -1/((1-eps)**2 m0))`` predicted for the blow-up time."""
    if not m0 < 0:
        raise NoNegativeSlope(f"window undefined for inf u0' = {m0}")
    return -1.0 / ((1.0 + epsilon) * m0), -1.0 / ((1.0 - epsilon) ** 2 * m0)


# ---------------------------------------------------------------- interpolation

_QUINTIC_OFFSETS = np.arange(-2, 4)


def _quintic_weights(s):
    """Lagrange weights for nodes -2..3 evaluated at fractional offsets ``s``."""
    nodes = _QUINTIC_OFFSETS.astype(float)
    w = np.ones((s.size, 6))
    for a in range(6):
        for b in range(6):
            if a != b:
                w[:, a] *= (s - nodes[b]) / (nodes[a] - nodes[b])
    return w


def local_interpolate(values: np.ndarray, dx: float, points: np.ndarray) -> np.ndarray:
    """Periodic six-point (quintic) Lagrange interpolation."""
    n = values.size
    pos = np.asarray(points) / dx
    base = np.floor(pos).astype(np.int64)
    w = _quintic_weights(pos - base)
    idx = (base[:, None] + _QUINTIC_OFFSETS[None, :]) % n
    return np.sum(w * values[idx], axis=1)


def _time_weights(times, t, i):
    """Cubic Lagrange weights in time around interval ``[t_i, t_{i+1}]``."""
    n = len(times)
    lo = min(max(i - 1, 0), max(n - 4, 0))
    idx = list(range(lo, min(lo + 4, n)))
    ts = [times[j] for j in idx]
    w = []
    for a, ta in enumerate(ts):
        c = 1.0
        for b, tb in enumerate(ts):
            if a != b:
                c *= (t - tb) / (ta - tb)
        w.append(c)
    return idx, np.array(w)


class _FieldSampler:
    """Evaluates u, u_x and phi1 of a trajectory at off-grid points."""

    def __init__(self, traj: Trajectory, drift: float, method: str, n_points: int):
        self.traj = traj
        self.grid = traj.grid
        self.times = traj.times
        k = self.grid.rfrequencies
        self.deriv1 = self.grid.derivative_factor(1)
        self.forcing = (traj.symbol(k) - drift) * self.grid.derivative_factor(2)
        self.method = method
        self.n_points = n_points
        self._cache = {}
        upper = k > self.grid.kappa_max / 3.0
        self._upper = upper

    def _spectra(self, i):
        if i not in self._cache:
            if len(self._cache) > 8:
                self._cache.pop(next(iter(self._cache)))
            spec = np.asarray(self.traj[i][1].spectrum)
            amp2 = np.abs(spec) ** 2
            tot = amp2.sum()
            tail = math.sqrt(amp2[self._upper].sum() / tot) if tot > 0 else 0.0
            stack = np.stack([spec, spec * self.deriv1, spec * self.forcing])
            vals = np.fft.irfft(stack, self.grid.n_points, axis=1)
            self._cache[i] = (stack, vals, tail)
        return self._cache[i]

    def use_spectral(self, i) -> bool:
        if self.method == "spectral":
            return True
        if self.method == "quintic":
            return False
        tail = self._spectra(i)[2]
        return tail < 1e-8 and self.n_points * self.grid.n_points <= 2_000_000

    def sample(self, idx, w, points, spectral):
        """Rows: u, u_x, phi1 at the points, for the time-combination (idx, w)."""
        slot = 0 if spectral else 1
        data = sum(wi * self._spectra(j)[slot] for j, wi in zip(idx, w))
        pts = np.mod(points, self.grid.period)
        if spectral:
            return np.stack([spectral_interpolate(self.grid, s, pts) for s in data])
        return np.stack([local_interpolate(v, self.grid.dx, pts) for v in data])


def default_seeds(u0: Field, count: int = 64) -> np.ndarray:
    """Equispaced seeds plus the refined argmin of ``u0'``."""
    grid = u0.grid
    base = np.arange(count) * grid.period / count
    _, pos, _ = refined_minimum(u0.derivative(1).values, grid.dx)
    return np.append(base, pos % grid.period)


def advect(trajectory: Trajectory, seeds, drift: float = 0.0, method: str = "auto",
           t_end: Optional[float] = None) -> CharacteristicBundle:
    """Integrate characteristics and their Jacobians through the sampled run.

    Each interval between snapshots takes one RK4 step; the midpoint field is
    cubic-in-time Lagrange interpolation of neighbouring snapshots.
    """
    if method not in ("auto", "spectral", "quintic"):
        raise InvalidArgument(f"unknown interpolation method {method!r}")
    times = trajectory.times
    if len(times) < 2:
        raise InvalidArgument("trajectory needs at least two snapshots")
    if t_end is None:
        t_end = times[-1]
    if t_end > times[-1] * (1 + 1e-12) + 1e-300:
        raise OutOfRange(f"t_end={t_end:g} beyond trajectory horizon {times[-1]:g}")
    nrec = int(np.searchsorted(times, t_end, side="right"))

    grid = trajectory.grid
    raw = np.asarray(seeds, dtype=float).ravel()
    wrapped = (raw < 0) | (raw >= grid.period)
    X = np.mod(raw, grid.period)
    J = np.ones_like(X)
    sampler = _FieldSampler(trajectory, drift, method, X.size)

    shape = (nrec, X.size)
    out = {key: np.empty(shape) for key in ("paths", "v0", "v1", "jac", "phi1")}
    m_grid = np.empty(nrec)

    def rec(i, X, J, vals):
        out["paths"][i] = np.mod(X, grid.period)
        out["v0"][i], out["v1"][i], out["phi1"][i] = vals
        out["jac"][i] = J
        m_grid[i] = sampler._spectra(i)[1][1].min()

    s1_spectral = sampler.use_spectral(0)
    s1 = sampler.sample([0], [1.0], X, s1_spectral)
    rec(0, X, J, s1)
    for i in range(nrec - 1):
        h = times[i + 1] - times[i]
        spectral = sampler.use_spectral(i) and sampler.use_spectral(i + 1)
        if h == 0.0:
            s1, s1_spectral = sampler.sample([i + 1], [1.0], X, spectral), spectral
            rec(i + 1, X, J, s1)
            continue
        idx, w = _time_weights(times, times[i] + 0.5 * h, i)
        if spectral != s1_spectral:
            s1 = sampler.sample([i], [1.0], X, spectral)
        kx1, kj1 = s1[0] + drift, s1[1] * J
        s2 = sampler.sample(idx, w, X + 0.5 * h * kx1, spectral)
        kx2, kj2 = s2[0] + drift, s2[1] * (J + 0.5 * h * kj1)
        s3 = sampler.sample(idx, w, X + 0.5 * h * kx2, spectral)
        kx3, kj3 = s3[0] + drift, s3[1] * (J + 0.5 * h * kj2)
        s4 = sampler.sample([i + 1], [1.0], X + h * kx3, spectral)
        kx4, kj4 = s4[0] + drift, s4[1] * (J + h * kj3)
        X = X + (h / 6.0) * (kx1 + 2 * kx2 + 2 * kx3 + kx4)
        J = J + (h / 6.0) * (kj1 + 2 * kj2 + 2 * kj3 + kj4)
        s1, s1_spectral = sampler.sample([i + 1], [1.0], X, spectral), spectral
        rec(i + 1, X, J, s1)

    return CharacteristicBundle(seeds=np.mod(raw, grid.period), times=times[:nrec].copy(),
                                drift=drift, wrapped=wrapped, m_grid=m_grid, **out)


def residual_v1(bundle: CharacteristicBundle, path_index: int) -> np.ndarray:
    """``dv1/dt + v1**2 + phi1`` along one path, with second-order differences."""
    t = bundle.times
    v1 = bundle.v1[:, path_index]
    if t.size < 3:
        raise InvalidArgument("need at least three samples for the residual")
    dv = np.gradient(v1, t, edge_order=2)
    return dv + v1 ** 2 + bundle.phi1[:, path_index]


def jacobian_log_integral(bundle: CharacteristicBundle, path_index: int) -> np.ndarray:
    """Cumulative trapezoid of v1 along a path (compare with ``log jac``)."""
    return cumulative_trapezoid(bundle.v1[:, path_index], bundle.times, initial=0.0)


# ------------------------------------------------------------ slope diagnostics

def slope_history(trajectory: Trajectory, resolution_tol: float = 1e-4) -> SlopeHistory:
    """Refined ``m(t) = inf u_x`` and ``q(t) = m(0)/m(t)`` over the snapshots."""
    if len(trajectory) == 0:
        raise InvalidArgument("empty trajectory")
    grid = trajectory.grid
    upper = grid.rfrequencies > grid.kappa_max / 3.0
    ms, pos, res, umax = [], [], [], []
    for _, f in trajectory:
        ux = f.derivative(1).values
        m, p, _ = refined_minimum(ux, grid.dx)
        ms.append(m)
        pos.append(p)
        amp2 = np.abs(f.spectrum) ** 2
        tot = amp2.sum()
        res.append(tot == 0 or math.sqrt(amp2[upper].sum() / tot) <= resolution_tol)
        umax.append(f.max_abs())
    ms = np.asarray(ms)
    if not ms[0] < 0:
        raise NoNegativeSlope(f"inf u0' = {ms[0]:g} is not negative")
    return SlopeHistory(times=trajectory.times, m_vals=ms, q_vals=ms[0] / ms,
                        argmin_positions=np.asarray(pos), resolved=np.asarray(res, dtype=bool),
                        u_max=np.asarray(umax))


def sigma_set(trajectory: Trajectory, gamma: float, t: float) -> SigmaSet:
    """Grid indices where ``u_x <= (1 - gamma) m`` at the snapshot nearest ``t``."""
    if not 0.0 < gamma < 1.0:
        raise InvalidArgument("gamma must lie in (0, 1)")
    i = trajectory.nearest(t)
    ts, f = trajectory[i]
    ux = f.derivative(1).values
    m = float(ux.min())
    members = np.flatnonzero(ux <= (1.0 - gamma) * m)
    return SigmaSet(gamma, ts, frozenset(int(j) for j in members), m)


def lagrangian_sigma_sets(bundle: CharacteristicBundle, gamma: float):
    """Seed labels with ``v1(t; x) <= (1 - gamma) m(t)`` for every recorded time.

    ``m(t)`` is the grid minimum of ``u_x``; with one seed per grid node the
    labels are grid indices of the initial positions.
    """
    if not 0.0 < gamma < 1.0:
        raise InvalidArgument("gamma must lie in (0, 1)")
    thresh = (1.0 - gamma) * bundle.m_grid
    return bundle.v1 <= thresh[:, None]


def nesting_violation(masks: np.ndarray, slack: int = 2) -> int:
    """Smallest dilation (capped at ``slack + 1``) making the sets nested in time.

    ``masks`` has one boolean row per time over periodic labels.  The result
    is 0 when every ``S(t2)`` lies inside every earlier ``S(t1)``; ``d`` means
    ``S(t2)`` lies inside ``S(t1)`` grown by ``d`` cells on each side.
    Containment in all earlier dilated sets equals containment in their
    running intersection, so each dilation level costs one pass.
    """
    masks = np.asarray(masks, dtype=bool)
    if masks.ndim != 2:
        raise InvalidArgument("masks must be 2-d (times x labels)")
    for d in range(slack + 1):
        grown = masks.copy()
        for _ in range(d):
            grown |= np.roll(grown, 1, axis=1) | np.roll(grown, -1, axis=1)
        envelope = np.ones(masks.shape[1], dtype=bool)
        ok = True
        for i in range(masks.shape[0]):
            envelope &= grown[i]
            if np.any(masks[i] & ~envelope):
                ok = False
                break
        if ok:
            return d
    return slack + 1


def detect_breaking(history: SlopeHistory, epsilon: float = 0.1, resolved_only: bool = True,
                    min_points: int = 8) -> BreakingReport:
    """Fit ``m(t) ~ -A/(T - t)`` on the last decade of (resolved) slope growth.

    ``T`` comes from a linear regression of ``1/m`` on ``t``; the exponent is
    a free-exponent fit of ``log(-m)`` against ``log(T - t)`` with ``T``
    re-estimated jointly.
    """
    m0 = float(history.m_vals[0])
    if not m0 < 0:
        raise NoNegativeSlope(f"inf u0' = {m0:g} is not negative")
    lo, hi = breaking_window(m0, epsilon)
    report = BreakingReport(False, m0, epsilon, lo, hi)
    end = history.resolved_prefix() if resolved_only else len(history)
    t = np.asarray(history.times[:end], dtype=float)
    m = np.asarray(history.m_vals[:end], dtype=float)
    if m.size == 0 or not np.min(m) <= 10.0 * m0:
        report.reason = "insufficient steepening"
        return report
    iend = int(np.argmin(m))
    m_end = m[iend]
    sel = np.flatnonzero(m[: iend + 1] <= 0.1 * m_end)
    start = sel[0]
    tw, mw = t[start: iend + 1], m[start: iend + 1]
    if tw.size < min_points:
        report.reason = f"only {tw.size} samples in the fit window"
        return report

    inv = 1.0 / mw
    b, a = np.polyfit(tw, inv, 1)
    if not b > 0:
        report.reason = "1/m not increasing toward zero"
        return report
    T = -a / b
    resid = inv - (a + b * tw)
    rel = float(np.sqrt(np.mean(resid ** 2)) / np.ptp(inv)) if np.ptp(inv) > 0 else 0.0

    logm = np.log(-mw)
    tail = tw[-1]

    def fun(p):
        Tf, e, c = p
        return logm - (c + e * np.log(Tf - tw))

    x0 = [T if T > tail else tail + 1e-6 * max(1.0, abs(tail)), -1.0, math.log(1.0 / b)]
    span = max(tw[-1] - tw[0], 1e-12)
    fit = optimize.least_squares(fun, x0, bounds=([tail + 1e-9 * span, -10.0, -50.0], [tail + 10 * span, 0.0, 50.0]))
    report.detected = True
    report.T_estimate = float(T)
    report.exponent = float(fit.x[1])
    report.fit_residual = rel
    report.inside_window = bool(lo < T < hi)
    report.n_fit = int(tw.size)
    report.reason = "fit on resolved samples" if resolved_only else "fit on all samples"
    return report
