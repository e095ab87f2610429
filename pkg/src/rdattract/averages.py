"""Lower and upper time averages m[f_i], M[f_i] of the zero-density growth rates.

    m[f_i] = liminf_{t-s -> inf} 1/(t-s) int_s^t min_x f_i(tau, x, 0) dtau
    M[f_i] = limsup_{t-s -> inf} 1/(t-s) int_s^t max_x f_i(tau, x, 0) dtau

For a periodic system both reduce to one-period means of the spatial
extrema.  Otherwise they are estimated on a finite horizon by scanning a
lattice of windows of length at least ``min_window``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid
from .model import SystemSpec


@dataclass(frozen=True, eq=False)
class AverageEstimate:
    m: np.ndarray
    M: np.ndarray
    method: str  # "exact_periodic" | "finite_horizon"
    horizon: float | None = None
    min_window: float | None = None
    dt: float | None = None
    error_bound: np.ndarray | None = None

    def __post_init__(self):
        if np.any(self.m > self.M + 1e-12):
            raise ValueError("lower average exceeds upper average")

    def to_dict(self) -> dict:
        return {
            "m": self.m.tolist(),
            "M": self.M.tolist(),
            "method": self.method,
            "horizon": self.horizon,
            "min_window": self.min_window,
            "dt": self.dt,
            "error_bound": None if self.error_bound is None else self.error_bound.tolist(),
        }


def spatial_extrema_series(spec: SystemSpec, grid: Grid, times):
    """Per-species min and max over grid nodes of f_i(tau, x, 0).

    Returns two arrays of shape ``(n_species, len(times))``.
    """
    times = np.asarray(times, dtype=float)
    n = spec.n_species
    if times.size == 0:
        return np.empty((n, 0)), np.empty((n, 0))
    zero = np.zeros((n, 1))
    vals = np.stack([spec.rates(t, grid.points, zero) for t in times], axis=1)  # (n, K, nodes)
    return vals.min(axis=2), vals.max(axis=2)


def _cumulative(times, values, x):
    """Integral from times[0] to x of the piecewise-linear interpolant."""
    times = np.asarray(times)
    values = np.asarray(values)
    seg = 0.5 * (values[1:] + values[:-1]) * np.diff(times)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = np.clip(np.searchsorted(times, x, side="right") - 1, 0, len(times) - 2)
    h = x - times[k]
    slope = (values[k + 1] - values[k]) / (times[k + 1] - times[k])
    return cum[k] + values[k] * h + 0.5 * slope * h**2


def window_average(times, values, s: float, t: float) -> float:
    """Trapezoidal mean of a sampled series over ``[s, t]``."""
    if not t > s:
        raise ValueError(f"window needs t > s, got s={s}, t={t}")
    times = np.asarray(times, dtype=float)
    if s < times[0] - 1e-12 or t > times[-1] + 1e-12:
        raise ValueError(f"window [{s}, {t}] outside series span [{times[0]}, {times[-1]}]")
    c = _cumulative(times, values, [s, t])
    return float((c[1] - c[0]) / (t - s))


def _lv_truncation_bound(spec: SystemSpec, W: float):
    p = spec.lv
    bound = np.zeros(spec.n_species)
    for i in range(spec.n_species):
        if p.at[i] == 0:
            continue
        if p.omega[i] == 0:
            return None
        bound[i] = 2.0 * abs(p.at[i]) / (abs(p.omega[i]) * W)
    return bound


def estimate_averages(
    spec: SystemSpec,
    grid: Grid,
    horizon: float | None = None,
    min_window: float | None = None,
    dt: float = 1e-2,
    *,
    method: str = "auto",
    lattice_step: float | None = None,
) -> AverageEstimate:
    """Estimate m[f_i] and M[f_i].

    ``method="auto"`` uses the one-period mean when the system has a period
    and the finite-horizon window scan otherwise.  The window endpoints sit
    on a lattice of spacing ``lattice_step`` (default ``min_window / 10``).
    """
    if method not in ("auto", "exact_periodic", "finite_horizon"):
        raise ValueError(f"unknown method {method!r}")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    period = spec.period
    if method == "exact_periodic" and period <= 0:
        raise ValueError("exact_periodic needs a system with a declared period")
    if method == "exact_periodic" or (method == "auto" and period > 0):
        return _periodic(spec, grid, period, dt)

    if horizon is None or min_window is None:
        raise ValueError("finite_horizon needs horizon and min_window")
    if not (0 < min_window < horizon):
        raise ValueError(f"need 0 < min_window < horizon, got W={min_window}, H={horizon}")
    step = lattice_step or min_window / 10.0
    n_t = int(math.ceil(horizon / dt)) + 1
    times = np.linspace(0.0, horizon, n_t)
    lo, hi = spatial_extrema_series(spec, grid, times)
    ends = np.arange(0.0, horizon + 1e-9 * horizon, step)
    ends = ends[ends <= horizon]
    S, T = np.meshgrid(ends, ends, indexing="ij")
    ok = T - S >= min_window - 1e-9 * min_window
    S, T = S[ok], T[ok]
    m = np.empty(spec.n_species)
    M = np.empty(spec.n_species)
    for i in range(spec.n_species):
        clo = _cumulative(times, lo[i], ends)
        chi = _cumulative(times, hi[i], ends)
        idx_s = np.searchsorted(ends, S)
        idx_t = np.searchsorted(ends, T)
        m[i] = ((clo[idx_t] - clo[idx_s]) / (T - S)).min()
        M[i] = ((chi[idx_t] - chi[idx_s]) / (T - S)).max()
    bound = _lv_truncation_bound(spec, min_window) if spec.family == "lotka_volterra" else None
    return AverageEstimate(
        m=m, M=M, method="finite_horizon", horizon=float(horizon),
        min_window=float(min_window), dt=float(dt), error_bound=bound,
    )


def _periodic(spec, grid, period, dt):
    # periodic trapezoid = plain mean over equispaced samples of one period
    n = max(256, int(math.ceil(period / dt)))
    times = np.linspace(0.0, period, n, endpoint=False)
    lo, hi = spatial_extrema_series(spec, grid, times)
    m = lo.mean(axis=1)
    M = hi.mean(axis=1)
    return AverageEstimate(
        m=m, M=M, method="exact_periodic", horizon=float(period), dt=float(period / n),
        error_bound=np.zeros(spec.n_species),
    )
