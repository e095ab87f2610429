"""Positivity-preserving time stepping for du_i/dt = Lap u_i + f_i(t, x, u) u_i.

One step is a Strang splitting: backward-Euler diffusion over dt/2, the
reaction over dt integrated per node by classical RK4 on w = ln u, then
another dt/2 of diffusion.  The reaction is substepped when dt exceeds the
explicit stability limit of RK4 on the log variables, so very large dt
still returns a positive, bounded state.  The diffusion matrix I - (dt/2) Lap_h is a
nonsingular M-matrix with unit row sums, so it maps positive fields to
positive fields; the log-space reaction cannot produce a sign change.

Backward Euler makes the whole step first order in dt.  ``diffusion =
"exponential"`` replaces it by the exact semigroup exp((dt/2) Lap_h),
applied through the DCT-I that diagonalizes the reflecting Laplacian; it is
also positivity preserving (Lap_h is Metzler) and restores second order.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import Field, Grid, GridError
from .model import SystemSpec

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class PositivityError(SolverError):
    def __init__(self, msg, species=None, node=None, t=None):
        super().__init__(msg)
        self.species = species
        self.node = node
        self.t = t


class SimulationAborted(SolverError):
    """A step failed; ``partial`` holds everything recorded before the failure."""

    def __init__(self, msg, partial):
        super().__init__(msg)
        self.partial = partial


DIFFUSION_SCHEMES = ("backward_euler", "exponential")


@dataclass(frozen=True)
class SolveControls:
    dt: float
    t_end: float
    record_every: int = 1
    positivity_floor: float = 1e-300
    splitting: str = "strang"
    diffusion: str = "backward_euler"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be > 0, got {self.t_end}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError(f"record_every must be a positive integer, got {self.record_every}")
        if self.splitting != "strang":
            raise ValueError(f"unsupported splitting {self.splitting!r}")
        if self.diffusion not in DIFFUSION_SCHEMES:
            raise ValueError(f"diffusion must be one of {DIFFUSION_SCHEMES}, got {self.diffusion!r}")

    @property
    def n_steps(self) -> int:
        return max(1, int(math.ceil(self.t_end / self.dt - 1e-9)))

    def to_dict(self) -> dict:
        return {
            "dt": self.dt,
            "t_end": self.t_end,
            "record_every": self.record_every,
            "positivity_floor": self.positivity_floor,
            "splitting": self.splitting,
            "diffusion": self.diffusion,
        }


@functools.lru_cache(maxsize=32)
def _diffusion_solver(grid: Grid, half_dt: float):
    A = sp.identity(grid.n_nodes, format="csc") - half_dt * grid.laplacian.tocsc()
    try:
        return spla.splu(A.tocsc())
    except RuntimeError as exc:  # singular factor
        raise SolverError(f"diffusion factorization failed: {exc}") from exc


@functools.lru_cache(maxsize=32)
def _heat_multipliers(grid: Grid, half_dt: float) -> np.ndarray:
    eig = [(2.0 * np.cos(np.pi * np.arange(n) / (n - 1)) - 2.0) / h**2
           for n, h in zip(grid.nodes, grid.spacing)]
    if grid.dim == 1:
        lam = eig[0]
    else:
        lam = eig[1][:, None] + eig[0][None, :]
    return np.exp(half_dt * lam)


def _diffuse(grid: Grid, values: np.ndarray, half_dt: float, scheme: str = "backward_euler") -> np.ndarray:
    if scheme == "exponential":
        shape = (values.shape[0],) + grid.nodes[::-1]
        axes = tuple(range(1, grid.dim + 1))
        spec = sfft.dctn(values.reshape(shape), type=1, axes=axes)
        spec *= _heat_multipliers(grid, float(half_dt))
        return sfft.idctn(spec, type=1, axes=axes).reshape(values.shape)
    lu = _diffusion_solver(grid, float(half_dt))
    return lu.solve(np.ascontiguousarray(values.T)).T


def _rk4_log(spec, X, w, t, h):
    k1 = spec.rates(t, X, np.exp(w))
    k2 = spec.rates(t + h / 2, X, np.exp(w + h / 2 * k1))
    k3 = spec.rates(t + h / 2, X, np.exp(w + h / 2 * k2))
    k4 = spec.rates(t + h, X, np.exp(w + h * k3))
    return w + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _log_stiffness(spec, X, values, t) -> float:
    # d f_i / d ln u_j = J_ij u_j; row-sum norm, worst node
    J = spec.rates_jacobian(t, X, values)
    return float(np.abs(J * values[None, :, :]).sum(axis=1).max())


def _react(spec: SystemSpec, X: np.ndarray, values: np.ndarray, t: float, dt: float) -> np.ndarray:
    """RK4 on w = ln u, substepped so that h * stiffness <= 1 (one substep at usual dt)."""
    w = np.log(values)
    done = 0.0
    while dt - done > 1e-14 * dt:
        s = _log_stiffness(spec, X, np.exp(w) if done else values, t + done)
        h = dt - done if s * (dt - done) <= 1.0 else 1.0 / s
        w = _rk4_log(spec, X, w, t + done, h)
        done += h
    return np.exp(w)


def _advance(spec, grid, values, t, dt, floor=1e-300, scheme="backward_euler"):
    if np.any(values <= floor):
        i, k = np.unravel_index(np.argmin(values), values.shape)
        raise PositivityError(
            f"input density {values[i, k]:g} <= floor at species {i + 1}, node {k}",
            species=int(i), node=int(k), t=t,
        )
    half = _diffuse(grid, values, dt / 2, scheme)
    if np.any(half <= 0):
        # only reachable through roundoff on values near the floor
        raise SolverError("diffusion half-step produced a nonpositive value")
    react = _react(spec, grid.points, half, t, dt)
    out = _diffuse(grid, react, dt / 2, scheme)
    if not np.all(np.isfinite(out)):
        raise SolverError(f"non-finite state after step at t={t}")
    if np.any(out <= floor):
        i, k = np.unravel_index(np.argmin(out), out.shape)
        raise PositivityError(
            f"density {out[i, k]:g} <= floor at species {i + 1}, node {k}, t={t + dt}",
            species=int(i), node=int(k), t=t + dt,
        )
    return out


def step(spec: SystemSpec, grid: Grid, state: Field, t: float, dt: float,
         positivity_floor: float = 1e-300, diffusion: str = "backward_euler") -> Field:
    """Advance ``state`` from ``t`` to ``t + dt``."""
    if state.grid != grid:
        raise GridError("state lives on a different grid")
    if state.n_species != spec.n_species:
        raise GridError(f"state has {state.n_species} species, system has {spec.n_species}")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if diffusion not in DIFFUSION_SCHEMES:
        raise ValueError(f"diffusion must be one of {DIFFUSION_SCHEMES}")
    return Field(grid, _advance(spec, grid, state.values, t, dt, positivity_floor, diffusion))


@dataclass(eq=False)
class Trajectory:
    grid: Grid
    times: np.ndarray
    values: np.ndarray  # (n_snapshots, n_species, n_nodes)
    dt: float
    steps: int
    rejected: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    def field(self, k: int) -> Field:
        return Field(self.grid, self.values[k])

    def index_of(self, t: float, tol: float | None = None) -> int:
        tol = 0.5 * self.dt if tol is None else tol
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > tol:
            raise ValueError(f"no snapshot within {tol:g} of t={t}")
        return k


def _check_initial(spec, grid, u0, name):
    if u0.grid != grid:
        raise GridError(f"{name} lives on a different grid")
    if u0.n_species != spec.n_species:
        raise GridError(f"{name} has {u0.n_species} species, system has {spec.n_species}")
    if np.any(u0.values <= 0):
        raise ValueError(f"{name} must be strictly positive")


def _run(spec, grid, inits, controls, t0):
    states = [f.values for f in inits]
    n = controls.n_steps
    times = [t0]
    snaps = [[s] for s in states]
    steps_done = 0
    try:
        for k in range(1, n + 1):
            t = t0 + (k - 1) * controls.dt
            states = [
                _advance(spec, grid, s, t, controls.dt, controls.positivity_floor, controls.diffusion)
                for s in states
            ]
            steps_done = k
            if k % controls.record_every == 0 or k == n:
                times.append(t0 + k * controls.dt)
                for buf, s in zip(snaps, states):
                    buf.append(s)
    except SolverError as exc:
        partial = [
            Trajectory(grid, np.array(times), np.array(buf), controls.dt, steps_done,
                       meta={"error": str(exc)})
            for buf in snaps
        ]
        raise SimulationAborted(str(exc), partial if len(partial) > 1 else partial[0]) from exc
    return [
        Trajectory(grid, np.array(times), np.array(buf), controls.dt, steps_done,
                   meta={"controls": controls.to_dict(), "t0": t0})
        for buf in snaps
    ]


def simulate(spec: SystemSpec, grid: Grid, u0: Field, controls: SolveControls,
             t0: float = 0.0) -> Trajectory:
    """Integrate from ``t0`` to ``t0 + t_end`` with fixed steps.

    Snapshots are stored at ``t0``, every ``record_every`` steps, and at the
    final step.  On failure raises :class:`SimulationAborted` carrying the
    partial trajectory.
    """
    _check_initial(spec, grid, u0, "u0")
    return _run(spec, grid, [u0], controls, t0)[0]


@dataclass(eq=False)
class PairTrajectory:
    """Two solutions recorded on the same time grid."""

    grid: Grid
    times: np.ndarray
    u: np.ndarray  # (n_snapshots, n_species, n_nodes)
    v: np.ndarray
    dt: float
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def n_species(self) -> int:
        return self.u.shape[1]

    def log_ratio_sup(self) -> np.ndarray:
        """Theta_i at each snapshot: max over nodes of |ln(u_i / v_i)|, shape (K, N)."""
        return np.abs(np.log(self.u) - np.log(self.v)).max(axis=2)

    def abs_diff_sup(self) -> np.ndarray:
        """max over nodes of |u_i - v_i|, shape (K, N)."""
        return np.abs(self.u - self.v).max(axis=2)


def simulate_pair(spec: SystemSpec, grid: Grid, u0: Field, v0: Field, controls: SolveControls,
                  t0: float = 0.0) -> PairTrajectory:
    _check_initial(spec, grid, u0, "u0")
    _check_initial(spec, grid, v0, "v0")
    tu, tv = _run(spec, grid, [u0, v0], controls, t0)
    return PairTrajectory(grid, tu.times, tu.values, tv.values, controls.dt, meta=dict(tu.meta))


def entry_index(pair: PairTrajectory, lower: float, upper: float, tol: float = 1e-6) -> int | None:
    """First snapshot at which both solutions lie in ``[lower - tol, upper + tol]``."""
    lo, hi = lower - tol, upper + tol
    inside = (
        (pair.u.min(axis=(1, 2)) >= lo) & (pair.u.max(axis=(1, 2)) <= hi)
        & (pair.v.min(axis=(1, 2)) >= lo) & (pair.v.max(axis=(1, 2)) <= hi)
    )
    hits = np.flatnonzero(inside)
    return int(hits[0]) if hits.size else None
