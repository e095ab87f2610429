"""Competitive Kolmogorov growth rates f_i(t, x, u) and the constants derived from them.

Two families are supported.  ``lotka_volterra`` is fully closed form::

    a_i(t, x)  = a0_i + at_i sin(omega_i t + phi_i) + ax_i s(x)
    b_ij(t)    = b0_ij + bt_ij cos(omega_b_ij t + psi_ij)
    f_i(t,x,u) = a_i(t, x) - sum_j b_ij(t) u_j

``sampled_callback`` wraps user evaluators for f and its u-Jacobian; every
bound extracted from it is a sampled estimate.

Array conventions: a point array ``x`` has the spatial axis first,
``(dim, ...)``; a density array ``u`` has the species axis first,
``(n_species, ...)``.  Evaluators broadcast over the trailing axes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import Grid

FAMILIES = ("lotka_volterra", "sampled_callback")
PROFILE_KINDS = ("constant", "cosine", "gaussian")


class ModelError(ValueError):
    """Bad model definition or a non-finite evaluation."""


class DomainError(ValueError):
    """Evaluation requested outside t >= 0, x in the closed domain, u >= 0."""


class AssumptionViolation(ModelError):
    """A structural hypothesis on f (e.g. A3, b_lower_ii > 0) fails."""


@dataclass(frozen=True)
class SpatialProfile:
    """Smooth bounded profile s(x) multiplying the spatial part of a_i."""

    kind: str = "constant"
    lengths: tuple[float, ...] = (1.0,)
    center: tuple[float, ...] = (0.5,)
    width: float = 0.1

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ModelError(f"unknown profile kind {self.kind!r}; expected one of {PROFILE_KINDS}")
        if self.width <= 0 or any(L <= 0 for L in self.lengths):
            raise ModelError("profile lengths and width must be positive")

    def _per_axis(self, values, dim):
        values = tuple(values)
        return values + (values[-1],) * max(0, dim - len(values))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        dim = x.shape[0]
        if self.kind == "constant":
            return np.ones(x.shape[1:])
        if self.kind == "cosine":
            lengths = self._per_axis(self.lengths, dim)
            out = np.ones(x.shape[1:])
            for k in range(dim):
                out = out * np.cos(np.pi * x[k] / lengths[k])
            return out
        center = self._per_axis(self.center, dim)
        r2 = sum((x[k] - center[k]) ** 2 for k in range(dim))
        return np.exp(-r2 / (2.0 * self.width**2))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lengths": list(self.lengths),
            "center": list(self.center),
            "width": self.width,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpatialProfile":
        return cls(
            kind=d.get("kind", "constant"),
            lengths=tuple(float(v) for v in d.get("lengths", (1.0,))),
            center=tuple(float(v) for v in d.get("center", (0.5,))),
            width=float(d.get("width", 0.1)),
        )


def _frozen(arr, shape, name):
    a = np.array(arr, dtype=float)
    if a.shape != shape:
        raise ModelError(f"{name} must have shape {shape}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ModelError(f"{name} contains non-finite entries")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LVParams:
    a0: np.ndarray
    b0: np.ndarray
    at: np.ndarray
    omega: np.ndarray
    phi: np.ndarray
    ax: np.ndarray
    bt: np.ndarray
    omega_b: np.ndarray
    psi: np.ndarray
    profile: SpatialProfile

    def a(self, t, x):
        """Intrinsic rates, shape ``(N, *x.shape[1:])``."""
        s = self.profile(x)
        tail = (None,) * s.ndim
        temporal = self.a0 + self.at * np.sin(self.omega * t + self.phi)
        return temporal[(slice(None),) + tail] + self.ax[(slice(None),) + tail] * s

    def b(self, t):
        return self.b0 + self.bt * np.cos(self.omega_b * t + self.psi)


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """An N-species competitive Kolmogorov system.

    Build with :meth:`lotka_volterra` or :meth:`from_callback` rather than
    calling the constructor directly.
    """

    n_species: int
    family: str
    lv: LVParams | None = None
    growth: Callable | None = field(default=None, repr=False)
    jacobian: Callable | None = field(default=None, repr=False)
    declared_period: float | None = None

    def __post_init__(self):
        if int(self.n_species) != self.n_species or self.n_species < 1:
            raise ModelError(f"n_species must be a positive integer, got {self.n_species}")
        if self.family not in FAMILIES:
            raise ModelError(f"unknown family {self.family!r}")
        if self.family == "lotka_volterra" and self.lv is None:
            raise ModelError("lotka_volterra family needs lv parameters")
        if self.family == "sampled_callback" and (self.growth is None or self.jacobian is None):
            raise ModelError("sampled_callback family needs growth and jacobian evaluators")
        if self.declared_period is not None and self.declared_period < 0:
            raise ModelError("period must be >= 0")

    @classmethod
    def lotka_volterra(
        cls,
        a0,
        b0,
        *,
        at=None,
        omega=None,
        phi=None,
        ax=None,
        bt=None,
        omega_b=None,
        psi=None,
        profile: SpatialProfile | None = None,
        period: float | None = None,
    ) -> "SystemSpec":
        a0 = np.atleast_1d(np.asarray(a0, dtype=float))
        n = a0.shape[0]
        vec = lambda v, name: _frozen(np.zeros(n) if v is None else v, (n,), name)  # noqa: E731
        mat = lambda v, name: _frozen(np.zeros((n, n)) if v is None else np.atleast_2d(v), (n, n), name)  # noqa: E731
        params = LVParams(
            a0=vec(a0, "a0"),
            b0=mat(b0, "b0"),
            at=vec(at, "at"),
            omega=vec(omega, "omega"),
            phi=vec(phi, "phi"),
            ax=vec(ax, "ax"),
            bt=mat(bt, "bt"),
            omega_b=mat(omega_b, "omega_b"),
            psi=mat(psi, "psi"),
            profile=profile or SpatialProfile(),
        )
        lower = params.b0 - np.abs(params.bt)
        diag = np.diag(lower)
        if np.any(diag <= 0):
            i = int(np.argmin(diag))
            raise AssumptionViolation(
                f"(A3) needs b0_ii - |bt_ii| > 0; species {i + 1} has {diag[i]:g}"
            )
        off = lower[~np.eye(n, dtype=bool)]
        if np.any(off < 0):
            raise AssumptionViolation("competitivity needs b0_ij - |bt_ij| >= 0 for i != j")
        return cls(n_species=n, family="lotka_volterra", lv=params, declared_period=period)

    @classmethod
    def from_callback(cls, n_species: int, growth, jacobian, period: float = 0.0) -> "SystemSpec":
        """Wrap ``growth(t, x, u) -> (N, ...)`` and ``jacobian(t, x, u) -> (N, N, ...)``.

        ``period = 0`` means aperiodic.
        """
        return cls(
            n_species=n_species,
            family="sampled_callback",
            growth=growth,
            jacobian=jacobian,
            declared_period=float(period),
        )

    @property
    def period(self) -> float:
        """Common period of all time dependence; 0.0 when unknown/aperiodic.

        Time-independent Lotka-Volterra systems report 1.0 (any period works).
        """
        if self.declared_period is not None:
            return float(self.declared_period)
        if self.family != "lotka_volterra":
            return 0.0
        p = self.lv
        freqs = np.concatenate([p.omega[p.at != 0], p.omega_b[p.bt != 0]])
        freqs = np.abs(freqs[freqs != 0])
        if freqs.size == 0:
            return 1.0
        if np.allclose(freqs, freqs[0], rtol=1e-12, atol=0):
            return 2 * math.pi / freqs[0]
        return 0.0

    @property
    def is_constant(self) -> bool:
        """True for Lotka-Volterra with no time or space variation."""
        if self.family != "lotka_volterra":
            return False
        p = self.lv
        return not (np.any(p.at) or np.any(p.bt) or np.any(p.ax))

    # -- vectorized evaluation, no validation ---------------------------------

    def rates(self, t, x, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.family == "lotka_volterra":
            a = self.lv.a(t, x)
            b = self.lv.b(t)
            return a - np.tensordot(b, u, axes=(1, 0))
        x = np.asarray(x, dtype=float)
        shape = np.broadcast_shapes(x.shape[1:], u.shape[1:])
        out = _as_array(self.growth(t, x, u), (self.n_species,) + shape)
        return out

    def rates_jacobian(self, t, x, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        x = np.asarray(x, dtype=float)
        n = self.n_species
        shape = np.broadcast_shapes(x.shape[1:], u.shape[1:])
        if self.family == "lotka_volterra":
            b = self.lv.b(t)
            return np.broadcast_to(-b.reshape((n, n) + (1,) * len(shape)), (n, n) + shape).copy()
        return _as_array(self.jacobian(t, x, u), (n, n) + shape)

    def as_callback(self) -> "SystemSpec":
        """Same system behind the sampled-callback interface (useful as a test oracle)."""
        return SystemSpec.from_callback(
            self.n_species, self.rates, self.rates_jacobian, period=self.period
        )

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        if self.family != "lotka_volterra":
            raise ModelError("only the lotka_volterra family is serializable")
        p = self.lv
        d = {
            "n_species": self.n_species,
            "family": self.family,
            "a0": p.a0.tolist(),
            "at": p.at.tolist(),
            "omega": p.omega.tolist(),
            "phi": p.phi.tolist(),
            "ax": p.ax.tolist(),
            "b0": p.b0.tolist(),
            "bt": p.bt.tolist(),
            "omega_b": p.omega_b.tolist(),
            "psi": p.psi.tolist(),
            "profile": p.profile.to_dict(),
        }
        if self.declared_period is not None:
            d["period"] = self.declared_period
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SystemSpec":
        family = d.get("family", "lotka_volterra")
        if family != "lotka_volterra":
            raise ModelError(f"family {family!r} cannot be loaded from a config")
        spec = cls.lotka_volterra(
            d["a0"],
            d["b0"],
            at=d.get("at"),
            omega=d.get("omega"),
            phi=d.get("phi"),
            ax=d.get("ax"),
            bt=d.get("bt"),
            omega_b=d.get("omega_b"),
            psi=d.get("psi"),
            profile=SpatialProfile.from_dict(d.get("profile", {})),
            period=d.get("period"),
        )
        if "n_species" in d and int(d["n_species"]) != spec.n_species:
            raise ModelError(
                f"n_species={d['n_species']} disagrees with len(a0)={spec.n_species}"
            )
        return spec


def _as_array(res, shape) -> np.ndarray:
    # callbacks may return nested lists mixing scalars and arrays
    if isinstance(res, (list, tuple)):
        res = np.stack([_as_array(r, shape[1:]) for r in res])
    return np.broadcast_to(np.asarray(res, dtype=float), shape).copy()


def _check_args(spec: SystemSpec, t, x, u, grid: Grid | None):
    u = np.asarray(u, dtype=float).reshape(-1)
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(-1)
    if u.shape[0] != spec.n_species:
        raise DomainError(f"density vector has {u.shape[0]} entries, expected {spec.n_species}")
    if not np.isfinite(t) or t < 0:
        raise DomainError(f"time must be >= 0, got {t}")
    if not np.all(np.isfinite(u)) or np.any(u < 0):
        raise DomainError(f"densities must be finite and >= 0, got {u}")
    if grid is not None:
        if x.shape[0] != grid.dim or not grid.contains(x):
            raise DomainError(f"point {x} lies outside the closed domain {grid.extents}")
    return x, u


def eval_growth(spec: SystemSpec, t: float, x, u, grid: Grid | None = None) -> np.ndarray:
    """Growth rates ``(f_1, ..., f_N)`` at a single point.

    When ``grid`` is given, ``x`` is checked against its closed domain.
    """
    x, u = _check_args(spec, t, x, u, grid)
    out = spec.rates(t, x, u)
    if not np.all(np.isfinite(out)):
        raise ModelError(f"non-finite growth rate at t={t}, x={x}, u={u}")
    return out


def eval_growth_jacobian(spec: SystemSpec, t: float, x, u, grid: Grid | None = None) -> np.ndarray:
    """Matrix ``J[i, j] = df_i/du_j`` at a single point."""
    x, u = _check_args(spec, t, x, u, grid)
    out = spec.rates_jacobian(t, x, u)
    if not np.all(np.isfinite(out)):
        raise ModelError(f"non-finite jacobian at t={t}, x={x}, u={u}")
    return out


# -- bounds ---------------------------------------------------------------------


@dataclass(frozen=True)
class SamplingPolicy:
    """Resolution used whenever bounds must be sampled rather than read off.

    If the system declares a period, one period of time samples is used and
    ``horizon`` is ignored.
    """

    grid: Grid | None = None
    horizon: float = 20.0
    dt: float = 0.05
    u_points: int = 17
    u_max: float = 10.0
    growth_tol: float = 0.5
    max_lattice: int = 200_000


def _sample_times(spec: SystemSpec, policy: SamplingPolicy):
    P = spec.period
    if P > 0:
        n = max(64, int(math.ceil(P / policy.dt)))
        return np.linspace(0.0, P, n, endpoint=False), True
    n = int(math.ceil(policy.horizon / policy.dt)) + 1
    return np.linspace(0.0, policy.horizon, n), False


def _u_lattice(upper, points: int, cap: int) -> np.ndarray:
    n = len(upper)
    per_axis = points
    while per_axis > 2 and per_axis**n > cap:
        per_axis -= 1
    axes = [np.linspace(0.0, hi, per_axis) for hi in upper]
    return np.array(list(itertools.product(*axes))).T  # (N, n_u)


@dataclass(frozen=True, eq=False)
class BoundsReport:
    b_lower: np.ndarray
    b_upper: np.ndarray
    a_upper: np.ndarray
    a_lower: np.ndarray
    epsilon_used: float
    sampling_meta: dict
    _upper_fn: Callable = field(repr=False, default=None)

    def box(self, epsilon: float | None = None) -> np.ndarray:
        """Upper corners of B(eps) = prod [0, a_upper_i / b_lower_ii + eps]."""
        eps = self.epsilon_used if epsilon is None else epsilon
        return self.a_upper / self.b_lower + eps

    def upper_at(self, epsilon: float) -> np.ndarray:
        """b_upper(eps), re-evaluated (or read off) at another enlargement."""
        if epsilon == self.epsilon_used:
            return self.b_upper
        return self._upper_fn(epsilon)

    def to_dict(self) -> dict:
        return {
            "b_lower": self.b_lower.tolist(),
            "b_upper": self.b_upper.tolist(),
            "a_upper": self.a_upper.tolist(),
            "a_lower": self.a_lower.tolist(),
            "epsilon_used": self.epsilon_used,
            "sampling_meta": self.sampling_meta,
        }


def _profile_range(spec: SystemSpec, grid: Grid | None):
    prof = spec.lv.profile
    if prof.kind == "constant" or not np.any(spec.lv.ax):
        return 1.0, 1.0
    if grid is None:
        raise ModelError("a spatially varying profile needs a grid to bound s(x)")
    s = prof(grid.points)
    return float(s.min()), float(s.max())


def coefficient_bounds(
    spec: SystemSpec, epsilon: float = 0.0, sampling: SamplingPolicy | None = None
) -> BoundsReport:
    """Extract b_lower_ii, b_upper_ij(eps), a_upper_i and a_lower_i.

    Lotka-Volterra bounds are exact (b_upper does not depend on eps).  For
    callbacks everything is a sampled sup/inf: a-bounds over time x grid,
    b_lower over a lattice of ``[0, u_max]^N`` and b_upper over a lattice
    of the box B(eps), which needs a_upper and b_lower first.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    sampling = sampling or SamplingPolicy()
    if spec.family == "lotka_volterra":
        return _lv_bounds(spec, epsilon, sampling)
    return _sampled_bounds(spec, epsilon, sampling)


def _lv_bounds(spec, epsilon, sampling):
    p = spec.lv
    smin, smax = _profile_range(spec, sampling.grid)
    spatial_hi = np.where(p.ax >= 0, p.ax * smax, p.ax * smin)
    spatial_lo = np.where(p.ax >= 0, p.ax * smin, p.ax * smax)
    a_upper = p.a0 + np.abs(p.at) + spatial_hi
    a_lower = p.a0 - np.abs(p.at) + spatial_lo
    b_upper = p.b0 + np.abs(p.bt)
    b_lower = np.diag(p.b0 - np.abs(p.bt)).copy()
    if np.any(b_lower <= 0):
        raise AssumptionViolation("(A3) fails: b_lower_ii <= 0")
    meta = {"method": "closed_form", "approximate": False, "profile_range": [smin, smax]}
    return BoundsReport(
        b_lower=b_lower,
        b_upper=b_upper,
        a_upper=a_upper,
        a_lower=a_lower,
        epsilon_used=float(epsilon),
        sampling_meta=meta,
        _upper_fn=lambda eps: b_upper,
    )


def _sampled_bounds(spec, epsilon, sampling):
    grid = sampling.grid
    if grid is None:
        raise ModelError("sampled bounds need sampling.grid")
    n = spec.n_species
    times, one_period = _sample_times(spec, sampling)
    X = grid.points[:, :, None]  # (dim, n_x, 1)

    zero = np.zeros((n, 1))
    a_samples = np.stack([spec.rates(t, grid.points, zero) for t in times])
    if not np.all(np.isfinite(a_samples)):
        raise ModelError("non-finite growth rate while sampling f(t, x, 0)")
    a_upper = a_samples.max(axis=(0, 2))
    a_lower = a_samples.min(axis=(0, 2))

    def extreme_neg_jac(upper, reducer):
        U = _u_lattice(upper, sampling.u_points, sampling.max_lattice)[:, None, :]
        acc = None
        for t in times:
            J = -spec.rates_jacobian(t, X, U)
            if not np.all(np.isfinite(J)):
                raise ModelError(f"non-finite jacobian while sampling at t={t}")
            red = reducer(J.reshape(n, n, -1), axis=2)
            acc = red if acc is None else reducer(np.stack([acc, red]), axis=0)
        return acc

    b_lower = np.diag(extreme_neg_jac(np.full(n, sampling.u_max), np.min)).copy()
    if np.any(b_lower <= 0):
        i = int(np.argmin(b_lower))
        raise AssumptionViolation(
            f"(A3) fails: sampled -df_{i + 1}/du_{i + 1} reaches {b_lower[i]:g} <= 0"
        )

    cache = {}

    def upper_fn(eps):
        if eps not in cache:
            cache[eps] = extreme_neg_jac(a_upper / b_lower + eps, np.max)
        return cache[eps]

    meta = {
        "method": "sampled",
        "approximate": True,
        "one_period": one_period,
        "n_times": len(times),
        "t_span": [float(times[0]), float(times[-1])],
        "grid": grid.descriptor(),
        "u_points": sampling.u_points,
        "u_max": sampling.u_max,
    }
    return BoundsReport(
        b_lower=b_lower,
        b_upper=upper_fn(float(epsilon)),
        a_upper=a_upper,
        a_lower=a_lower,
        epsilon_used=float(epsilon),
        sampling_meta=meta,
        _upper_fn=upper_fn,
    )


# -- assumption checks ----------------------------------------------------------


@dataclass
class CheckResult:
    passed: bool
    detail: str = ""
    witness: dict | None = None

    def to_dict(self):
        return {"passed": self.passed, "detail": self.detail, "witness": self.witness}


@dataclass
class AssumptionReport:
    checks: dict[str, CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failures(self) -> list[str]:
        return [k for k, c in self.checks.items() if not c.passed]

    def to_dict(self):
        return {k: c.to_dict() for k, c in self.checks.items()}


def validate_assumptions(spec: SystemSpec, sampling: SamplingPolicy | None = None) -> AssumptionReport:
    """Check (A1)-(A4) and competitivity, in closed form or by sampling.

    Failures are report content, never exceptions.  For aperiodic callbacks
    "bounded" is judged by comparing the sup over the second half of the
    sampled horizon against the first half (allowed growth ``growth_tol``).
    """
    sampling = sampling or SamplingPolicy()
    if spec.family == "lotka_volterra":
        ok = CheckResult(True, "closed form, enforced at construction")
        return AssumptionReport(
            {
                "A1": CheckResult(True, "smooth closed form"),
                "A2": ok,
                "A3": ok,
                "A4": ok,
                "competitive": ok,
            }
        )

    grid = sampling.grid
    if grid is None:
        raise ModelError("sampled assumption checks need sampling.grid")
    n = spec.n_species
    times, one_period = _sample_times(spec, sampling)
    X = grid.points[:, :, None]
    U = _u_lattice(np.full(n, sampling.u_max), sampling.u_points, sampling.max_lattice)[:, None, :]
    half = len(times) // 2

    def witness(t, ix, iu, **extra):
        w = {"t": float(t), "x": grid.points[:, ix].tolist(), "u": U[:, 0, iu].tolist()}
        w.update(extra)
        return w

    checks: dict[str, CheckResult] = {
        "A1": CheckResult(True, "continuity is not observable by sampling; assumed")
    }

    # A2: f(., ., 0) bounded
    a_samples = np.stack([spec.rates(t, grid.points, np.zeros((n, 1))) for t in times])
    checks["A2"] = _boundedness(np.abs(a_samples), times, half, one_period, sampling, "f_i(t,x,0)")

    diag_max = np.full(n, -np.inf)
    diag_wit = [None] * n
    off_max = -np.inf
    off_wit = None
    abs_first = 0.0
    abs_second = 0.0
    finite = True
    for k, t in enumerate(times):
        J = spec.rates_jacobian(t, X, U)  # (n, n, n_x, n_u)
        if not np.all(np.isfinite(J)):
            finite = False
            break
        for i in range(n):
            jd = J[i, i]
            idx = np.unravel_index(np.argmax(jd), jd.shape)
            if jd[idx] > diag_max[i]:
                diag_max[i] = jd[idx]
                diag_wit[i] = witness(t, idx[0], idx[1], species=[i + 1, i + 1], value=float(jd[idx]))
        idx = np.unravel_index(np.argmax(J), J.shape)
        if J[idx] > off_max:
            off_max = J[idx]
            off_wit = witness(
                t, idx[2], idx[3], species=[int(idx[0]) + 1, int(idx[1]) + 1], value=float(J[idx])
            )
        m = float(np.abs(J).max())
        if k < half:
            abs_first = max(abs_first, m)
        else:
            abs_second = max(abs_second, m)

    if not finite:
        bad = CheckResult(False, f"non-finite jacobian at t={t}", {"t": float(t)})
        checks.update({"A3": bad, "A4": bad, "competitive": bad})
        return AssumptionReport(checks)

    worst = int(np.argmax(diag_max))
    if diag_max[worst] < 0:
        checks["A3"] = CheckResult(True, f"sampled b_lower = {(-diag_max).tolist()}")
    else:
        checks["A3"] = CheckResult(
            False, f"df_{worst + 1}/du_{worst + 1} reaches {diag_max[worst]:g} >= 0", diag_wit[worst]
        )

    grow = (not one_period) and abs_second > (1.0 + sampling.growth_tol) * abs_first + 1e-12
    checks["A4"] = CheckResult(
        not grow,
        f"sup|df/du| first half {abs_first:g}, second half {abs_second:g}"
        + (" (growing: unbounded)" if grow else ""),
    )
    checks["competitive"] = (
        CheckResult(True, "all sampled df_i/du_j <= 0")
        if off_max <= 0
        else CheckResult(False, f"df/du entry reaches {off_max:g} > 0", off_wit)
    )
    return AssumptionReport(checks)


def _boundedness(abs_samples, times, half, one_period, sampling, label):
    if not np.all(np.isfinite(abs_samples)):
        k = int(np.argwhere(~np.isfinite(abs_samples))[0][0])
        return CheckResult(False, f"non-finite {label}", {"t": float(times[k])})
    first = float(abs_samples[:half].max()) if half else 0.0
    second = float(abs_samples[half:].max())
    if not one_period and second > (1.0 + sampling.growth_tol) * first + 1e-12:
        k = half + int(np.argmax(abs_samples[half:].reshape(len(times) - half, -1).max(axis=1)))
        return CheckResult(
            False, f"{label} grows over the horizon ({first:g} -> {second:g})", {"t": float(times[k])}
        )
    return CheckResult(True, f"sup|{label}| = {max(first, second):g}")
