"""Lyapunov functional along solution pairs and empirical checks of its decay.

For two positive solutions u, v and positive weights alpha::

    Theta_i(t) = max_x |ln(u_i(t, x) / v_i(t, x))|
    Theta(t)   = sum_i alpha_i Theta_i(t)

A granted certificate predicts, once both solutions sit in the permanence
box, the componentwise Dini inequality

    D+ Theta_i <= -dl b_lower_ii Theta_i + du sum_{j != i} b_upper_ij(eps) Theta_j

and the exponential envelopes Theta(t) <= Theta(T) exp(-gamma (t - T)) and
sum_i sup|u_i - v_i|(t) <= Z sum_i sup|u_i - v_i|(T) exp(-gamma (t - T)).
The max over grid nodes (boundary included) stands in for the sup over the
closed domain, and forward differences between snapshots stand in for D+.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .certificate import Certificate
from .grid import Field, Grid, GridError
from .model import SystemSpec
from .solver import PairTrajectory, SolveControls, Trajectory, entry_index, simulate_pair


class CertificateRequired(ValueError):
    """Envelope constants are undefined for a denied certificate."""


def _log_ratio(u, v):
    return np.log(u) - np.log(v)


def theta(u: Field, v: Field, alpha) -> tuple[float, np.ndarray]:
    """Return ``(Theta, Theta_i)`` for two positive fields on the same grid."""
    if u.grid != v.grid:
        raise GridError("u and v live on different grids")
    if np.any(u.values <= 0) or np.any(v.values <= 0):
        raise ValueError("theta needs strictly positive fields")
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0) or alpha.shape != (u.n_species,):
        raise ValueError("alpha must be a positive vector with one entry per species")
    comps = np.abs(_log_ratio(u.values, v.values)).max(axis=1)
    return float(alpha @ comps), comps


@dataclass
class NormCheck:
    holds: bool
    in_box: bool
    lower_margin: float | None = None  # min of |ln(u/v)| - |u - v| / du
    upper_margin: float | None = None  # min of |u - v| / dl - |ln(u/v)|

    def to_dict(self):
        return self.__dict__.copy()


def norm_equivalence_check(u, v, delta_lower: float, delta_upper: float, tol: float = 1e-12) -> NormCheck:
    """Check |u - v| / du <= |ln(u / v)| <= |u - v| / dl node by node.

    ``u`` and ``v`` may be :class:`Field` objects or plain arrays.  Values
    outside ``[dl, du]`` are reported as out-of-box rather than checked.
    """
    u = u.values if isinstance(u, Field) else np.asarray(u, dtype=float)
    v = v.values if isinstance(v, Field) else np.asarray(v, dtype=float)
    lo, hi = delta_lower * (1 - 1e-15), delta_upper * (1 + 1e-15)
    if u.min() < lo or v.min() < lo or u.max() > hi or v.max() > hi:
        return NormCheck(False, False)
    diff = np.abs(u - v)
    lr = np.abs(_log_ratio(u, v))
    lower = float((lr - diff / delta_upper).min())
    upper = float((diff / delta_lower - lr).min())
    return NormCheck(lower >= -tol and upper >= -tol, True, lower, upper)


def dini_estimate(pair: PairTrajectory, k: int, components: np.ndarray | None = None) -> np.ndarray:
    """Forward difference of Theta_i between snapshots k and k + 1."""
    if not 0 <= k < len(pair) - 1:
        raise IndexError(f"need 0 <= k < {len(pair) - 1}, got {k}")
    comps = pair.log_ratio_sup() if components is None else components
    return (comps[k + 1] - comps[k]) / (pair.times[k + 1] - pair.times[k])


def inequality_rhs(cert: Certificate, components: np.ndarray) -> np.ndarray:
    """Right-hand side of the componentwise Dini inequality, rows = snapshots."""
    B = np.array(cert.b_upper_eps(), dtype=float)
    np.fill_diagonal(B, 0.0)
    dl, du = cert.delta_lower, cert.delta_upper
    return -dl * cert.bounds.b_lower * components + du * components @ B.T


def _require(cert: Certificate):
    if not cert.granted:
        raise CertificateRequired(
            f"certificate denied ({cert.first_failure}); envelope constants undefined"
        )


def _window(pair, cert, t_window, tol_entry):
    k0 = entry_index(pair, cert.delta_lower, cert.delta_upper, tol_entry)
    if k0 is None:
        return None, np.array([], dtype=int)
    t_stop = pair.times[-1] if t_window is None else pair.times[k0] + t_window + 1e-9
    idx = np.flatnonzero((np.arange(len(pair)) >= k0) & (pair.times <= t_stop))
    return k0, idx


@dataclass
class InequalityReport:
    passed: bool
    entry_index: int | None
    skipped: int
    checked: int
    fraction_ok: float
    max_excess: float  # max of residual - tol
    chain_ok: bool
    chain_max: float  # max of sum_i alpha_i rhs_i + gamma * Theta (<= 0 expected)
    times: np.ndarray = field(repr=False, default=None)
    residuals: np.ndarray = field(repr=False, default=None)
    tolerances: np.ndarray = field(repr=False, default=None)

    def to_dict(self):
        return {
            "passed": self.passed,
            "entry_index": self.entry_index,
            "skipped": self.skipped,
            "checked": self.checked,
            "fraction_ok": self.fraction_ok,
            "max_excess": self.max_excess,
            "chain_ok": self.chain_ok,
            "chain_max": self.chain_max,
        }


def verify_differential_inequality(
    pair: PairTrajectory,
    cert: Certificate,
    tol_model: float | None = None,
    *,
    t_window: float | None = None,
    tol_entry: float = 1e-6,
    chain_tol: float = 1e-12,
) -> InequalityReport:
    """Compare forward-difference D+ Theta_i with the inequality's right-hand side.

    The default tolerance per snapshot is ``10 * dt_snap * max_i |rhs_i| + 1e-6``
    where ``dt_snap`` is the snapshot spacing.  Also checks the aggregated
    chain sum_i alpha_i rhs_i <= -eps* sum_i Theta_i <= -gamma Theta, which
    is algebraic given the LP slack.
    """
    _require(cert)
    k0, idx = _window(pair, cert, t_window, tol_entry)
    if k0 is None:
        return InequalityReport(False, None, len(pair), 0, 0.0, np.inf, False, np.inf)
    idx = idx[idx < len(pair) - 1]
    comps = pair.log_ratio_sup()
    rhs = inequality_rhs(cert, comps)
    dt = np.diff(pair.times)[idx]
    dini = (comps[idx + 1] - comps[idx]) / dt[:, None]
    resid = dini - rhs[idx]
    if tol_model is None:
        tol = 10.0 * dt * np.abs(rhs[idx]).max(axis=1) + 1e-6
    else:
        tol = np.full(len(idx), float(tol_model))
    ok = np.all(resid <= tol[:, None], axis=1)

    alpha = cert.alpha
    th = comps @ alpha
    agg = rhs @ alpha
    chain1 = agg + cert.slack * comps.sum(axis=1)
    chain2 = -cert.slack * comps.sum(axis=1) + cert.gamma * th
    chain_max = float(max(chain1[idx].max(initial=-np.inf), chain2[idx].max(initial=-np.inf)))
    n = len(idx)
    return InequalityReport(
        passed=bool(ok.all()) if n else False,
        entry_index=k0,
        skipped=k0,
        checked=n,
        fraction_ok=float(ok.mean()) if n else 0.0,
        max_excess=float((resid - tol[:, None]).max()) if n else np.inf,
        chain_ok=chain_max <= chain_tol,
        chain_max=chain_max,
        times=pair.times[idx],
        residuals=resid,
        tolerances=tol,
    )


@dataclass
class EnvelopeReport:
    passed: bool
    degenerate: bool
    entry_index: int | None
    entry_time: float | None
    theta_pass: bool
    supnorm_pass: bool
    max_violation: float  # largest relative excess over either envelope
    measured_rate: float | None
    gamma: float
    Z: float
    sandwich_ok: bool
    failure_kind: str | None = None
    series: dict = field(repr=False, default_factory=dict)

    def to_dict(self):
        d = {k: v for k, v in self.__dict__.items() if k != "series"}
        return d


def verify_envelope(
    pair: PairTrajectory,
    cert: Certificate,
    tol_rel: float = 1e-2,
    *,
    t_window: float | None = None,
    tol_entry: float = 1e-6,
    default_tol_rel: float = 1e-2,
) -> EnvelopeReport:
    """Check both exponential envelopes from the entry time on.

    A violation no larger than ``default_tol_rel`` is classified as
    ``"model_tolerance"`` (discretization noise under a tighter setting);
    anything larger as ``"envelope_violation"``.
    """
    _require(cert)
    gamma, Z = cert.gamma, cert.Z
    k0, idx = _window(pair, cert, t_window, tol_entry)
    if k0 is None:
        return EnvelopeReport(False, False, None, None, False, False, np.inf, None, gamma, Z,
                              False, "not_entered")
    comps = pair.log_ratio_sup()
    th = comps @ cert.alpha
    sup = pair.abs_diff_sup().sum(axis=1)
    t = pair.times[idx]
    t0 = pair.times[k0]
    decay = np.exp(-gamma * (t - t0))
    env_theta = th[k0] * decay
    env_sup = Z * sup[k0] * decay
    series = {
        "t": t, "theta": th[idx], "theta_i": comps[idx], "envelope": env_theta,
        "supnorm": sup[idx], "supnorm_envelope": env_sup,
    }
    if th[k0] == 0.0:
        return EnvelopeReport(True, True, k0, float(t0), True, True, 0.0, None, gamma, Z, True,
                              series=series)

    with np.errstate(divide="ignore", invalid="ignore"):
        ex_theta = np.where(env_theta > 0, th[idx] / env_theta - 1.0, 0.0)
        ex_sup = np.where(env_sup > 0, sup[idx] / env_sup - 1.0, 0.0)
    theta_pass = bool(np.all(ex_theta <= tol_rel))
    sup_pass = bool(np.all(ex_sup <= tol_rel))
    max_violation = float(max(ex_theta.max(), ex_sup.max()))

    # norm sandwich: a_min sum Theta_i <= Theta <= a_max sum Theta_i, and via the
    # mean value bounds (a_min/du) sum sup|u-v| <= Theta <= (a_max/dl) sum sup|u-v|
    a = cert.alpha
    st = comps[idx].sum(axis=1)
    sand = (
        np.all(a.min() * st <= th[idx] * (1 + 1e-12) + 1e-15)
        and np.all(th[idx] <= a.max() * st * (1 + 1e-12) + 1e-15)
        and np.all(a.min() / cert.delta_upper * sup[idx] <= th[idx] * (1 + 1e-9) + 1e-15)
        and np.all(th[idx] <= a.max() / cert.delta_lower * sup[idx] * (1 + 1e-9) + 1e-15)
    )

    half = t >= t0 + 0.5 * (t[-1] - t0)
    sel = half & (th[idx] > 0)
    rate = None
    if sel.sum() >= 2:
        slope = np.polyfit(t[sel], np.log(th[idx][sel]), 1)[0]
        rate = float(-slope)

    passed = theta_pass and sup_pass
    kind = None
    if not passed:
        kind = "model_tolerance" if max_violation <= default_tol_rel else "envelope_violation"
    return EnvelopeReport(passed, False, k0, float(t0), theta_pass, sup_pass, max_violation, rate,
                          gamma, Z, bool(sand), kind, series)


@dataclass
class ProbeReport:
    t2: float
    r: float
    eps_target: float
    initial_diff: float
    max_diff: float
    max_amplification: float | None
    stays_below: bool
    first_below_time: float | None  # absolute time diff first < eps_target
    time_to_1e6: float | None  # absolute time diff first <= 1e-6 * initial
    times: np.ndarray = field(repr=False, default=None)
    diffs: np.ndarray = field(repr=False, default=None)

    def to_dict(self):
        return {k: v for k, v in self.__dict__.items() if k not in ("times", "diffs")}


def stability_probe(
    spec: SystemSpec,
    grid: Grid,
    base_traj: Trajectory,
    t2: float,
    r: float,
    eps_target: float,
    horizon: float,
    *,
    rng: np.random.Generator | None = None,
    record_every: int = 1,
    diffusion: str = "backward_euler",
) -> ProbeReport:
    """Perturb the base solution at ``t2`` and follow both for ``horizon``.

    The perturbed field is ``u(t2) * (1 + r xi)`` with ``xi`` uniform in
    [-1, 1] per node and species.  The difference is measured as
    sum_i max_x |u_i - v_i|.
    """
    if grid != base_traj.grid:
        raise GridError("base trajectory lives on a different grid")
    if r < 0:
        raise ValueError("perturbation size must be >= 0")
    if r >= 1:
        raise ValueError(f"perturbation r={r} can make densities nonpositive; need r < 1")
    rng = rng or np.random.default_rng(0)
    k = base_traj.index_of(t2)
    u2 = base_traj.values[k]
    xi = rng.uniform(-1.0, 1.0, size=u2.shape)
    v2 = u2 * (1.0 + r * xi)
    if np.any(v2 <= 0):
        raise ValueError("perturbed field is not strictly positive")
    controls = SolveControls(dt=base_traj.dt, t_end=horizon, record_every=record_every,
                             diffusion=diffusion)
    t_start = float(base_traj.times[k])
    pair = simulate_pair(spec, grid, Field(grid, u2), Field(grid, v2), controls, t0=t_start)
    diffs = pair.abs_diff_sup().sum(axis=1)
    d0 = float(diffs[0])
    below = np.flatnonzero(diffs < eps_target)
    tiny = np.flatnonzero(diffs <= 1e-6 * d0) if d0 > 0 else np.array([0])
    return ProbeReport(
        t2=t_start,
        r=float(r),
        eps_target=float(eps_target),
        initial_diff=d0,
        max_diff=float(diffs.max()),
        max_amplification=float(diffs.max() / d0) if d0 > 0 else None,
        stays_below=bool(np.all(diffs < eps_target)),
        first_below_time=float(pair.times[below[0]]) if below.size else None,
        time_to_1e6=float(pair.times[tiny[0]]) if tiny.size else None,
        times=pair.times,
        diffs=diffs,
    )
