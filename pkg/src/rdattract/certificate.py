"""Permanence and attractivity certificates for competitive Kolmogorov systems.

Index discipline matters here.  The average conditions (AC), (AC') and the
lower permanence bound use row sums of ``b_upper[i, j]``; the column
dominance check ``cond21`` and the weights use column sums ``b_upper[j, i]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .averages import AverageEstimate
from .grid import Grid
from .model import BoundsReport, SamplingPolicy, SystemSpec, coefficient_bounds
from .simplex import LPError, maximize

log = logging.getLogger(__name__)

ALPHA_FLOOR = 1e-9
FAILURE_ORDER = ("ac", "ac_prime", "delta_lower", "cond21", "weights")


@dataclass
class ConditionCheck:
    margins: np.ndarray
    holds: bool

    def to_dict(self):
        return {"margins": self.margins.tolist(), "holds": bool(self.holds)}


def _offdiag(mat):
    out = np.array(mat, dtype=float, copy=True)
    np.fill_diagonal(out, 0.0)
    return out


def check_AC(bounds: BoundsReport, avg: AverageEstimate) -> ConditionCheck:
    """margin_i = m[f_i] - sum_{j != i} b_upper_ij(0) M[f_j] / b_lower_jj."""
    B = _offdiag(bounds.upper_at(0.0))
    margins = avg.m - B @ (avg.M / bounds.b_lower)
    return ConditionCheck(margins, bool(np.all(margins > 0)))


def check_AC_prime(bounds: BoundsReport, avg: AverageEstimate | None = None) -> ConditionCheck:
    """As :func:`check_AC` with M[f_j] replaced by a_upper_j.

    Without ``avg`` the lower average is replaced by ``a_lower`` (equal for
    constant coefficients, a lower bound in general).
    """
    m = bounds.a_lower if avg is None else avg.m
    B = _offdiag(bounds.upper_at(0.0))
    margins = m - B @ (bounds.a_upper / bounds.b_lower)
    return ConditionCheck(margins, bool(np.all(margins > 0)))


@dataclass
class PermanenceBounds:
    delta_lower: float | None
    delta_upper: float
    condition: ConditionCheck

    @property
    def ok(self) -> bool:
        return self.delta_lower is not None

    def to_dict(self):
        return {
            "delta_lower": self.delta_lower,
            "delta_upper": self.delta_upper,
            "condition": self.condition.to_dict(),
        }


def permanence_bounds(bounds: BoundsReport) -> PermanenceBounds:
    """Explicit permanence box from the dissipativity and lower-bound formulas.

    delta_upper = max_i a_upper_i / b_lower_ii
    delta_lower = min_i (a_lower_i - sum_{j != i} b_upper_ij a_upper_j / b_lower_jj) / b_upper_ii

    ``delta_lower`` is left unset when some bracket is not positive.
    """
    B0 = bounds.upper_at(0.0)
    delta_upper = float(np.max(bounds.a_upper / bounds.b_lower))
    bracket = bounds.a_lower - _offdiag(B0) @ (bounds.a_upper / bounds.b_lower)
    cond = ConditionCheck(bracket, bool(np.all(bracket > 0)))
    delta_lower = float(np.min(bracket / np.diag(B0))) if cond.holds else None
    return PermanenceBounds(delta_lower, delta_upper, cond)


def _upper(bounds, epsilon):
    if isinstance(bounds, BoundsReport):
        return bounds.b_lower, bounds.upper_at(bounds.epsilon_used if epsilon is None else epsilon)
    b_lower, b_upper = bounds
    return np.asarray(b_lower, dtype=float), np.asarray(b_upper, dtype=float)


def check_cond21(delta_lower: float, delta_upper: float, bounds, epsilon: float | None = 0.0) -> ConditionCheck:
    """margin_i = delta_lower b_lower_ii - delta_upper sum_{j != i} b_upper_ji(eps).

    ``bounds`` is a :class:`BoundsReport` or a ``(b_lower, b_upper)`` pair.
    """
    if not (delta_lower > 0 and delta_upper > 0):
        raise ValueError("delta bounds must be positive")
    b_lower, b_upper = _upper(bounds, epsilon)
    margins = delta_lower * b_lower - delta_upper * _offdiag(b_upper).sum(axis=0)
    return ConditionCheck(margins, bool(np.all(margins > 0)))


def dominance_matrix(delta_lower, delta_upper, b_lower, b_upper) -> np.ndarray:
    """K with (K alpha)_i = alpha_i dl b_lower_ii - sum_{j != i} alpha_j du b_upper_ji."""
    return np.diag(delta_lower * np.asarray(b_lower)) - delta_upper * _offdiag(b_upper).T


@dataclass
class WeightsResult:
    feasible: bool
    alpha: np.ndarray | None
    slack: float | None
    per_row: np.ndarray | None = None

    def to_dict(self):
        return {
            "feasible": self.feasible,
            "alpha": None if self.alpha is None else self.alpha.tolist(),
            "slack": self.slack,
            "per_row_slack": None if self.per_row is None else self.per_row.tolist(),
        }


def max_slack_weights(K: np.ndarray, floor: float = ALPHA_FLOOR) -> WeightsResult:
    """Maximize s subject to (K alpha)_i >= s, sum(alpha) = 1, alpha_i >= floor."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    n = K.shape[0]
    if n * floor >= 1:
        raise ValueError("weight floor too large for the simplex")
    lb = np.full(n, floor)
    # x = [beta (alpha - floor), s_plus, s_minus]
    c = np.concatenate([np.zeros(n), [1.0, -1.0]])
    A_ub = np.hstack([-K, np.ones((n, 1)), -np.ones((n, 1))])
    b_ub = K @ lb
    A_eq = np.concatenate([np.ones(n), [0.0, 0.0]])[None, :]
    b_eq = np.array([1.0 - n * floor])
    res = maximize(c, A_ub, b_ub, A_eq, b_eq)
    if res.status != "optimal":
        raise LPError(f"weight LP returned {res.status}")
    alpha = res.x[:n] + lb
    alpha /= alpha.sum()
    rows = K @ alpha
    slack = float(res.value)
    tol = 1e-12 * max(1.0, float(np.abs(K).max()))
    return WeightsResult(bool(slack > tol), alpha, slack, rows)


def find_weights(delta_lower: float, delta_upper: float, bounds, epsilon: float | None = None) -> WeightsResult:
    """Positive weights with alpha_i dl b_lower_ii > sum_{j != i} alpha_j du b_upper_ji(eps).

    Solves the max-slack LP; ``feasible`` is true iff the optimal slack is
    positive, in which case ``slack`` is the certificate's epsilon*.
    """
    b_lower, b_upper = _upper(bounds, epsilon)
    return max_slack_weights(dominance_matrix(delta_lower, delta_upper, b_lower, b_upper))


def check_weighted_AC(avg: AverageEstimate, bounds: BoundsReport, alpha) -> ConditionCheck:
    """margin_i = alpha_i m_i - sum_{j != i} (alpha_i b_ij M_j / b_jj + alpha_j b_ji M_i / b_ii)."""
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0):
        raise ValueError("weights must be positive")
    B = _offdiag(bounds.upper_at(0.0))
    bl = bounds.b_lower
    row_term = alpha * (B @ (avg.M / bl))
    col_term = (B.T @ alpha) * avg.M / bl
    margins = alpha * avg.m - row_term - col_term
    return ConditionCheck(margins, bool(np.all(margins >= 0)))


@dataclass
class Certificate:
    granted: bool
    first_failure: str | None
    bounds: BoundsReport
    averages: AverageEstimate
    ac: ConditionCheck
    ac_prime: ConditionCheck
    permanence: PermanenceBounds
    delta_source: str
    delta_lower: float | None
    delta_upper: float | None
    cond21: ConditionCheck | None = None
    weights: WeightsResult | None = None
    epsilon_box: float | None = None
    weighted_ac: ConditionCheck | None = None
    bisection_trace: list = field(default_factory=list)

    @property
    def alpha(self):
        return None if self.weights is None else self.weights.alpha

    @property
    def slack(self):
        return None if not self.granted else self.weights.slack

    @property
    def gamma(self):
        if not self.granted:
            return None
        return self.weights.slack / float(self.alpha.max())

    @property
    def Z(self):
        if not self.granted:
            return None
        a = self.alpha
        return self.delta_upper * float(a.max()) / (self.delta_lower * float(a.min()))

    def b_upper_eps(self) -> np.ndarray:
        return self.bounds.upper_at(self.epsilon_box)

    def to_dict(self) -> dict:
        opt = lambda c: None if c is None else c.to_dict()  # noqa: E731
        return {
            "granted": self.granted,
            "first_failure": self.first_failure,
            "delta_source": self.delta_source,
            "delta_lower": self.delta_lower,
            "delta_upper": self.delta_upper,
            "epsilon_box": self.epsilon_box,
            "alpha": None if self.alpha is None else self.alpha.tolist(),
            "slack": self.slack,
            "gamma": self.gamma,
            "Z": self.Z,
            "ac": self.ac.to_dict(),
            "ac_prime": self.ac_prime.to_dict(),
            "permanence": self.permanence.to_dict(),
            "cond21": opt(self.cond21),
            "weights": opt(self.weights),
            "weighted_ac": opt(self.weighted_ac),
            "bisection_trace": self.bisection_trace,
            "bounds": self.bounds.to_dict(),
            "averages": self.averages.to_dict(),
        }


def assemble_certificate(
    spec: SystemSpec,
    grid: Grid,
    avg: AverageEstimate,
    epsilon: float | None = None,
    *,
    sampling: SamplingPolicy | None = None,
    delta_override: tuple[float, float] | None = None,
    epsilon_start: float = 0.1,
    epsilon_min: float = 1e-6,
) -> Certificate:
    """Run bounds -> (AC), (AC') -> delta box -> column dominance -> weights.

    The certificate is granted when (AC), (AC'), the lower-bound condition,
    column dominance and the weight LP at some eps > 0 all succeed.  Unless ``epsilon``
    is given, eps is found by halving from ``epsilon_start`` until the LP is
    feasible or eps drops below ``epsilon_min``.  ``delta_override`` supplies
    an external (delta_lower, delta_upper) and waives (AC') and the
    lower-bound condition.
    """
    if sampling is None:
        sampling = SamplingPolicy(grid=grid)
    elif sampling.grid is None:
        sampling = replace(sampling, grid=grid)
    bounds = coefficient_bounds(spec, 0.0, sampling)
    ac = check_AC(bounds, avg)
    ac_prime = check_AC_prime(bounds, avg)
    perm = permanence_bounds(bounds)

    if delta_override is not None:
        dl, du = (float(v) for v in delta_override)
        if not (0 < dl <= du):
            raise ValueError(f"delta override needs 0 < delta_lower <= delta_upper, got {dl}, {du}")
        source = "override"
    else:
        dl, du = perm.delta_lower, perm.delta_upper
        source = "explicit"

    failures = []
    if not ac.holds:
        failures.append("ac")
    if source == "explicit" and not ac_prime.holds:
        failures.append("ac_prime")
    if dl is None:
        failures.append("delta_lower")
        return Certificate(
            False, failures[0], bounds, avg, ac, ac_prime, perm, source, None, du,
        )

    cond21 = check_cond21(dl, du, bounds, 0.0)
    if not cond21.holds:
        failures.append("cond21")

    trace = []
    eps_list = [float(epsilon)] if epsilon is not None else _halvings(epsilon_start, epsilon_min)
    weights = None
    eps_used = None
    for eps in eps_list:
        w = find_weights(dl, du, bounds, eps)
        trace.append({"epsilon": eps, "slack": w.slack, "feasible": w.feasible})
        weights, eps_used = w, eps
        if w.feasible:
            break
    if not weights.feasible:
        failures.append("weights")

    weighted = check_weighted_AC(avg, bounds, weights.alpha)
    failures.sort(key=FAILURE_ORDER.index)
    cert = Certificate(
        granted=not failures,
        first_failure=failures[0] if failures else None,
        bounds=bounds,
        averages=avg,
        ac=ac,
        ac_prime=ac_prime,
        permanence=perm,
        delta_source=source,
        delta_lower=dl,
        delta_upper=du,
        cond21=cond21,
        weights=weights,
        epsilon_box=eps_used,
        weighted_ac=weighted,
        bisection_trace=trace,
    )
    log.info("certificate %s (first failure: %s)", "granted" if cert.granted else "denied", cert.first_failure)
    return cert


def _halvings(start, stop):
    out = []
    eps = float(start)
    while eps >= stop:
        out.append(eps)
        eps /= 2.0
    return out or [float(start)]
