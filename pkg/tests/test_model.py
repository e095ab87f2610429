import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdattract.grid import build_grid
from rdattract.model import (
    AssumptionViolation,
    DomainError,
    ModelError,
    SamplingPolicy,
    SpatialProfile,
    SystemSpec,
    coefficient_bounds,
    eval_growth,
    eval_growth_jacobian,
    validate_assumptions,
)


def periodic_lv():
    return SystemSpec.lotka_volterra(
        [3.0, 2.0],
        [[2.0, 0.1], [0.2, 1.5]],
        at=[0.5, -0.3],
        omega=[2.0, 2.0],
        phi=[0.0, 1.0],
        bt=[[0.3, 0.05], [0.0, 0.2]],
        omega_b=[[2.0, 2.0], [2.0, 2.0]],
        psi=[[0.0, 0.5], [0.0, 1.0]],
    )


def test_lv_rates_match_formula():
    spec = periodic_lv()
    t, x, u = 0.7, np.array([[0.3]]), np.array([[0.4], [1.1]])
    p = spec.lv
    a = p.a0 + p.at * np.sin(p.omega * t + p.phi)
    b = p.b0 + p.bt * np.cos(p.omega_b * t + p.psi)
    expect = a - b @ u[:, 0]
    assert np.allclose(spec.rates(t, x, u)[:, 0], expect, atol=1e-14)
    assert np.allclose(eval_growth(spec, t, [0.3], u[:, 0]), expect, atol=1e-14)
    assert np.allclose(eval_growth_jacobian(spec, t, [0.3], u[:, 0]), -b, atol=1e-14)


def test_spatial_profiles():
    x = np.array([[0.0, 0.5, 1.0]])
    assert np.allclose(SpatialProfile("cosine", (1.0,))(x), [1.0, 0.0, -1.0], atol=1e-15)
    g = SpatialProfile("gaussian", center=(0.5,), width=0.1)(x)
    assert g[1] == 1.0 and g[0] == pytest.approx(np.exp(-12.5))
    with pytest.raises(ModelError):
        SpatialProfile("square")


def _fd_jacobian(spec, t, x, u, h):
    n = len(u)
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        J[:, j] = (eval_growth(spec, t, x, u + e) - eval_growth(spec, t, x, u - e)) / (2 * h)
    return J


def nonlinear_callback():
    # f_1 = 2 - u1 - u1^2 - 0.3 u2 (1 + x^2), f_2 = 1.5 + 0.2 sin t - 0.5 u1 - exp(u2) + 1
    def growth(t, x, u):
        x0 = x[0]
        return [2 - u[0] - u[0] ** 2 - 0.3 * u[1] * (1 + x0**2),
                2.5 + 0.2 * np.sin(t) - 0.5 * u[0] - np.exp(u[1])]

    def jac(t, x, u):
        x0 = x[0]
        return [[-1 - 2 * u[0], -0.3 * (1 + x0**2)], [-0.5 + 0 * u[0], -np.exp(u[1])]]

    return SystemSpec.from_callback(2, growth, jac, period=2 * np.pi)


@pytest.mark.parametrize("make", [periodic_lv, nonlinear_callback])
def test_jacobian_matches_central_differences(make):
    spec = make()
    t, x, u = 1.3, np.array([0.4]), np.array([0.7, 0.5])
    J = eval_growth_jacobian(spec, t, x, u)
    errs = [np.abs(_fd_jacobian(spec, t, x, u, h) - J).max() for h in (1e-2, 5e-3, 2.5e-3)]
    if errs[0] < 1e-12:  # linear in u: exact up to rounding
        assert max(errs) < 1e-9
    else:
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders > 1.8), orders


def test_eval_growth_domain_errors():
    spec = periodic_lv()
    g = build_grid(1, [1.0], [5])
    with pytest.raises(DomainError):
        eval_growth(spec, -0.1, [0.5], [1.0, 1.0])
    with pytest.raises(DomainError):
        eval_growth(spec, 0.0, [0.5], [-1.0, 1.0])
    with pytest.raises(DomainError):
        eval_growth(spec, 0.0, [1.5], [1.0, 1.0], grid=g)
    with pytest.raises(DomainError):
        eval_growth(spec, 0.0, [0.5], [1.0, 1.0, 1.0])


def test_construction_enforces_A3_and_competitivity():
    with pytest.raises(AssumptionViolation):
        SystemSpec.lotka_volterra([1.0], [[0.5]], bt=[[0.5]])
    with pytest.raises(AssumptionViolation):
        SystemSpec.lotka_volterra([1.0, 1.0], [[1.0, -0.1], [0.0, 1.0]])
    with pytest.raises(AssumptionViolation):
        SystemSpec.lotka_volterra([1.0, 1.0], [[1.0, 0.1], [0.0, 1.0]], bt=[[0.0, 0.2], [0.0, 0.0]])
    with pytest.raises(ModelError):
        SystemSpec.lotka_volterra([1.0, 1.0], [[1.0, 0.1]])


def test_period_detection():
    assert periodic_lv().period == pytest.approx(np.pi)
    assert SystemSpec.lotka_volterra([1.0], [[1.0]]).period == 1.0
    mixed = SystemSpec.lotka_volterra([1.0], [[1.0]], at=[0.1], omega=[1.0], bt=[[0.1]], omega_b=[[np.sqrt(2)]])
    assert mixed.period == 0.0
    assert SystemSpec.lotka_volterra([1.0], [[1.0]], at=[0.1], omega=[1.0], period=7.0).period == 7.0


def test_lv_bounds_closed_form_against_dense_sampling():
    spec = periodic_lv()
    b = coefficient_bounds(spec, 0.0)
    ts = np.linspace(0, 2 * np.pi, 20001)
    bs = np.stack([spec.lv.b(t) for t in ts])
    a = np.stack([spec.lv.a(t, np.zeros((1, 1)))[:, 0] for t in ts])
    assert np.allclose(b.b_upper, bs.max(axis=0), atol=1e-7)
    assert np.allclose(b.b_lower, np.diagonal(bs.min(axis=0)), atol=1e-7)
    assert np.allclose(b.a_upper, a.max(axis=0), atol=1e-7)
    assert np.allclose(b.a_lower, a.min(axis=0), atol=1e-7)
    assert np.allclose(b.box(0.1), b.a_upper / b.b_lower + 0.1)
    assert np.array_equal(b.upper_at(0.3), b.b_upper)


def test_spatial_bounds_need_grid_and_use_profile_range():
    spec = SystemSpec.lotka_volterra([3.0], [[2.0]], ax=[0.5], profile=SpatialProfile("cosine", (1.0,)))
    with pytest.raises(ModelError):
        coefficient_bounds(spec, 0.0)
    g = build_grid(1, [1.0], [21])
    b = coefficient_bounds(spec, 0.0, SamplingPolicy(grid=g))
    assert b.a_upper[0] == pytest.approx(3.5) and b.a_lower[0] == pytest.approx(2.5)


def test_sampled_bounds_agree_with_closed_form():
    spec = periodic_lv()
    g = build_grid(1, [1.0], [5])
    pol = SamplingPolicy(grid=g, dt=0.005, u_points=5, u_max=3.0)
    exact = coefficient_bounds(spec, 0.05, pol)
    sampled = coefficient_bounds(spec.as_callback(), 0.05, pol)
    assert sampled.sampling_meta["approximate"]
    assert np.allclose(sampled.b_upper, exact.b_upper, atol=1e-3)
    assert np.allclose(sampled.b_lower, exact.b_lower, atol=1e-3)
    assert np.allclose(sampled.a_upper, exact.a_upper, atol=1e-3)
    assert np.allclose(sampled.a_lower, exact.a_lower, atol=1e-3)


def test_sampled_upper_bound_depends_on_box():
    spec = nonlinear_callback()
    g = build_grid(1, [1.0], [5])
    pol = SamplingPolicy(grid=g, dt=0.1, u_points=9)
    b = coefficient_bounds(spec, 0.0, pol)
    # -df1/du1 = 1 + 2 u1 grows with the box
    assert b.upper_at(0.5)[0, 0] > b.upper_at(0.0)[0, 0]
    box = b.box(0.5)
    assert b.upper_at(0.5)[0, 0] == pytest.approx(1 + 2 * box[0], rel=1e-12)
    assert b.upper_at(0.5)[1, 1] == pytest.approx(np.exp(box[1]), rel=1e-12)


def test_validate_assumptions_lv_and_callbacks():
    assert validate_assumptions(periodic_lv()).passed
    g = build_grid(1, [1.0], [5])
    pol = SamplingPolicy(grid=g, dt=0.1, u_points=5)
    assert validate_assumptions(nonlinear_callback(), pol).passed

    def mutualist(t, x, u):
        return [1 - u[0] + 0.2 * u[1], 1 - u[1] + 0 * u[0]]

    def mjac(t, x, u):
        return [[-1.0, 0.2], [0.0, -1.0]]

    rep = validate_assumptions(SystemSpec.from_callback(2, mutualist, mjac), pol)
    assert rep.failures() == ["competitive"]
    assert rep.checks["competitive"].witness["species"] == [1, 2]

    def growing(t, x, u):
        return [1 + t - u[0] + 0 * x[0]]

    def gjac(t, x, u):
        return [[-1.0 + 0 * u[0]]]

    rep = validate_assumptions(SystemSpec.from_callback(1, growing, gjac), pol)
    assert "A2" in rep.failures()

    def flat(t, x, u):
        return [1 + 0 * u[0]]

    def fjac(t, x, u):
        return [[0.0 * u[0]]]

    rep = validate_assumptions(SystemSpec.from_callback(1, flat, fjac), pol)
    assert "A3" in rep.failures() and rep.checks["A3"].witness is not None


finite = st.floats(-2.0, 2.0, allow_nan=False)


@given(
    n=st.integers(1, 3),
    data=st.data(),
)
@settings(max_examples=40, deadline=None)
def test_serialization_roundtrip(n, data):
    a0 = data.draw(st.lists(st.floats(0.1, 5.0), min_size=n, max_size=n))
    diag = data.draw(st.lists(st.floats(0.5, 3.0), min_size=n, max_size=n))
    off = data.draw(st.lists(st.floats(0.0, 1.0), min_size=n * n, max_size=n * n))
    b0 = np.array(off).reshape(n, n)
    np.fill_diagonal(b0, diag)
    at = data.draw(st.lists(finite, min_size=n, max_size=n))
    spec = SystemSpec.lotka_volterra(a0, b0, at=at, omega=[1.5] * n,
                                     profile=SpatialProfile("gaussian", center=(0.3,), width=0.2))
    back = SystemSpec.from_dict(spec.to_dict())
    assert back.to_dict() == spec.to_dict()
    x = np.array([[0.2]])
    u = np.ones((n, 1))
    assert np.array_equal(back.rates(0.4, x, u), spec.rates(0.4, x, u))


def test_callback_not_serializable():
    with pytest.raises(ModelError):
        nonlinear_callback().to_dict()
