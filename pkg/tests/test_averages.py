import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdattract.averages import estimate_averages, spatial_extrema_series, window_average
from rdattract.grid import build_grid
from rdattract.model import SpatialProfile, SystemSpec


def sine_family(amp=1.0, omega=1.0):
    # f(t, x, 0) = 3 + amp sin(omega t)
    return SystemSpec.lotka_volterra([3.0], [[1.0]], at=[amp], omega=[omega])


@pytest.mark.parametrize("W", [25.0, 50.0, 100.0])
def test_finite_horizon_error_within_amplitude_over_window(W, small_grid):
    spec = sine_family()
    est = estimate_averages(spec, small_grid, 4 * W, W, 1e-2, method="finite_horizon")
    assert est.method == "finite_horizon"
    assert abs(est.m[0] - 3.0) <= 2 * 1.0 / W
    assert abs(est.M[0] - 3.0) <= 2 * 1.0 / W
    assert est.m[0] <= est.M[0]
    assert est.error_bound[0] == pytest.approx(2.0 / W)


def test_periodic_mean_exact(small_grid):
    est = estimate_averages(sine_family(0.7, 2.0), small_grid)
    assert est.method == "exact_periodic"
    assert est.m[0] == pytest.approx(3.0, abs=1e-12)
    assert est.M[0] == pytest.approx(3.0, abs=1e-12)


def test_spatial_extrema_average():
    g = build_grid(1, [1.0], [41])
    # a(t, x) = 2 + 0.5 sin t + 0.4 cos(pi x): min over x is a - 0.4, max a + 0.4
    spec = SystemSpec.lotka_volterra([2.0], [[1.0]], at=[0.5], omega=[1.0], ax=[0.4],
                                     profile=SpatialProfile("cosine", (1.0,)))
    est = estimate_averages(spec, g)
    assert est.m[0] == pytest.approx(1.6, abs=1e-12)
    assert est.M[0] == pytest.approx(2.4, abs=1e-12)
    lo, hi = spatial_extrema_series(spec, g, [0.0, np.pi / 2])
    assert np.allclose(lo[0], [1.6, 2.1]) and np.allclose(hi[0], [2.4, 2.9])


def test_aperiodic_window_scan_finds_worst_window(small_grid):
    # quasi-periodic: incommensurate frequencies; window means close to 3
    spec = SystemSpec.lotka_volterra([3.0], [[1.0]], at=[1.0], omega=[1.0],
                                     bt=[[0.1]], omega_b=[[np.sqrt(2)]])
    assert spec.period == 0.0
    est = estimate_averages(spec, small_grid, 200.0, 50.0)
    assert est.method == "finite_horizon"
    assert 3.0 - 2 / 50 <= est.m[0] <= 3.0 <= est.M[0] <= 3.0 + 2 / 50


def test_window_average_trapezoid_exact_for_linear():
    t = np.linspace(0, 10, 11)
    v = 2 * t + 1
    assert window_average(t, v, 2.5, 7.3) == pytest.approx(2 * (2.5 + 7.3) / 2 + 1, rel=1e-14)
    with pytest.raises(ValueError):
        window_average(t, v, 3.0, 3.0)
    with pytest.raises(ValueError):
        window_average(t, v, -1.0, 3.0)


def test_argument_errors(small_grid):
    with pytest.raises(ValueError):
        estimate_averages(sine_family(), small_grid, 10.0, 20.0, method="finite_horizon")
    with pytest.raises(ValueError):
        estimate_averages(sine_family(), small_grid, method="finite_horizon")
    aper = SystemSpec.lotka_volterra([1.0], [[1.0]], at=[0.1], omega=[1.0], bt=[[0.1]], omega_b=[[2.5]])
    with pytest.raises(ValueError):
        estimate_averages(aper, small_grid, method="exact_periodic")


@given(
    a0=st.floats(0.5, 5.0), amp=st.floats(0.0, 2.0), omega=st.floats(0.3, 5.0),
    ax=st.floats(-1.0, 1.0), method=st.sampled_from(["auto", "finite_horizon"]),
)
@settings(max_examples=25, deadline=None)
def test_lower_average_never_exceeds_upper(a0, amp, omega, ax, method):
    g = build_grid(1, [1.0], [9])
    spec = SystemSpec.lotka_volterra([a0], [[1.0]], at=[amp], omega=[omega], ax=[ax],
                                     profile=SpatialProfile("cosine", (1.0,)))
    est = estimate_averages(spec, g, 60.0, 20.0, 0.05, method=method)
    assert np.all(est.m <= est.M)
    lo_bound = a0 - amp - abs(ax)
    hi_bound = a0 + amp + abs(ax)
    assert lo_bound - 1e-12 <= est.m[0] and est.M[0] <= hi_bound + 1e-12
