import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdimlab.core_metric import (FiniteMetricSpace, GroupGrid, PotentialField, box_grid,
                                 orbit_metric_avg, orbit_metric_sup, potential_integral,
                                 quadrature_grid, quotient, validate_metric, variation,
                                 window_space)
from mdimlab.errors import IncompatibleGrid, WindowExceeded
from mdimlab.systems import build_rotation_flow, build_shift


def _line(xs, rho0=0.0):
    x = np.asarray(xs, float)
    return FiniteMetricSpace(np.abs(x[:, None] - x[None, :]), rho0)


def test_validate_metric_examples():
    assert validate_metric(FiniteMetricSpace([[0, 1], [1, 0]])) == []
    assert "symmetry violation" in validate_metric(FiniteMetricSpace([[0, 1], [2, 0]]))
    tri = FiniteMetricSpace([[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    assert validate_metric(tri) == ["triangle violation"]


def test_orbit_metric_single_element_is_base():
    sys = build_shift(2, 1, 1, 3, 0.5)
    M = orbit_metric_sup(sys, box_grid(1))
    np.testing.assert_array_equal(M.dist, sys.base_metric.dist)
    np.testing.assert_array_equal(orbit_metric_avg(sys, 1).dist, sys.base_metric.dist)


def test_orbit_metric_hand_pair():
    # x = all zeros, y differs at coordinate 1 only
    sys = build_shift(2, 1, 1, 2, 0.5)
    x, y = 0, 2
    assert sys.base_metric.dist[x, y] == pytest.approx(0.5)
    M = orbit_metric_sup(sys, box_grid(2))
    assert M.dist[x, y] == pytest.approx(1.0)


def test_orbit_metric_monotone_and_avg_below_sup():
    sys = build_shift(2, 1, 0, 4, 0.5)
    small = orbit_metric_sup(sys, box_grid(2)).dist
    big = orbit_metric_sup(sys, box_grid(4)).dist
    assert np.all(small <= big + 1e-15)
    assert np.max(orbit_metric_avg(sys, 4).dist - big) <= 0


def test_avg_metric_one_coordinate_of_four():
    sys = build_shift(2, 1, 0, 4, 0.5)
    # configurations 0000 and 0100 differ in one of four window coordinates
    assert orbit_metric_avg(sys, 4).dist[0, 2] == pytest.approx(0.25)


def test_window_exceeded():
    sys = build_shift(2, 1, 0, 3, 0.5)
    with pytest.raises(WindowExceeded):
        orbit_metric_sup(sys, box_grid(4))


def test_potential_integral_additive_and_zero():
    sys = build_shift(3, 1, 0, 4, 0.5, potential="coord0")
    A1, A2 = box_grid(2), box_grid(2, start=2)
    whole = potential_integral(sys, box_grid(4)).values
    parts = potential_integral(sys, A1).values + potential_integral(sys, A2).values
    np.testing.assert_allclose(whole, parts, atol=1e-12)
    zero = build_shift(3, 1, 0, 4, 0.5)
    assert not potential_integral(zero, box_grid(4)).values.any()


def test_flow_integral_of_sine_over_period():
    tau = 2 * np.pi / 64
    flow = build_rotation_flow(1.0, 64, tau, horizon=8.0, potential="sin")
    A = quadrature_grid(2 * np.pi, 1, tau)
    assert np.abs(potential_integral(flow, A).values).max() < 1e-6


def test_quadrature_grid_needs_divisor():
    with pytest.raises(IncompatibleGrid):
        quadrature_grid(1.0, 1, 0.3)


def test_variation_examples():
    M = _line([0, 1, 2])
    assert variation(PotentialField([0, 5, 7]), M, 1.5) == 5
    assert variation(PotentialField([3, 3, 3]), M, 10) == 0
    assert variation(PotentialField([0, 5, 7]), M, 1.0) == 0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=8), st.floats(0.01, 20))
def test_variation_monotone_in_eps(xs, eps):
    M = _line(xs)
    phi = PotentialField(np.arange(len(xs), dtype=float) ** 2)
    assert variation(phi, M, eps) <= variation(phi, M, eps * 2)


def test_quotient_merges_zero_classes():
    M = FiniteMetricSpace([[0, 0, 1], [0, 0, 1], [1, 1, 0]])
    Q = quotient(M, PotentialField([1.0, 2.0, 0.5]))
    assert Q.k == 2
    np.testing.assert_array_equal(Q.phi.values, [2.0, 0.5])
    np.testing.assert_allclose(Q.pushforward([0.2, 0.3, 0.5]), [0.5, 0.5])


def test_window_space_counts_blocks():
    sys = build_shift(4, 1, 0, 3, 1 / 64)
    for L in (1, 2, 3):
        assert window_space(sys, box_grid(L)).k == 4 ** L


def test_group_grid_rejects_duplicates():
    with pytest.raises(ValueError):
        GroupGrid(1, [0, 0])
