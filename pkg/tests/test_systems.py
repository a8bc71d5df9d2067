import numpy as np
import pytest

from mdimlab.core_metric import FiniteMetricSpace, box_grid, orbit_metric_sup
from mdimlab.errors import CapExceeded, ConfigInvalid, DegenerateMetric, NonInvariantMeasure
from mdimlab.systems import (MeasureOnPoints, build_rotation_flow, build_shift, cantor_net,
                             check_invariant, fixed_point_system, product_measure,
                             system_from_config, tame_metric, zd_reduction)


def test_shift_point_count_and_diagonal():
    sys = build_shift(2, 1, 0, 4, 0.5)
    assert sys.n == 16
    assert np.all(np.diag(sys.base_metric.dist) == 0)


def test_shift_weighted_distance():
    sys = build_shift(4, 1, 1, 1, 0.5)
    # differ only at offset +1 by one level; N = 3 cells
    y = 4 ** 1
    assert sys.base_metric.dist[0, y] == pytest.approx(0.5 / 3)


def test_shift_act_is_permutation_and_group_law():
    sys = build_shift(3, 1, 0, 3, 0.5)
    p1, p2 = sys.act(1), sys.act(2)
    assert sorted(p1) == list(range(sys.n))
    np.testing.assert_array_equal(p1[p1], p2)


def test_shift_2d():
    sys = build_shift(2, 2, 0, 2, 0.5)
    assert sys.n == 16
    p = sys.act([1, 0])
    q = sys.act([0, 1])
    np.testing.assert_array_equal(p[q], q[p])


def test_cap_exceeded():
    with pytest.raises(CapExceeded):
        build_shift(4, 1, 0, 9, 0.5)


def test_rotation_flow_examples():
    flow = build_rotation_flow(0.0, 12, 0.5)
    np.testing.assert_array_equal(flow.act(3.0), np.arange(12))
    flow = build_rotation_flow(1.0, 360, 0.25)
    assert flow.act(np.pi / 2)[0] == 90
    full = build_rotation_flow(1.0, 360, 0.25)
    assert full.act(2 * np.pi)[5] == 5


def test_zd_reduction_constant_and_dominated():
    tau = 1 / 32
    flow = build_rotation_flow(1.0, 256, tau, horizon=8.0, potential="const:2.5")
    red = zd_reduction(flow)
    np.testing.assert_allclose(red.potential.values, 2.5)
    sup1 = np.zeros_like(flow.base_metric.dist)
    for k in range(32):
        p = flow.act(k * tau)
        sup1 = np.maximum(sup1, flow.base_metric.dist[np.ix_(p, p)])
    assert np.all(red.base_metric.dist <= sup1 + 1e-12)


def test_zd_reduction_sine_potential():
    tau = 1 / 64
    flow = build_rotation_flow(1.0, 2048, tau, horizon=8.0, potential="sin")
    red = zd_reduction(flow)
    theta = flow.points
    exact = np.cos(theta) - np.cos(theta + 1)
    # left-endpoint quadrature plus snapping to the sample grid
    assert np.abs(red.potential.values - exact).max() < 0.03


def test_tame_metric_examples():
    M = FiniteMetricSpace([[0, 1], [1, 0]])
    assert tame_metric(M).dist[0, 1] == pytest.approx(0.75)
    rng = np.random.default_rng(4)
    x = rng.random((9, 2))
    D = np.abs(x[:, None, :] - x[None, :, :]).max(axis=2)
    T = tame_metric(FiniteMetricSpace(D))
    assert np.max(T.dist - D) <= 1e-12
    one = tame_metric(FiniteMetricSpace(np.zeros((1, 1))))
    assert one.n == 1


def test_tame_metric_degenerate():
    with pytest.raises(DegenerateMetric):
        # the halved weights underflow the smallest subnormal distance
        tame_metric(FiniteMetricSpace([[0, 5e-324], [5e-324, 0]]))


def test_product_measure_examples():
    sys = build_shift(2, 1, 0, 3, 0.5)
    np.testing.assert_allclose(product_measure(sys, [0.5, 0.5]).weights, 1 / 8)
    delta = product_measure(sys, [1.0, 0.0]).weights
    assert delta[0] == 1.0 and delta[1:].sum() == 0
    two = build_shift(2, 1, 0, 2, 0.5)
    w = product_measure(two, [0.75, 0.25]).weights
    # index 2 is the configuration (0, 1)
    assert w[2] == pytest.approx(3 / 16)


def test_product_measure_is_invariant():
    sys = build_shift(3, 1, 0, 4, 0.5)
    check_invariant(sys, product_measure(sys, [0.2, 0.3, 0.5]))
    w = np.zeros(sys.n)
    w[1] = 1
    with pytest.raises(NonInvariantMeasure):
        check_invariant(sys, MeasureOnPoints(w))


def test_fixed_point_and_cantor():
    pt = fixed_point_system(1.5)
    assert pt.n == 1 and pt.potential.values[0] == 1.5
    C = cantor_net(4)
    assert C.n == 16 and C.rho0 == pytest.approx(3.0 ** -4)
    assert orbit_metric_sup(pt, box_grid(3)).dist[0, 0] == 0


def test_system_from_config():
    sys = system_from_config({"kind": "shift", "q": 2, "Lmax": 3})
    assert sys.n == 8
    with pytest.raises(ConfigInvalid):
        system_from_config({"kind": "torus"})
    with pytest.raises(ConfigInvalid):
        system_from_config({"kind": "shift"})
