import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdimlab import tiling
from mdimlab.core_metric import box_grid
from mdimlab.errors import (HypothesisViolated, NegativePotential, NotCovering,
                            SelectionFailed, UnboundedRegion)
from mdimlab.systems import build_shift
from mdimlab.tiling import BoxUnion, Cube


def _sample_boundary(lo, hi, r, h=0.125):
    """Midpoint-rule estimate of m(boundary(A, r)) in sup-norm; boxes with corners on the h grid."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    d = lo.shape[1]
    a, b = lo.min(axis=0) - r - 1, hi.max(axis=0) + r + 1
    axes = [np.arange(a[k] + h / 2, b[k], h) for k in range(d)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)

    def inside(p):
        return np.any(np.all((p[:, None, :] >= lo) & (p[:, None, :] < hi), axis=2), axis=1)

    def dist_to_union(p):
        gap = np.maximum(np.maximum(lo - p[:, None, :], p[:, None, :] - hi), 0).max(axis=2)
        return gap.min(axis=1)

    near_A = dist_to_union(pts) <= r
    # near the complement unless the whole closed r-cube lies in A; probe its corners and edges
    offs = np.stack(np.meshgrid(*[np.linspace(-r, r, 9)] * d, indexing="ij"), axis=-1).reshape(-1, d)
    near_C = np.zeros(len(pts), bool)
    for o in offs:
        near_C |= ~inside(pts + o)
    return float((near_A & near_C).sum()) * h ** d


def test_interval_boundary_and_neighbourhood():
    A = BoxUnion.box([0.0], [10.0])
    assert tiling.boundary_measure(A, 1.0) == pytest.approx(4.0)
    assert tiling.neighborhood(A, 1.0).measure == pytest.approx(12.0)
    assert tiling.boundary_measure(A, 0.0) == pytest.approx(0.0)


def test_two_separated_unit_intervals():
    A = BoxUnion(np.array([[0.0], [11.0]]), np.array([[1.0], [12.0]]))
    # each unit interval is swallowed by its own boundary layer [-1, 2]
    assert tiling.boundary_measure(A, 1.0) == pytest.approx(6.0)
    assert tiling.boundary_measure(A, 1.0) == pytest.approx(_sample_boundary(A.lo, A.hi, 1.0))


def test_l_shape_against_sampling():
    lo = np.array([[0.0, 0.0], [0.0, 0.0]])
    hi = np.array([[10.0, 2.0], [2.0, 10.0]])
    A = BoxUnion(lo, hi)
    got = tiling.boundary_measure(A, 1.0)
    assert got == pytest.approx(_sample_boundary(lo, hi, 1.0), abs=1e-9)
    assert got == pytest.approx(80.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.5, 1.0, 1.5]))
def test_neighbourhood_bounded_by_parts(seed, r):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 4))
    lo = rng.integers(0, 8, (k, 2)).astype(float)
    hi = lo + rng.integers(1, 5, (k, 2))
    A = BoxUnion(lo, hi)
    assert tiling.neighborhood(A, r).measure <= tiling.measure(A) + tiling.boundary_measure(A, r) + 1e-9


def test_unbounded_region():
    with pytest.raises(UnboundedRegion):
        BoxUnion.box([0.0], [math.inf])


def test_exact_tiling_is_selected():
    A = BoxUnion.box([0.0, 0.0], [4.0, 4.0])
    unit = [Cube(np.array([i, j], float), 1.0) for i in range(4) for j in range(4)]
    res = tiling.quasi_tile(A, [unit], eta=0.9, check_hypotheses=False)
    assert len(res.cubes) == 16
    assert res.covered == pytest.approx(16.0)
    assert tiling.check_tiling(A, res) == []


def test_single_cube_covering_a():
    A = BoxUnion.box([0.0], [5.0])
    res = tiling.quasi_tile(A, [[Cube(np.array([0.0]), 5.0)]], eta=0.9, check_hypotheses=False)
    assert len(res.cubes) == 1


def test_two_scale_interval_selection():
    A = BoxUnion.box([0.0], [100.0])
    C1 = [Cube(np.array([float(i)]), 1.0) for i in range(100)]
    C2 = [Cube(np.array([float(i)]), 10.0) for i in range(0, 100, 10)]
    with pytest.raises(HypothesisViolated):
        tiling.quasi_tile(A, [C1, C2], eta=0.5)
    res = tiling.quasi_tile(A, [C1, C2], eta=0.5, check_hypotheses=False)
    assert res.covered >= 0.99 * 100
    assert all(c.side == 10.0 for c in res.cubes)


def test_generated_instances_hold_postconditions():
    rng = np.random.default_rng(12)
    for d, eta, kr in ((1, 0.6, range(1, 5)), (1, 0.4, range(1, 5)), (2, 0.9, range(1, 3))):
        seed = int(rng.integers(1 << 31))
        res = None
        for k0 in kr:
            A, fams = tiling.random_tiling_instance(np.random.default_rng(seed), d, k0, eta)
            try:
                res = tiling.quasi_tile(A, fams, eta, k0)
                break
            except (HypothesisViolated, SelectionFailed):
                continue
        assert res is not None and res.k0 == k0
        assert tiling.check_tiling(A, res) == []


def test_find_k0_records_smallest_working_depth():
    rng = np.random.default_rng(3)
    A, fams = tiling.random_tiling_instance(rng, 1, 2, 0.4)
    res = tiling.find_k0(A, lambda k0: fams[:k0], 0.4, range(1, 3))
    assert res.k0 in (1, 2)
    assert res.leftover < res.bound


def test_block_coding_examples():
    sys = build_shift(2, 1, 0, 3, 0.5, potential="coord0")
    A = box_grid(2)
    E = np.arange(sys.n)
    lhs, rhs = tiling.block_coding_check(sys, E, A, [box_grid(1), box_grid(1, start=1)], 0.5)
    assert lhs <= rhs * (1 + 1e-9)
    lhs, rhs = tiling.block_coding_check(sys, E, A, [A], 0.5)
    assert lhs == pytest.approx(rhs)
    x = np.array([3])
    lhs, rhs = tiling.block_coding_check(sys, x, A, [box_grid(1), box_grid(1, start=1)], 0.5)
    assert lhs == pytest.approx(rhs)


def test_block_coding_errors():
    sys = build_shift(2, 1, 0, 3, 0.5, potential="const:-1")
    with pytest.raises(NegativePotential):
        tiling.block_coding_check(sys, np.arange(sys.n), box_grid(2), [box_grid(2)], 0.5)
    sys = build_shift(2, 1, 0, 3, 0.5)
    with pytest.raises(NotCovering):
        tiling.block_coding_check(sys, np.arange(sys.n), box_grid(2), [box_grid(1)], 0.5)


def test_crude_estimate():
    sys = build_shift(2, 1, 0, 3, 0.5, potential="coord0")
    lhs, rhs = tiling.crude_estimate_check(sys, box_grid(2), 0.5)
    assert lhs <= rhs * (1 + 1e-9)
    lhs, rhs = tiling.crude_estimate_check(sys, box_grid(1), 0.99)
    assert rhs >= 1 and lhs <= rhs
