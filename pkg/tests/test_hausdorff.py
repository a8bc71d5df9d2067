import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdimlab.core_metric import FiniteMetricSpace, PotentialField
from mdimlab.cover import ball_family, covering_number_potential
from mdimlab.errors import FrostmanInfeasible, InvalidExponent
from mdimlab.hausdorff import (HausdorffQuery, cover_threshold, dimh_at_scale, dimh_search,
                               frostman_measure, frostman_violations, hausdorff_value)
from mdimlab.systems import cantor_net

LOG32 = math.log(2) / math.log(3)


def _space(rng, n):
    x = rng.random((n, 2))
    return FiniteMetricSpace(np.abs(x[:, None, :] - x[None, :, :]).max(axis=2), rho0=0.02)


def _threshold_oracle(hats, a, phimax):
    """Bisection for inf{s > phimax : sum hat^(s - a) < 1}."""
    def f(s):
        return sum(h ** (s - ai) for h, ai in zip(hats, a))
    lo, hi = phimax, phimax + 64
    if f(lo + 1e-12) < 1:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 1:
            hi = mid
        else:
            lo = mid
    return hi


def _dimh_oracle(M, phi, eps):
    """Minimum threshold over every cover drawn from the ball family."""
    F = ball_family(M, eps, phi)
    hats = [M.hat(0.0) if m.bit_count() == 1 else d for m, d in zip(F.masks, F.diam)]
    full = (1 << M.n) - 1
    best = math.inf
    phimax = float(phi.values.max())
    idx = range(len(F.masks))
    for k in range(1, M.n + 1):
        for combo in itertools.combinations(idx, k):
            u = 0
            for i in combo:
                u |= F.masks[i]
            if u == full:
                best = min(best, _threshold_oracle([hats[i] for i in combo],
                                                   [F.sup_phi[i] for i in combo], phimax))
    return best


def test_single_point_value():
    M = FiniteMetricSpace(np.zeros((1, 1)), rho0=0.1)
    phi = PotentialField([0.0])
    for s in (0.5, 1.0, 2.0):
        assert hausdorff_value(HausdorffQuery(M, phi, 0.5, s)) == pytest.approx(0.1 ** s)


def test_value_nonincreasing_in_s():
    M = _space(np.random.default_rng(0), 7)
    phi = PotentialField(np.zeros(7))
    vals = [hausdorff_value(HausdorffQuery(M, phi, 0.4, s)) for s in np.linspace(0.1, 3, 12)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_cantor_value_and_dimension():
    C = cantor_net(4)
    phi = PotentialField(np.zeros(16))
    v = hausdorff_value(HausdorffQuery(C, phi, 1 / 3, LOG32))
    assert 0.9 <= v <= 1.1
    assert dimh_at_scale(C, None, 1 / 3) == pytest.approx(LOG32, abs=0.05)


def test_zero_floor_gives_zero():
    x = np.array([0.0, 1.0, 3.0])
    M = FiniteMetricSpace(np.abs(x[:, None] - x[None, :]))
    assert dimh_at_scale(M, None, 0.5) == 0.0


def test_matches_enumeration_oracle():
    rng = np.random.default_rng(8)
    for _ in range(8):
        n = int(rng.integers(3, 7))
        M = _space(rng, n)
        phi = PotentialField(rng.uniform(0, 0.5, n))
        eps = float(rng.uniform(0.3, 0.8))
        got = dimh_search(M, phi, eps)
        assert got.optimal
        assert got.value == pytest.approx(_dimh_oracle(M, phi, eps), abs=1e-7)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.2, 0.9))
def test_dimension_below_covering_ratio(seed, eps):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 10))
    M = _space(rng, n)
    phi = PotentialField(rng.uniform(0, 1, n))
    F = ball_family(M, eps, phi)
    sol = covering_number_potential(M, phi, eps, family=F)
    res = dimh_search(M, phi, eps, family=F, seed_covers=[sol.masks])
    assert res.value <= math.log2(sol.value) / math.log2(1 / eps) + 1e-4


def test_cover_threshold_of_cantor_pieces():
    C = cantor_net(4)
    # the two level-1 halves, each of floored diameter 1/3 - 3^-4 + 3^-4
    halves = [(1 << 8) - 1, ((1 << 16) - 1) ^ ((1 << 8) - 1)]
    assert cover_threshold(C, PotentialField(np.zeros(16)), halves) == pytest.approx(LOG32, abs=1e-9)


def test_invalid_exponent():
    M = _space(np.random.default_rng(1), 4)
    with pytest.raises(InvalidExponent):
        hausdorff_value(HausdorffQuery(M, PotentialField(np.ones(4)), 0.5, 0.5))
    with pytest.raises(InvalidExponent):
        dimh_at_scale(M, None, 1.5)


def test_frostman_t_zero_uniform_feasible():
    M = _space(np.random.default_rng(2), 6)
    res = frostman_measure(M, 0.6, 0.0)
    assert res.optimum == pytest.approx(1.0)
    assert frostman_violations(M, res.nu, 0.6, 0.0) == []


def test_frostman_two_points_infeasible():
    two = FiniteMetricSpace(np.array([[0.0, 1.0], [1.0, 0.0]]), rho0=0.1)
    with pytest.raises(FrostmanInfeasible) as err:
        frostman_measure(two, 1.8, 1.0)
    assert err.value.optimum == pytest.approx(0.2)


def test_frostman_cantor():
    C = cantor_net(4)
    t = 0.9 * dimh_at_scale(C, None, 1 / 3)
    res = frostman_measure(C, 1 / 3, t)
    assert frostman_violations(C, res.nu, 1 / 3, t, exhaustive_max=16) == []
    assert res.nu.weights.max() <= 2 * 2.0 ** -4 + 1e-12


def test_frostman_lazy_constraints_agree_with_exhaustive():
    M = _space(np.random.default_rng(5), 10)
    full = frostman_measure(M, 1.2, 0.4, exhaustive_max=14)
    lazy = frostman_measure(M, 1.2, 0.4, exhaustive_max=4)
    assert frostman_violations(M, lazy.nu, 1.2, 0.4, exhaustive_max=4) == []
    assert full.optimum == pytest.approx(1.0)
