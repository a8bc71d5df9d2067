import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdimlab import info
from mdimlab.core_metric import FiniteMetricSpace, box_grid, window_space
from mdimlab.cover import ball_family, covering_number_potential
from mdimlab.errors import FeasibilityViolated, Infeasible
from mdimlab.ratedist import (ba_lambda, ba_point, ba_sweep, duality_bound, feasible_lambda,
                              free_energy, kd_constant, kd_lower_bound, orbit_codebook,
                              product_channel_check, quantizer_channel, rate_at_distortion,
                              rate_point, rdist_function, source_weights, translation_check,
                              zero_rate_point, _kd_log_bracket)
from mdimlab.systems import build_shift, product_measure

# Frozen from a 30-digit mpmath maximization of the bracket over [0, 5] (grid then root of the
# derivative of its log).
KD_K = 2.1339815714309510
KD_S = 0.2337437806306569

# Frozen from the textbook per-letter iteration below (natural logs, beta bisection), uniform
# 64-level source with |x - y| / 63 distortion.
RD64 = {1 / 8: 0.7692220859, 1 / 16: 1.6646741289, 1 / 32: 2.5967135015}


def _hb(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def _ba_oracle(p, rho, beta, iters=20000, tol=1e-12):
    """Plain alternating minimization with exp(-beta rho); returns (D, R in bits)."""
    q = np.full(rho.shape[1], 1 / rho.shape[1])
    K = np.exp(-beta * rho)
    for _ in range(iters):
        new = q * ((p / (K @ q)) @ K)
        new /= new.sum()
        if np.abs(new - q).max() < tol:
            q = new
            break
        q = new
    W = K * q
    W /= W.sum(axis=1, keepdims=True)
    qy = p @ W
    with np.errstate(divide="ignore", invalid="ignore"):
        R = float(np.nansum(p[:, None] * W * np.log(W / qy))) / math.log(2)
    return float(p @ (W * rho).sum(axis=1)), R


def test_binary_hamming_closed_form():
    ham = 1 - np.eye(2)
    for D in (0.05, 0.1, 0.25):
        assert rate_point([0.5, 0.5], ham, D).R == pytest.approx(1 - _hb(D), abs=1e-3)
    assert rate_at_distortion([0.5, 0.5], ham, 0.5) == 0.0
    assert rate_at_distortion([0.5, 0.5], ham, 2.0) == 0.0


def test_zero_rate_and_zero_distortion_endpoints():
    mu = np.array([0.5, 0.3, 0.2])
    rho = 1 - np.eye(3)
    z = zero_rate_point(mu, rho)
    assert z.R == 0 and z.D == pytest.approx(0.5)
    hi, _ = ba_point(mu, rho, 2.0 ** 14)
    assert hi.D == pytest.approx(0.0, abs=1e-6)
    assert hi.R == pytest.approx(info.entropy(mu), abs=1e-6)


def test_beta_zero_is_zero_rate():
    pt, _ = ba_point([0.2, 0.8], [[0, 1], [1, 0]], 0.0)
    assert pt.R == 0 and pt.D == pytest.approx(0.2)


def test_matches_textbook_iteration():
    rng = np.random.default_rng(6)
    for _ in range(5):
        k = int(rng.integers(2, 6))
        mu = info.random_pmf(rng, k)
        x = np.sort(rng.random(k))
        rho = np.abs(x[:, None] - x[None, :])
        for beta in (1.0, 4.0, 16.0):
            pt, _ = ba_point(mu, rho, beta)
            D, R = _ba_oracle(mu, rho, beta * math.log(2))
            assert pt.D == pytest.approx(D, abs=1e-6)
            assert pt.R == pytest.approx(R, abs=1e-6)


def test_uniform_64_level_source_against_frozen_curve():
    q = 64
    x = np.arange(q)
    rho = np.abs(x[:, None] - x[None, :]) / (q - 1)
    eps = 1 / 16
    assert rate_point(np.full(q, 1 / q), rho, eps).R == pytest.approx(RD64[eps], abs=1e-3)


def test_sweep_envelope_monotone_convex():
    rng = np.random.default_rng(2)
    mu = info.random_pmf(rng, 5)
    rho = 1 - np.eye(5)
    pts = sorted((p.D, p.R) for p in ba_sweep(mu, rho))
    for (d0, r0), (d1, r1) in zip(pts, pts[1:]):
        assert r1 <= r0 + 1e-6
    for (d0, r0), (d1, r1), (d2, r2) in zip(pts, pts[1:], pts[2:]):
        if d2 - d0 > 1e-9:
            assert r1 <= r0 + (r2 - r0) * (d1 - d0) / (d2 - d0) + 1e-6


def test_infeasible_distortion():
    with pytest.raises(Infeasible):
        rate_point([0.5, 0.5], [[0.1, 1.0], [1.0, 0.1]], 0.05)


def test_orbit_codebook_average_distance():
    sys = build_shift(2, 1, 0, 2, 0.5)
    cb = orbit_codebook(sys, 2)
    # configurations 0 = (0, 0) and 2 = (0, 1)
    a, b = cb.labels[0], cb.labels[2]
    assert cb.rho[a, b] == pytest.approx(0.5)
    assert np.all(np.diag(cb.rho) == 0)
    one = orbit_codebook(sys, 1)
    assert one.rho.shape == (2, 2)


def test_rdist_single_letterizes_for_iid_source():
    sys = build_shift(2, 1, 0, 2, 0.5)
    mu = product_measure(sys, [0.7, 0.3])
    _, per = rdist_function(sys, mu.weights, 0.1, [1, 2])
    assert per[1] == pytest.approx(per[2], abs=2e-2)
    big, _ = rdist_function(sys, mu.weights, 10.0, [1, 2])
    assert big == 0.0


def test_kd_constant_against_frozen_oracle():
    K, s_star, c = kd_constant()
    assert K == pytest.approx(KD_K, abs=1e-9)
    assert s_star == pytest.approx(KD_S, abs=1e-6)
    # the bracket equals 2 at s = 0, so the supremum is not attained there
    assert math.exp(_kd_log_bracket(0.0)) == pytest.approx(2.0)
    assert c > 2.0


def test_kd_bracket_decreasing_beyond_two():
    vals = [_kd_log_bracket(s) for s in np.linspace(2, 50, 200)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_kd_bound_at_zero_exponent():
    K = kd_constant()[0]
    assert kd_lower_bound(0.0, 0.1) == pytest.approx(-K)


def test_duality_bound_trivial_lambda():
    mu = np.array([0.4, 0.6])
    rho = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert duality_bound(np.ones(2), 2.0, 0.1, mu, rho) == pytest.approx(-0.2)
    with pytest.raises(FeasibilityViolated):
        duality_bound(np.full(2, 3.0), 2.0, 0.1, mu, rho)


def test_duality_bound_below_rate():
    rng = np.random.default_rng(9)
    for _ in range(10):
        k = int(rng.integers(2, 6))
        mu = info.random_pmf(rng, k)
        x = np.sort(rng.random(k))
        rho = np.abs(x[:, None] - x[None, :])
        pt, _ = ba_point(mu, rho, 8.0)
        lam = feasible_lambda(mu, rho, 8.0, ba_lambda(pt, mu, rho))
        assert duality_bound(lam, 8.0, pt.D, mu, rho) <= pt.R + 1e-7


def test_quantizer_channel_extremes():
    x = np.arange(4.0)
    M = FiniteMetricSpace(np.abs(x[:, None] - x[None, :]))
    mu = np.array([0.1, 0.2, 0.3, 0.4])
    _, I, D = quantizer_channel([0b1111], M, mu)
    assert I == 0.0
    _, I, D = quantizer_channel([1, 2, 4, 8], M, mu)
    assert I == pytest.approx(info.entropy(mu)) and D == 0.0


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 8).flatmap(lambda n: st.tuples(
    st.lists(st.floats(0.01, 1), min_size=n, max_size=n),
    st.lists(st.floats(-3, 3), min_size=n, max_size=n))), st.floats(0.01, 0.9))
def test_free_energy_inequality(pa, eps):
    p, a = pa
    p = np.asarray(p) / sum(p)
    lhs, rhs = free_energy(p, a, eps)
    assert lhs <= rhs + 1e-9


def test_free_energy_equality_at_gibbs_weights():
    a = np.array([0.0, 1.0, 2.0])
    eps = 0.25
    w = (1 / eps) ** a
    lhs, rhs = free_energy(w / w.sum(), a, eps)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_quantizer_rate_within_covering_bound():
    sys = build_shift(2, 1, 0, 3, 0.5)
    Q = window_space(sys, box_grid(3))
    mu = Q.pushforward(product_measure(sys, [0.6, 0.4]).weights)
    sol = covering_number_potential(Q.space, None, 0.6, family=ball_family(Q.space, 0.6))
    _, I, _ = quantizer_channel(sol.masks, Q.space, mu)
    assert I <= math.log2(sol.value) + 1e-12


def test_product_channel_and_translation():
    sys = build_shift(2, 1, 0, 3, 0.5)
    mu = product_measure(sys, [0.7, 0.3])
    c = product_channel_check(sys, mu, 0.3, box_grid(1), box_grid(2, start=1))
    assert c["I"] <= c["R_A"] + c["R_B"] + 1e-9
    assert c["D"] <= 0.3 + 1e-9
    r0, r1, same = translation_check(sys, mu, 0.3, box_grid(2), [1])
    assert same and r0 == r1


def test_source_weights_sum_to_one():
    sys = build_shift(3, 1, 0, 2, 0.5)
    cb = orbit_codebook(sys, 2)
    w = source_weights(cb, product_measure(sys, [0.2, 0.3, 0.5]).weights)
    assert w.sum() == pytest.approx(1.0)
