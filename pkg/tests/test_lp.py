import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from mdimlab.lp import Unbounded, simplex_max


def test_textbook_instance():
    # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18
    res = simplex_max([3, 5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18])
    assert res.value == pytest.approx(36)
    np.testing.assert_allclose(res.x, [2, 6])
    np.testing.assert_allclose(res.slack, [2, 0, 0], atol=1e-12)


def test_unbounded():
    with pytest.raises(Unbounded):
        simplex_max([1, 1], [[1, -1]], [1])


def test_negative_rhs_rejected():
    with pytest.raises(ValueError):
        simplex_max([1], [[1]], [-1])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_matches_highs(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 8)), int(rng.integers(1, 8))
    A = rng.random((m, n)) * (rng.random((m, n)) < 0.7)
    A = np.vstack([A, np.ones((1, n))])
    b = np.append(rng.random(m), 1.0 + rng.random())
    c = rng.random(n)
    ours = simplex_max(c, A, b)
    ref = linprog(-c, A_ub=A, b_ub=b, bounds=(0, None), method="highs")
    assert ref.status == 0
    assert ours.value == pytest.approx(-ref.fun, abs=1e-9)
    assert np.all(A @ ours.x <= b + 1e-9)
    assert np.all(ours.x >= -1e-12)
