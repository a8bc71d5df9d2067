"""Entropy and mutual information of finite distributions, in bits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonpositiveB

NORM_TOL = 1e-12


def _xlogx(p: np.ndarray) -> np.ndarray:
    """p * log2 p with 0 log 0 = 0."""
    out = np.zeros_like(p, dtype=float)
    pos = p > 0
    out[pos] = p[pos] * np.log2(p[pos])
    return out


@dataclass(frozen=True, eq=False)
class Pmf:
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).ravel()
        if np.any(p < 0) or abs(p.sum() - 1) > NORM_TOL * max(1, p.size):
            raise ValueError("pmf must be nonnegative and sum to 1")
        object.__setattr__(self, "p", p)


@dataclass(frozen=True, eq=False)
class JointPmf:
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 2 or np.any(p < 0) or abs(p.sum() - 1) > NORM_TOL * max(1, p.size):
            raise ValueError("joint pmf must be a nonnegative matrix summing to 1")
        object.__setattr__(self, "p", p)

    @property
    def px(self) -> np.ndarray:
        return self.p.sum(axis=1)

    @property
    def py(self) -> np.ndarray:
        return self.p.sum(axis=0)

    @property
    def T(self) -> "JointPmf":
        return JointPmf(self.p.T)

    @classmethod
    def from_channel(cls, mu, nu) -> "JointPmf":
        mu = np.asarray(getattr(mu, "p", mu), dtype=float)
        nu = np.asarray(getattr(nu, "nu", nu), dtype=float)
        return cls(mu[:, None] * nu)


@dataclass(frozen=True, eq=False)
class Channel:
    nu: np.ndarray

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=float)
        if nu.ndim != 2 or np.any(nu < 0) or np.any(np.abs(nu.sum(axis=1) - 1) > 1e-9):
            raise ValueError("channel rows must be pmfs")
        object.__setattr__(self, "nu", nu)


def entropy(p) -> float:
    p = np.asarray(getattr(p, "p", p), dtype=float)
    return float(-_xlogx(p).sum())


def joint_entropy(j: JointPmf) -> float:
    return entropy(j.p.ravel())


def mutual_information(j: JointPmf) -> float:
    p = j.p
    i, k = np.nonzero(p > 0)
    # log form: px * py can underflow for subnormal masses
    val = float(np.sum(p[i, k] * (np.log2(p[i, k]) - np.log2(j.px[i]) - np.log2(j.py[k]))))
    return max(val, 0.0)


def conditional_entropy(j: JointPmf) -> float:
    """H(Y|X) = H(X, Y) - H(X)."""
    return max(joint_entropy(j) - entropy(j.px), 0.0)


def mutual_information_channel(mu, nu) -> float:
    return mutual_information(JointPmf.from_channel(mu, nu))


def log_sum_gap(a, b) -> float:
    """sum a_i log(a_i/b_i) - (sum a) log(sum a / sum b); nonnegative."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("a and b must have the same shape")
    if np.any(b <= 0):
        raise NonpositiveB("every b_i must be positive")
    pos = a > 0
    left = float(np.sum(a[pos] * np.log2(a[pos] / b[pos])))
    sa = a.sum()
    right = sa * np.log2(sa / b.sum()) if sa > 0 else 0.0
    return left - right


def coupling_sequence(mu_n, mu) -> JointPmf:
    """Coupling with maximal diagonal; surpluses fill deficits in index order."""
    a = np.asarray(getattr(mu_n, "p", mu_n), dtype=float)
    b = np.asarray(getattr(mu, "p", mu), dtype=float)
    pi = np.diag(np.minimum(a, b))
    surplus = np.clip(a - b, 0, None)
    deficit = np.clip(b - a, 0, None)
    i = j = 0
    while i < len(a) and j < len(b):
        if surplus[i] <= 0:
            i += 1
            continue
        if deficit[j] <= 0:
            j += 1
            continue
        m = min(surplus[i], deficit[j])
        pi[i, j] += m
        surplus[i] -= m
        deficit[j] -= m
    return JointPmf(pi)


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(getattr(p, "p", p)) - np.asarray(getattr(q, "p", q))).sum())


def quantize_channel(j: JointPmf, f, g) -> JointPmf:
    """Law of (f(X), g(Y)); f and g are integer label arrays over the alphabets."""
    f = np.asarray(f, dtype=int)
    g = np.asarray(g, dtype=int)
    out = np.zeros((f.max() + 1, g.max() + 1))
    np.add.at(out, (f[:, None], g[None, :]), j.p)
    return JointPmf(out)


# ---------------------------------------------------------------- random instances

def random_pmf(rng: np.random.Generator, k: int, sparsity: float = 0.0) -> np.ndarray:
    p = rng.dirichlet(np.ones(k) * rng.choice([0.3, 1.0, 3.0]))
    if sparsity:
        p = p * (rng.random(k) >= sparsity)
        if p.sum() == 0:
            p[rng.integers(k)] = 1.0
    return p / p.sum()


def random_channel(rng: np.random.Generator, kx: int, ky: int) -> np.ndarray:
    return np.stack([random_pmf(rng, ky) for _ in range(kx)])


def random_joint(rng: np.random.Generator, kx: int, ky: int) -> JointPmf:
    return JointPmf.from_channel(random_pmf(rng, kx, sparsity=0.2), random_channel(rng, kx, ky))
