"""Finite metric spaces, orbit metrics, potential integrals and variation.

Everything here works on dense distance matrices.  A dynamical system is
anything exposing ``act(u)`` (an index permutation sending point i to the
index of T^u x_i), ``base_metric``, ``potential``, ``group`` ("Z" or "R") and
``check_window(elems)``; see :mod:`mdimlab.systems`.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IncompatibleGrid

TOL = 1e-9


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Dense distance matrix plus a resolution floor.

    ``floor`` controls how ``rho0`` enters floored diameters of sets with
    more than one point: ``"max"`` uses max(diam, rho0) and ``"add"`` uses
    diam + rho0 (appropriate when each point stands for a cell of size rho0).
    """

    dist: np.ndarray
    rho0: float = 0.0
    floor: str = "max"

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance matrix must be square")
        object.__setattr__(self, "dist", d)
        if self.floor not in ("max", "add"):
            raise ValueError(f"unknown floor mode {self.floor!r}")

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def diameter(self, idx) -> float:
        idx = np.asarray(idx, dtype=int)
        if idx.size <= 1:
            return 0.0
        return float(self.dist[np.ix_(idx, idx)].max())

    def floored(self, diam: float, size: int) -> float:
        """Floored diameter of a set with ``size`` points and true diameter ``diam``."""
        if size <= 1:
            return 0.0
        if self.floor == "add":
            return diam + self.rho0
        return max(diam, self.rho0)

    def hat(self, diam: float) -> float:
        """Floored diameter used by Hausdorff sums; singletons get rho0 too."""
        if self.floor == "add":
            return diam + self.rho0
        return max(diam, self.rho0)

    def subspace(self, idx) -> "FiniteMetricSpace":
        idx = np.asarray(idx, dtype=int)
        return FiniteMetricSpace(self.dist[np.ix_(idx, idx)], self.rho0, self.floor)


@dataclass(frozen=True, eq=False)
class PotentialField:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(v)):
            raise ValueError("potential values must be finite")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True, eq=False)
class GroupGrid:
    """Finite set of group elements with positive weights.

    For Z^d grids every weight is 1; for R^d grids the elements are
    quadrature nodes and weights are cell volumes.
    """

    d: int
    elems: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        e = np.asarray(self.elems, dtype=float).reshape(-1, self.d)
        w = np.ones(len(e)) if self.weights is None else np.asarray(self.weights, dtype=float)
        if len(w) != len(e) or np.any(w <= 0):
            raise ValueError("weights must be positive, one per element")
        if len({tuple(r) for r in e}) != len(e):
            raise ValueError("grid elements must be distinct")
        object.__setattr__(self, "elems", e)
        object.__setattr__(self, "weights", w)

    @property
    def measure(self) -> float:
        return float(self.weights.sum())

    def __len__(self):
        return len(self.elems)

    def translate(self, a) -> "GroupGrid":
        return GroupGrid(self.d, self.elems + np.asarray(a, dtype=float), self.weights)

    def union(self, other: "GroupGrid") -> "GroupGrid":
        seen = {tuple(r) for r in self.elems}
        keep = [i for i, r in enumerate(other.elems) if tuple(r) not in seen]
        return GroupGrid(self.d, np.vstack([self.elems, other.elems[keep]]),
                         np.concatenate([self.weights, other.weights[keep]]))

    def key(self) -> str:
        return hashlib.sha1(np.round(self.elems, 12).tobytes() + self.weights.tobytes()).hexdigest()[:16]


def box_grid(L: int, d: int = 1, start=0) -> GroupGrid:
    """Integer box start + [0, L)^d."""
    axes = [np.arange(L)] * d
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    return GroupGrid(d, pts + np.asarray(start))


def quadrature_grid(L: float, d: int, tau: float) -> GroupGrid:
    """Left-endpoint nodes j*tau of [0, L)^d with cell-volume weights."""
    k = L / tau
    if abs(k - round(k)) > 1e-9 or round(k) < 1:
        raise IncompatibleGrid(f"tau={tau} does not divide L={L}")
    k = int(round(k))
    axes = [np.arange(k) * tau] * d
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    return GroupGrid(d, pts, np.full(len(pts), tau ** d))


def default_grid(sys, L) -> GroupGrid:
    """[0, L)^d in the system's group: integer box or quadrature nodes."""
    if sys.group == "R":
        return quadrature_grid(L, sys.d, sys.tau)
    return box_grid(int(L), sys.d)


def validate_metric(M: FiniteMetricSpace, tol: float = TOL) -> list[str]:
    d = M.dist
    out = []
    if M.rho0 < 0:
        out.append("negative rho0")
    if np.any(np.abs(np.diag(d)) > tol):
        out.append("nonzero diagonal")
    if np.any(d < -tol):
        out.append("negative distance")
    if np.any(np.abs(d - d.T) > tol):
        out.append("symmetry violation")
    # d[i,k] <= d[i,j] + d[j,k], vectorized over k for each j
    for j in range(M.n):
        if np.any(d - (d[:, j][:, None] + d[j, :][None, :]) > tol):
            out.append("triangle violation")
            break
    return out


def _cache_path(tag: str):
    root = os.environ.get("MEANDIM_CACHE_DIR")
    if not root:
        return None
    p = Path(root)
    p.mkdir(parents=True, exist_ok=True)
    return p / f"{tag}.npy"


def _memo(sys, op: str, grid: GroupGrid, compute):
    tag = f"{op}-{getattr(sys, 'fingerprint', 'anon')}-{grid.key()}"
    path = _cache_path(tag) if hasattr(sys, "fingerprint") else None
    if path is not None and path.exists():
        return np.load(path)
    out = compute()
    if path is not None:
        np.save(path, out)
    return out


def _orbit_mats(sys, A: GroupGrid):
    base = sys.base_metric.dist
    for u, w in zip(A.elems, A.weights):
        p = sys.act(u)
        yield base[np.ix_(p, p)], w


def orbit_metric_sup(sys, A: GroupGrid, check: bool = True) -> FiniteMetricSpace:
    """d_A(x, y) = max over u in A of d(T^u x, T^u y)."""

    if check:
        sys.check_window(A.elems)

    def compute():
        out = None
        for m, _ in _orbit_mats(sys, A):
            out = m.copy() if out is None else np.maximum(out, m, out=out)
        return out

    M = sys.base_metric
    return FiniteMetricSpace(_memo(sys, "sup", A, compute), M.rho0, M.floor)


def orbit_metric_avg(sys, L, check: bool = True) -> FiniteMetricSpace:
    """Average of d(T^u x, T^u y) over [0, L)^d (quadrature for flows)."""
    return orbit_metric_mean(sys, default_grid(sys, L), check)


def orbit_metric_mean(sys, A: GroupGrid, check: bool = True) -> FiniteMetricSpace:
    if check:
        sys.check_window(A.elems)

    def compute():
        out = np.zeros_like(sys.base_metric.dist)
        for m, w in _orbit_mats(sys, A):
            out += w * m
        return out / A.measure

    M = sys.base_metric
    return FiniteMetricSpace(_memo(sys, "avg", A, compute), M.rho0, M.floor)


def potential_integral(sys, A: GroupGrid, phi: PotentialField | None = None,
                       check: bool = True) -> PotentialField:
    """phi_A(x) = sum over u in A of w_u * phi(T^u x)."""
    if check:
        sys.check_window(A.elems)
    v = (sys.potential if phi is None else phi).values
    out = np.zeros_like(v)
    for u, w in zip(A.elems, A.weights):
        out += w * v[sys.act(u)]
    return PotentialField(out)


def variation(phi: PotentialField, M: FiniteMetricSpace, eps: float) -> float:
    """sup |phi(x) - phi(y)| over pairs with d(x, y) < eps."""
    v = phi.values
    gap = np.abs(v[:, None] - v[None, :])
    return float(gap[M.dist < eps].max(initial=0.0))


@dataclass(frozen=True, eq=False)
class Quotient:
    """Zero-distance classes of a pseudo-metric, one representative each.

    ``labels[i]`` is the class of point i; ``reps[k]`` the representative of
    class k.  Class potentials are maxima over the class, which keeps
    sup-over-set quantities exact for families of closed balls.
    """

    labels: np.ndarray
    reps: np.ndarray
    space: FiniteMetricSpace
    phi: PotentialField

    @property
    def k(self) -> int:
        return len(self.reps)

    def pushforward(self, weights) -> np.ndarray:
        """Class masses; fsum makes the result independent of point order."""
        w = np.asarray(weights, float)
        order = np.argsort(self.labels, kind="stable")
        cuts = np.searchsorted(self.labels[order], np.arange(self.k + 1))
        vals = w[order]
        return np.array([math.fsum(sorted(vals[cuts[c]:cuts[c + 1]])) for c in range(self.k)])

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)


def quotient(M: FiniteMetricSpace, phi: PotentialField | None = None,
             keys: np.ndarray | None = None, tol: float = 0.0) -> Quotient:
    """Collapse points at distance <= tol.

    ``keys`` (one row per point) fixes a canonical class order: classes are
    sorted by key, which makes quotients of translated windows line up.
    """
    n = M.n
    v = np.zeros(n) if phi is None else phi.values
    if keys is not None:
        _, first, labels = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        labels = labels.ravel()
        reps = first
    else:
        first_close = np.argmax(M.dist <= tol, axis=1)
        reps, labels = np.unique(first_close, return_inverse=True)
    sub = M.dist[np.ix_(reps, reps)]
    cls_phi = np.full(len(reps), -np.inf)
    np.maximum.at(cls_phi, labels, v)
    return Quotient(labels, reps, FiniteMetricSpace(sub, M.rho0, M.floor), PotentialField(cls_phi))


def window_space(sys, A: GroupGrid, phi: PotentialField | None = None,
                 metric: str = "sup", check: bool = True) -> Quotient:
    """Quotient of (points, d_A or mean metric) with class potentials phi_A.

    Points at d_A-distance zero are indistinguishable at every scale, so all
    covering and coding quantities can be computed on the classes.
    """
    phi_A = potential_integral(sys, A, phi, check)
    M_sup = orbit_metric_sup(sys, A, check)
    keys = sys.window_keys(A.elems) if hasattr(sys, "window_keys") else None
    Q = quotient(M_sup, phi_A, keys=keys)
    if metric == "sup":
        return Q
    if metric != "avg":
        raise ValueError(f"unknown metric {metric!r}")
    M_avg = orbit_metric_mean(sys, A, check)
    sub = M_avg.dist[np.ix_(Q.reps, Q.reps)]
    return Quotient(Q.labels, Q.reps, FiniteMetricSpace(sub, M_avg.rho0, M_avg.floor), Q.phi)
