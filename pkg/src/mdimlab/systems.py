"""Example dynamical systems and measures on them.

Shift models are periodic: a configuration lives on the torus (Z/N)^d with
N = Lmax + 2r, so every shift is a bijection of the point set and product
measures are exactly invariant.  Orbit quantities over windows of span at
most Lmax never see the wrap-around, so they agree with the full shift.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core_metric import FiniteMetricSpace, PotentialField, quadrature_grid
from .errors import (CapExceeded, ConfigInvalid, DegenerateMetric, IncompatibleGrid,
                     NonInvariantMeasure, WindowExceeded)

POINT_CAP = 20_000


@dataclass(eq=False)
class SystemModel:
    d: int
    kind: str
    group: str
    points: np.ndarray
    base_metric: FiniteMetricSpace
    potential: PotentialField
    shift_budget: float
    act_fn: Callable[[np.ndarray], np.ndarray]
    tau: float | None = None
    meta: dict = field(default_factory=dict)
    _perm_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.base_metric.n

    @property
    def fingerprint(self) -> str:
        blob = json.dumps(self.meta, sort_keys=True, default=str).encode()
        return hashlib.sha1(blob).hexdigest()[:16]

    def act(self, u) -> np.ndarray:
        """Permutation p with p[i] = index of T^u x_i."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        key = tuple(np.round(u, 12))
        p = self._perm_cache.get(key)
        if p is None:
            p = self.act_fn(u)
            self._perm_cache[key] = p
        return p

    def check_window(self, elems) -> None:
        e = np.asarray(elems, dtype=float).reshape(-1, self.d)
        if self.group == "Z" and np.any(np.abs(e - np.round(e)) > 1e-9):
            raise WindowExceeded("non-integer element for a Z^d action")
        span = (e.max(axis=0) - e.min(axis=0) + (1 if self.group == "Z" else 0)).max()
        if span > self.shift_budget + 1e-9:
            raise WindowExceeded(f"grid span {span:g} exceeds window budget {self.shift_budget:g}")

    def with_potential(self, phi) -> "SystemModel":
        values = phi.values if isinstance(phi, PotentialField) else np.asarray(phi, float)
        meta = dict(self.meta, potential_hash=hashlib.sha1(values.tobytes()).hexdigest()[:12])
        return SystemModel(self.d, self.kind, self.group, self.points, self.base_metric,
                           PotentialField(values), self.shift_budget, self.act_fn, self.tau,
                           meta, self._perm_cache)

    # canonical class keys for window quotients (shift models only)
    def window_keys(self, elems) -> np.ndarray | None:
        if self.kind != "shift":
            return None
        r, N = self.meta["r"], self.meta["N"]
        e = np.round(np.asarray(elems, dtype=float).reshape(-1, self.d)).astype(int)
        base = e.min(axis=0)
        offs = _cube_offsets(r, self.d)
        rel = sorted({tuple(x) for x in (e - base)})
        cells = sorted({tuple(np.asarray(a) + o) for a in rel for o in offs})
        pos = (np.asarray(cells) + base) % N
        return self.points[:, _flat(pos, N)]


@dataclass(frozen=True, eq=False)
class MeasureOnPoints:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("measure weights must be nonnegative and sum to 1")
        object.__setattr__(self, "weights", w)

    def integrate(self, phi: PotentialField) -> float:
        return float(self.weights @ phi.values)


def _cube_offsets(r: int, d: int) -> np.ndarray:
    ax = np.arange(-r, r + 1)
    return np.stack(np.meshgrid(*[ax] * d, indexing="ij"), axis=-1).reshape(-1, d)


def _flat(pos: np.ndarray, N: int) -> np.ndarray:
    pos = np.asarray(pos).reshape(-1, pos.shape[-1])
    return (pos * (N ** np.arange(pos.shape[1]))).sum(axis=1)


def _potential(name: str, kind: str, points: np.ndarray, q: int | None = None) -> PotentialField:
    if name in ("zero", None):
        return PotentialField(np.zeros(len(points)))
    if name.startswith("const:"):
        return PotentialField(np.full(len(points), float(name.split(":", 1)[1])))
    if kind == "shift" and name == "coord0":
        return PotentialField(points[:, 0] / (q - 1))
    if kind == "flow" and name in ("sin", "cos"):
        return PotentialField(getattr(np, name)(points))
    raise ConfigInvalid(f"unknown potential {name!r} for {kind} systems")


def build_shift(q: int, d: int = 1, r: int = 0, Lmax: int = 4, weight_decay: float = 0.5,
                potential: str = "zero", point_cap: int = POINT_CAP) -> SystemModel:
    """Full shift on q symbols with base metric weighted over the r-cube."""
    if q < 2 or d not in (1, 2) or r < 0 or Lmax < 1 or not 0 < weight_decay < 1:
        raise ConfigInvalid("need q >= 2, d in {1,2}, r >= 0, Lmax >= 1, 0 < decay < 1")
    N = Lmax + 2 * r
    cells = N ** d
    if q ** cells > point_cap:
        raise CapExceeded(f"{q}^{cells} configurations exceed the cap {point_cap}")
    n = q ** cells
    idx = np.arange(n)
    configs = (idx[:, None] // q ** np.arange(cells)[None, :]) % q
    place = q ** np.arange(cells)
    grid = np.stack(np.meshgrid(*[np.arange(N)] * d, indexing="ij"), axis=-1).reshape(-1, d)
    # grid rows are ordered by the first axis; relabel so that cell c has position pos[c]
    pos = np.empty((cells, d), dtype=int)
    pos[_flat(grid, N)] = grid

    def act_fn(u):
        u = np.round(u).astype(int)
        gather = _flat((pos + u) % N, N)
        return configs[:, gather] @ place

    dist = np.zeros((n, n))
    for off in _cube_offsets(r, d):
        c = _flat(off % N, N)[0]
        col = configs[:, c].astype(float)
        w = weight_decay ** np.abs(off).max() / (q - 1)
        np.maximum(dist, w * np.abs(col[:, None] - col[None, :]), out=dist)
    meta = dict(kind="shift", q=q, d=d, r=r, Lmax=Lmax, decay=weight_decay, N=N, potential=potential)
    return SystemModel(d, "shift", "Z", configs, FiniteMetricSpace(dist, weight_decay ** (r + 1)),
                       _potential(potential, "shift", configs, q), Lmax, act_fn, meta=meta)


def build_rotation_flow(alpha: float, n_points: int, tau: float, horizon: float = 64.0,
                        potential: str = "zero") -> SystemModel:
    """Rotation of the circle by t*alpha, snapped to n_points equispaced samples."""
    if n_points < 2 or tau <= 0:
        raise ConfigInvalid("need n_points >= 2 and tau > 0")
    theta = 2 * np.pi * np.arange(n_points) / n_points
    gap = np.abs(theta[:, None] - theta[None, :])
    dist = np.minimum(gap, 2 * np.pi - gap)
    k = np.arange(n_points)

    def act_fn(t):
        step = int(np.round(t[0] * alpha * n_points / (2 * np.pi)))
        return (k + step) % n_points

    meta = dict(kind="flow", alpha=alpha, n_points=n_points, tau=tau, horizon=horizon, potential=potential)
    return SystemModel(1, "flow", "R", theta, FiniteMetricSpace(dist, np.pi / n_points),
                       _potential(potential, "flow", theta), horizon, act_fn, tau=tau, meta=meta)


def zd_reduction(sys: SystemModel) -> SystemModel:
    """Restrict an R^d action to Z^d with the unit-box averaged metric and potential."""
    if sys.group != "R":
        raise IncompatibleGrid("reduction needs an R^d action")
    k = 1.0 / sys.tau
    if abs(k - round(k)) > 1e-9:
        raise IncompatibleGrid(f"tau={sys.tau} does not divide 1")
    unit = quadrature_grid(1.0, sys.d, sys.tau)
    base = sys.base_metric.dist
    dist = np.zeros_like(base)
    pot = np.zeros(sys.n)
    for u, w in zip(unit.elems, unit.weights):
        p = sys.act(u)
        dist += w * base[np.ix_(p, p)]
        pot += w * sys.potential.values[p]
    meta = dict(sys.meta, kind="zflow")
    return SystemModel(sys.d, "zflow", "Z", sys.points,
                       FiniteMetricSpace(dist, sys.base_metric.rho0, sys.base_metric.floor),
                       PotentialField(pot), np.floor(sys.shift_budget - 1), sys.act_fn, meta=meta)


def fixed_point_system(c: float = 0.0) -> SystemModel:
    """One point, trivial Z-action, constant potential c."""
    return SystemModel(1, "point", "Z", np.zeros((1, 1), dtype=int),
                       FiniteMetricSpace(np.zeros((1, 1))), PotentialField([c]), 10 ** 6,
                       lambda u: np.zeros(1, dtype=int), meta=dict(kind="point", c=c))


def cantor_net(level: int) -> FiniteMetricSpace:
    """Left endpoints of the level-k middle-third intervals; each stands for a 3^-k cell."""
    digits = (np.arange(2 ** level)[:, None] >> np.arange(level)[::-1][None, :]) & 1
    x = (2 * digits * 3.0 ** -np.arange(1, level + 1)).sum(axis=1)
    return FiniteMetricSpace(np.abs(x[:, None] - x[None, :]), 3.0 ** -level, floor="add")


def tame_metric(M: FiniteMetricSpace) -> FiniteMetricSpace:
    """d'(x, y) = sum_n 2^-n |d(x, x_n) - d(y, x_n)| in enumeration order."""
    D = M.dist
    out = np.zeros_like(D)
    w = 0.5
    for j in range(M.n):
        if w == 0.0:
            break
        col = D[:, j]
        out += w * np.abs(col[:, None] - col[None, :])
        w *= 0.5
    if np.any((out <= 0) & (D > 0)):
        raise DegenerateMetric("two distinct points have zero tame distance")
    return FiniteMetricSpace(out, M.rho0, M.floor)


def product_measure(sys: SystemModel, marginal) -> MeasureOnPoints:
    m = np.asarray(getattr(marginal, "p", marginal), dtype=float)
    if sys.kind != "shift" or len(m) != sys.meta["q"]:
        raise ConfigInvalid("product measures need a shift model and a marginal over its alphabet")
    # symbol counts make the weight independent of coordinate order
    counts = np.stack([(sys.points == a).sum(axis=1) for a in range(len(m))], axis=1)
    w = np.prod(m[None, :] ** counts, axis=1)
    return MeasureOnPoints(w / math.fsum(w))


def check_invariant(sys: SystemModel, mu: MeasureOnPoints, tol: float = 1e-12) -> None:
    w = mu.weights
    for k in range(sys.d):
        e = np.zeros(sys.d)
        e[k] = 1
        if np.max(np.abs(w[sys.act(e)] - w)) > tol:
            raise NonInvariantMeasure("measure changes under a generator of the action")


def system_from_config(cfg: dict) -> SystemModel:
    """Build a system from the JSON experiment schema."""
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    try:
        if kind == "shift":
            return build_shift(int(cfg["q"]), int(cfg.get("d", 1)), int(cfg.get("r", 0)),
                               int(cfg.get("Lmax", 4)), float(cfg.get("decay", 0.5)),
                               cfg.get("potential", "zero"), int(cfg.get("point_cap", POINT_CAP)))
        if kind in ("flow", "zflow"):
            sys = build_rotation_flow(float(cfg["alpha"]), int(cfg["n_points"]), float(cfg["tau"]),
                                      float(cfg.get("horizon", 64.0)), cfg.get("potential", "zero"))
            return zd_reduction(sys) if kind == "zflow" else sys
        if kind == "point":
            return fixed_point_system(float(cfg.get("c", 0.0)))
    except KeyError as exc:
        raise ConfigInvalid(f"system config missing {exc}") from None
    raise ConfigInvalid(f"unknown system kind {kind!r}")
