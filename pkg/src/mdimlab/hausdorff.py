"""Scale-eps Hausdorff values and dimension with potential; Frostman measures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core_metric import FiniteMetricSpace, PotentialField
from .cover import ball_family, family_from_sets, mask_indices, solve_cover
from .errors import FrostmanInfeasible, Infeasible, InvalidExponent, NoConvergence
from .lp import simplex_max
from .systems import MeasureOnPoints

BRACKET = 64.0
S_TOL = 1e-4


@dataclass(frozen=True)
class HausdorffQuery:
    M: FiniteMetricSpace
    phi: PotentialField
    eps: float
    s: float


@dataclass
class FrostmanResult:
    nu: MeasureOnPoints
    t: float
    binding: list
    optimum: float


class _Pool:
    """Candidate sets with floored diameters, plus a memo of covers seen so far."""

    def __init__(self, M, phi, eps, family=None, extra_sets=()):
        if M.rho0 >= eps:
            raise Infeasible(f"resolution floor {M.rho0:g} is not below eps={eps:g}")
        F = family if family is not None else ball_family(M, eps)
        if extra_sets:
            F = F.extend(family_from_sets(M, list(extra_sets)))
        F = F.with_phi(phi)
        sizes = F.sizes()
        hat = np.where(sizes == 1, M.hat(0.0), F.diam)
        keep = np.flatnonzero(hat < eps)
        self.M, self.n = M, M.n
        self.masks = [F.masks[i] for i in keep]
        self.hat = hat[keep]
        self.a = F.sup_phi[keep]
        self.pos = {m: k for k, m in enumerate(self.masks)}
        self.phimax = float(phi.values.max())
        self.covers = []

    def add_cover(self, masks):
        if all(m in self.pos for m in masks):
            idx = sorted(self.pos[m] for m in masks)
            if idx not in self.covers:
                self.covers.append(idx)

    def weights(self, s):
        return self.hat ** (s - self.a)

    def solve(self, s, mode):
        if s <= self.phimax:
            raise InvalidExponent(f"s={s:g} must exceed max phi={self.phimax:g}")
        w = self.weights(s)
        chosen, val, opt = solve_cover(self.n, self.masks, w, mode, self.covers)
        if sorted(chosen) not in self.covers:
            self.covers.append(sorted(chosen))
        return val, opt

    def threshold(self, idx):
        """inf{s > max phi : sum over the cover of hat^(s - a) < 1}."""
        b, a = self.hat[idx], self.a[idx]
        lo = self.phimax

        def f(s):
            return float(np.sum(b ** (s - a)))

        if f(lo + 1e-12) < 1:
            return lo
        hi = lo + BRACKET
        if f(hi) >= 1:
            return math.inf
        return brentq(lambda s: math.log(max(f(s), 1e-300)), lo + 1e-12, hi, xtol=1e-12)


def hausdorff_value(q: HausdorffQuery, mode: str = "exact", family=None, extra_sets=(),
                    seed_covers=()) -> float:
    pool = _Pool(q.M, q.phi, q.eps, family, extra_sets)
    for c in seed_covers:
        pool.add_cover(c)
    return pool.solve(q.s, mode)[0]


@dataclass
class DimhResult:
    value: float
    optimal: bool
    covers: list           # every cover found, as lists of masks
    probes: list           # (s, H) pairs visited by the bisection


def dimh_search(M: FiniteMetricSpace, phi: PotentialField | None, eps: float, mode: str = "exact",
                family=None, extra_sets=(), seed_covers=(), max_rounds: int = 60) -> DimhResult:
    """Scale-eps Hausdorff dimension by threshold iteration.

    Start from the best threshold among the seed covers (or the bracket top),
    solve the cover problem at the current exponent s, and move s to the
    threshold of the cover found.  Each step strictly lowers s until no cover
    has a sum below one at s; in exact mode that s is the family infimum.
    Falls back to bisection (tolerance S_TOL) if the rounds run out.
    """
    if not 0 < eps <= 1:
        raise InvalidExponent("need 0 < eps <= 1 so that the sums decrease in s")
    phi = phi if phi is not None else PotentialField(np.zeros(M.n))
    pool = _Pool(M, phi, eps, family, extra_sets)
    for c in seed_covers:
        pool.add_cover(c)
    lo, top = pool.phimax, pool.phimax + BRACKET
    probes = []
    optimal = True

    def H(s):
        nonlocal optimal
        v, opt = pool.solve(s, mode)
        optimal &= opt
        probes.append((s, v))
        return v

    def best():
        return min((pool.threshold(c) for c in pool.covers), default=math.inf)

    if H(lo + 1e-9) < 1:
        return DimhResult(lo, optimal, [[pool.masks[i] for i in c] for c in pool.covers], probes)
    h_top = H(top)
    if h_top > probes[0][1] * (1 + 1e-9):
        raise NoConvergence("Hausdorff sum increased with s")
    if h_top >= 1:
        raise NoConvergence(f"no s below max phi + {BRACKET:g} gives a sum under 1")
    s = best()
    for _ in range(max_rounds):
        if H(s) >= 1 - 1e-12:
            break
        nxt = best()
        if nxt >= s - 1e-13:
            break
        s = nxt
    else:
        hi = s
        while hi - lo > S_TOL:
            mid = 0.5 * (lo + hi)
            if H(mid) < 1:
                hi = mid
            else:
                lo = mid
    covers = [[pool.masks[i] for i in c] for c in pool.covers]
    return DimhResult(best(), optimal, covers, probes)


def dimh_at_scale(M: FiniteMetricSpace, phi: PotentialField | None, eps: float,
                  mode: str = "exact", **kw) -> float:
    return dimh_search(M, phi, eps, mode, **kw).value


def cover_threshold(M: FiniteMetricSpace, phi: PotentialField, masks, eps: float | None = None) -> float:
    """Hausdorff threshold exponent of one explicit cover."""
    n = M.n
    hat, a = [], []
    for m in masks:
        idx = mask_indices(m, n)
        hat.append(M.hat(M.diameter(idx)))
        a.append(phi.values[idx].max())
    pool = _Pool.__new__(_Pool)
    pool.hat, pool.a, pool.phimax = np.array(hat), np.array(a), float(phi.values.max())
    return pool.threshold(np.arange(len(masks)))


# ---------------------------------------------------------------- Frostman

def _subset_diams(M: FiniteMetricSpace) -> np.ndarray:
    n = M.n
    diam = np.zeros(1 << n)
    D = M.dist
    for k in range(1, 1 << n):
        top = k.bit_length() - 1
        rest = k & ~(1 << top)
        if rest:
            members = mask_indices(rest, n)
            diam[k] = max(diam[rest], D[top, members].max())
    return diam


def constraint_sets(M: FiniteMetricSpace, delta: float, exhaustive_max: int = 14) -> tuple:
    """(sets as index arrays, floored diameters) with floored diameter < delta/6."""
    bound = delta / 6
    if M.n <= exhaustive_max:
        diam = _subset_diams(M)
        out, hats = [], []
        for k in range(1, 1 << M.n):
            h = M.hat(diam[k])
            if h < bound:
                out.append(mask_indices(k, M.n))
                hats.append(h)
        return out, np.array(hats)
    F = ball_family(M, bound)
    out, hats = [], []
    for m, d, size in zip(F.masks, F.diam, F.sizes()):
        h = M.hat(0.0) if size == 1 else d
        if h < bound:
            out.append(mask_indices(m, M.n))
            hats.append(h)
    return out, np.array(hats)


def frostman_violations(M: FiniteMetricSpace, nu, delta: float, t: float,
                        exhaustive_max: int = 14, tol: float = 1e-9) -> list:
    w = np.asarray(getattr(nu, "weights", nu), dtype=float)
    sets, hats = constraint_sets(M, delta, exhaustive_max)
    return [s for s, h in zip(sets, hats) if w[s].sum() > h ** t + tol]


def frostman_measure(M: FiniteMetricSpace, delta: float, t: float,
                     exhaustive_max: int = 14) -> FrostmanResult:
    """LP for a probability measure with nu(E) <= hat(E)^t on small sets E."""
    if t < 0:
        raise InvalidExponent("t must be nonnegative")
    if M.rho0 <= 0 and t > 0:
        raise InvalidExponent("a positive exponent needs a positive resolution floor")
    n = M.n
    sets, hats = constraint_sets(M, delta, exhaustive_max)
    caps = hats ** t
    lazy = n > exhaustive_max
    active = [i for i, s in enumerate(sets) if len(s) == 1] if lazy else list(range(len(sets)))
    while True:
        A = np.zeros((len(active) + 1, n))
        for r, i in enumerate(active):
            A[r, sets[i]] = 1.0
        A[-1] = 1.0
        b = np.append(caps[active], 1.0)
        res = simplex_max(np.ones(n), A, b)
        if not lazy:
            break
        x = res.x
        chosen = set(active)
        new = [i for i, s in enumerate(sets) if i not in chosen and x[s].sum() > caps[i] + 1e-12]
        if not new:
            break
        active.extend(new)
    if res.value < 1 - 1e-9:
        raise FrostmanInfeasible(t, res.value)
    w = np.clip(res.x, 0, None)
    w = w / w.sum()
    binding = [sets[i].tolist() for r, i in enumerate(active) if res.slack[r] <= 1e-12]
    return FrostmanResult(MeasureOnPoints(w), t, binding, float(res.value))
