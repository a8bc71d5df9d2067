"""Covering numbers with potential via weighted set cover.

Candidate sets are Python ints used as bitmasks over point indices.  The
exact solver is a depth-first branch-and-bound: branch on the uncovered
point with the fewest candidate sets, prune with a per-point price bound.
Past the size/time cutoff it falls back to lazy greedy and says so.
"""

from __future__ import annotations

import heapq
import math
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .core_metric import FiniteMetricSpace, PotentialField, default_grid, window_space
from .errors import Infeasible

MAX_EXACT_SETS = 2500
TIME_LIMIT = 60.0


@contextmanager
def solver_limits(time_limit: float | None = None, max_sets: int | None = None):
    """Temporarily change the exact-solver cutoffs (seconds, candidate sets)."""
    global TIME_LIMIT, MAX_EXACT_SETS
    saved = TIME_LIMIT, MAX_EXACT_SETS
    if time_limit is not None:
        TIME_LIMIT = time_limit
    if max_sets is not None:
        MAX_EXACT_SETS = max_sets
    try:
        yield
    finally:
        TIME_LIMIT, MAX_EXACT_SETS = saved


def to_mask(flags) -> int:
    flags = np.asarray(flags, dtype=bool)
    return int.from_bytes(np.packbits(flags, bitorder="little").tobytes(), "little")


def mask_indices(m: int, n: int) -> np.ndarray:
    raw = np.frombuffer(m.to_bytes((n + 7) // 8, "little"), dtype=np.uint8)
    return np.flatnonzero(np.unpackbits(raw, bitorder="little")[:n])


def _bits(m: int):
    while m:
        low = m & -m
        yield low.bit_length() - 1
        m ^= low


@dataclass(eq=False)
class CoverFamily:
    n: int
    masks: list
    diam: np.ndarray
    sup_phi: np.ndarray

    @property
    def sets(self) -> list:
        return [mask_indices(m, self.n) for m in self.masks]

    def __len__(self):
        return len(self.masks)

    def sizes(self) -> np.ndarray:
        return np.array([m.bit_count() for m in self.masks])

    def with_phi(self, phi: PotentialField) -> "CoverFamily":
        return CoverFamily(self.n, self.masks, self.diam, _sup_phi(self.masks, self.n, phi))

    def extend(self, other: "CoverFamily") -> "CoverFamily":
        seen = {m: i for i, m in enumerate(self.masks)}
        keep = [i for i, m in enumerate(other.masks) if m not in seen]
        return CoverFamily(self.n, self.masks + [other.masks[i] for i in keep],
                           np.concatenate([self.diam, other.diam[keep]]),
                           np.concatenate([self.sup_phi, other.sup_phi[keep]]))

    def index_of(self, masks) -> list:
        pos = {m: i for i, m in enumerate(self.masks)}
        return [pos[m] for m in masks]


@dataclass(eq=False)
class CoverSolution:
    chosen: list
    value: float
    optimal: bool
    family: CoverFamily

    @property
    def masks(self) -> list:
        return [self.family.masks[i] for i in self.chosen]


def _sup_phi(masks, n, phi):
    if phi is None:
        return np.zeros(len(masks))
    v = phi.values
    return np.array([v[mask_indices(m, n)].max() for m in masks])


def family_from_sets(M: FiniteMetricSpace, sets, phi: PotentialField | None = None) -> CoverFamily:
    """Wrap explicit subsets (index arrays or masks) with floored diameters."""
    masks, diams = [], []
    seen = set()
    for s in sets:
        m = s if isinstance(s, int) else to_mask(np.isin(np.arange(M.n), s))
        if m == 0 or m in seen:
            continue
        seen.add(m)
        idx = mask_indices(m, M.n)
        masks.append(m)
        diams.append(M.floored(M.diameter(idx), idx.size))
    return CoverFamily(M.n, masks, np.array(diams), _sup_phi(masks, M.n, phi))


def ball_family(M: FiniteMetricSpace, eps: float, phi: PotentialField | None = None) -> CoverFamily:
    """All distinct closed balls with floored diameter < eps."""
    D = M.dist
    masks, diams, seen = [], [], set()
    for x in range(M.n):
        row = D[x]
        for rho in np.unique(row[row < eps]):
            inside = row <= rho
            idx = np.flatnonzero(inside)
            diam = M.floored(float(D[np.ix_(idx, idx)].max()) if idx.size > 1 else 0.0, idx.size)
            if diam >= eps:
                break
            m = to_mask(inside)
            if m not in seen:
                seen.add(m)
                masks.append(m)
                diams.append(diam)
    return CoverFamily(M.n, masks, np.array(diams), _sup_phi(masks, M.n, phi))


def restrict_family(F: CoverFamily, M: FiniteMetricSpace, subset) -> tuple:
    """Traces of F on ``subset`` as a family over the subspace (reindexed)."""
    subset = np.asarray(subset, dtype=int)
    sub = M.subspace(subset)
    sets = []
    for m in F.masks:
        flags = np.zeros(M.n, bool)
        flags[mask_indices(m, M.n)] = True
        local = np.flatnonzero(flags[subset])
        if local.size:
            sets.append(local)
    return sub, sets


# ---------------------------------------------------------------- solvers

def greedy_cover(n: int, masks, weights) -> list:
    """Lazy greedy on price per newly covered point; ties go to the lowest index."""
    uncovered = (1 << n) - 1
    heap = [(w / m.bit_count(), i) for i, (m, w) in enumerate(zip(masks, weights))]
    heapq.heapify(heap)
    chosen = []
    while uncovered:
        if not heap:
            raise Infeasible("family does not cover every point")
        price, i = heapq.heappop(heap)
        gain = (masks[i] & uncovered).bit_count()
        if gain == 0:
            continue
        now = weights[i] / gain
        if now > price * (1 + 1e-12) + 1e-300:
            heapq.heappush(heap, (now, i))
            continue
        chosen.append(i)
        uncovered &= ~masks[i]
    return chosen


class _Search:
    def __init__(self, n, masks, weights, deadline):
        self.masks = masks
        self.w = weights
        self.deadline = deadline
        self.timed_out = False
        members = [[] for _ in range(n)]
        for i, m in enumerate(masks):
            for e in _bits(m):
                members[e].append(i)
        for e in range(n):
            members[e].sort(key=lambda i: (weights[i] / masks[i].bit_count(), i))
        self.members = members
        # cheapest share any set can charge point e
        self.price = [min(weights[i] / masks[i].bit_count() for i in members[e]) for e in range(n)]
        self.order = sorted(range(n), key=lambda e: (len(members[e]), e))
        self.best = math.inf
        self.best_sets = None
        self.nodes = 0

    def bound(self, uncovered):
        return sum(self.price[e] for e in _bits(uncovered))

    def run(self, uncovered, cost, lb, chosen):
        self.nodes += 1
        if self.nodes % 4096 == 0 and time.monotonic() > self.deadline:
            self.timed_out = True
        if self.timed_out:
            return
        if uncovered == 0:
            if cost < self.best:
                self.best, self.best_sets = cost, list(chosen)
            return
        if cost + lb >= self.best * (1 - 1e-12):
            return
        e = next(e for e in self.order if uncovered >> e & 1)
        price = self.price
        for i in self.members[e]:
            newly = uncovered & self.masks[i]
            chosen.append(i)
            self.run(uncovered & ~newly, cost + self.w[i],
                     lb - sum(price[k] for k in _bits(newly)), chosen)
            chosen.pop()


def solve_cover(n: int, masks, weights, mode: str = "exact", incumbents=(),
                max_sets: int | None = None, time_limit: float | None = None) -> tuple:
    """Minimize total weight of a subfamily covering {0..n-1}.

    Returns (chosen indices, value, optimal).  ``incumbents`` are known covers
    (lists of indices); the result is never worse than any of them.
    """
    max_sets = MAX_EXACT_SETS if max_sets is None else max_sets
    time_limit = TIME_LIMIT if time_limit is None else time_limit
    full = (1 << n) - 1
    weights = [float(w) for w in weights]
    union = 0
    for m in masks:
        union |= m
    if union != full:
        raise Infeasible("family does not cover every point")

    def value(ch):
        return sum(weights[i] for i in ch)

    candidates = [greedy_cover(n, masks, weights)]
    for inc in incumbents:
        cov = 0
        for i in inc:
            cov |= masks[i]
        if cov == full:
            candidates.append(list(inc))
    best = min(candidates, key=value)
    if mode == "greedy":
        return best, value(best), False

    # dedupe, keep the cheapest copy of each mask
    cheapest = {}
    for i, m in enumerate(masks):
        j = cheapest.get(m)
        if j is None or weights[i] < weights[j]:
            cheapest[m] = i
    pool = sorted(cheapest.values())

    # forced sets: the only set containing some point
    forced = set()
    count = {}
    owner = {}
    for i in pool:
        for e in _bits(masks[i]):
            count[e] = count.get(e, 0) + 1
            owner[e] = i
    for e, c in count.items():
        if c == 1:
            forced.add(owner[e])
    covered = 0
    for i in forced:
        covered |= masks[i]
    rest = full & ~covered
    base_cost = sum(weights[i] for i in forced)
    if rest == 0:
        chosen = sorted(forced)
        if value(chosen) <= value(best):
            return chosen, value(chosen), True
        return best, value(best), True

    # restrict to the remaining points and drop dominated sets
    live = [(masks[i] & rest, weights[i], i) for i in pool if masks[i] & rest]
    live.sort(key=lambda t: (-t[0].bit_count(), t[1], t[2]))
    kept = []
    if len(live) <= 5000:
        for m, w, i in live:
            if not any((m & km) == m and kw <= w for km, kw, _ in kept):
                kept.append((m, w, i))
    else:
        kept = live
    if len(kept) > max_sets:
        return best, value(best), False

    # relabel remaining points densely
    pts = list(_bits(rest))
    pos = {e: k for k, e in enumerate(pts)}
    local = []
    for m, _, _ in kept:
        lm = 0
        for e in _bits(m):
            lm |= 1 << pos[e]
        local.append(lm)
    search = _Search(len(pts), local, [w for _, w, _ in kept], time.monotonic() + time_limit)
    search.best = value(best) - base_cost
    sys.setrecursionlimit(max(sys.getrecursionlimit(), len(pts) + 1000))
    start = (1 << len(pts)) - 1
    search.run(start, 0.0, search.bound(start), [])
    optimal = not search.timed_out
    if search.best_sets is not None:
        chosen = sorted(forced | {kept[k][2] for k in search.best_sets})
        if value(chosen) <= value(best):
            return chosen, value(chosen), optimal
    return best, value(best), optimal


def brute_force_cover(n: int, masks, weights) -> float:
    """Exact optimum by dynamic programming over point subsets (small n only)."""
    full = (1 << n) - 1
    best = {0: 0.0}

    def solve(u):
        if u in best:
            return best[u]
        low = (u & -u)
        val = math.inf
        for m, w in zip(masks, weights):
            if m & low:
                val = min(val, w + solve(u & ~m))
        best[u] = val
        return val

    return solve(full)


# ---------------------------------------------------------------- public API

def min_cover(M: FiniteMetricSpace, F: CoverFamily, eps: float, mode: str = "exact",
              incumbents=()) -> CoverSolution:
    ok = [i for i in range(len(F)) if F.diam[i] < eps]
    masks = [F.masks[i] for i in ok]
    remap = {i: k for k, i in enumerate(ok)}
    inc = [[remap[i] for i in c] for c in incumbents if all(i in remap for i in c)]
    chosen, val, opt = solve_cover(M.n, masks, [1.0] * len(masks), mode, inc)
    return CoverSolution([ok[k] for k in chosen], val, opt, F)


def covering_number_potential(M: FiniteMetricSpace, phi: PotentialField | None, eps: float,
                              mode: str = "exact", family: CoverFamily | None = None,
                              extra_sets=(), incumbents=()) -> CoverSolution:
    """min over covers of sum (1/eps)^{sup_U phi}; pool = balls plus ``extra_sets``.

    ``incumbents`` are lists of masks that must each form a cover; they seed
    the upper bound so that family-relative inequalities survive greedy mode.
    """
    if not 0 < eps:
        raise ValueError("eps must be positive")
    phi = phi if phi is not None else PotentialField(np.zeros(M.n))
    F = family if family is not None else ball_family(M, eps, phi)
    F = F.with_phi(phi)
    extra = [s for s in extra_sets]
    for inc in incumbents:
        extra.extend(inc)
    if extra:
        F = F.extend(family_from_sets(M, extra, phi))
    ok = [i for i in range(len(F)) if F.diam[i] < eps]
    masks = [F.masks[i] for i in ok]
    weights = (1.0 / eps) ** F.sup_phi[ok]
    pos = {m: k for k, m in enumerate(masks)}
    inc = [[pos[m] for m in c] for c in incumbents if all(m in pos for m in c)]
    chosen, val, opt = solve_cover(M.n, masks, weights, mode, inc)
    return CoverSolution([ok[k] for k in chosen], val, opt, F)


def covering_table(sys, phi: PotentialField | None, L_grid, eps_grid, metric: str = "sup",
                   mode: str = "exact") -> list[dict]:
    """Rows (L, eps, log#, normalized) of log2 #(X, d_L, phi_L, eps)."""
    if phi is not None:
        sys = sys.with_potential(phi)
    rows = []
    for L in L_grid:
        A = default_grid(sys, L)
        Q = window_space(sys, A, metric=metric)
        for eps in eps_grid:
            sol = covering_number_potential(Q.space, Q.phi, eps, mode)
            logv = math.log2(sol.value)
            rows.append(dict(L=L, eps=eps, metric=metric, value=sol.value, log_value=logv,
                             normalized=logv / (A.measure * math.log2(1 / eps)), optimal=sol.optimal))
    return rows
