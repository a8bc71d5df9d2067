"""Mean-dimension estimates: nerve bounds, sweeps, fibers and local formula.

All numbers are certified upper estimates relative to the candidate set
pools; inequalities between them are arranged to hold exactly by sharing
pools and seeding solvers with each other's covers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core_metric import (FiniteMetricSpace, PotentialField, box_grid, default_grid,
                          orbit_metric_mean, potential_integral, quadrature_grid, variation,
                          window_space)
from .cover import (_bits, ball_family, covering_number_potential, family_from_sets,
                    mask_indices, to_mask)
from .errors import InvalidExponent, MdimError, NotACover
from .hausdorff import HausdorffQuery, dimh_search, hausdorff_value
from .ratedist import rdim_estimate
from .systems import check_invariant

QUANTITIES = ("widim", "widim_prime", "log_cover", "dimh_sup", "dimh_L1")


# ---------------------------------------------------------------- nerves

@dataclass
class NerveComplex:
    vertices: list
    carriers: list            # per point, frozenset of cover indices
    maximal_faces: list

    def is_face(self, idx) -> bool:
        s = frozenset(idx)
        return any(s <= f for f in self.maximal_faces)

    def local_dim(self, carrier) -> int:
        return max(len(f) for f in self.maximal_faces if carrier <= f) - 1


def _masks(cover):
    return list(getattr(cover, "masks", cover))


def cover_mesh(M: FiniteMetricSpace, cover) -> float:
    return max(M.diameter(mask_indices(m, M.n)) for m in _masks(cover))


def nerve_of_cover(M: FiniteMetricSpace, cover) -> NerveComplex:
    masks = _masks(cover)
    carriers = []
    for x in range(M.n):
        c = frozenset(i for i, m in enumerate(masks) if m >> x & 1)
        if not c:
            raise NotACover(f"point {x} lies in no set")
        carriers.append(c)
    distinct = set(carriers)
    maximal = [c for c in distinct if not any(c < d for d in distinct)]
    maximal.sort(key=lambda c: sorted(c))
    return NerveComplex(list(range(len(masks))), carriers, maximal)


def widim_upper(M: FiniteMetricSpace, phi: PotentialField | None, eps: float, cover) -> tuple:
    """(widim, widim') bounds from the canonical map into the nerve."""
    if cover_mesh(M, cover) >= eps:
        raise NotACover("cover mesh is not below eps")
    v = np.zeros(M.n) if phi is None else phi.values
    K = nerve_of_cover(M, cover)
    big = max(K.local_dim(c) + v[x] for x, c in enumerate(K.carriers))
    small = max(len(c) - 1 + v[x] for x, c in enumerate(K.carriers))
    return float(big), float(small)


def partition_widim(phi: PotentialField | None) -> float:
    """Bound from the map onto isolated vertices of a disjointified cover."""
    return 0.0 if phi is None else float(phi.values.max())


# ---------------------------------------------------------------- sweeps

@dataclass
class SweepResult:
    rows: list
    summary: dict
    checks: list = field(default_factory=list)
    failed_cells: list = field(default_factory=list)


def _cell(sys, L, eps, mode):
    A = default_grid(sys, L)
    vol = A.measure
    Qs = window_space(sys, A, metric="sup")
    Qa = window_space(sys, A, metric="avg")
    Ms, Ma, phi = Qs.space, Qa.space, Qs.phi
    F = ball_family(Ms, eps, phi)
    cov = covering_number_potential(Ms, phi, eps, mode, family=F)
    log_cover = math.log2(cov.value)
    wid, wid_p = widim_upper(Ms, phi, eps, cov.masks)
    var = variation(phi, Ms, eps)
    hs = dimh_search(Ms, phi, eps, mode, family=F, seed_covers=[cov.masks])
    ha = dimh_search(Ma, phi, eps, mode, extra_sets=F.masks, seed_covers=hs.covers)
    scale = math.log2(1 / eps)
    vals = dict(widim=wid, widim_prime=wid_p, log_cover=log_cover,
                dimh_sup=hs.value, dimh_L1=ha.value)
    norm = dict(widim=wid / vol, widim_prime=wid_p / vol, log_cover=log_cover / (vol * scale),
                dimh_sup=hs.value / vol, dimh_L1=ha.value / vol)
    opt = dict(widim=cov.optimal, widim_prime=cov.optimal, log_cover=cov.optimal,
               dimh_sup=hs.optimal, dimh_L1=ha.optimal)
    checks = [
        ("dimh_L1<=dimh_sup", ha.value, hs.value),
        ("dimh_sup<=log#/log(1/eps)", hs.value, log_cover / scale),
        ("widim'<=widim", wid_p, wid),
        ("widim<=widim'+var", wid, wid_p + var),
    ]
    extra = dict(var=var, partition_widim=partition_widim(phi), volume=vol)
    return vals, norm, opt, checks, extra


def mdim_sweep(sys, phi: PotentialField | None, eps_grid, L_grid, mode: str = "exact") -> SweepResult:
    if phi is not None:
        sys = sys.with_potential(phi)
    rows, checks, failed = [], [], []
    for L in L_grid:
        for eps in eps_grid:
            try:
                vals, norm, opt, cks, extra = _cell(sys, L, eps, mode)
            except MdimError as exc:
                failed.append(dict(L=L, eps=eps, error=type(exc).__name__, message=str(exc)))
                continue
            for q in QUANTITIES:
                rows.append(dict(L=L, eps=eps, quantity=q, value=vals[q], normalized=norm[q],
                                 optimal=opt[q]))
            for name, lhs, rhs in cks:
                checks.append(dict(L=L, eps=eps, check=name, lhs=lhs, rhs=rhs, ok=lhs <= rhs + 1e-9))
    return SweepResult(rows, _summarize(rows), checks, failed)


def _summarize(rows) -> dict:
    out = {}
    if not rows:
        return out
    Lmax = max(r["L"] for r in rows)
    emin = min(r["eps"] for r in rows)
    for q in QUANTITIES:
        sel = [r for r in rows if r["quantity"] == q]
        corner = [r for r in sel if r["L"] == Lmax and r["eps"] == emin]
        line = sorted((r["L"], r["normalized"]) for r in sel if r["eps"] == emin)
        extrap = None
        if len(line) >= 2:
            x = np.array([1 / L for L, _ in line])
            y = np.array([v for _, v in line])
            extrap = float(np.polyfit(x, y, 1)[1])
        out[q] = dict(estimate=corner[0]["normalized"] if corner else None,
                      cell=[Lmax, emin], extrapolated=extrap,
                      optimal_flags=[bool(r["optimal"]) for r in sel])
    return out


def widim_product_bound(sys, phi, eps: float, L1: int, L2: int, mode: str = "exact") -> tuple:
    """(bound at L1+L2 via x -> (f1(x), f2(T^L1 x)), bound at L1, bound at L2).

    f_k is the canonical nerve map of the covering solution at L_k; the local
    dimension of a product of complexes is the sum of local dimensions.
    """
    if phi is not None:
        sys = sys.with_potential(phi)

    def parts(L, offset):
        A = box_grid(L, sys.d, start=offset)
        Q = window_space(sys, A)
        sol = covering_number_potential(Q.space, Q.phi, eps, mode)
        K = nerve_of_cover(Q.space, sol.masks)
        dims = np.array([K.local_dim(c) for c in K.carriers], dtype=float)
        phiA = potential_integral(sys, A)
        return dims[Q.labels], phiA.values

    d1, p1 = parts(L1, 0)
    d2, p2 = parts(L2, L1)
    joint = float(np.max(d1 + d2 + p1 + p2))
    b1 = float(np.max(d1 + p1))
    b2 = float(np.max(d2 + p2))
    return joint, b1, b2


# ---------------------------------------------------------------- fibers and P_T

def delta_fiber(sys, x: int, delta: float, A) -> np.ndarray:
    sys.check_window(A.elems)
    base = sys.base_metric.dist
    inside = np.ones(sys.n, dtype=bool)
    for u in A.elems:
        p = sys.act(u)
        inside &= base[p[x], p] <= delta
    return np.flatnonzero(inside)


def full_window(sys):
    if sys.group == "R":
        return quadrature_grid(sys.shift_budget, sys.d, sys.tau)
    return box_grid(int(sys.shift_budget), sys.d)


@dataclass
class _Global:
    """Per-(L, eps) global covering solutions, reused as incumbents for subsets."""
    spaces: dict = field(default_factory=dict)
    solutions: dict = field(default_factory=dict)


def _space(sys, L, cache):
    if cache is not None and L in cache.spaces:
        return cache.spaces[L]
    A = default_grid(sys, L)
    Q = window_space(sys, A)
    F_by_eps = {}
    out = (A, Q, F_by_eps)
    if cache is not None:
        cache.spaces[L] = out
    return out


def p_t(sys, E, phi: PotentialField | None, eps: float, L_grid, mode: str = "exact",
        cache: _Global | None = None) -> tuple:
    """min over L of log2 #(E, d_L, phi_L, eps) / L^d, with per-L values."""
    if phi is not None:
        sys = sys.with_potential(phi)
    E = np.unique(np.asarray(E, dtype=int))
    if E.size == 0:
        raise ValueError("E must be nonempty")
    per = {}
    for L in L_grid:
        A, Q, F_by_eps = _space(sys, L, cache)
        if eps not in F_by_eps:
            F_by_eps[eps] = ball_family(Q.space, eps)
        F = F_by_eps[eps]
        cls = np.unique(Q.labels[E])
        if cls.size == Q.k:
            key = (L, eps)
            sol = cache.solutions.get(key) if cache is not None else None
            if sol is None:
                sol = covering_number_potential(Q.space, Q.phi, eps, mode, family=F)
                if cache is not None:
                    cache.solutions[key] = sol
            value = sol.value
        else:
            sub = Q.space.subspace(cls)
            subphi = PotentialField(Q.phi.values[cls])
            pos = np.full(Q.k, -1)
            pos[cls] = np.arange(cls.size)
            traces = []
            for m in F.masks:
                loc = pos[mask_indices(m, Q.k)]
                loc = loc[loc >= 0]
                if loc.size:
                    traces.append(to_mask(np.isin(np.arange(cls.size), loc)))
            incumbents = []
            glob = cache.solutions.get((L, eps)) if cache is not None else None
            if glob is not None:
                inc = []
                for m in glob.masks:
                    loc = pos[mask_indices(m, Q.k)]
                    loc = loc[loc >= 0]
                    if loc.size:
                        inc.append(to_mask(np.isin(np.arange(cls.size), loc)))
                incumbents.append(sorted(set(inc)))
            F_sub = ball_family(sub, eps)
            value = covering_number_potential(sub, subphi, eps, mode, family=F_sub,
                                              extra_sets=traces, incumbents=incumbents).value
        per[L] = math.log2(value) / A.measure
    return min(per.values()), per


def _maximal_fibers(fibers: list, n: int) -> list:
    masks = sorted({to_mask(np.isin(np.arange(n), f)) for f in fibers},
                   key=lambda m: -m.bit_count())
    keep = []
    for m in masks:
        if not any((m & k) == m for k in keep):
            keep.append(m)
    return keep


def local_formula_report(sys, phi: PotentialField | None, delta: float, eps_grid, L_grid,
                         mode: str = "exact", A=None) -> dict:
    """Per eps: (sup over fibers of P_T, global P_T) and their ratio."""
    if phi is not None:
        sys = sys.with_potential(phi)
    A = A if A is not None else full_window(sys)
    fibers = [delta_fiber(sys, x, delta, A) for x in range(sys.n)]
    maximal = _maximal_fibers(fibers, sys.n)
    cache = _Global()
    rows = []
    for eps in eps_grid:
        glob, glob_per = p_t(sys, np.arange(sys.n), None, eps, L_grid, mode, cache)
        local, local_per, arg = -math.inf, None, None
        for m in maximal:
            val, per = p_t(sys, mask_indices(m, sys.n), None, eps, L_grid, mode, cache)
            if val > local:
                local, local_per, arg = val, per, m.bit_count()
        ratio = local / glob if glob > 0 else (1.0 if local == glob else math.inf)
        rows.append(dict(eps=eps, local=local, glob=glob, ratio=ratio, ok=local <= glob + 1e-6,
                         local_per_L=local_per, global_per_L=glob_per, fiber_size=arg))
    return dict(delta=delta, fibers=len(maximal), rows=rows,
                trivial_direction=all(r["ok"] for r in rows))


def variational_report(sys, phi: PotentialField | None, measures, eps_grid, L_grid,
                       mode: str = "exact", rdim_L=(1,)) -> dict:
    if phi is not None:
        sys = sys.with_potential(phi)
    for mu in measures:
        check_invariant(sys, mu)
    sweep = mdim_sweep(sys, None, eps_grid, L_grid, mode)
    Lmax = max(L_grid)
    per_eps = []
    for eps in eps_grid:
        cell = {r["quantity"]: r for r in sweep.rows if r["L"] == Lmax and r["eps"] == eps}
        if len(cell) < len(QUANTITIES):
            continue
        vol = default_grid(sys, Lmax).measure
        phi_L = potential_integral(sys, default_grid(sys, Lmax))
        wid = min(cell["widim"]["value"], partition_widim(phi_L)) / vol
        per_eps.append(dict(eps=eps, widim_est=wid, dimh_L1_est=cell["dimh_L1"]["normalized"],
                            dimh_sup_est=cell["dimh_sup"]["normalized"],
                            metric_est=cell["log_cover"]["normalized"],
                            ok=wid <= cell["dimh_L1"]["normalized"] + 1e-9))
    rd = []
    for mu in measures:
        est = rdim_estimate(sys, mu, eps_grid, rdim_L)
        integral = mu.integrate(sys.potential)
        rd.append(dict(slope=est["slope"], upper=est["upper"], lower=est["lower"],
                       integral=integral, total=est["slope"] + integral))
    return dict(per_eps=per_eps, rdim=rd, gating_ok=all(r["ok"] for r in per_eps) and
                all(c["ok"] for c in sweep.checks), sweep=sweep)


def widim_hausdorff_hypothesis(M: FiniteMetricSpace, phi: PotentialField | None, eps: float,
                               s: float, N: int, Lip: float, mode: str = "exact") -> bool:
    return hypothesis_value(M, phi, s, N, Lip, mode) < 1


def hypothesis_value(M, phi, s, N, Lip, mode="exact") -> float:
    """4^N (Lip+1)^(1+s+|phi|_inf) H_1^s(M, phi)."""
    phi = phi if phi is not None else PotentialField(np.zeros(M.n))
    if s <= phi.values.max():
        raise InvalidExponent("s must exceed max phi")
    H = hausdorff_value(HausdorffQuery(M, phi, 1.0, s), mode)
    return 4.0 ** N * (Lip + 1) ** (1 + s + np.abs(phi.values).max()) * H
