"""Seeded property suites.

Each suite returns rows ``dict(suite, check, instance, lhs, rhs, ok, provenance)``
where ``ok`` means ``lhs <= rhs`` up to the suite tolerance (or an equality
within tolerance, in which case ``rhs`` is the reference value).  Rows with
``gating=False`` are reported but do not affect the exit status.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import info
from .core_metric import FiniteMetricSpace, PotentialField, box_grid, window_space
from .cover import ball_family, brute_force_cover, covering_number_potential, solve_cover, solver_limits
from .errors import FrostmanInfeasible
from .hausdorff import _subset_diams, dimh_at_scale, dimh_search, frostman_measure, frostman_violations
from .ratedist import (ba_lambda, ba_point, ba_sweep, duality_bound, feasible_lambda, free_energy,
                       kd_constant, kd_lower_bound, product_channel_check, rate_point,
                       rdim_estimate, translation_check, variational_cell, zero_rate_point)
from .systems import build_shift, cantor_net, product_measure

INFO_TOL = 1e-9


def _row(suite, check, instance, lhs, rhs, ok, provenance, gating=True, **extra):
    out = dict(suite=suite, check=check, instance=instance, lhs=float(lhs), rhs=float(rhs),
               ok=bool(ok), gating=gating, provenance=provenance)
    out.update(extra)
    return out


def _le(suite, check, instance, lhs, rhs, tol, provenance, **kw):
    return _row(suite, check, instance, lhs, rhs, lhs <= rhs + tol, provenance, **kw)


def _eq(suite, check, instance, val, ref, tol, provenance, **kw):
    return _row(suite, check, instance, val, ref, abs(val - ref) <= tol, provenance, **kw)


# ---------------------------------------------------------------- information

def _cond_entropy_direct(j: info.JointPmf) -> float:
    px = j.px
    out = 0.0
    for x in np.flatnonzero(px > 0):
        out += px[x] * info.entropy(j.p[x] / px[x])
    return out


def suite_info(seed: int = 0, n: int = 200) -> list[dict]:
    rng = np.random.default_rng(seed)
    rows = []
    S = "info"
    for i in range(n):
        kx, ky = rng.integers(2, 7, size=2)
        j = info.random_joint(rng, kx, ky)
        f = rng.integers(0, max(1, kx - 1), kx)
        g = rng.integers(0, max(1, ky - 1), ky)
        rows.append(_le(S, "dpi", i, info.mutual_information(info.quantize_channel(j, f, g)),
                        info.mutual_information(j), INFO_TOL, "info.quantize_channel"))

        k, m = rng.integers(2, 8), rng.integers(2, 5)
        ps = np.stack([info.random_pmf(rng, k) for _ in range(m)])
        w = info.random_pmf(rng, m)
        rows.append(_le(S, "entropy_concavity", i, float(w @ [info.entropy(p) for p in ps]),
                        info.entropy(w @ ps), INFO_TOL, "info.entropy"))

        nu = info.random_channel(rng, kx, ky)
        mus = np.stack([info.random_pmf(rng, kx, 0.2) for _ in range(m)])
        mix = float(w @ [info.mutual_information_channel(mu, nu) for mu in mus])
        rows.append(_le(S, "mi_concave_in_mu", i, mix,
                        info.mutual_information_channel(w @ mus, nu), INFO_TOL,
                        "info.mutual_information_channel"))

        mu = info.random_pmf(rng, kx)
        nus = np.stack([info.random_channel(rng, kx, ky) for _ in range(m)])
        mixed = np.tensordot(w, nus, axes=1)
        rows.append(_le(S, "mi_convex_in_nu", i, info.mutual_information_channel(mu, mixed),
                        float(w @ [info.mutual_information_channel(mu, v) for v in nus]), INFO_TOL,
                        "info.mutual_information_channel"))

        kz = rng.integers(2, 5)
        pz = info.random_pmf(rng, kz)
        px_z = info.random_channel(rng, kz, kx)
        py_z = info.random_channel(rng, kz, ky)
        pxyz = np.einsum("z,zx,zy->xyz", pz, px_z, py_z)
        jxy_z = info.JointPmf(pxyz.reshape(kx * ky, kz))
        jx_z = info.JointPmf(pxyz.sum(axis=1))
        jy_z = info.JointPmf(pxyz.sum(axis=0))
        rows.append(_le(S, "cond_indep_subadditivity", i, info.mutual_information(jxy_z),
                        info.mutual_information(jx_z) + info.mutual_information(jy_z), INFO_TOL,
                        "info.mutual_information"))

        a = rng.random(k) * (rng.random(k) > 0.2)
        b = rng.random(k) + 1e-3
        rows.append(_le(S, "log_sum_gap", i, 0.0, info.log_sum_gap(a, b), INFO_TOL,
                        "info.log_sum_gap"))

        rows.append(_eq(S, "mi_identity", i, info.mutual_information(j),
                        info.entropy(j.py) - _cond_entropy_direct(j), INFO_TOL,
                        "info.mutual_information"))
    return rows


# ---------------------------------------------------------------- Blahut-Arimoto

def _hb(p: float) -> float:
    return 0.0 if p in (0, 1) else -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def _envelope_rows(S, name, pts, provenance):
    pts = sorted((p.D, p.R) for p in pts)
    rows = []
    worst_mono, worst_sag = 0.0, 0.0
    for (d0, r0), (d1, r1) in zip(pts, pts[1:]):
        worst_mono = max(worst_mono, r1 - r0)
    for (d0, r0), (d1, r1), (d2, r2) in zip(pts, pts[1:], pts[2:]):
        if d2 - d0 > 1e-9:
            chord = r0 + (r2 - r0) * (d1 - d0) / (d2 - d0)
            worst_sag = max(worst_sag, r1 - chord)
    rows.append(_le(S, "envelope_monotone", name, worst_mono, 0.0, 1e-6, provenance))
    rows.append(_le(S, "envelope_convex", name, worst_sag, 0.0, 1e-6, provenance))
    return rows


def suite_ba(seed: int = 0) -> list[dict]:
    S = "ba"
    rng = np.random.default_rng(seed)
    ham = 1.0 - np.eye(2)
    uni = np.array([0.5, 0.5])
    rows = []
    for D in (0.05, 0.1, 0.25):
        pt = rate_point(uni, ham, D)
        rows.append(_eq(S, "binary_hamming", f"D={D}", pt.R, 1 - _hb(D), 1e-3, "ratedist.rate_point"))
    for i in range(5):
        k = int(rng.integers(2, 7))
        mu = info.random_pmf(rng, k)
        rho = 1.0 - np.eye(k)
        z = zero_rate_point(mu, rho)
        rows.append(_eq(S, "zero_rate_D", i, z.D, 1 - mu.max(), 1e-6, "ratedist.zero_rate_point"))
        top = rate_point(mu, rho, z.D + 1e-3)
        rows.append(_eq(S, "zero_rate_R", i, top.R, 0.0, 1e-6, "ratedist.rate_point"))
        hi, _ = ba_point(mu, rho, 2.0 ** 14)
        rows.append(_eq(S, "zero_distortion_R", i, hi.R, info.entropy(mu), 1e-6, "ratedist.ba_point"))
        rows.append(_eq(S, "zero_distortion_D", i, hi.D, 0.0, 1e-6, "ratedist.ba_point"))
        rows += _envelope_rows(S, i, ba_sweep(mu, rho), "ratedist.ba_sweep")
    for i in range(5):
        k = int(rng.integers(3, 8))
        pts = np.sort(rng.random(k))
        rho = np.abs(pts[:, None] - pts[None, :])
        mu = info.random_pmf(rng, k)
        rows += _envelope_rows(S, f"line{i}", ba_sweep(mu, rho), "ratedist.ba_sweep")
    return rows


# ---------------------------------------------------------------- lower bounds

def power_law_exponent(points: np.ndarray, mu: np.ndarray, delta: float, M: FiniteMetricSpace) -> float:
    """Largest s with mu(E) <= hat(E)^s for all E with hat(E) < delta (points on a line).

    On a line every set lies in the interval of points between its extremes,
    which has the same diameter and at least the same mass, so intervals of
    consecutive points suffice.
    """
    order = np.argsort(points)
    x, w = points[order], mu[order]
    cs = np.concatenate([[0.0], np.cumsum(w)])
    s = math.inf
    for i in range(len(x)):
        for j in range(i, len(x)):
            h = M.hat(x[j] - x[i])
            if h >= delta:
                break
            mass = cs[j + 1] - cs[i]
            if mass > 0 and h < 1:
                s = min(s, math.log(mass) / math.log(h))
    return max(0.0, s) if math.isfinite(s) else 0.0


def _bounds_instance(rng, i):
    if i == 0:
        M = cantor_net(4)
        pts = np.array(sorted(M.dist[0]))
        order = np.argsort(M.dist[0])
        pts = M.dist[0][order]
        M = FiniteMetricSpace(M.dist[np.ix_(order, order)], M.rho0, M.floor)
        mu = np.full(M.n, 1 / M.n)
        return "cantor4", pts, M, mu, 1 / 27
    n = int(rng.integers(4, 12))
    pts = np.sort(rng.random(n))
    rho0 = float(rng.uniform(0.005, 0.05))
    M = FiniteMetricSpace(np.abs(pts[:, None] - pts[None, :]), rho0)
    mu = info.random_pmf(rng, n)
    eps = float(rng.uniform(0.03, 0.3))
    return f"line{i}", pts, M, mu, eps


def suite_bounds(seed: int = 0, n: int = 20) -> list[dict]:
    S = "bounds"
    rng = np.random.default_rng(seed)
    K, s_star, c = kd_constant()
    rows = [_eq(S, "kd_constant", "K", K, 2.0, 0.01, "ratedist.kd_constant", s_star=s_star, c=c)]
    for i in range(n):
        name, pts, M, mu, eps = _bounds_instance(rng, i)
        rho = M.dist
        pt = rate_point(mu, rho, eps)
        R = pt.R
        lam = feasible_lambda(mu, rho, pt.beta, ba_lambda(pt, mu, rho))
        rows.append(_le(S, "duality", name, duality_bound(lam, pt.beta, eps, mu, rho), R, 1e-6,
                        "ratedist.duality_bound"))
        rows.append(_le(S, "duality_trivial", name, duality_bound(np.ones(M.n), 1.0, eps, mu, rho),
                        R, 1e-12, "ratedist.duality_bound"))
        delta = 2 * eps * math.log2(1 / eps)
        s = power_law_exponent(pts, mu, delta, M)
        rows.append(_le(S, "kawabata_dembo", name, kd_lower_bound(s, eps, K), R, 1e-9,
                        "ratedist.kd_lower_bound", s=s))
    return rows


# ---------------------------------------------------------------- covers and Hausdorff

def _random_space(rng, n):
    kind = rng.integers(3)
    P = rng.random((n, 2))
    if kind == 0:
        D = np.abs(P[:, None] - P[None]).max(axis=2)
    elif kind == 1:
        D = np.sqrt(((P[:, None] - P[None]) ** 2).sum(axis=2))
    else:
        W = rng.uniform(0.1, 1.0, (n, n))
        W = np.minimum(W, W.T)
        np.fill_diagonal(W, 0)
        D = W.copy()
        for k in range(n):
            D = np.minimum(D, D[:, k:k + 1] + D[k:k + 1, :])
    return ["linf", "l2", "graph"][kind], D


def suite_cover(seed: int = 0, n: int = 20) -> list[dict]:
    S = "cover"
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        k = int(rng.integers(6, 15))
        metric, D = _random_space(rng, k)
        M = FiniteMetricSpace(D, rho0=float(rng.uniform(0.01, 0.05)))
        scale = float(np.quantile(D[D > 0], 0.3))
        F = ball_family(M, scale)
        w = rng.uniform(0.5, 2.0, len(F))
        _, val, _ = solve_cover(M.n, F.masks, w, "exact")
        rows.append(_eq(S, "exact_vs_brute", f"{metric}{i}", val, brute_force_cover(M.n, F.masks, w),
                        1e-9, "cover.solve_cover"))
        for eps in (0.3, 0.5, 0.9):
            for pname in ("zero", "random"):
                phi = PotentialField(np.zeros(k) if pname == "zero" else rng.uniform(0, 2, k))
                rows.append(_lemma31(S, f"{metric}{i}/eps={eps}/{pname}", M, phi, eps))
    # orbit metrics of a small shift, both metric choices
    # a timed-out solve can only raise the left side, so the check stays sound
    sys = build_shift(3, 1, 1, 3, 0.5, "coord0")
    for L, eps, metric in itertools.product((1, 2), (0.5, 0.3), ("sup", "avg")):
        Q = window_space(sys, box_grid(L), metric=metric)
        rows.append(_lemma31(S, f"shift/L={L}/eps={eps}/{metric}", Q.space, Q.phi, eps, dimh_limit=0.5))
    M = cantor_net(4)
    rows.append(_eq(S, "cantor_dimh", "level4", dimh_at_scale(M, None, 1 / 3), math.log(2) / math.log(3),
                    0.05, "hausdorff.dimh_at_scale"))
    return rows


def _lemma31(S, name, M, phi, eps, dimh_limit=None):
    F = ball_family(M, eps, phi)
    sol = covering_number_potential(M, phi, eps, family=F)
    bound = math.log2(sol.value) / math.log2(1 / eps)
    with solver_limits(time_limit=dimh_limit):
        res = dimh_search(M, phi, eps, family=F, seed_covers=[sol.masks])
    row = _le(S, "lemma_3_1", name, res.value, bound, 1e-4, "hausdorff.dimh_search")
    row["optimal"] = res.optimal and sol.optimal
    return row


# ---------------------------------------------------------------- Frostman

def suite_frostman(seed: int = 0, n: int = 10) -> list[dict]:
    S = "frostman"
    rng = np.random.default_rng(seed)
    rows = []
    M = cantor_net(4)
    dim = dimh_at_scale(M, None, 1 / 3)
    t = 0.9 * dim
    res = frostman_measure(M, 1 / 3, t)
    bad = frostman_violations(M, res.nu, 1 / 3, t, exhaustive_max=16)
    rows.append(_le(S, "cantor_violations", "level4", len(bad), 0, 0, "hausdorff.frostman_measure"))
    rows.append(_le(S, "cantor_max_weight", "level4", res.nu.weights.max(), 2 * 2.0 ** -4, 1e-12,
                    "hausdorff.frostman_measure"))
    two = FiniteMetricSpace(np.array([[0.0, 1.0], [1.0, 0.0]]), rho0=0.1)
    try:
        frostman_measure(two, 1.8, 1.0)
        rows.append(_row(S, "two_point_infeasible", "delta=1.8", 1.0, 0.2, False, "hausdorff.frostman_measure"))
    except FrostmanInfeasible as exc:
        rows.append(_eq(S, "two_point_infeasible", "delta=1.8", exc.optimum, 0.2, 1e-9,
                        "hausdorff.frostman_measure"))
    for i in range(n):
        k = int(rng.integers(5, 13))
        metric, D = _random_space(rng, k)
        Mi = FiniteMetricSpace(D, rho0=float(rng.uniform(0.01, 0.05)))
        delta = float(rng.uniform(0.5, 3.0))
        t = float(rng.uniform(0.1, 1.5))
        try:
            r = frostman_measure(Mi, delta, t)
        except FrostmanInfeasible:
            continue
        bad = frostman_violations(Mi, r.nu, delta, t)
        rows.append(_le(S, "random_violations", f"{metric}{i}", len(bad), 0, 0, "hausdorff.frostman_measure"))
        lower = frostman_measure(Mi, delta, 0.5 * t)
        rows.append(_le(S, "monotone_in_t", f"{metric}{i}", 1.0, lower.optimum, 1e-9,
                        "hausdorff.frostman_measure"))
    return rows


# ---------------------------------------------------------------- variational chain

def suite_variational(seed: int = 0, n: int = 200) -> list[dict]:
    S = "variational"
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        k = int(rng.integers(1, 9))
        p = info.random_pmf(rng, k)
        a = rng.uniform(-2, 3, k)
        eps = float(rng.uniform(0.01, 0.99))
        lhs, rhs = free_energy(p, a, eps)
        rows.append(_le(S, "free_energy", i, lhs, rhs, 1e-9, "ratedist.free_energy"))
    cases = [(2, 0, 3, "coord0", [0.5, 0.5]), (3, 0, 3, "coord0", [0.6, 0.3, 0.1]),
             (2, 1, 3, "zero", [0.8, 0.2]), (4, 0, 3, "const:0.5", [0.25] * 4)]
    for q, r, Lmax, pot, marg in cases:
        sys = build_shift(q, 1, r, Lmax, 0.5, pot)
        mu = product_measure(sys, marg)
        for L in range(1, Lmax - 2 * r + 1 if r else Lmax + 1):
            for eps in (0.5, 0.25, 0.125):
                c = variational_cell(sys, mu, L, eps)
                name = f"q{q}r{r}{pot}/L={L}/eps={eps}"
                rows.append(_le(S, "quantizer<=free_energy", name, c["lhs"], c["middle"], 1e-9,
                                "ratedist.variational_cell"))
                rows.append(_le(S, "per_scale_variational", name, c["lhs"], c["rhs"], 1e-9,
                                "ratedist.variational_cell"))
    return rows


# ---------------------------------------------------------------- rate-distortion structure

def suite_rdstructure(seed: int = 0) -> list[dict]:
    S = "rdstructure"
    rows = []
    cases = [(2, 0, 3, [0.7, 0.3]), (3, 0, 3, [0.5, 0.3, 0.2]), (2, 1, 3, [0.6, 0.4])]
    for q, r, Lmax, marg in cases:
        sys = build_shift(q, 1, r, Lmax, 0.5, "zero")
        mu = product_measure(sys, marg)
        span = Lmax
        for eps in (0.3, 0.15):
            for L1 in range(1, span):
                for L2 in range(1, span - L1 + 1):
                    A, B = box_grid(L1), box_grid(L2, start=L1)
                    c = product_channel_check(sys, mu, eps, A, B)
                    name = f"q{q}r{r}/A=[0,{L1})/B=[{L1},{L1 + L2})/eps={eps}"
                    rows.append(_le(S, "product_subadditive", name, c["I"], c["R_A"] + c["R_B"], 1e-9,
                                    "ratedist.product_channel_check"))
                    rows.append(_le(S, "product_feasible", name, c["D"], eps, 1e-9,
                                    "ratedist.product_channel_check"))
            for L in range(1, span):
                for a in range(1, span - L + 1):
                    r0, r1, same = translation_check(sys, mu, eps, box_grid(L), [a])
                    name = f"q{q}r{r}/L={L}/a={a}/eps={eps}"
                    rows.append(_row(S, "translation", name, r1, r0, same and r0 == r1,
                                     "ratedist.translation_check"))
    rows += rdim_rows()
    return rows


def rdim_rows(q: int = 64) -> list[dict]:
    sys = build_shift(q, 1, 0, 1, 0.5, "zero")
    mu = product_measure(sys, np.full(q, 1 / q))
    est = rdim_estimate(sys, mu, [1 / 4, 1 / 8, 1 / 16, 1 / 32], (1,))
    return [_row("rdstructure", "rdim_slope", f"q{q}", est["slope"], 0.9,
                 0.7 <= est["slope"] <= 1.1, "ratedist.rdim_estimate",
                 upper=est["upper"], lower=est["lower"])]


# ---------------------------------------------------------------- tiling

def tiling_instances(seed: int = 0, n: int = 50):
    """Seeded (A, families, eta, k_range) generators; d=1 first, then d=2."""
    from .tiling import random_tiling_instance

    rng = np.random.default_rng(seed)
    out = []
    n1 = (3 * n) // 5
    for i in range(n):
        d = 1 if i < n1 else 2
        eta = float(rng.uniform(0.3, 0.9)) if d == 1 else float(rng.uniform(0.8, 0.95))
        s = int(rng.integers(1 << 31))
        kr = range(1, 5) if d == 1 else range(1, 3)
        build = (lambda k0, s=s, d=d, eta=eta:
                 random_tiling_instance(np.random.default_rng(s), d, k0, eta))
        out.append((i, d, eta, kr, build))
    return out


def suite_tiling(seed: int = 0, n: int = 50) -> list[dict]:
    from .errors import HypothesisViolated, SelectionFailed
    from .tiling import block_coding_check, check_tiling, crude_estimate_check, quasi_tile

    S = "tiling"
    rows = []
    for i, d, eta, kr, build in tiling_instances(seed, n):
        res, A = None, None
        for k0 in kr:
            A, fams = build(k0)
            try:
                res = quasi_tile(A, fams, eta, k0)
                break
            except (HypothesisViolated, SelectionFailed):
                continue
        name = f"d={d}/eta={eta:.3f}"
        if res is None:
            rows.append(_row(S, "quasi_tile", name, math.inf, 0, False, "tiling.quasi_tile"))
            continue
        problems = check_tiling(A, res)
        rows.append(_le(S, "quasi_tile_leftover", name, res.leftover, res.bound, 0,
                        "tiling.quasi_tile", k0=res.k0))
        rows.append(_row(S, "quasi_tile_post", name, len(problems), 0, not problems,
                         "tiling.check_tiling", k0=res.k0))
    for q, r, Lmax, pot in [(2, 0, 4, "zero"), (2, 0, 4, "coord0"), (3, 0, 3, "coord0"),
                            (2, 1, 4, "coord0"), (4, 0, 3, "const:0.5")]:
        sys = build_shift(q, 1, r, Lmax, 0.5, pot)
        E = np.arange(sys.n)
        span = Lmax
        for eps in (0.5, 0.25):
            name = f"q{q}r{r}{pot}/eps={eps}"
            part_sets = [("split", box_grid(2), [box_grid(1), box_grid(1, start=1)])]
            if span >= 3:
                part_sets.append(("overlap", box_grid(3), [box_grid(2), box_grid(2, start=1)]))
                part_sets.append(("self", box_grid(3), [box_grid(3)]))
            for label, A, parts in part_sets:
                lhs, rhs = block_coding_check(sys, E, A, parts, eps)
                rows.append(_le(S, "block_coding", f"{name}/{label}", lhs, rhs * (1 + 1e-9), 0,
                                "tiling.block_coding_check"))
            E1 = np.array([sys.n // 3])
            lhs, rhs = block_coding_check(sys, E1, box_grid(2), [box_grid(1), box_grid(1, start=1)], eps)
            rows.append(_le(S, "block_coding", f"{name}/singleton", lhs, rhs * (1 + 1e-9), 0,
                            "tiling.block_coding_check"))
            for L in range(1, min(span, 3) + 1):
                lhs, rhs = crude_estimate_check(sys, box_grid(L), eps)
                rows.append(_le(S, "crude_estimate", f"{name}/L={L}", math.log(lhs), math.log(rhs), 1e-9,
                                "tiling.crude_estimate_check"))
    return rows


# ---------------------------------------------------------------- mean dimension and local formula

CHAIN_GRID = dict(L=[1, 2, 3, 4, 5], eps=[1 / 4, 1 / 8, 1 / 16, 1 / 32])


def chain_system():
    return build_shift(4, 1, 0, 5, 1 / 64, "zero")


def suite_chain(seed: int = 0, mode: str = "exact") -> list[dict]:
    from .cover import solver_limits
    from .meandim import mdim_sweep

    S = "chain"
    sys = chain_system()
    with solver_limits(5.0):
        sw = mdim_sweep(sys, None, CHAIN_GRID["eps"], CHAIN_GRID["L"], mode)
    rows = [_le(S, c["check"], f"L={c['L']}/eps={c['eps']}", c["lhs"], c["rhs"], 1e-9,
                "meandim.mdim_sweep") for c in sw.checks]
    for f in sw.failed_cells:
        rows.append(_row(S, "cell_failed", f"L={f['L']}/eps={f['eps']}", 1, 0, False, "meandim.mdim_sweep"))
    Lmax, emin = max(CHAIN_GRID["L"]), min(CHAIN_GRID["eps"])
    finest = [r for r in sw.rows if r["L"] == Lmax and r["eps"] == emin]
    cell = {r["quantity"]: r for r in finest}
    if cell:
        v = cell["log_cover"]["normalized"]
        rows.append(_row(S, "finest_log_cover_band", f"L={Lmax}/eps={emin}", v, 0.8,
                         0.8 <= v <= 1.05, "meandim.mdim_sweep"))
        rows.append(_le(S, "dimh<=metric_finest", f"L={Lmax}/eps={emin}", cell["dimh_sup"]["normalized"],
                        v, 1e-9, "meandim.mdim_sweep"))
    for L in CHAIN_GRID["L"]:
        Q = window_space(sys, box_grid(L))
        rows.append(_eq(S, "block_count_oracle", f"L={L}", Q.k, 4 ** L, 0, "core_metric.window_space"))
    return rows


def local_system():
    return build_shift(4, 1, 1, 4, 0.5, "zero")


def suite_local(seed: int = 0, mode: str = "exact") -> list[dict]:
    from .cover import solver_limits
    from .meandim import local_formula_report

    S = "local"
    sys = local_system()
    with solver_limits(10.0):
        rep = local_formula_report(sys, None, 0.4, [1 / 2, 1 / 4], [1, 2, 3, 4], mode)
    rows = [_le(S, "local<=global", f"eps={r['eps']}", r["local"], r["glob"], 1e-6,
                "meandim.local_formula_report") for r in rep["rows"]]
    fin = min(rep["rows"], key=lambda r: r["eps"])
    rows.append(_row(S, "finest_ratio", f"eps={fin['eps']}", fin["ratio"], 0.8, fin["ratio"] >= 0.8,
                     "meandim.local_formula_report"))
    for r in rep["rows"]:
        rows.append(_row(S, "ratio_trend", f"eps={r['eps']}", r["ratio"], 1.0, True,
                         "meandim.local_formula_report", gating=False))
    return rows


SUITES = dict(info=suite_info, ba=suite_ba, bounds=suite_bounds, cover=suite_cover,
              frostman=suite_frostman, variational=suite_variational,
              rdstructure=suite_rdstructure, tiling=suite_tiling, chain=suite_chain,
              local=suite_local)
