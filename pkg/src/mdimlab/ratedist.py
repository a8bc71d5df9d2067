"""Rate-distortion functions of finite sources.

Blahut-Arimoto runs in the log domain so that large slopes do not underflow.
Rates are in bits; distortions are in metric units.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln, logsumexp

from .core_metric import default_grid, window_space
from .errors import FeasibilityViolated, Infeasible
from .info import Channel, JointPmf, entropy

LN2 = math.log(2)
DEFAULT_BETAS = np.logspace(-6, 14, 64, base=2)


@dataclass(eq=False)
class DistortionMatrix:
    rho: np.ndarray
    source_ids: np.ndarray
    repro_ids: np.ndarray
    labels: np.ndarray | None = None   # point -> source class, for quotient codebooks


@dataclass(eq=False)
class RDPoint:
    beta: float
    D: float
    R: float
    channel: Channel
    converged: bool = True
    iterations: int = 0


def _rho(rho):
    return np.asarray(getattr(rho, "rho", rho), dtype=float)


def _mu(mu):
    return np.asarray(getattr(mu, "p", getattr(mu, "weights", mu)), dtype=float)


def _lse(a, axis=None, keepdims=False):
    """log sum exp; scipy's version has a large per-call overhead in tight loops."""
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return out if keepdims else (out.reshape(()) if axis is None else np.squeeze(out, axis=axis))


def zero_rate_point(mu, rho) -> RDPoint:
    mu, rho = _mu(mu), _rho(rho)
    ystar = int(np.argmin(mu @ rho))
    nu = np.zeros_like(rho)
    nu[:, ystar] = 1.0
    return RDPoint(0.0, float(mu @ rho[:, ystar]), 0.0, Channel(nu))


def ba_point(mu, rho, beta: float, logq0=None, tol: float = 1e-9,
             max_iter: int = 10_000) -> tuple:
    """One Blahut-Arimoto run at slope beta; returns (RDPoint, final log q).

    Stops when the duality gap max_y log c(y) - sum_y q(y) log c(y) drops
    below tol (in bits); the gap bounds the distance of R to the curve.
    """
    mu, rho = _mu(mu), _rho(rho)
    if beta == 0:
        return zero_rate_point(mu, rho), None
    ny = rho.shape[1]
    expo = -beta * LN2 * rho
    zero = zero_rate_point(mu, rho)
    ystar = int(np.argmax(zero.channel.nu[0]))
    # KKT test: the zero-rate output law is optimal iff c(y) <= 1 for every y
    with np.errstate(over="ignore"):
        c0 = mu @ np.exp(expo - expo[:, [ystar]])
    if c0.max() <= 1 + 1e-12:
        return replace(zero, beta=beta), np.where(np.arange(ny) == ystar, 0.0, -np.inf)
    logq = np.full(ny, -math.log(ny)) if logq0 is None else logq0
    pos = mu > 0
    lmu = np.log(mu[pos])
    converged = False
    linear = float(-expo.min()) < 600      # exp(expo) stays clear of underflow
    with np.errstate(divide="ignore", invalid="ignore"):
        if linear:
            W = np.exp(expo[pos])
            m = mu[pos]
            q = np.exp(logq)
            for it in range(1, max_iter + 1):
                c = (m / (W @ q)) @ W
                live = q > 0
                lc = np.log(c)
                gap = (lc.max() - float(q[live] @ lc[live])) / LN2
                q = q * c
                q /= q.sum()
                if gap < tol:
                    converged = True
                    break
            logq = np.log(q)
        else:
            for it in range(1, max_iter + 1):
                lw = logq[None, :] + expo
                lz = _lse(lw[pos], axis=1, keepdims=True)
                # log c(y) = log sum_x mu(x) exp(expo(x, y)) / Z(x)
                logc = _lse(lmu[:, None] + expo[pos] - lz, axis=0)
                live = np.isfinite(logq)
                gap = (logc.max() - float(np.exp(logq[live]) @ logc[live])) / LN2
                logq = logq + logc
                logq -= _lse(logq)
                if gap < tol:
                    converged = True
                    break
        lw = logq[None, :] + expo
        lnu = lw - _lse(lw, axis=1, keepdims=True)
        nu = np.exp(lnu)
        logq_out = np.log(mu @ nu)
        # outputs whose mass underflowed carry no rate
        terms = np.where((nu > 0) & np.isfinite(logq_out)[None, :], nu * (lnu - logq_out[None, :]), 0.0)
    R = float(mu @ terms.sum(axis=1)) / LN2
    D = float(mu @ (nu * rho).sum(axis=1))
    return RDPoint(beta, D, max(R, 0.0), Channel(nu), converged, it), logq


def _warm(logq):
    if logq is None:
        return None
    q = np.exp(logq)
    q = (1 - 1e-6) * q + 1e-6 / q.size
    return np.log(q)


def ba_sweep(mu, rho, betas=DEFAULT_BETAS, tol: float = 1e-9) -> list[RDPoint]:
    betas = np.asarray(betas, dtype=float)
    if np.any(betas < 0) or np.any(np.diff(betas) < 0):
        raise ValueError("betas must be nonnegative and sorted")
    out, logq = [], None
    for b in betas:
        pt, lq = ba_point(mu, rho, float(b), _warm(logq), tol)
        logq = lq if lq is not None else logq
        out.append(pt)
    return out


def rate_point(mu, rho, eps: float, betas=DEFAULT_BETAS, tol: float = 1e-9,
               scan_tol: float = 1e-6) -> RDPoint:
    """Point of the R(D) curve with D <= eps, within 1e-9 of eps when reachable.

    The beta grid is scanned at ``scan_tol`` to bracket eps; the bracket is
    then bisected in log beta at full tolerance.
    """
    mu, rho = _mu(mu), _rho(rho)
    if eps <= 0:
        raise ValueError("eps must be positive")
    zero = zero_rate_point(mu, rho)
    if eps >= zero.D:
        return zero
    dmin = float(mu @ rho.min(axis=1))
    if eps < dmin:
        raise Infeasible(f"no channel reaches distortion {eps:g} (floor {dmin:g})")
    grid = list(betas) + [betas[-1] * 2 ** k for k in range(1, 27)]
    lo_b, logq, hit = 0.0, None, None
    for b in grid:
        pt, lq = ba_point(mu, rho, float(b), _warm(logq), scan_tol)
        if pt.D <= eps:
            pt, lq = ba_point(mu, rho, float(b), _warm(lq), tol)
            if pt.D <= eps:
                hit, hit_q = pt, lq
                break
        lo_b, logq = float(b), lq
    if hit is None:
        raise Infeasible(f"distortion {eps:g} not reached for beta up to {grid[-1]:g}")
    hi_b = hit.beta
    for _ in range(80):
        if hit.D >= eps - 1e-9 or hi_b - lo_b <= 1e-10 * hi_b:
            break
        mid = math.sqrt(lo_b * hi_b) if lo_b > 0 else hi_b / 2
        pt, lq = ba_point(mu, rho, mid, _warm(hit_q), tol)
        if pt.D <= eps:
            hit, hit_q, hi_b = pt, lq, mid
        else:
            lo_b = mid
    return hit


def rate_at_distortion(mu, rho, eps: float, betas=DEFAULT_BETAS) -> float:
    return rate_point(mu, rho, eps, betas).R


# ---------------------------------------------------------------- orbit codebooks

def orbit_codebook(sys, L, metric: str = "avg", A=None) -> DistortionMatrix:
    """Source classes and reproduction orbits over [0, L)^d (or the grid A).

    Points with identical orbit windows are merged; by data processing this
    does not change any rate.  rho is the averaged orbit distance.
    """
    grid = A if A is not None else default_grid(sys, L)
    Q = window_space(sys, grid, metric=metric)
    ids = np.arange(Q.k)
    return DistortionMatrix(Q.space.dist, ids, ids, Q.labels)


def source_weights(codebook: DistortionMatrix, mu) -> np.ndarray:
    w = _mu(mu)
    if codebook.labels is None:
        return w
    return np.bincount(codebook.labels, weights=w, minlength=len(codebook.source_ids))


def rdist_function(sys, mu, eps: float, L_list) -> tuple:
    """min over L of R(eps, [0,L)^d) / L^d; returns (value, per-L dict)."""
    per = {}
    for L in L_list:
        cb = orbit_codebook(sys, L)
        per[L] = rate_at_distortion(source_weights(cb, mu), cb.rho, eps) / default_grid(sys, L).measure
    return min(per.values()), per


def rdim_estimate(sys, mu, eps_grid, L_list=(1,)) -> dict:
    eps_grid = sorted(eps_grid, reverse=True)
    if len(eps_grid) < 3:
        raise ValueError("need at least three scales")
    rows = []
    for eps in eps_grid:
        val, per = rdist_function(sys, mu, eps, L_list)
        rows.append(dict(eps=eps, R=val, per_L=per, ratio=val / math.log2(1 / eps)))
    fine = rows[len(rows) // 2:]
    x = np.array([math.log2(1 / r["eps"]) for r in rows])
    y = np.array([r["R"] for r in rows])
    slope = float(np.polyfit(x, y, 1)[0])
    return dict(upper=max(r["ratio"] for r in fine), lower=min(r["ratio"] for r in fine),
                slope=slope, rows=rows)


# ---------------------------------------------------------------- lower bounds

def _kd_log_bracket(s: float) -> float:
    """ln of (1 + (2/ln2)^s s^-s Gamma(s+1)) / (s+1)."""
    if s == 0:
        return math.log(2.0)
    t = s * math.log(2 / LN2) - s * math.log(s) + gammaln(s + 1)
    return float(np.logaddexp(0.0, t)) / (s + 1)


@functools.lru_cache(maxsize=1)
def kd_constant() -> tuple:
    """(K, s*, c) with c = sup_s bracket(s)^(1/(s+1)) and K = 1 + log2 c."""
    grid = np.linspace(0, 50, 5001)
    vals = np.array([_kd_log_bracket(s) for s in grid])
    k = int(np.argmax(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(lambda s: -_kd_log_bracket(s), bounds=(lo, hi), method="bounded",
                          options=dict(xatol=1e-12))
    s_star, best = (float(res.x), -float(res.fun)) if -res.fun >= vals[k] else (float(grid[k]), float(vals[k]))
    c = math.exp(best)
    return 1 + math.log2(c), s_star, c


def kd_lower_bound(s: float, eps: float, K: float | None = None) -> float:
    K = kd_constant()[0] if K is None else K
    return s * math.log2(1 / eps) - K * (s + 1)


def duality_bound(lam, a: float, eps: float, mu, rho, tol: float = 1e-12) -> float:
    """-a eps + E_mu log2 lambda, after checking the feasibility condition for every y."""
    lam, mu, rho = np.asarray(lam, float), _mu(mu), _rho(rho)
    load = (mu * lam) @ np.exp2(-a * rho)
    if np.any(load > 1 + tol):
        raise FeasibilityViolated(f"max_y load {load.max():.6g} exceeds 1")
    pos = mu > 0
    with np.errstate(divide="ignore"):
        return -a * eps + float(mu[pos] @ np.log2(lam[pos]))


def feasible_lambda(mu, rho, a: float, lam) -> np.ndarray:
    """Rescale a positive lambda so that the duality condition holds."""
    lam, mu, rho = np.asarray(lam, float), _mu(mu), _rho(rho)
    load = (mu * lam) @ np.exp2(-a * rho)
    return lam / max(load.max(), 1e-300)


def ba_lambda(point: RDPoint, mu, rho) -> np.ndarray:
    """Dual variable from a BA fixed point: lambda(x) = 1 / sum_y q(y) 2^(-beta rho)."""
    mu, rho = _mu(mu), _rho(rho)
    q = mu @ point.channel.nu
    return 1.0 / np.maximum(np.exp2(-point.beta * rho) @ q, 1e-300)


# ---------------------------------------------------------------- quantizer

def quantizer_channel(cover_masks, M, mu) -> tuple:
    """Deterministic coding X -> x_i for the first cover set containing X.

    Returns (joint law of (X, f(X)) over points x chosen representatives,
    I in bits, expected distortion E d(X, f(X))).
    """
    from .cover import mask_indices

    mu = _mu(mu)
    n = M.n
    owner = np.full(n, -1)
    reps = []
    for m in cover_masks:
        idx = mask_indices(m, n)
        fresh = idx[owner[idx] < 0]
        reps.append(int(idx.min()))
        owner[fresh] = len(reps) - 1
    if np.any(owner < 0):
        raise Infeasible("sets do not cover every point")
    joint = np.zeros((n, len(reps)))
    joint[np.arange(n), owner] = mu
    reps = np.array(reps)
    D = float(mu @ M.dist[np.arange(n), reps[owner]])
    return JointPmf(joint), entropy(joint.sum(axis=0)), D


# ---------------------------------------------------------------- structural checks

def free_energy(p, a, eps: float) -> tuple:
    """(sum -p log p + p a log(1/eps), log sum (1/eps)^a), logs base 2."""
    p, a = np.asarray(p, float), np.asarray(a, float)
    scale = math.log2(1 / eps)
    lhs = entropy(p) + float(p @ a) * scale
    rhs = float(logsumexp(a * scale * LN2)) / LN2
    return lhs, rhs


def variational_cell(sys, mu, L, eps: float, mode: str = "exact") -> dict:
    """The quantizer chain at one (L, eps) cell.

    H(f(X)) + log(1/eps) int phi_L dmu <= free energy of the cover
    <= log #(X, d_L, phi_L, eps), each side divided by L^d log(1/eps).
    """
    from .cover import covering_number_potential

    A = default_grid(sys, L)
    vol, scale = A.measure, math.log2(1 / eps)
    Q = window_space(sys, A)
    sol = covering_number_potential(Q.space, Q.phi, eps, mode)
    w = Q.pushforward(_mu(mu))
    joint, I, D = quantizer_channel(sol.masks, Q.space, w)
    a = sol.family.sup_phi[sol.chosen]
    integral = float(_mu(mu) @ sys.potential.values)
    fe, log_cover = free_energy(joint.py, a, eps)
    lhs = I / (vol * scale) + integral
    return dict(L=L, eps=eps, rate=I, distortion=D, integral=integral,
                lhs=lhs, middle=fe / (vol * scale), rhs=math.log2(sol.value) / (vol * scale),
                free_energy_rhs=log_cover, optimal=sol.optimal)


def _class_map(Q_big, Q_small) -> np.ndarray:
    return Q_small.labels[Q_big.reps]


def product_channel_check(sys, mu, eps: float, A, B) -> dict:
    """Build the product of optimal channels for disjoint windows A and B.

    Returns the rates and distortions of both parts and of the product
    channel on A u B, where the reproduction for A u B is the pair (Y_A, Y_B).
    """
    AB = A.union(B)
    w = _mu(mu)
    Qab = window_space(sys, AB, metric="avg")
    wab = Qab.pushforward(w)
    parts = []
    for G in (A, B):
        Q = window_space(sys, G, metric="avg")
        pt = rate_point(Q.pushforward(w), Q.space.dist, eps)
        parts.append((Q, pt, G.measure))
    (Qa, pa, ma), (Qb, pb, mb) = parts
    ia, ib = _class_map(Qab, Qa), _class_map(Qab, Qb)
    nu = np.einsum("cy,cz->cyz", pa.channel.nu[ia], pb.channel.nu[ib])
    rho = (ma * Qa.space.dist[ia][:, :, None] + mb * Qb.space.dist[ib][:, None, :]) / (ma + mb)
    D = float(np.einsum("c,cyz,cyz->", wab, nu, rho))
    joint = JointPmf(wab[:, None] * nu.reshape(len(wab), -1))
    from .info import mutual_information
    I = mutual_information(joint)
    return dict(I=I, D=D, R_A=pa.R, R_B=pb.R, D_A=pa.D, D_B=pb.D,
                subadditive=I <= pa.R + pb.R + 1e-9, feasible=D <= eps + 1e-12)


def translation_check(sys, mu, eps: float, A, a) -> tuple:
    """(R(eps, A), R(eps, a + A), codebooks identical)."""
    w = _mu(mu)
    out = []
    for G in (A, A.translate(a)):
        Q = window_space(sys, G, metric="avg")
        out.append((Q.pushforward(w), Q.space.dist))
    same = all(np.array_equal(x, y) for x, y in zip(out[0], out[1]))
    r0 = rate_at_distortion(out[0][0], out[0][1], eps)
    r1 = rate_at_distortion(out[1][0], out[1][1], eps)
    return r0, r1, same
