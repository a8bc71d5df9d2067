"""Dense primal simplex (condensed tableau, Bland's rule).

Solves  max c.x  s.t.  A x <= b,  x >= 0  with b >= 0, so the slack basis is
feasible from the start and no phase one is needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MdimError


class Unbounded(MdimError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    value: float
    slack: np.ndarray
    pivots: int


def simplex_max(c, A, b, tol: float = 1e-12, max_pivots: int = 100_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    T = np.array(A, dtype=float)
    rhs = np.array(b, dtype=float)
    m, n = T.shape
    if np.any(rhs < 0):
        raise ValueError("right-hand side must be nonnegative")
    obj = c.copy()
    z = 0.0
    nonbasic = np.arange(n)          # labels < n are x, labels >= n are slacks
    basic = np.arange(n, n + m)
    pivots = 0
    while True:
        cand = np.flatnonzero(obj > tol)
        if cand.size == 0:
            break
        s = cand[np.argmin(nonbasic[cand])]
        col = T[:, s]
        pos = np.flatnonzero(col > tol)
        if pos.size == 0:
            raise Unbounded("objective is unbounded")
        ratios = rhs[pos] / col[pos]
        best = ratios.min()
        ties = pos[ratios <= best + tol * max(1.0, abs(best))]
        r = ties[np.argmin(basic[ties])]
        p = T[r, s]
        T[r] /= p
        T[r, s] = 1.0 / p
        rhs[r] /= p
        f = T[:, s].copy()
        f[r] = 0.0
        T -= np.outer(f, T[r])
        T[:, s] = np.where(np.arange(m) == r, T[r, s], -f / p)
        rhs -= f * rhs[r]
        cs = obj[s]
        obj -= cs * T[r]
        obj[s] = -cs / p
        z += cs * rhs[r]
        basic[r], nonbasic[s] = nonbasic[s], basic[r]
        pivots += 1
        if pivots > max_pivots:
            raise MdimError("simplex pivot limit reached")
    values = np.zeros(n + m)
    values[basic] = rhs
    return LPResult(values[:n], z, values[n:], pivots)
