"""Cube geometry, greedy quasi-tilings and the block-coding harnesses.

Regions are finite unions of axis-aligned boxes.  Every set operation is
done on a coordinate-compressed grid: the breakpoints along each axis are
the box edges (and their r-shifts for dilations), so each grid cell lies
entirely inside or outside every region involved and measures are exact.
Boxes are treated as half-open; closed and half-open boxes differ by null
sets, and two cubes that only touch count as disjoint.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core_metric import GroupGrid, PotentialField, box_grid, default_grid, window_space
from .cover import covering_number_potential, mask_indices, to_mask
from .errors import (BudgetExceeded, HypothesisViolated, NegativePotential, NotCovering,
                     SelectionFailed, UnboundedRegion)

PRODUCT_CAP = 50_000


# ---------------------------------------------------------------- boxes and regions

@dataclass(frozen=True, eq=False)
class Cube:
    corner: np.ndarray
    side: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.corner, dtype=float))
        if not self.side > 0:
            raise ValueError("cube side must be positive")
        object.__setattr__(self, "corner", c)

    @property
    def d(self) -> int:
        return self.corner.size

    @property
    def lo(self) -> np.ndarray:
        return self.corner

    @property
    def hi(self) -> np.ndarray:
        return self.corner + self.side

    @property
    def volume(self) -> float:
        return self.side ** self.d


@dataclass(frozen=True, eq=False)
class BoxUnion:
    """Union of boxes [lo_i, hi_i); overlaps are allowed."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_2d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_2d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape:
            raise ValueError("lo and hi must have the same shape")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise UnboundedRegion("box corners must be finite")
        keep = np.all(hi > lo, axis=1)
        object.__setattr__(self, "lo", lo[keep].reshape(-1, lo.shape[1]))
        object.__setattr__(self, "hi", hi[keep].reshape(-1, lo.shape[1]))

    @property
    def d(self) -> int:
        return self.lo.shape[1]

    def __len__(self):
        return len(self.lo)

    @classmethod
    def box(cls, lo, hi) -> "BoxUnion":
        return cls(np.atleast_1d(lo)[None, :], np.atleast_1d(hi)[None, :])

    @classmethod
    def of_cubes(cls, cubes, d: int | None = None) -> "BoxUnion":
        cubes = list(cubes)
        if not cubes:
            return cls(np.zeros((0, d or 1)), np.zeros((0, d or 1)))
        return cls(np.stack([c.lo for c in cubes]), np.stack([c.hi for c in cubes]))

    @classmethod
    def of_grid(cls, A: GroupGrid) -> "BoxUnion":
        """Unit cells u + [0, 1)^d for the elements u of an integer grid."""
        return cls(A.elems, A.elems + 1.0)


def as_region(A) -> BoxUnion:
    if isinstance(A, BoxUnion):
        return A
    if isinstance(A, Cube):
        return BoxUnion.box(A.lo, A.hi)
    if isinstance(A, GroupGrid):
        return BoxUnion.of_grid(A)
    lo, hi = A
    return BoxUnion.box(lo, hi)


@dataclass(eq=False)
class RasterRegion:
    """Occupancy of a coordinate-compressed grid.

    ``axes[k]`` holds the sorted breakpoints along axis k and ``occ`` has one
    entry per cell.  For box unions the grid is aligned with every edge, so
    ``err_bound`` is zero.
    """

    axes: list
    occ: np.ndarray
    err_bound: float = 0.0

    @property
    def d(self) -> int:
        return len(self.axes)

    def cell_volumes(self) -> np.ndarray:
        widths = [np.diff(a) for a in self.axes]
        vol = widths[0]
        for w in widths[1:]:
            vol = np.multiply.outer(vol, w)
        return vol

    @property
    def measure(self) -> float:
        if self.occ.size == 0:
            return 0.0
        return float(np.sum(self.cell_volumes()[self.occ]))

    def bbox(self) -> tuple:
        idx = np.argwhere(self.occ)
        if idx.size == 0:
            return None
        lo = np.array([self.axes[k][idx[:, k].min()] for k in range(self.d)])
        hi = np.array([self.axes[k][idx[:, k].max() + 1] for k in range(self.d)])
        return lo, hi

    def to_boxes(self) -> BoxUnion:
        """Occupied cells, with runs along the last axis merged."""
        d = self.d
        if not self.occ.any():
            return BoxUnion(np.zeros((0, d)), np.zeros((0, d)))
        flat = self.occ.reshape(-1, self.occ.shape[-1])
        pad = np.zeros((flat.shape[0], 1), dtype=bool)
        edges = np.diff(np.hstack([pad, flat, pad]).astype(np.int8), axis=1)
        rows, starts = np.nonzero(edges == 1)
        _, ends = np.nonzero(edges == -1)
        lead = np.array(np.unravel_index(rows, self.occ.shape[:-1])).T if d > 1 else np.zeros((len(rows), 0), int)
        lo = np.empty((len(rows), d))
        hi = np.empty((len(rows), d))
        for k in range(d - 1):
            lo[:, k] = self.axes[k][lead[:, k]]
            hi[:, k] = self.axes[k][lead[:, k] + 1]
        lo[:, -1] = self.axes[-1][starts]
        hi[:, -1] = self.axes[-1][ends]
        return BoxUnion(lo, hi)


def _centers(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a[:-1] + a[1:])


def _rasterize(B: BoxUnion, axes: list) -> np.ndarray:
    occ = np.zeros(tuple(len(a) - 1 for a in axes), dtype=bool)
    if len(B) == 0:
        return occ
    lo_idx = [np.searchsorted(axes[k], B.lo[:, k], side="left") for k in range(B.d)]
    hi_idx = [np.searchsorted(axes[k], B.hi[:, k], side="left") for k in range(B.d)]
    for i in range(len(B)):
        occ[tuple(slice(lo_idx[k][i], hi_idx[k][i]) for k in range(B.d))] = True
    return occ


def _resample(R: RasterRegion, axes: list) -> np.ndarray:
    """Occupancy of R on a finer grid whose breakpoints include R's."""
    idx = [np.clip(np.searchsorted(R.axes[k], _centers(axes[k]), side="right") - 1,
                   0, len(R.axes[k]) - 2) for k in range(R.d)]
    inside = [(c > R.axes[k][0]) & (c < R.axes[k][-1]) for k, c in enumerate(map(_centers, axes))]
    out = R.occ[np.ix_(*idx)]
    mask = inside[0]
    for m in inside[1:]:
        mask = np.multiply.outer(mask, m)
    return out & mask


def _axes_of(B: BoxUnion, extra=()) -> list:
    axes = []
    for k in range(B.d):
        pts = [B.lo[:, k], B.hi[:, k]] + [np.atleast_1d(e[k]) for e in extra]
        axes.append(np.unique(np.concatenate(pts)))
    return axes


def rasterize(A) -> RasterRegion:
    if isinstance(A, RasterRegion):
        return A
    B = as_region(A)
    if len(B) == 0:
        return RasterRegion([np.zeros(1)] * B.d, np.zeros((0,) * B.d, dtype=bool))
    axes = _axes_of(B)
    return RasterRegion(axes, _rasterize(B, axes))


def combine(op, *regions) -> RasterRegion:
    """Pointwise boolean combination of regions on a common refinement."""
    Rs = [R if isinstance(R, RasterRegion) else rasterize(R) for R in regions]
    live = [R for R in Rs if R.occ.size]
    if not live:
        return Rs[0]
    d = live[0].d
    axes = [np.unique(np.concatenate([R.axes[k] for R in live])) for k in range(d)]
    shape = tuple(len(a) - 1 for a in axes)
    occs = [_resample(R, axes) if R.occ.size else np.zeros(shape, dtype=bool) for R in Rs]
    return RasterRegion(axes, op(*occs))


def measure(A) -> float:
    return rasterize(A).measure


def _dilate_axis(R: RasterRegion, k: int, r: float) -> RasterRegion:
    xs = R.axes[k]
    new = np.unique(np.concatenate([xs - r, xs, xs + r]))
    c = _centers(new)
    # old cells j with xs[j] - r < c < xs[j+1] + r form a contiguous range [a, b)
    a = np.searchsorted(xs[1:] + r, c, side="right")
    b = np.searchsorted(xs[:-1] - r, c, side="left")
    occ = np.moveaxis(R.occ, k, 0).astype(np.int64)
    cs = np.concatenate([np.zeros((1,) + occ.shape[1:], np.int64), np.cumsum(occ, axis=0)])
    hits = cs[np.maximum(b, a)] - cs[a]
    axes = list(R.axes)
    axes[k] = new
    return RasterRegion(axes, np.moveaxis(hits > 0, 0, k))


def neighborhood(A, r: float) -> RasterRegion:
    """B_r(A): points within sup-distance r of A."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    R = A if isinstance(A, RasterRegion) else rasterize(A)
    if r == 0 or R.occ.size == 0:
        return R
    for k in range(R.d):
        R = _dilate_axis(R, k, r)
    return R


def erosion(A, r: float) -> RasterRegion:
    """Points whose closed r-cube lies in A (up to null sets)."""
    R = A if isinstance(A, RasterRegion) else rasterize(A)
    if r == 0 or R.occ.size == 0:
        return R
    axes = [np.concatenate([[a[0] - r - 1], a, [a[-1] + r + 1]]) for a in R.axes]
    occ = np.pad(R.occ, 1, constant_values=False)
    outside = neighborhood(RasterRegion(axes, ~occ), r)
    inside = _resample(RasterRegion(axes, occ), outside.axes)
    return RasterRegion(outside.axes, inside & ~outside.occ)


def boundary_region(A, r: float) -> RasterRegion:
    """∂(A, r) = B_r(A) minus the r-erosion of A."""
    R = A if isinstance(A, RasterRegion) else rasterize(A)
    if r == 0:
        return RasterRegion(R.axes, np.zeros_like(R.occ))
    return combine(lambda b, e: b & ~e, neighborhood(R, r), erosion(R, r))


def boundary_measure(A, r: float) -> float:
    return boundary_region(A, r).measure


# ---------------------------------------------------------------- quasi-tiling

@dataclass
class TileResult:
    cubes: list
    leftover: float                 # m(B_1(A minus the selected cubes))
    bound: float                    # eta * m(A)
    k0: int
    hypotheses: dict = field(default_factory=dict)
    covered: float = 0.0            # m of the selected cubes

    @property
    def ok(self) -> bool:
        return self.leftover < self.bound


def tile_hypotheses(A, families, eta: float, k0: int | None = None) -> dict:
    """Mechanical check of the three hypotheses of the tiling lemma."""
    k0 = len(families) if k0 is None else k0
    if k0 < 1 or len(families) < k0:
        raise ValueError("need at least k0 families")
    if any(len(F) == 0 for F in families[:k0]):
        raise HypothesisViolated("every family must be nonempty")
    R = rasterize(A)
    mA = R.measure
    sides = [np.array([c.side for c in F]) for F in families[:k0]]
    scale = sides[0].max() >= 1 and all(sides[k + 1].min() >= k0 * sides[k].max()
                                        for k in range(k0 - 1))
    top = sides[-1].max()
    bnd = boundary_measure(R, top)
    small = bnd < eta / 3 * mA
    gaps = [combine(lambda a, c: a & ~c, R, BoxUnion.of_cubes(F, R.d)).measure
            for F in families[:k0]]
    return dict(scale_separation=bool(scale), boundary=bnd, boundary_bound=eta / 3 * mA,
                boundary_small=bool(small), uncovered=gaps,
                coverage=all(g == 0 for g in gaps), k0=k0)


def _inside(R: RasterRegion, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    B = R.to_boxes()
    if len(B) == 1:
        return np.all((lo >= B.lo[0] - 1e-12) & (hi <= B.hi[0] + 1e-12), axis=1)
    out = np.empty(len(lo), dtype=bool)
    for i in range(len(lo)):
        piece = combine(lambda a, c: c & ~a, R, BoxUnion.box(lo[i], hi[i]))
        out[i] = piece.measure <= 1e-12
    return out


class _BucketIndex:
    """Boxes hashed into a square grid of the given cell size."""

    def __init__(self, size: float):
        self.size = size
        self.cells = {}

    def _keys(self, lo, hi):
        spans = [range(math.floor(a / self.size), math.floor(b / self.size) + 1)
                 for a, b in zip(lo, hi)]
        return itertools.product(*spans)

    def hits(self, lo, hi) -> bool:
        for k in self._keys(lo, hi):
            for plo, phi in self.cells.get(k, ()):
                if all(a < y and x < b for a, b, x, y in zip(lo, hi, plo, phi)):
                    return True
        return False

    def add(self, lo, hi):
        for k in self._keys(lo, hi):
            self.cells.setdefault(k, []).append((lo, hi))


def quasi_tile(A, families, eta: float, k0: int | None = None,
               check_hypotheses: bool = True) -> TileResult:
    """Disjoint subfamily of the given cubes covering most of A.

    Families are ordered from the smallest scale up.  Selection is greedy:
    largest scale first, corners in lexicographic order, a cube is taken when
    it lies in A and misses every cube taken so far.
    """
    k0 = len(families) if k0 is None else k0
    if not eta > 0:
        raise ValueError("eta must be positive")
    R = rasterize(A)
    hyp = {}
    if check_hypotheses:
        hyp = tile_hypotheses(R, families, eta, k0)
        failed = [k for k in ("scale_separation", "boundary_small", "coverage") if not hyp[k]]
        if failed:
            raise HypothesisViolated(f"tiling hypotheses fail: {', '.join(failed)}")
    d = R.d
    chosen = []
    index = _BucketIndex(max(c.side for F in families[:k0] for c in F))
    for F in reversed(families[:k0]):
        F = sorted(F, key=lambda c: (tuple(c.corner), c.side))
        if not F:
            continue
        lo = np.stack([c.lo for c in F])
        hi = np.stack([c.hi for c in F])
        los, his = lo.tolist(), hi.tolist()
        for i in np.flatnonzero(_inside(R, lo, hi)):
            if index.hits(los[i], his[i]):
                continue
            index.add(los[i], his[i])
            chosen.append(F[i])
    picked_lo = np.stack([c.lo for c in chosen]) if chosen else np.empty((0, d))
    picked_hi = np.stack([c.hi for c in chosen]) if chosen else np.empty((0, d))
    tiles = BoxUnion(picked_lo, picked_hi)
    rest = combine(lambda a, t: a & ~t, R, tiles)
    left = neighborhood(rest, 1.0).measure
    res = TileResult(chosen, left, eta * R.measure, k0, hyp, float(sum(c.volume for c in chosen)))
    if not res.ok:
        raise SelectionFailed(f"leftover neighbourhood {left:g} is not below {res.bound:g}")
    return res


def check_tiling(A, result: TileResult, tol: float = 1e-12) -> list[str]:
    """Postconditions of a selection: disjoint, contained, small leftover."""
    R = rasterize(A)
    out = []
    cubes = result.cubes
    if cubes:
        lo = np.stack([c.lo for c in cubes])
        hi = np.stack([c.hi for c in cubes])
        for i in range(len(cubes)):
            ov = np.prod(np.clip(np.minimum(hi[i], hi[i + 1:]) - np.maximum(lo[i], lo[i + 1:]), 0, None), axis=1)
            if np.any(ov > tol):
                out.append(f"cube {i} overlaps a later cube")
        if not np.all(_inside(R, lo, hi)):
            out.append("a cube leaves A")
        rest = combine(lambda a, t: a & ~t, R, BoxUnion(lo, hi))
    else:
        rest = R
    if not neighborhood(rest, 1.0).measure < result.bound:
        out.append("leftover neighbourhood too large")
    return out


def random_tiling_instance(rng: np.random.Generator, d: int, k0: int, eta: float,
                           odd: float = 0.3) -> tuple:
    """A box A = [0, n]^d and k0 cube families meeting the lemma's hypotheses.

    Family k has one cube at every integer point of A.  Family 1 has unit
    sides except for a fraction ``odd`` of side 1.25; family k+1 has sides in
    [s, 1.25 s] with s = k0 * ceil(largest side of family k).  Sides are
    multiples of 1/4 so the compressed grids stay small.  n is the smallest
    size passing the boundary condition, plus a random margin.
    """
    sides = [(1.0, 1.25)]
    for _ in range(k0 - 1):
        s = k0 * math.ceil(sides[-1][1])
        sides.append((float(s), math.floor(1.25 * s * 4) / 4))
    top = sides[-1][1]
    # m(∂([0,n]^d, l)) = (n + 2l)^d - (n - 2l)^d
    n = int(math.ceil(4 * top))
    while (n + 2 * top) ** d - max(n - 2 * top, 0) ** d >= eta / 3 * n ** d:
        n += max(1, n // 16)
    n += int(rng.integers(0, 4))
    grid = np.stack(np.meshgrid(*[np.arange(n + 1)] * d, indexing="ij"), axis=-1).reshape(-1, d)
    fams = []
    for k, (s_lo, s_hi) in enumerate(sides):
        if k == 0:
            ell = np.where(rng.random(len(grid)) < odd, 1.25, 1.0)
        else:
            steps = int(round((s_hi - s_lo) * 4))
            ell = s_lo + rng.integers(0, steps + 1, len(grid)) / 4
        fams.append([Cube(g, float(e)) for g, e in zip(grid, ell)])
    return BoxUnion.box(np.zeros(d), np.full(d, float(n))), fams


def find_k0(A, build, eta: float, k_range=range(1, 7)) -> TileResult:
    """Smallest k0 in k_range for which build(k0) tiles A; records it."""
    last = None
    for k0 in k_range:
        fams = build(k0)
        try:
            return quasi_tile(A, fams, eta, k0)
        except (HypothesisViolated, SelectionFailed) as err:
            last = err
    raise SelectionFailed(f"no k0 in {list(k_range)} works: {last}")


# ---------------------------------------------------------------- block coding

def _nonneg(sys):
    if sys.potential.values.min() < 0:
        raise NegativePotential("the potential must be nonnegative")


def _point_cover(sys, A: GroupGrid, E: np.ndarray, eps: float, mode: str, incumbents=()):
    """Optimal cover of E for (d_A, phi_A) as point masks over E, plus its value."""
    Q = window_space(sys, A)
    cls, inv = np.unique(Q.labels[E], return_inverse=True)
    sub = Q.space.subspace(cls)
    sub_phi = PotentialField(Q.phi.values[cls])
    inc = []
    for c in incumbents:
        masks = sorted({to_mask(np.isin(np.arange(cls.size), inv[mask_indices(m, E.size)]))
                        for m in c})
        inc.append(masks)
    sol = covering_number_potential(sub, sub_phi, eps, mode, extra_sets=[m for c in inc for m in c],
                                    incumbents=inc)
    point_masks = []
    for m in sol.masks:
        members = np.isin(inv, mask_indices(m, cls.size))
        point_masks.append(to_mask(members))
    return point_masks, sol.value, sol.optimal


def product_cover(covers) -> list:
    """Nonempty pairwise intersections of one set from each cover."""
    out = {-1}
    for c in covers:
        nxt = set()
        for a in out:
            for m in c:
                x = a & m
                if x:
                    nxt.add(x)
        if len(nxt) > PRODUCT_CAP:
            raise BudgetExceeded(f"product cover exceeds {PRODUCT_CAP} sets")
        out = nxt
    return sorted(out)


def _grid_contains(parts, A: GroupGrid) -> bool:
    have = {tuple(np.round(r, 9)) for P in parts for r in P.elems}
    return all(tuple(np.round(r, 9)) in have for r in A.elems)


def block_coding_check(sys, E, A: GroupGrid, parts, eps: float, mode: str = "exact") -> tuple:
    """(lhs, rhs) = (#(E, d_A, phi_A, eps), product over parts of the same).

    The product of optimal part covers is passed to the solver for A as an
    incumbent, so lhs never exceeds rhs even when the search is truncated.
    """
    _nonneg(sys)
    if not _grid_contains(parts, A):
        raise NotCovering("A is not contained in the union of the parts")
    E = np.unique(np.asarray(E, dtype=int))
    covers, rhs = [], 1.0
    for P in parts:
        masks, val, _ = _point_cover(sys, P, E, eps, mode)
        covers.append(masks)
        rhs *= val
    inc = product_cover(covers)
    _, lhs, _ = _point_cover(sys, A, E, eps, mode, incumbents=[inc])
    if lhs > rhs * (1 + 1e-9):
        raise AssertionError(f"block coding fails: {lhs} > {rhs}")
    return lhs, rhs


def crude_estimate_check(sys, A: GroupGrid, eps: float, mode: str = "exact") -> tuple:
    """(lhs, rhs) = (#(X, d_A, phi_A, eps), #(X, d_1, phi_1, eps)^{m(B_1(A))}).

    The unit-block cover is transported along the orbit: for u in A the sets
    {x : T^u x in U} cover X for the block at u with the same value.
    """
    _nonneg(sys)
    if not 0 < eps < 1:
        raise ValueError("need 0 < eps < 1")
    E = np.arange(sys.n)
    unit = default_grid(sys, 1)
    base, base_val, _ = _point_cover(sys, unit, E, eps, mode)
    if sys.group == "Z":
        cells = A.elems
        region = BoxUnion.of_grid(A)
    else:
        cells = np.unique(np.floor(A.elems), axis=0)
        region = BoxUnion(cells, cells + 1.0)
    covers = []
    for u in cells:
        p = sys.act(u)
        covers.append(sorted({to_mask(np.isin(p, mask_indices(m, sys.n))) for m in base}))
    inc = product_cover(covers)
    _, lhs, _ = _point_cover(sys, A, E, eps, mode, incumbents=[inc])
    expo = neighborhood(region, 1.0).measure
    log_rhs = expo * math.log(base_val)
    if math.log(lhs) > log_rhs + 1e-9:
        raise AssertionError(f"crude estimate fails: log {lhs} > {log_rhs}")
    return lhs, base_val ** expo


def bowen_report(sys, delta: float, beta: float, eps: float, L_grid, mode: str = "exact") -> dict:
    """Fixed-scale check of the Bowen-type bound at the largest L.

    a is the sup over delta-fibers of the estimated P_T divided by log(1/eps);
    D is the metric radius r.  Non-gating: the true D is only known to exist.
    """
    from .meandim import _maximal_fibers, delta_fiber, full_window, p_t

    D = int(sys.meta.get("r", 0))
    full = full_window(sys)
    fibers = _maximal_fibers([delta_fiber(sys, x, delta, full) for x in range(sys.n)], sys.n)
    a = max(p_t(sys, mask_indices(m, sys.n), None, eps, L_grid, mode)[0] for m in fibers)
    a /= math.log2(1 / eps)
    L = max(L_grid)
    wide = box_grid(L + 2 * D, sys.d, start=-D)
    worst = -math.inf
    for x in range(sys.n):
        E = delta_fiber(sys, x, delta, wide)
        worst = max(worst, p_t(sys, E, None, eps, [L], mode)[1][L] * default_grid(sys, L).measure)
    bound = (a + beta) * default_grid(sys, L).measure * math.log2(1 / eps)
    return dict(a=a, D=D, L=L, log2_lhs=worst, log2_rhs=bound, holds=worst <= bound + 1e-9)
