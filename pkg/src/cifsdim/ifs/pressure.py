"""Pressure brackets and the Hausdorff dimension root.

Similarity systems: rho is multiplicative, so the level-n sum is the n-th
power of the level-1 sum and the pressure is log(sum c_i^t) exactly, plus
the certified tail for omitted generators.

Moebius (continued-fraction) systems: the naive level-n bracket
[(1/n) log sum inf|S_w'|^t, (1/n) log sum sup|S_w'|^t] closes only like
log(K)/n, which is far too slow. Instead we bound the spectral radius of
the transfer operator

    L f(y) = sum_i |S_i'(y)|^t f(S_i y)

on an interval X mapped into itself by every branch. For any positive
continuous f, m f <= L f <= M f on X gives log m <= P(t) <= log M. The test
function is n power iterates of L applied to 1 (piecewise linear on a node
grid); m and M are certified on a fine partition of X using monotonicity of
|S_i'| and exact min/max of the piecewise-linear f on each image interval.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import PressureInfinite, Undecided
from .digits import check_finite_pressure
from .system import CIFS

_REL = 1e-12  # widening for floating-point rounding in sums
_CHUNK = 1 << 21  # map-by-point entries per block
_RESOLUTIONS = ((257, 4096), (1025, 16384), (4097, 65536), (16385, 262144))


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def overlaps(self, other: "Bracket") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi


def pressure(system: CIFS, t: float, n: int | None = None, B: int | None = None,
             nodes: int = 257, cells: int = 4096) -> Bracket:
    if t <= 0:
        raise PressureInfinite(t)
    n = system.truncation.max_level if n is None else n
    if n < 1:
        raise ValueError("level must be >= 1")
    tail = check_finite_pressure(system.tail_sum(t, B), t)
    batch = system.batch(B)
    if system.kind == "similarity":
        s = math.fsum((batch.ratio ** t).tolist())
        lo = math.log(s) - _REL
        hi = math.log(s + tail) + _REL
        return Bracket(lo, hi)
    return _transfer_bracket(system, batch, t, n, B, nodes, cells)


def invariant_interval(system: CIFS, batch=None, iterations: int = 200, t: float = 1.0,
                       B: int | None = None) -> tuple[float, float]:
    """Smallest interval found by iterating X -> hull(union S_i X) from [0, 1].

    Images of omitted generators (infinite systems) are included through
    their enclosing intervals.
    """
    batch = system.batch(B) if batch is None else batch
    extra = [(lo, hi) for _, _, lo, hi in system.tail_detail(t, B)]
    lo, hi = 0.0, 1.0
    for _ in range(iterations):
        im = batch.apply(np.array([lo, hi]))[:, :, 0]
        nlo, nhi = float(im.min()), float(im.max())
        for a, b in extra:
            nlo, nhi = min(nlo, a), max(nhi, b)
        if abs(nlo - lo) < 1e-15 and abs(nhi - hi) < 1e-15:
            break
        lo, hi = nlo, nhi
    return lo, hi


def _transfer_bracket(system, batch, t, n, B, n_nodes, n_cells) -> Bracket:
    parts = system.tail_detail(t, B)
    xa, xb = invariant_interval(system, batch, t=t, B=B)
    if xb - xa < 1e-14:
        # a single contraction: the fixed point; pressure is t log|S'(x*)|
        x = np.array([xa])
        val = float((batch.derivative(x)[:, 0] ** t).sum())
        return Bracket(math.log(val) - _REL, math.log(val) + _REL)
    nodes = np.linspace(xa, xb, n_nodes)
    chunk = max(1, _CHUNK // len(batch))
    f = np.ones(n_nodes)
    for _ in range(n):
        g = np.concatenate([_transfer(batch, t, nodes[i:i + chunk], nodes, f)
                            for i in range(0, n_nodes, chunk)])
        for up, _, a, b in parts:
            g += up * float(np.interp(0.5 * (a + b), nodes, f))
        f = g / g.max()

    table = _RangeTable(nodes, f)
    tail_lo, tail_hi = 0.0, 0.0
    for up, low, a, b in parts:
        mn, mx = table.range(np.array([max(a, xa)]), np.array([min(b, xb)]))
        tail_lo += low * float(mn[0])
        tail_hi += up * float(mx[0])
    grid = np.linspace(xa, xb, n_cells + 1)
    m, M = math.inf, 0.0
    for i in range(0, n_cells, chunk):
        a = grid[i:min(i + chunk, n_cells)]
        b = grid[i + 1:i + 1 + a.size]
        f_lo, f_hi = table.range(a, b)
        ya = batch.apply(a)[:, :, 0]
        yb = batch.apply(b)[:, :, 0]
        fi_lo, fi_hi = table.range(np.minimum(ya, yb), np.maximum(ya, yb))
        w_max = batch.derivative(a) ** t   # |S'| decreasing on [0, 1]
        w_min = batch.derivative(b) ** t
        lower = ((w_min * fi_lo).sum(axis=0) + tail_lo) / f_hi
        upper = ((w_max * fi_hi).sum(axis=0) + tail_hi) / f_lo
        m, M = min(m, float(lower.min())), max(M, float(upper.max()))
    return Bracket(math.log(m) - _REL, math.log(M) + _REL)


def _transfer(batch, t, x, nodes, f):
    images = batch.apply(x)[:, :, 0]
    return (batch.derivative(x) ** t * np.interp(images, nodes, f)).sum(axis=0)


class _RangeTable:
    """Exact min/max of a piecewise-linear function over arbitrary intervals."""

    def __init__(self, nodes: np.ndarray, values: np.ndarray):
        self.x = nodes
        self.v = values
        self.mins = [values]
        self.maxs = [values]
        k = 1
        while 2 * k <= values.size:
            pm, px = self.mins[-1], self.maxs[-1]
            self.mins.append(np.minimum(pm[:-k], pm[k:]))
            self.maxs.append(np.maximum(px[:-k], px[k:]))
            k *= 2

    def range(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        e_lo = np.interp(lo, self.x, self.v)
        e_hi = np.interp(hi, self.x, self.v)
        vmin = np.minimum(e_lo, e_hi)
        vmax = np.maximum(e_lo, e_hi)
        i = np.searchsorted(self.x, lo, side="right")
        j = np.searchsorted(self.x, hi, side="left") - 1
        has = j >= i
        if np.any(has):
            ii, jj = i[has], j[has]
            span = jj - ii + 1
            lev = np.floor(np.log2(span)).astype(int)
            rmin = np.empty(ii.size)
            rmax = np.empty(ii.size)
            for L in np.unique(lev):
                sel = lev == L
                k = 1 << L
                mins, maxs = self.mins[L], self.maxs[L]
                rmin[sel] = np.minimum(mins[ii[sel]], mins[jj[sel] - k + 1])
                rmax[sel] = np.maximum(maxs[ii[sel]], maxs[jj[sel] - k + 1])
            vmin[has] = np.minimum(vmin[has], rmin)
            vmax[has] = np.maximum(vmax[has], rmax)
        return vmin, vmax


def naive_level_bracket(system: CIFS, t: float, n: int, B: int | None = None) -> Bracket:
    """(1/n) log of the level-n sums of inf and sup derivatives (retained words only)."""
    batch = system.batch(B)
    words = system.identity_batch()
    for _ in range(n):
        words = words.children(batch)
    lo = math.log(float((words.rho_lo() ** t).sum())) / n
    hi = math.log(float((words.rho() ** t).sum()) + 0.0) / n
    return Bracket(lo, hi)


def hausdorff_dim(system: CIFS, tol: float = 1e-6, n: int | None = None, B: int | None = None,
                  t_max: float | None = None) -> Bracket:
    """Bracket for inf{t : P(t) < 0} by bisection on certified pressure signs."""
    d = system.dim
    t_hi = float(d if t_max is None else t_max)
    if system.kind == "similarity" and system.is_finite:
        ratios = system.batch(B).ratio

        def sign(t):
            return 1 if math.fsum((ratios ** t).tolist()) > 1.0 else -1
        lo, hi = 0.0, t_hi
        if sign(hi) > 0:
            raise Undecided("undecided at resolution: no certified negative pressure")
        while hi - lo > tol * 0.25:
            mid = 0.5 * (lo + hi)
            if sign(mid) > 0:
                lo = mid
            else:
                hi = mid
        return Bracket(lo, hi)

    def state(t):
        # the transfer bracket is first order in the grid step: refine until the sign shows
        for nodes, cells in _RESOLUTIONS:
            try:
                p = pressure(system, t, n, B, nodes=nodes, cells=cells)
            except PressureInfinite:
                return 1
            if p.hi < 0:
                return -1
            if p.lo > 0:
                return 1
            if system.kind == "similarity":
                break
        return 0

    top = state(t_hi)
    # a limit set in R^d never exceeds dimension d, so t = d needs no certificate
    if top > 0 or (top == 0 and t_max is not None):
        raise Undecided("undecided at resolution: no certified negative pressure")
    lo, hi = 0.0, t_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        s = state(mid)
        if s < 0:
            hi = mid
        elif s > 0:
            lo = mid
        else:
            q = max(tol / 4.0, (hi - lo) / 8.0)
            a, b = state(mid - q), state(mid + q)
            if a > 0 and b < 0:
                lo, hi = mid - q, mid + q
                if hi - lo <= tol:
                    break
                continue
            raise Undecided(f"undecided at resolution: pressure sign unknown near t={mid:.6g}")
    return Bracket(lo, hi)
