"""Words, stopping covers and the symbolic covering count.

Covers are built breadth first: a node whose contraction norm is still
above the scale is expanded by every retained generator, a node at or
below it is kept. Nodes are stored level by level as batches of composed
maps plus (parent, letter) arrays, so words are only materialized on
request.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..covering import DeepCoords, PointCloud, count_boxes
from ..errors import BudgetExceeded, CifsdimError
from .maps import MobiusBatch, SimilarityBatch
from .system import CIFS

DEFAULT_BUDGET = 10_000_000
_STOP_SLACK = 1.0 + 1e-12  # products of ratios landing on r up to rounding count as stopped


def contraction_norm(system: CIFS, word) -> tuple[float, float]:
    """Interval [inf |S_w'|, sup |S_w'|] over the unit cube; exact for similarities."""
    word = tuple(getattr(word, "indices", word))
    if not word:
        return 1.0, 1.0
    m = system.word_maps(word)
    lo, hi = m.derivative_range()
    return float(lo), float(hi)


def _concat(batches):
    if isinstance(batches[0], SimilarityBatch):
        return SimilarityBatch(np.concatenate([b.ratio for b in batches]),
                               np.vstack([b.trans for b in batches]))
    return MobiusBatch(*(np.concatenate([getattr(b, k) for b in batches]) for k in "abcd"))


@dataclass
class SymbolicCover:
    """A prefix-free word family together with the internal nodes above it.

    ``maps``/``rho``/``rho_lo``/``level`` describe the kept words;
    ``inner_rho``/``inner_level`` the expanded nodes (root included) with
    contraction norm above ``r``.
    """

    r: float
    maps: object
    rho: np.ndarray
    rho_lo: np.ndarray
    level: np.ndarray
    inner_maps: object
    inner_rho: np.ndarray
    inner_level: np.ndarray
    distortion: float
    rho_min: float
    residual_count: float = 0.0
    complete: bool = True
    _parents: list = field(default_factory=list, repr=False)
    _stop_ref: tuple = (None, None)

    def __len__(self):
        return self.rho.size

    @property
    def max_level(self) -> int:
        return int(self.level.max()) if self.level.size else 0

    def theta(self, r: float | None = None) -> np.ndarray:
        """theta_i(r) = 1 - log rho(i)/log r for the expanded nodes."""
        r = self.r if r is None else r
        return 1.0 - np.log(self.inner_rho) / math.log(r)

    def band(self) -> np.ndarray:
        """Norms of expanded nodes with r < rho <= r K / rho_min."""
        top = self.r * self.distortion / self.rho_min
        return self.inner_rho[(self.inner_rho > self.r) & (self.inner_rho <= top)]

    def words(self) -> list[tuple]:
        """Materialize the kept words (as tuples of 0-based generator positions)."""
        lv, pos = self._stop_ref
        if lv is None:
            raise CifsdimError("cover carries no word structure")
        out = []
        for L, p in zip(lv.tolist(), pos.tolist()):
            out.append(self._trace(L, p))
        return out

    def _trace(self, L: int, p: int) -> tuple:
        letters = []
        while L > 0:
            par, let = self._parents[L - 1]
            letters.append(int(let[p]))
            p = int(par[p])
            L -= 1
        return tuple(reversed(letters))


def stopping_words(system: CIFS, r: float, budget: int = DEFAULT_BUDGET, B: int | None = None,
                   max_level: int | None = None) -> SymbolicCover:
    """Prefix-minimal words with rho(w) <= r < rho(parent).

    With ``max_level`` the expansion also stops at that level (a depth-limited
    family). Raises BudgetExceeded with the partial cover attached once more
    than ``budget`` nodes have been generated.
    """
    if not (0 < r < 1):
        raise CifsdimError("scale out of range")
    gens = system.batch(B)
    g_rho = gens.rho()
    rho_min = float(gens.rho_lo().min())
    frontier = system.identity_batch()
    f_rho = np.ones(1)
    keep = np.zeros(1, dtype=np.int64)   # frontier positions within its level's children
    stop_maps, stop_rho, stop_lo, stop_L, stop_pos = [], [], [], [], []
    in_maps, in_rho, in_lvl = [], [], []
    parents = []   # per level: (parent position in previous level's children, letter)
    generated, level, complete = 1, 0, True
    while len(frontier):
        if max_level is not None and level >= max_level:
            stop_maps.append(frontier)
            stop_rho.append(f_rho)
            stop_lo.append(frontier.rho_lo())
            stop_L.append(np.full(f_rho.size, level))
            stop_pos.append(keep)
            break
        in_maps.append(frontier)
        in_rho.append(f_rho)
        in_lvl.append(np.full(f_rho.size, level))
        n_child = len(frontier) * len(gens)
        if generated + n_child > budget:
            complete = False
            break
        generated += n_child
        kids = frontier.children(gens)
        if isinstance(kids, SimilarityBatch):
            k_rho = (f_rho[:, None] * g_rho[None, :]).ravel()
        else:
            k_rho = kids.rho()
        par = np.repeat(keep, len(gens))
        let = np.tile(np.arange(len(gens)), len(frontier))
        parents.append((par, let))
        level += 1
        stop = k_rho <= r * _STOP_SLACK
        idx_stop = np.nonzero(stop)[0]
        keep = np.nonzero(~stop)[0]
        stop_maps.append(kids.take(idx_stop))
        stop_rho.append(k_rho[idx_stop])
        stop_lo.append(kids.rho_lo()[idx_stop])
        stop_L.append(np.full(idx_stop.size, level))
        stop_pos.append(idx_stop)
        frontier = kids.take(keep)
        f_rho = k_rho[keep]

    stop_lvl = np.concatenate(stop_L) if stop_L else np.zeros(0, int)
    cover = SymbolicCover(
        r=float(r),
        maps=_concat(stop_maps) if stop_maps else system.identity_batch().take(np.zeros(0, int)),
        rho=np.concatenate(stop_rho) if stop_rho else np.zeros(0),
        rho_lo=np.concatenate(stop_lo) if stop_lo else np.zeros(0),
        level=stop_lvl,
        inner_maps=_concat(in_maps),
        inner_rho=np.concatenate(in_rho),
        inner_level=np.concatenate(in_lvl),
        distortion=system.distortion,
        rho_min=rho_min,
        complete=complete,
    )
    cover._parents = parents
    cover._stop_ref = (stop_lvl, np.concatenate(stop_pos) if stop_pos else np.zeros(0, int))
    cover.residual_count = _residual_count(system, cover, B)
    if not complete:
        raise BudgetExceeded("budget exceeded", partial=cover)
    return cover


def _residual_count(system: CIFS, cover: SymbolicCover, B) -> float:
    """Bound on N_r of the part of the limit set carried by omitted generators."""
    if system.is_finite:
        return 0.0
    B = system.truncation.max_index if B is None else B
    gaps = [1.0 / (B + 1)]
    if any(getattr(m, "label", ())[:1] == (1,) for m in system.retained(B)):
        gaps.append(1.0 / (B + 2))
    total = 0.0
    for g in gaps:
        total += float(np.sum(np.ceil(cover.inner_rho * g / cover.r) + 1.0))
    return total


def level_words(system: CIFS, m: int, budget: int = DEFAULT_BUDGET, B: int | None = None) -> SymbolicCover:
    """All words of length exactly m, as a cover family."""
    return stopping_words(system, 1e-300, budget=budget, B=B, max_level=m)


# -- point sets --------------------------------------------------------------

def fixed_point_set(system: CIFS, B: int | None = None, deep: bool = False, bits: int = 96) -> PointCloud:
    """Fixed points of the retained generators."""
    gens = system.retained(B)
    if system.kind == "gauss":
        if deep:
            return PointCloud.from_exact([[m.fixed_point_exact(bits)] for m in gens], bits)
        return PointCloud(1, np.array([[m.fixed_point()] for m in gens]))
    pts = system.batch(B).fixed_points()
    return PointCloud(system.dim, np.clip(pts, 0.0, 1.0))


def orbit_set(system: CIFS, x0, m: int, B: int | None = None, budget: int = DEFAULT_BUDGET) -> PointCloud:
    """{S_w(x0) : |w| = m} over the retained generators."""
    if m < 1:
        raise CifsdimError("level must be >= 1")
    gens = system.batch(B)
    if len(gens) < 2 and not (system.is_finite and len(gens) == 1):
        raise CifsdimError("degenerate truncation")
    if len(gens) ** m > budget:
        raise BudgetExceeded("budget exceeded")
    words = system.identity_batch()
    for _ in range(m):
        words = words.children(gens)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    pts = words.apply(x0.reshape(1, -1))[:, 0, :]
    return PointCloud(system.dim, np.clip(pts, 0.0, 1.0))


def direct_cloud(system: CIFS, cover: SymbolicCover, base: PointCloud | None = None) -> PointCloud:
    """Images of the fixed-point set under every word of the cover."""
    base = fixed_point_set(system) if base is None else base
    pts = cover.maps.apply(base.points)
    return PointCloud(system.dim, np.clip(pts.reshape(-1, system.dim), 0.0, 1.0))


# -- symbolic count ----------------------------------------------------------

def counts_at_scales(cloud: PointCloud, qs: np.ndarray, chunk: int = 1 << 20) -> np.ndarray:
    """N_q(cloud) for many scales q at once; q >= 1 counts as one cell."""
    qs = np.asarray(qs, dtype=float)
    out = np.ones(qs.size, dtype=np.int64)
    live = np.nonzero(qs < 1.0)[0]
    if live.size == 0:
        return out
    uq, inv = np.unique(qs[live], return_inverse=True)
    pts = cloud.points
    n = len(pts)
    res = np.empty(uq.size, dtype=np.int64)
    rows = max(1, chunk // max(1, n))
    for i in range(0, uq.size, rows):
        q = uq[i:i + rows]
        if cloud.dim == 1:
            cells = np.floor(pts[None, :, 0] / q[:, None])
            cells.sort(axis=1)
            res[i:i + rows] = 1 + (np.diff(cells, axis=1) != 0).sum(axis=1)
        else:
            for j, qq in enumerate(q):
                res[i + j] = count_boxes(cloud, float(qq))
    out[live] = res[inv]
    return out


@dataclass(frozen=True)
class TauEstimate:
    r: float
    m: int
    tau: float
    lower: float
    upper: float
    eps: float
    constant: float
    residual_count: float
    complete: bool

    @property
    def exponent(self) -> float:
        return math.log(self.tau) / math.log(1.0 / self.r)


def symbolic_covering_estimate(system: CIFS, r: float, m: int = 1, eps: float = 0.05,
                               budget: int = DEFAULT_BUDGET, B: int | None = None,
                               base: PointCloud | None = None) -> TauEstimate:
    """tau_m(r) = sum over words of blocks with rho > r of N_{r/rho}(F_m).

    The bracket for N_r of the limit set is [tau r^eps / C, C tau r^-eps]
    with C = 2^d K; the residual count from omitted generators is added to
    the upper end.
    """
    if m < 1:
        raise CifsdimError("level must be >= 1")
    if m == 1:
        blocks = system
        fm = fixed_point_set(system, B) if base is None else base
    else:
        gens = system.batch(B)
        if len(gens) ** m > budget:
            raise CifsdimError("level infeasible")
        blocks = system.iterate(m, B)
        x0 = system.retained(B)[0].fixed_point()
        fm = orbit_set(system, x0, m, B) if base is None else base
    partial = False
    try:
        cover = stopping_words(blocks, r, budget=budget, B=None if m > 1 else B)
    except BudgetExceeded as exc:
        cover, partial = exc.partial, True
    counts = counts_at_scales(fm, r / cover.inner_rho)
    tau = float(counts.sum())
    const = (2.0 ** system.dim) * system.distortion
    slack = r ** eps
    return TauEstimate(r, m, tau, tau * slack / const, const * tau / slack + cover.residual_count,
                       eps, const, cover.residual_count, cover.complete and not partial)


# -- diagnostics -------------------------------------------------------------

def is_prefix_free(words) -> bool:
    ws = sorted(tuple(w) for w in words)
    for a, b in zip(ws, ws[1:]):
        if b[:len(a)] == a:
            return False
    return True


def bounded_neighbourhood_count(system: CIFS, family: SymbolicCover, r: float, probes) -> int:
    """Largest number of family cylinders with rho > r meeting B(x, r) over the probes."""
    if not is_prefix_free(family.words()):
        raise CifsdimError("invalid family")
    keep = family.rho > r
    lo, hi = family.maps.hulls()
    lo, hi = lo[keep], hi[keep]
    probes = np.asarray(probes, dtype=float).reshape(-1, system.dim)
    best = 0
    for x in probes:
        gap = np.maximum(0.0, np.maximum(lo - x, x - hi))
        dist = np.sqrt((gap ** 2).sum(axis=1))
        best = max(best, int((dist < r).sum()))
    return best


def discrete_approximation_check(system: CIFS, e1: PointCloud, e2: PointCloud, scales) -> float:
    """max over scales of |log N_r(E1) - log N_r(E2)|."""
    worst = 0.0
    for r in scales:
        worst = max(worst, abs(math.log(count_boxes(e1, r)) - math.log(count_boxes(e2, r))))
    return worst


def gauss_fixed_point_cloud(digits, deep: bool = False, bits: int = 96) -> PointCloud:
    """Fixed points of x -> 1/(b+x), i.e. (sqrt(b^2+4) - b)/2, for a digit list.

    With ``deep`` each point also gets an exact ``bits``-bit mantissa (rounded
    down) computed in integer arithmetic.
    """
    digits = list(digits)
    b = np.asarray(digits, dtype=float)
    pts = (2.0 / (b + np.sqrt(b * b + 4.0))).reshape(-1, 1)
    if not deep:
        return PointCloud(1, pts)
    mants, exps = [], []
    for k in digits:
        shift = bits + k.bit_length() + 2
        root = math.isqrt((k * k + 4) << (2 * shift))
        x = (root - (k << shift)) >> 1          # floor(x * 2**shift) up to one unit
        extra = x.bit_length() - bits
        mants.append(x >> extra)
        exps.append(extra - shift)
    return PointCloud(1, pts, DeepCoords.from_pairs(mants, exps))
