"""Self-similar systems with a prescribed fixed-point covering class and Hausdorff dimension."""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.spatial import cKDTree

from ..errors import ConstructionError
from ..ifs.maps import Similarity
from ..ifs.system import CIFS, similarity_system
from ..scaling import ScalingFunction
from .moran import discrete_set_from_class

MAX_INDEX_EXPONENT = 1000  # 2**-index is floored here to stay a normal float


def branching_level(h: float, d: int) -> int:
    """Least n with log(2^{dn} - 1) / (n log 2) > h."""
    if not (0 < h < d):
        raise ConstructionError("dimension out of range")
    n = 1
    while math.log(2.0 ** (d * n) - 1.0) / (n * math.log(2.0)) <= h:
        n += 1
        if n > 200:
            raise ConstructionError("dimension out of range")
    return n


def point_ratios(points: np.ndarray, side: float, h: float, cap: float = 0.5) -> tuple[np.ndarray, int]:
    """c_p = min(gap_p/4, side/4, 2^-index), halved until sum c_p^h <= cap.

    gap_p is the distance from p to its nearest neighbour or to the boundary
    of (0, side)^d. Points are indexed from 1 in order of decreasing norm, so
    the schedule is fixed by the point set alone.
    """
    n = len(points)
    if n == 0:
        return np.zeros(0), 0
    wall = np.minimum(points, side - points).min(axis=1)
    if n > 1:
        dist, _ = cKDTree(points).query(points, k=2)
        gap = np.minimum(dist[:, 1], wall)
    else:
        gap = wall
    order = np.argsort(-np.linalg.norm(points, axis=1), kind="stable")
    index = np.empty(n)
    index[order] = np.arange(1, n + 1)
    ratios = np.minimum(np.minimum(gap / 4.0, side / 4.0), 2.0 ** (-np.minimum(index, MAX_INDEX_EXPONENT)))
    if np.any(ratios <= 0):
        raise ConstructionError("packing failure")
    halvings = 0
    while math.fsum((ratios ** h).tolist()) > cap:
        ratios = ratios / 2.0
        halvings += 1
        if halvings > 200:
            raise ConstructionError("packing failure")
    return ratios, halvings


def ifs_with_prescribed(g: ScalingFunction, h: float, d: int = 1, min_scale: float = 1e-8,
                        max_points: int = 200_000) -> CIFS:
    """Similarity system with dimension h whose fixed points have covering class g.

    The fixed points are a finite truncation (down to ``min_scale``) of a
    discrete set with class g inside (0, 2^-n)^d, each fixed by its own
    small map, plus 2^{dn} - 1 maps of a common ratio c centred in the
    remaining cells of side 2^-n, with (2^{dn}-1) c^h = 1 - sum c_p^h.
    """
    n = branching_level(h, d)
    side = 2.0 ** (-n)
    f0 = discrete_set_from_class(g, d, min_scale=min_scale, max_points=max_points)
    pts = f0.points[np.all((f0.points > 0) & (f0.points < side), axis=1)]
    ratios, halvings = point_ratios(pts, side, h)
    rest = 1.0 - math.fsum((ratios ** h).tolist())
    count = 2 ** (d * n) - 1
    c = (rest / count) ** (1.0 / h)
    if not (0 < c < side):
        raise ConstructionError("packing failure")
    maps = [Similarity(float(cp), tuple(((1.0 - cp) * p).tolist()), ("p", i))
            for i, (cp, p) in enumerate(zip(ratios, pts))]
    cells = [ix for ix in itertools.product(range(2 ** n), repeat=d) if any(ix)]
    for j, ix in enumerate(cells):
        lo = np.asarray(ix, dtype=float) * side + (side - c) / 2.0
        maps.append(Similarity(c, tuple(lo.tolist()), ("T", j)))
    prov = {"construction": "prescribed", "h": h, "n": n, "c": c, "points": int(len(pts)),
            "sum_cp_h": 1.0 - rest, "halvings": halvings, "min_scale": min_scale}
    return similarity_system(maps, d, provenance=prov)
