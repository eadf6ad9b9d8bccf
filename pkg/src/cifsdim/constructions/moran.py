"""Homogeneous Moran sets with a prescribed covering class, and discrete sets built from them."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..covering import PointCloud
from ..errors import ConstructionError
from ..scaling import ScalingFunction

KNOT_MARGIN = 1e-12   # knots sit this far (relatively) on the safe side of the level equation


@dataclass(frozen=True)
class MoranSpec:
    """Subdivision ratios r_1..r_K (exact dyadic rationals) with their knots x_k = log log(1/rho_k)."""

    dim: int
    ratios: tuple
    knots: tuple
    rule: str = "class"

    def __post_init__(self):
        for r in self.ratios:
            if not (0 < r <= Fraction(1, 2)):
                raise ConstructionError(f"subdivision ratio {float(r)} outside (0, 1/2]")

    @property
    def depth(self) -> int:
        return len(self.ratios)

    def rho(self, k: int) -> Fraction:
        out = Fraction(1)
        for r in self.ratios[:k]:
            out *= r
        return out

    def log_inv_rho(self, k: int) -> float:
        return math.fsum(-math.log(r.numerator) + math.log(r.denominator) for r in self.ratios[:k])

    def upper_exponent(self, k: int) -> float:
        """k d log 2 / log(1/rho_k): the exponent of the exact count 2^{dk} at rho_k."""
        return k * self.dim * math.log(2.0) / self.log_inv_rho(k)

    def to_json(self) -> dict:
        return {"dim": self.dim, "rule": self.rule,
                "ratios": [[r.numerator, r.denominator] for r in self.ratios],
                "knots": list(self.knots)}


def _asymptotically_zero(g: ScalingFunction) -> bool:
    if g.is_sampled:
        return float(g.samples[1][-1]) <= 0.0
    last = g.segments[-1]
    limit = last.target if math.isinf(last.length) else last.end_value
    return limit <= 0.0


def moran_scales_from_class(g: ScalingFunction, d: int = 1, depth: int = 12) -> MoranSpec:
    """Knots x_k with e^{x_k} g(x_k) = k d log 2, hence rho_k = exp(-exp(x_k)).

    G(x) = e^x g(x) is non-decreasing for g of class (0, d), so each knot is
    the first crossing of a level and is found by bisection. The knot is
    taken on the upper side of the crossing (G(x_k) >= level (1 + margin)),
    which keeps k d log 2 / log(1/rho_k) <= g(x_k).
    """
    if _asymptotically_zero(g):
        ratios = tuple(Fraction(1, 2 ** (2 ** n)) for n in range(1, depth + 1))
        knots = []
        acc = 0
        for n in range(1, depth + 1):
            acc += 2 ** n
            knots.append(math.log(acc * math.log(2.0)))
        return MoranSpec(d, ratios, tuple(knots), rule="doubly-exponential")

    def G(x):
        return math.exp(x) * float(g(x))

    knots: list[float] = []
    ratios: list[Fraction] = []
    lo = -40.0
    prev_log = 0.0
    rho = Fraction(1)
    for k in range(1, depth + 1):
        level = k * d * math.log(2.0) * (1.0 + KNOT_MARGIN)
        hi = max(lo, 0.0) + 1.0
        steps = 0
        while G(hi) < level:
            hi += max(1.0, hi - lo)
            steps += 1
            if steps > 200:
                raise ConstructionError("recursion stalled")
        a, b = lo, hi
        for _ in range(200):
            mid = 0.5 * (a + b)
            if G(mid) >= level:
                b = mid
            else:
                a = mid
            if b - a <= 4e-16 * max(1.0, abs(b)):
                break
        x = b
        knots.append(x)
        log_inv = math.exp(x)
        r = Fraction(math.exp(-(log_inv - prev_log)))
        if r > Fraction(1, 2):
            if float(r) - 0.5 > 1e-9:
                raise ConstructionError("recursion stalled")
            r = Fraction(1, 2)
        if r == 0:
            raise ConstructionError("precision exceeded")
        ratios.append(r)
        rho *= r
        prev_log = log_inv
        lo = x
    return MoranSpec(d, tuple(ratios), tuple(knots))


def moran_points(spec: MoranSpec, depth: int | None = None, exact: bool | None = None,
                 precision_bits: int = 96) -> PointCloud:
    """Lower corners of the 2^{d depth} cubes of the depth-level approximation."""
    depth = spec.depth if depth is None else depth
    if depth > spec.depth:
        raise ConstructionError("depth exceeds the specified scales")
    rho_end = spec.log_inv_rho(depth) / math.log(2.0)
    if exact is None:
        exact = rho_end > 40
    if exact and rho_end > precision_bits - 8:
        raise ConstructionError("precision exceeded")
    d = spec.dim
    if exact:
        corners = [tuple(Fraction(0) for _ in range(d))]
        rho = Fraction(1)
        for k in range(depth):
            r = spec.ratios[k]
            step = (1 - r) * rho
            new = []
            for c in corners:
                for bits in range(2 ** d):
                    new.append(tuple(c[j] + (step if (bits >> (d - 1 - j)) & 1 else 0) for j in range(d)))
            corners = new
            rho *= r
        return PointCloud.from_exact(corners, precision_bits)
    pts = _corner_array(spec, depth, None)
    return PointCloud(d, pts)


def _offsets(d: int) -> np.ndarray:
    return np.array([[(bits >> (d - 1 - j)) & 1 for j in range(d)] for bits in range(2 ** d)], dtype=float)


def _corner_array(spec: MoranSpec, depth: int, below: float | None) -> np.ndarray:
    """Float lower corners; with ``below`` only cubes whose corner is < below in every coordinate."""
    d = spec.dim
    offs = _offsets(d)
    corners = np.zeros((1, d))
    rho = 1.0
    for k in range(depth):
        r = float(spec.ratios[k])
        corners = (corners[:, None, :] + offs[None, :, :] * ((1.0 - r) * rho)).reshape(-1, d)
        if below is not None:
            corners = corners[np.all(corners < below, axis=1)]
        rho *= r
    return corners


def discrete_set_from_class(g: ScalingFunction, d: int = 1, min_scale: float = 1e-8,
                            max_points: int = 500_000) -> PointCloud:
    """Finite truncation of a discrete set accumulating only at 0 with covering class g.

    For n = 1..n_max (2^{-n_max} ~ min_scale) take one point of the Moran
    set in each level-k(n) cube meeting [0, 1/n)^d, where k(n) is the first
    level with sqrt(d) rho_k <= 2^{-n}; points lie in (0, 1/n)^d.
    """
    n_max = max(1, int(math.ceil(math.log2(1.0 / min_scale))))
    target = 2.0 ** (-n_max) / math.sqrt(d)
    depth = 1
    spec = moran_scales_from_class(g, d, depth=8)
    while float(spec.rho(spec.depth)) > target:
        spec = moran_scales_from_class(g, d, depth=spec.depth * 2)
    chunks = []
    total = 0
    for n in range(1, n_max + 1):
        k = next(k for k in range(1, spec.depth + 1) if math.sqrt(d) * float(spec.rho(k)) <= 2.0 ** (-n))
        lower = _corner_array(spec, k, 1.0 / n)
        upper = lower + float(spec.rho(k))
        take_upper = np.all(upper < 1.0 / n, axis=1)
        pts = np.where(take_upper[:, None], upper, lower)
        pts = pts[np.all(pts > 0.0, axis=1) & np.all(pts < 1.0 / n, axis=1)]
        chunks.append(pts)
        total += len(pts)
        if total > max_points:
            raise ConstructionError("point budget exceeded")
    pts = np.unique(np.vstack(chunks), axis=0)
    return PointCloud(d, pts)
