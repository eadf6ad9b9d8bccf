"""Covering-class calculus on the doubly-logarithmic chart.

A ``ScalingFunction`` is a finite list of segments, each of the form

    v(x) = target + (initial - target) * exp(-(x - x0))      on [x0, x0 + length]

(``Constant`` segments have target == initial). To the left of the first
segment the function equals ``left_extension``; to the right of a finite
last segment it stays at its end value. This family is closed under the
minimal envelope and under pointwise sup/inf, and any two forms meet at
most once, so every operation here is exact up to floating point.

Sampled functions (an (x, value) table, linear in between) are supported
for measured data.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .covering import grid_constant
from .errors import ClassWindowError, CifsdimError, EmptyInput, InconsistentParameters, ScaleOutOfRange

JOIN_TOL = 1e-12
_TINY = 1e-15


@dataclass(frozen=True)
class Segment:
    x0: float
    length: float
    target: float
    initial: float
    kind: str = "toward"

    @property
    def end(self) -> float:
        return self.x0 + self.length

    @property
    def decay(self) -> float:
        return self.initial - self.target

    def value(self, x):
        return self.target + self.decay * np.exp(-(np.asarray(x, dtype=float) - self.x0))

    def value_at(self, x: float) -> float:
        if self.kind == "constant":
            return self.initial
        if math.isinf(x):
            return self.target
        return self.target + self.decay * math.exp(-(x - self.x0))

    @property
    def end_value(self) -> float:
        return self.value_at(self.end)

    def restrict(self, a: float, b: float) -> "Segment":
        """The same curve re-anchored on [a, b]."""
        return make_segment(a, b - a, self.target, self.value_at(a), self.kind == "constant")


def make_segment(x0, length, target, initial, constant=False) -> Segment:
    if constant or abs(initial - target) == 0.0:
        return Segment(float(x0), float(length), float(initial), float(initial), "constant")
    return Segment(float(x0), float(length), float(target), float(initial), "toward")


def Constant(value: float, length: float, x0: float = 0.0) -> "ScalingFunction":
    return ScalingFunction((make_segment(x0, length, value, value, True),))


def Toward(target: float, initial: float, length: float, x0: float = 0.0) -> "ScalingFunction":
    return ScalingFunction((make_segment(x0, length, target, initial),))


@dataclass(frozen=True)
class ScalingFunction:
    segments: tuple = ()
    left_extension: float | None = None
    samples: tuple | None = None  # (xs, values) for measured functions
    dim: float = 1.0

    def __post_init__(self):
        if self.samples is not None:
            xs, vs = (np.asarray(a, dtype=float) for a in self.samples)
            if xs.size == 0:
                raise EmptyInput("no samples")
            if np.any(np.diff(xs) <= 0):
                raise CifsdimError("sample abscissae must increase")
            object.__setattr__(self, "samples", (xs, vs))
            return
        segs = tuple(self.segments)
        if not segs:
            raise EmptyInput("no segments")
        for a, b in zip(segs, segs[1:]):
            if math.isinf(a.length):
                raise CifsdimError("only the last segment may be unbounded")
            if abs(a.end - b.x0) > 1e-9:
                raise CifsdimError("segments must abut")
            if abs(a.end_value - b.initial) > 1e-9:
                raise CifsdimError(f"discontinuity at x={b.x0}")
        for s in segs:
            if s.length < 0:
                raise CifsdimError("negative segment length")
            if not (-JOIN_TOL <= s.target <= self.dim + JOIN_TOL):
                raise CifsdimError("segment target outside [0, d]")
        object.__setattr__(self, "segments", segs)
        if self.left_extension is None:
            object.__setattr__(self, "left_extension", segs[0].initial)

    @property
    def is_sampled(self) -> bool:
        return self.samples is not None

    @property
    def start(self) -> float:
        return float(self.samples[0][0]) if self.is_sampled else self.segments[0].x0

    @property
    def end(self) -> float:
        return float(self.samples[0][-1]) if self.is_sampled else self.segments[-1].end

    @property
    def breakpoints(self) -> list[float]:
        if self.is_sampled:
            return self.samples[0].tolist()
        pts = [s.x0 for s in self.segments]
        if not math.isinf(self.segments[-1].end):
            pts.append(self.segments[-1].end)
        return pts

    @property
    def end_value(self) -> float:
        if self.is_sampled:
            return float(self.samples[1][-1])
        return self.segments[-1].end_value

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_sampled:
            xs, vs = self.samples
            return np.interp(x, xs, vs)
        out = np.full(x.shape, self.left_extension, dtype=float)
        for s in self.segments:
            if s.kind == "constant":
                out = np.where(x >= s.x0, s.initial, out)
            else:
                with np.errstate(over="ignore"):
                    out = np.where(x >= s.x0, s.value(np.maximum(x, s.x0)), out)
        last = self.segments[-1]
        if not math.isinf(last.end):
            out = np.where(x > last.end, last.end_value, out)
        return out if out.ndim else float(out)

    def form_on(self, a: float, b: float) -> Segment:
        """The single analytic form this function takes on (a, b)."""
        mid = a + 1.0 if math.isinf(b) else 0.5 * (a + b)
        if mid < self.segments[0].x0:
            v = self.left_extension
            return make_segment(a, b - a, v, v, True)
        for s in self.segments:
            if s.x0 <= mid <= s.end:
                return s.restrict(a, b)
        v = self.end_value
        return make_segment(a, b - a, v, v, True)

    def values_range(self):
        grid = dense_grid(self, 0.01)
        v = self(grid)
        return float(np.min(v)), float(np.max(v))


def dense_grid(f: ScalingFunction, step: float, lo: float | None = None, hi: float | None = None) -> np.ndarray:
    lo = f.start if lo is None else lo
    hi = (f.end if not math.isinf(f.end) else f.start + 10.0) if hi is None else hi
    n = max(2, int(math.ceil((hi - lo) / step)) + 1)
    return np.linspace(lo, hi, n)


@dataclass(frozen=True)
class ClassWindow:
    lam: float
    alpha: float

    def __post_init__(self):
        if not (0 <= self.lam <= self.alpha):
            raise ClassWindowError("class window needs 0 <= lambda <= alpha")


@dataclass(frozen=True)
class DimInterval:
    lo: float
    hi: float
    degenerate: bool = field(init=False)

    def __post_init__(self):
        if self.lo > self.hi:
            raise InconsistentParameters("interval endpoints out of order")
        object.__setattr__(self, "degenerate", self.lo == self.hi)

    def contains(self, other: "DimInterval", tol: float = 0.0) -> bool:
        return self.lo - tol <= other.lo and other.hi <= self.hi + tol


# -- membership ---------------------------------------------------------------

def class_membership_defect(f, window: ClassWindow, grid, chunk: int = 2048) -> float:
    """Largest violation of the integrated class inequalities over grid pairs.

    For x_i < x_j with gap u, membership requires
        lam - (lam - f_i) e^{-u} <= f_j <= alpha - (alpha - f_i) e^{-u}.
    ``f`` may be a ScalingFunction or an array of values on ``grid``.
    """
    x = np.asarray(grid, dtype=float)
    if x.size == 0:
        raise EmptyInput("no samples")
    v = np.asarray(f(x) if callable(f) else f, dtype=float)
    lam, alpha = window.lam, window.alpha
    worst = 0.0
    for i0 in range(0, x.size, chunk):
        xi = x[i0:i0 + chunk, None]
        vi = v[i0:i0 + chunk, None]
        u = x[None, :] - xi
        mask = u > 0
        e = np.exp(-np.where(mask, u, 0.0))
        low = lam - (lam - vi) * e - v[None, :]
        if math.isinf(alpha):
            high = np.full(low.shape, -np.inf)
        else:
            high = v[None, :] - (alpha - (alpha - vi) * e)
        viol = np.where(mask, np.maximum(low, high), 0.0)
        worst = max(worst, float(viol.max()))
    return worst


def _check_class(f: ScalingFunction) -> None:
    if f.is_sampled:
        xs, vs = f.samples
        if vs.min() < -JOIN_TOL:
            raise ClassWindowError("input outside class")
        # lower inequality with lam = 0 only; the upper one holds for a large alpha
        if class_membership_defect(vs, ClassWindow(0.0, math.inf), xs) > 1e-9:
            raise ClassWindowError("input outside class")
        return
    for s in f.segments:
        if s.target < -JOIN_TOL or min(s.initial, s.end_value) < -JOIN_TOL:
            raise ClassWindowError("input outside class")
    if f.left_extension < -JOIN_TOL or abs(f.left_extension - f.segments[0].initial) > 1e-9:
        raise ClassWindowError("input outside class")


# -- envelope -------------------------------------------------------------------

def minimal_envelope(f: ScalingFunction, lam: float) -> ScalingFunction:
    """Least function of class (lam, alpha) lying above ``f``.

    Pointwise this is sup over theta in (0,1] of (1-theta)*lam + theta*f(x - log(1/theta)).
    Substituting u = x - log(1/theta) turns the sup into a running maximum
    of (f(u) - lam) e^u, which is monotone on every segment; the result is
    computed segment by segment with the switch points solved exactly.
    Sampled inputs take the running maximum over the sample abscissae.
    """
    if lam < 0:
        raise ClassWindowError("lambda must be non-negative")
    _check_class(f)
    if f.is_sampled:
        return _envelope_sampled(f, lam)
    segs = list(f.segments)
    if not math.isinf(segs[-1].end):
        v = segs[-1].end_value
        segs.append(make_segment(segs[-1].end, math.inf, v, v, True))
    out: list[Segment] = []
    g = max(f.left_extension, lam)
    for s in segs:
        xs, xe = s.x0, s.end
        gs = max(g, s.initial)
        a = s.target
        if a > lam:
            k = s.decay - (gs - lam)
            cross = max(xs, xs + math.log(-k / (a - lam))) if k < 0 else xs
        else:
            cross = math.inf
        if cross > xs + _TINY:
            stop = min(cross, xe)
            out.append(make_segment(xs, stop - xs, lam, gs))
        if cross < xe:
            out.append(s.restrict(cross, xe))
            g = s.end_value
        else:
            g = out[-1].end_value
    out = [s for s in out if s.length > _TINY or math.isinf(s.length)]
    return ScalingFunction(tuple(_merge(out)), max(f.left_extension, lam), dim=max(f.dim, lam))


def _envelope_sampled(f: ScalingFunction, lam: float) -> ScalingFunction:
    xs, vs = f.samples
    ref = xs[0]
    # running max of (v - lam) e^{x - ref}; kept relative to each point to avoid overflow
    g = np.empty_like(vs)
    best, at = max(vs[0] - lam, 0.0), ref
    for i, (x, v) in enumerate(zip(xs, vs)):
        carried = best * math.exp(-(x - at))
        if v - lam >= carried:
            best, at = v - lam, x
            carried = best
        g[i] = lam + carried
    return ScalingFunction(samples=(xs.copy(), g), dim=max(f.dim, lam))


def _merge(segs: list[Segment]) -> list[Segment]:
    out: list[Segment] = []
    for s in segs:
        if out:
            p = out[-1]
            if p.kind == s.kind and abs(p.target - s.target) < 1e-15 and abs(p.end_value - s.initial) < 1e-12:
                if p.kind == "constant" or abs(p.restrict(p.x0, s.end).end_value - s.end_value) < 1e-12:
                    out[-1] = make_segment(p.x0, s.end - p.x0, p.target, p.initial, p.kind == "constant")
                    continue
        out.append(s)
    return out


# -- sup / inf --------------------------------------------------------------------

def pointwise_extrema(family: Sequence[ScalingFunction], mode: str = "sup") -> ScalingFunction:
    if not family:
        raise EmptyInput("empty family")
    if mode not in ("sup", "inf"):
        raise CifsdimError("mode must be 'sup' or 'inf'")
    pick = max if mode == "sup" else min
    if len(family) == 1:
        return family[0]
    dim = max(f.dim for f in family)
    if any(f.is_sampled for f in family):
        xs = np.unique(np.concatenate([np.asarray(f.breakpoints) for f in family]))
        vals = np.stack([f(xs) for f in family])
        v = vals.max(axis=0) if mode == "sup" else vals.min(axis=0)
        return ScalingFunction(samples=(xs, v), dim=dim)
    bps = sorted({b for f in family for b in f.breakpoints})
    edges = bps + [math.inf]
    out: list[Segment] = []
    for a, b in zip(edges, edges[1:]):
        forms = [f.form_on(a, b) for f in family]
        cuts = {a, b}
        for i in range(len(forms)):
            for j in range(i + 1, len(forms)):
                y = _crossing(forms[i], forms[j])
                if y is not None and a + _TINY < a + y < b - _TINY:
                    cuts.add(a + y)
        cuts = sorted(cuts)
        for c0, c1 in zip(cuts, cuts[1:]):
            probe = c0 + 1.0 if math.isinf(c1) else 0.5 * (c0 + c1)
            best = pick(forms, key=lambda s: s.value_at(probe))
            out.append(best.restrict(c0, c1))
    left = pick(f.left_extension for f in family)
    return ScalingFunction(tuple(_merge(out)), left, dim=dim)


def _crossing(p: Segment, q: Segment) -> float | None:
    """Offset y > 0 from the common anchor where the two forms meet, if any."""
    dc = p.decay - q.decay
    if dc == 0:
        return None
    ratio = (q.target - p.target) / dc
    if not (0 < ratio < 1):
        return None
    return -math.log(ratio)


# -- concatenation -----------------------------------------------------------------

def concatenate(pieces: Sequence[ScalingFunction], tol: float = 1e-9) -> ScalingFunction:
    """Splice functions given on [0, a_k] end to end; constant f_1(0) to the left."""
    if not pieces:
        raise EmptyInput("no pieces")
    out: list[Segment] = []
    offset = 0.0
    prev_end = None
    for p in pieces:
        if p.is_sampled:
            raise CifsdimError("concatenation needs piecewise functions")
        length = p.end - p.start
        if not (length > 0) or math.isinf(length):
            raise CifsdimError("each piece needs a positive finite length")
        if prev_end is not None and abs(prev_end - p.segments[0].initial) > tol:
            raise CifsdimError("discontinuous concatenation")
        shift = offset - p.start
        for s in p.segments:
            out.append(make_segment(s.x0 + shift, s.length, s.target, s.initial, s.kind == "constant"))
        # pin the join exactly so the shared endpoint agrees bit for bit
        if len(out) > len(p.segments):
            k = len(out) - len(p.segments)
            first = out[k]
            out[k] = make_segment(first.x0, first.length, first.target, out[k - 1].end_value,
                                  first.kind == "constant")
        offset += length
        prev_end = p.end_value
    return ScalingFunction(tuple(out), out[0].initial, dim=max(p.dim for p in pieces))


# -- psi ----------------------------------------------------------------------------------

def psi(s_fn: Callable[[float], float], h: float, r: float, d: int = 1,
        eps: float = 1e-4) -> tuple[float, float]:
    """max over theta in [0,1] of (1-theta) h + theta s(r**theta).

    theta = 0 is read as the limit value h. Grid step eps/d: the objective is
    2d-Lipschitz in theta apart from the scale-independent grid constant, so
    the grid maximum is within eps of the true one.
    """
    if not (0 < r < 1):
        raise ScaleOutOfRange(r)
    if not (0 <= h <= d):
        raise InconsistentParameters("h outside [0, d]")
    n = max(1, int(math.ceil(d / eps)))
    best, arg = h, 0.0
    for k in range(1, n + 1):
        th = k / n
        val = (1.0 - th) * h + th * s_fn(r ** th)
        if val > best:
            best, arg = val, th
    return best, arg


def psi_grid_error(d: int, eps: float, r: float) -> float:
    return eps + grid_constant(d) / math.log(1.0 / r)


# -- D interval and existence ------------------------------------------------------------

def dim_interval(h: float, s: float, t: float, alpha: float = 1.0) -> DimInterval:
    """Range of lower box dimensions compatible with (h, s, t) in ambient bound alpha."""
    if not (0 <= s <= t <= alpha and 0 <= h <= alpha):
        raise InconsistentParameters("inconsistent dimension parameters")
    if t <= h:
        return DimInterval(h, h)
    lo = max(h, s)
    if not (0 < h < t and 0 < s < t):
        return DimInterval(lo, lo)
    if math.isinf(alpha):
        hi = s + (1.0 - s / t) * h
    else:
        hi = h + (t - h) * (alpha - h) * s / (alpha * t - h * s)
    return DimInterval(lo, max(lo, hi))


def box_dimension_exists(h: float, s: float, t: float) -> bool:
    if not (0 <= s <= t and h >= 0):
        raise InconsistentParameters("inconsistent dimension parameters")
    return t <= max(h, s)


# -- serialization ---------------------------------------------------------------------

def to_json(f: ScalingFunction) -> dict:
    if f.is_sampled:
        xs, vs = f.samples
        return {"dim": f.dim, "samples": {"x": xs.tolist(), "value": vs.tolist()}}
    segs = []
    for s in f.segments:
        item = {"x0": s.x0, "length": None if math.isinf(s.length) else s.length, "kind": s.kind}
        if s.kind == "constant":
            item["value"] = s.initial
        else:
            item["target"], item["initial"] = s.target, s.initial
        segs.append(item)
    return {"dim": f.dim, "left_extension": f.left_extension, "segments": segs}


def from_json(obj: dict) -> ScalingFunction:
    dim = obj.get("dim", 1.0)
    if "samples" in obj:
        return ScalingFunction(samples=(obj["samples"]["x"], obj["samples"]["value"]), dim=dim)
    segs = []
    for it in obj["segments"]:
        length = math.inf if it["length"] is None else it["length"]
        if it["kind"] == "constant":
            segs.append(make_segment(it["x0"], length, it["value"], it["value"], True))
        elif it["kind"] == "toward":
            segs.append(make_segment(it["x0"], length, it["target"], it["initial"]))
        else:
            raise CifsdimError(f"unknown segment kind {it['kind']!r}")
    return ScalingFunction(tuple(segs), obj.get("left_extension"), dim=dim)


def dumps(f: ScalingFunction) -> str:
    return json.dumps(to_json(f), indent=2)


def write_samples_csv(f: ScalingFunction, path, grid=None) -> None:
    xs = f.samples[0] if (f.is_sampled and grid is None) else np.asarray(grid)
    vs = f(xs)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "value"])
        for x, v in zip(xs, vs):
            w.writerow([repr(float(x)), repr(float(v))])


def read_samples_csv(path, dim: float = 1.0) -> ScalingFunction:
    xs, vs = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            xs.append(float(row["x"]))
            vs.append(float(row["value"]))
    return ScalingFunction(samples=(xs, vs), dim=dim)
