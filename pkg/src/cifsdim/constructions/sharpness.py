"""Target classes realizing every admissible lower box dimension.

Stage n of the fixed-point class f decays from t_n to s, stays at s, then
rises toward d until it reaches t_{n+1}. Its envelope at level h decays
from t_n toward h until it meets beta_n, then rises toward d, so the
envelope's values at the stage knots are the beta_n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import ConstructionError, InconsistentParameters
from ..scaling import (Constant, ScalingFunction, Toward, concatenate, dim_interval)
from .prescribed import ifs_with_prescribed


@dataclass(frozen=True)
class SharpnessParams:
    h: float
    s: float
    t: float
    beta: float
    d: int = 1
    delta: float = 0.01

    def beta_n(self, n: int, delta: float | None = None) -> float:
        delta = self.delta if delta is None else delta
        return max(self.beta, self.h + delta / n)

    def t_n(self, n: int, delta: float | None = None) -> float:
        delta = self.delta if delta is None else delta
        return min(self.t, self.d - delta / n)

    @property
    def upper_bound(self) -> float:
        h, s, t, d = self.h, self.s, self.t, self.d
        return h + (t - h) * (d - h) * s / (d * t - h * s)


@dataclass(frozen=True)
class Stage:
    n: int
    beta_n: float
    t_n: float
    t_next: float
    a1: float
    a2: float
    a2_raw: float
    a3: float
    a3_short: float

    @property
    def b1(self) -> float:
        return self.a1 + self.a2 + self.a3_short

    @property
    def b2(self) -> float:
        return self.a3 - self.a3_short

    def to_json(self) -> dict:
        return {"n": self.n, "beta_n": self.beta_n, "t_n": self.t_n, "a1": self.a1, "a2": self.a2,
                "a2_raw": self.a2_raw, "a3": self.a3, "a3_short": self.a3_short,
                "b1": self.b1, "b2": self.b2}


def _delta_ok(p: SharpnessParams, delta: float, stages: int) -> bool:
    for n in range(1, stages + 2):
        b, t = p.beta_n(n, delta), p.t_n(n, delta)
        if not (p.h < b < t < p.d and b <= p.upper_bound + 1e-15):
            return False
    return True


def admissible_delta(p: SharpnessParams, stages: int) -> float:
    delta = p.delta
    for _ in range(60):
        if _delta_ok(p, delta, stages):
            return delta
        delta /= 2.0
    raise ConstructionError("stage constraints violated")


def stage_constants(p: SharpnessParams, stages: int) -> tuple[list[Stage], float]:
    iv = dim_interval(p.h, p.s, p.t, p.d)
    if iv.degenerate:
        raise ConstructionError("unreachable target: the admissible interval is a single point")
    if not (iv.lo - 1e-12 <= p.beta <= iv.hi + 1e-12):
        raise ConstructionError("unreachable target")
    delta = admissible_delta(p, stages)
    h, s, d = p.h, p.s, p.d
    out = []
    for n in range(1, stages + 1):
        bn, tn, tnext = p.beta_n(n, delta), p.t_n(n, delta), p.t_n(n + 1, delta)
        a1 = math.log(tn / s)
        a3 = math.log((d - s) / (d - tnext))
        a3s = math.log((d - s) / (d - bn))
        a2r = math.log((tn - h) / (bn - h)) - a1 - a3s
        if a2r < 0:
            raise ConstructionError("stage constraints violated")
        out.append(Stage(n, bn, tn, tnext, a1, max(a2r, 0.0), a2r, a3, a3s))
    return out, delta


def target_class(stages: list[Stage], p: SharpnessParams) -> ScalingFunction:
    """Concatenation of (decay to s, hold s, rise to t_{n+1}) over the stages."""
    pieces = []
    for st in stages:
        pieces.append(Toward(0.0, st.t_n, st.a1))
        if st.a2 > 0:
            pieces.append(Constant(p.s, st.a2))
        pieces.append(Toward(float(p.d), p.s, st.a3))
    f = concatenate(pieces)
    return _with_dim(f, p.d)


def predicted_envelope(stages: list[Stage], p: SharpnessParams) -> ScalingFunction:
    pieces = []
    for st in stages:
        pieces.append(Toward(p.h, st.t_n, st.b1))
        pieces.append(Toward(float(p.d), st.beta_n, st.b2))
    return _with_dim(concatenate(pieces), p.d)


def _with_dim(f: ScalingFunction, d: int) -> ScalingFunction:
    return ScalingFunction(f.segments, f.left_extension, dim=float(d))


def knot_values(g: ScalingFunction, stages: list[Stage]) -> list[float]:
    """g at the end of each stage's decaying part (where it should equal beta_n)."""
    out, x = [], 0.0
    for st in stages:
        out.append(float(g(x + st.b1)))
        x += st.b1 + st.b2
    return out


def _desk_knots(min_scale: float) -> list[float]:
    top = math.log(math.log(1.0 / min_scale))
    return [0.5 + 0.25 * k for k in range(int((top - 0.5) / 0.25) + 1)]


@dataclass
class SharpnessResult:
    params: SharpnessParams
    stages: list
    delta: float
    target: ScalingFunction
    envelope: ScalingFunction
    system: object = None
    provenance: dict = field(default_factory=dict)


def sharpness_system(p: SharpnessParams, stages: int = 5, build_system: bool = True,
                     min_scale: float = 1e-8) -> SharpnessResult:
    if not (0 < p.h < p.d and 0 <= p.s <= p.t <= p.d):
        raise InconsistentParameters("inconsistent dimension parameters")
    st, delta = stage_constants(p, stages)
    f = target_class(st, p)
    g = predicted_envelope(st, p)
    prov = {"construction": "sharpness", "h": p.h, "s": p.s, "t": p.t, "beta": p.beta, "d": p.d,
            "delta": delta, "stages": [s.to_json() for s in st],
            # desk window: x = log log(1/r) from 0.5 to the min_scale limit in steps of 1/4
            "scales": [math.exp(-math.exp(x)) for x in _desk_knots(min_scale)]}
    system = None
    if build_system:
        system = ifs_with_prescribed(f, p.h, p.d, min_scale=min_scale)
        system.provenance = {**system.provenance, **prov}
    return SharpnessResult(p, st, delta, f, g, system, prov)
