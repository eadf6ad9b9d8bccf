"""Continued-fraction digit sets, including one whose limit set has no box dimension."""
from __future__ import annotations

import math

from ..errors import PressureInfinite, Undecided
from ..ifs.digits import DigitSet, nonexistence_bands, nonexistence_sequence
from ..ifs.pressure import pressure
from ..ifs.system import CIFS, gauss_cifs

__all__ = ["DigitSet", "gauss_cifs", "nonexistence_digit_set", "nonexistence_system", "stage_scales"]


def stage_scales(a: list[int], first: int = 1) -> list[float]:
    """(2 a_n)^-3 and a_n^-2 for n >= first, sorted from coarse to fine."""
    out = []
    for n in range(first, len(a)):
        out.append(float((2 * a[n]) ** -3))
        out.append(float(a[n]) ** -2.0)
    return sorted(set(out), reverse=True)


def nonexistence_digit_set(stages: int = 3, threshold: float = 1.0 / 3.0, containment: float | None = None,
                           level: int = 12) -> DigitSet:
    """Squares of the integers in the bands [a_n, 2 a_n], cut below at the first certified N.

    Candidate cuts are the squares of the band starts a_0, a_1, ...; the
    first one whose pressure at ``threshold`` is certified negative wins, so
    the Hausdorff dimension is below ``threshold``. ``containment`` (if set)
    additionally forces the limit set into (0, containment).
    """
    if stages < 2:
        raise ValueError("need at least two stages")
    a = nonexistence_sequence(stages)
    bands = nonexistence_bands(stages)
    tried = []
    for k in range(len(a)):
        cut = a[k] ** 2
        if containment is not None and 1.0 / cut >= containment:
            continue
        ds = DigitSet(bands=bands, squares=True, cut=cut, stage_rule="nonexistence",
                      description=f"nonexistence digit set, {stages} listed stages, cut {cut}",
                      meta={"a": a})
        system = gauss_cifs(ds, n=level)
        try:
            p = pressure(system, threshold, level)
        except PressureInfinite:
            tried.append((cut, math.inf))
            continue
        tried.append((cut, p.hi))
        if p.hi < 0:
            ds.meta.update({"cut": cut, "pressure_hi": p.hi, "pressure_lo": p.lo,
                            "threshold": threshold, "tried": tried, "B": system.truncation.max_index})
            return ds
    raise Undecided(f"cut undecided: tried {tried}")


def nonexistence_system(stages: int = 3, **kw) -> CIFS:
    ds = nonexistence_digit_set(stages, **kw)
    system = gauss_cifs(ds)
    a = ds.meta["a"]
    system.provenance = {"construction": "cf-nonexistence", "stages": stages, "a": [str(v) for v in a],
                         "cut": ds.meta["cut"], "pressure_at_threshold": [ds.meta["pressure_lo"],
                                                                         ds.meta["pressure_hi"]],
                         "scales": stage_scales(a, 1), "window_fraction": 2.0 / 3.0}
    return system
