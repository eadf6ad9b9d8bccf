"""The contraction-system data model and its JSON form."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from ..errors import CifsdimError
from .digits import DigitSet
from .maps import (ComposedGaussBranch, GaussBranch, Mobius, MobiusBatch, Similarity,
                   SimilarityBatch, batch_from_maps)

GAUSS_DISTORTION = 4.0


@dataclass(frozen=True)
class Truncation:
    max_index: int | None = None   # B: keep generators with index <= B
    max_level: int = 12            # n: default word level for pressure


@dataclass(frozen=True)
class Word:
    indices: tuple

    @property
    def level(self) -> int:
        return len(self.indices)


@dataclass
class CIFS:
    """A countable system given by an ordered, possibly infinite, list of maps.

    ``enumerate_maps`` yields (index, map) with non-decreasing index. For
    infinite systems ``tail`` bounds the sum of rho(i)**t over generators
    with index > B; finite systems leave it as None.
    """

    kind: str
    dim: int
    enumerate_maps: Callable[[], Iterator]
    distortion: float = 1.0
    tail: Callable[[float, int], float] | None = None
    truncation: Truncation = field(default_factory=Truncation)
    source: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    digit_set: DigitSet | None = None
    # (t, B) -> [(upper sum, lower sum, image lo, image hi), ...] for the omitted generators
    tail_parts: Callable[[float, int], list] | None = None

    def __post_init__(self):
        if self.kind not in ("similarity", "gauss"):
            raise CifsdimError(f"unknown system kind {self.kind!r}")
        if self.kind == "similarity" and self.distortion != 1.0:
            raise CifsdimError("similarity systems have distortion 1")
        self._cache: dict = {}

    @property
    def is_finite(self) -> bool:
        return self.tail is None

    def retained(self, B: int | None = None) -> list:
        B = self.truncation.max_index if B is None else B
        if B is None and not self.is_finite:
            raise CifsdimError("infinite system needs an index truncation B")
        key = ("retained", B)
        if key not in self._cache:
            out = []
            for idx, m in self.enumerate_maps():
                if B is not None and idx > B:
                    break
                out.append(m)
            self._cache[key] = out
        return self._cache[key]

    def batch(self, B: int | None = None):
        key = ("batch", B)
        if key not in self._cache:
            self._cache[key] = batch_from_maps(self.retained(B))
        return self._cache[key]

    def identity_batch(self):
        return SimilarityBatch.identity(self.dim) if self.kind == "similarity" else MobiusBatch.identity()

    def tail_detail(self, t: float, B: int | None = None) -> list:
        if self.tail is None:
            return []
        B = self.truncation.max_index if B is None else B
        if self.tail_parts is None:
            return [(self.tail(t, B), 0.0, 0.0, 1.0)]
        return self.tail_parts(t, B)

    def tail_sum(self, t: float, B: int | None = None) -> float:
        if self.tail is None:
            return 0.0
        B = self.truncation.max_index if B is None else B
        return self.tail(t, B)

    @property
    def uniform_ratio_bound(self) -> float:
        rho = self.batch().rho()
        return float(rho.max())

    def word_maps(self, word) -> object:
        return compose_word(self.retained(), word, self.kind, self.dim)

    def iterate(self, m: int, B: int | None = None) -> "CIFS":
        """The system whose generators are the level-m words (retained part only)."""
        gens = self.retained(B)
        if self.kind == "similarity":
            words = []
            for w in itertools.product(range(len(gens)), repeat=m):
                words.append(compose_word(gens, w, self.kind, self.dim))
        else:
            words = [compose_word(gens, w, self.kind, self.dim)
                     for w in itertools.product(range(len(gens)), repeat=m)]
        listed = list(enumerate(words, start=1))
        return CIFS(self.kind, self.dim, lambda: iter(listed), self.distortion, None,
                    Truncation(None, self.truncation.max_level), {"iterate_of": self.source, "m": m})

    def to_json(self) -> dict:
        if self.source:
            out = dict(self.source)
        else:
            out = {"kind": self.kind, "dim": self.dim,
                   "generators": [generator_to_json(g) for g in self.retained()]}
        out["truncation"] = {"B": self.truncation.max_index, "n": self.truncation.max_level}
        if self.provenance:
            out["provenance"] = self.provenance
        return out


def compose_word(maps, word, kind, dim):
    if kind == "similarity":
        ratio, trans = 1.0, np.zeros(dim)
        for i in word:
            g = maps[i]
            trans = trans + ratio * np.asarray(g.translation)
            ratio *= g.ratio
        return Similarity(ratio, tuple(trans.tolist()), tuple(word))
    m = Mobius(1, 0, 0, 1)
    for i in word:
        m = m.compose(maps[i])
    return m


def generator_to_json(g) -> dict:
    if isinstance(g, Similarity):
        return {"ratio": g.ratio, "translation": list(g.translation)}
    return {"mobius": [g.a, g.b, g.c, g.d]}


# -- constructors ---------------------------------------------------------------

def similarity_system(maps, dim: int | None = None, source: dict | None = None,
                      provenance: dict | None = None) -> CIFS:
    maps = [m if isinstance(m, Similarity) else Similarity(float(m[0]), tuple(np.atleast_1d(m[1]).tolist()))
            for m in maps]
    if not maps:
        raise CifsdimError("no generators")
    dim = dim or maps[0].dim
    for m in maps:
        if not (0 < m.ratio < 1):
            raise CifsdimError("similarity ratio must lie in (0, 1)")
        lo = np.asarray(m.translation)
        if np.any(lo < -1e-12) or np.any(lo + m.ratio > 1 + 1e-12):
            raise CifsdimError("generator image leaves the unit cube")
    listed = list(enumerate(maps, start=1))
    src = source if source is not None else {
        "kind": "similarity", "dim": dim, "generators": [generator_to_json(m) for m in maps]}
    return CIFS("similarity", dim, lambda: iter(listed), 1.0, None, Truncation(None, 1), src,
                provenance or {})


def gauss_cifs(digits: DigitSet, B: int | None = None, n: int = 12) -> CIFS:
    """Inverse Gauss branches for the digit set; digit 1 enters through (1, b) pairs."""
    if isinstance(digits, (list, tuple, set)):
        digits = DigitSet.of(digits)
    has_one = 1 in digits

    def enumerate_maps():
        for b in digits.digits():
            if b != 1:
                yield b, GaussBranch(b)
            if has_one:
                yield b, ComposedGaussBranch(b)

    parts = None
    if digits.explicit is not None and (B is None or B >= digits.max_listed()):
        tail = None
        B = digits.max_listed()
    else:
        mult = 2.0 if has_one else 1.0

        def tail(t, B, _d=digits, _m=mult):
            return _m * _d.tail_power_sum(B, 2.0 * t)

        def parts(t, B, _d=digits):
            # |S_b'| lies in [(b+1)^-2, b^-2] and S_b maps into [0, 1/(B+1)];
            # the composed (1, b) branches have |S'| in [(b+2)^-2, (b+1)^-2] and map near 1
            up = _d.tail_power_sum(B, 2.0 * t)
            out = [(up, _d.tail_power_sum_lower(B, 2.0 * t, 1), 0.0, 1.0 / (B + 1))]
            if has_one:
                out.append((up, _d.tail_power_sum_lower(B, 2.0 * t, 2), (B + 1) / (B + 2), 1.0))
            return out
        if B is None:
            B = digits.default_cutoff()
    if digits.explicit is not None and len(digits.explicit) == 1 and digits.explicit[0] == 1:
        raise CifsdimError("improper digit set")
    src = {"kind": "gauss", "dim": 1, "digit_set": digits.to_json()}
    return CIFS("gauss", 1, enumerate_maps, GAUSS_DISTORTION, tail, Truncation(B, n), src,
                digit_set=digits, tail_parts=parts)


def system_from_json(obj: dict) -> CIFS:
    kind = obj.get("kind")
    trunc = obj.get("truncation", {}) or {}
    if kind == "similarity":
        gens = []
        for g in obj["generators"]:
            gens.append(Similarity(float(g["ratio"]), tuple(float(v) for v in np.atleast_1d(g["translation"]))))
        sys = similarity_system(gens, int(obj.get("dim", gens[0].dim)), source=None,
                                provenance=obj.get("provenance", {}))
        sys.truncation = Truncation(trunc.get("B"), int(trunc.get("n", 1)))
        return sys
    if kind == "gauss":
        ds = DigitSet.from_json(obj["digit_set"])
        sys = gauss_cifs(ds, trunc.get("B"), int(trunc.get("n", 12)))
        sys.provenance = obj.get("provenance", {})
        return sys
    raise CifsdimError(f"unknown system kind {kind!r}")
