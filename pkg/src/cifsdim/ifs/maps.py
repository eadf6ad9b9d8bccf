"""Generator maps and vectorized batches of composed maps.

Two families are built in: similarities x -> c*x + b on [0,1]^d and
integer Moebius maps x -> (a*x + b)/(c*x + d) with |ad - bc| = 1 on [0,1]
(inverse branches of the Gauss map and their compositions).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


@dataclass(frozen=True)
class Similarity:
    ratio: float
    translation: tuple
    label: tuple = ()

    @property
    def dim(self) -> int:
        return len(self.translation)

    def __call__(self, x):
        return self.ratio * np.asarray(x, dtype=float) + np.asarray(self.translation)

    def fixed_point(self) -> np.ndarray:
        return np.asarray(self.translation) / (1.0 - self.ratio)

    def derivative_range(self) -> tuple[float, float]:
        return self.ratio, self.ratio


@dataclass(frozen=True)
class Mobius:
    a: int
    b: int
    c: int
    d: int
    label: tuple = ()

    dim = 1

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return (self.a * x + self.b) / (self.c * x + self.d)

    def compose(self, other: "Mobius") -> "Mobius":
        """self o other."""
        return Mobius(self.a * other.a + self.b * other.c, self.a * other.b + self.b * other.d,
                      self.c * other.a + self.d * other.c, self.c * other.b + self.d * other.d,
                      self.label + other.label)

    def derivative_range(self) -> tuple[float, float]:
        """Range of |S'| over [0,1]; |S'(x)| = (c x + d)^-2 is monotone there."""
        return 1.0 / float(self.c + self.d) ** 2, 1.0 / float(self.d) ** 2

    def fixed_point(self) -> float:
        # c x^2 + (d - a) x - b = 0, positive root in the cancellation-free form
        p = self.d - self.a
        return 2.0 * self.b / (p + math.sqrt(p * p + 4.0 * self.c * self.b)) if self.b else 0.0

    def fixed_point_exact(self, bits: int = 96) -> Fraction:
        """Rational within a relative 2**-(bits+64) of the fixed point."""
        if self.b == 0:
            return Fraction(0)
        p = self.d - self.a
        disc = p * p + 4 * self.c * self.b
        shift = bits + 64 + max(0, p.bit_length())
        root = math.isqrt(disc << (2 * shift))
        return Fraction(2 * self.b << shift, (p << shift) + root)


def GaussBranch(b: int) -> Mobius:
    """x -> 1/(b + x)."""
    return Mobius(0, 1, 1, b, (b,))


def ComposedGaussBranch(b: int) -> Mobius:
    """The digit pair (1, b): x -> 1/(1 + 1/(b + x))."""
    return Mobius(1, b, 1, b + 1, (1, b))


# -- batches -----------------------------------------------------------------

class SimilarityBatch:
    kind = "similarity"

    def __init__(self, ratio, trans):
        self.ratio = np.asarray(ratio, dtype=float).reshape(-1)
        trans = np.asarray(trans, dtype=float)
        self.trans = trans.reshape(self.ratio.size, trans.shape[-1] if trans.ndim > 1 else -1)

    @classmethod
    def identity(cls, d: int):
        return cls([1.0], np.zeros((1, d)))

    @classmethod
    def from_maps(cls, maps):
        return cls([m.ratio for m in maps], [m.translation for m in maps])

    def __len__(self):
        return self.ratio.size

    def take(self, idx):
        return SimilarityBatch(self.ratio[idx], self.trans[idx])

    def children(self, gens: "SimilarityBatch"):
        """All compositions self[i] o gens[j], row-major in (i, j)."""
        r = (self.ratio[:, None] * gens.ratio[None, :]).ravel()
        t = (self.ratio[:, None, None] * gens.trans[None, :, :] + self.trans[:, None, :])
        return SimilarityBatch(r, t.reshape(r.size, -1))

    def rho(self):
        return self.ratio

    def rho_lo(self):
        return self.ratio

    def apply(self, x):
        """Images of points x (k, d): shape (n, k, d)."""
        x = np.asarray(x, dtype=float).reshape(-1, self.trans.shape[1])
        return self.ratio[:, None, None] * x[None, :, :] + self.trans[:, None, :]

    def hulls(self):
        """Image boxes of [0,1]^d: (lower corners, upper corners)."""
        return self.trans, self.trans + self.ratio[:, None]

    def fixed_points(self):
        return self.trans / (1.0 - self.ratio[:, None])


class MobiusBatch:
    kind = "gauss"

    def __init__(self, a, b, c, d):
        self.a, self.b, self.c, self.d = (np.asarray(v, dtype=float) for v in (a, b, c, d))

    @classmethod
    def identity(cls, d: int = 1):
        return cls([1.0], [0.0], [0.0], [1.0])

    @classmethod
    def from_maps(cls, maps):
        return cls([m.a for m in maps], [m.b for m in maps], [m.c for m in maps], [m.d for m in maps])

    def __len__(self):
        return self.a.size

    def take(self, idx):
        return MobiusBatch(self.a[idx], self.b[idx], self.c[idx], self.d[idx])

    def children(self, gens: "MobiusBatch"):
        a = self.a[:, None] * gens.a[None, :] + self.b[:, None] * gens.c[None, :]
        b = self.a[:, None] * gens.b[None, :] + self.b[:, None] * gens.d[None, :]
        c = self.c[:, None] * gens.a[None, :] + self.d[:, None] * gens.c[None, :]
        d = self.c[:, None] * gens.b[None, :] + self.d[:, None] * gens.d[None, :]
        return MobiusBatch(a.ravel(), b.ravel(), c.ravel(), d.ravel())

    def rho(self):
        return 1.0 / self.d ** 2

    def rho_lo(self):
        return 1.0 / (self.c + self.d) ** 2

    def apply(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        num = self.a[:, None] * x[None, :] + self.b[:, None]
        den = self.c[:, None] * x[None, :] + self.d[:, None]
        return (num / den)[:, :, None]

    def derivative(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        return 1.0 / (self.c[:, None] * x[None, :] + self.d[:, None]) ** 2

    def hulls(self):
        e0 = self.b / self.d
        e1 = (self.a + self.b) / (self.c + self.d)
        return np.minimum(e0, e1)[:, None], np.maximum(e0, e1)[:, None]

    def fixed_points(self):
        p = self.d - self.a
        with np.errstate(invalid="ignore", divide="ignore"):
            x = 2.0 * self.b / (p + np.sqrt(p * p + 4.0 * self.c * self.b))
        return np.where(self.b == 0, 0.0, x)[:, None]


def batch_from_maps(maps):
    if all(isinstance(m, Similarity) for m in maps):
        return SimilarityBatch.from_maps(maps)
    if all(isinstance(m, Mobius) for m in maps):
        return MobiusBatch.from_maps(maps)
    raise TypeError("mixed or unknown map types")
