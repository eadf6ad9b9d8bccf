"""Digit sets for continued-fraction systems.

A digit set is either an explicit finite list or a union of integer bands
[lo, hi] (optionally squared), cut below at ``cut``. Banded sets may be
continued past the listed bands by a stage rule, which keeps them infinite;
tail sums over the unlisted part are bounded rigorously.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

from ..errors import CifsdimError, PressureInfinite


def nonexistence_sequence(n_max: int) -> list[int]:
    """a_0 = 2, a_n = (2 a_{n-1})^n."""
    a = [2]
    for n in range(1, n_max + 1):
        a.append((2 * a[-1]) ** n)
    return a


def _log_next_stage(log_a: float, n: int) -> float:
    return n * (math.log(2.0) + log_a)


@dataclass(frozen=True)
class DigitSet:
    explicit: tuple | None = None
    bands: tuple = ()          # inclusive (lo, hi) ranges of base integers k
    squares: bool = False      # digits are k**2 rather than k
    cut: int = 1               # keep digits >= cut
    stage_rule: str | None = None  # "nonexistence": bands continue as [a_n, 2 a_n]
    description: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.explicit is not None:
            ex = tuple(sorted(set(int(b) for b in self.explicit if b >= self.cut)))
            if not ex or ex[0] < 1:
                raise CifsdimError("improper digit set")
            object.__setattr__(self, "explicit", ex)
        elif not self.bands:
            raise CifsdimError("improper digit set")

    @classmethod
    def of(cls, digits, description: str = "") -> "DigitSet":
        return cls(explicit=tuple(digits), description=description or f"explicit {sorted(digits)}")

    @property
    def is_finite(self) -> bool:
        return self.explicit is not None or self.stage_rule is None

    def _digit(self, k: int) -> int:
        return k * k if self.squares else k

    def _band_ranges(self, B: int | None):
        """Listed bands only, as sorted disjoint base ranges, restricted to digits <= B."""
        merged = []
        for lo, hi in sorted(self.bands):
            if merged and lo <= merged[-1][1] + 1:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        out = []
        for lo, hi in merged:
            lo = max(lo, self._min_base())
            if B is not None:
                hi = min(hi, self._max_base(B))
            if lo <= hi:
                out.append((lo, hi))
        return out

    def _min_base(self) -> int:
        if not self.squares:
            return self.cut
        k = math.isqrt(self.cut)
        return k if k * k >= self.cut else k + 1

    def _max_base(self, B: int) -> int:
        return math.isqrt(B) if self.squares else B

    def digits(self, B: int | None = None) -> Iterator[int]:
        """Digits in increasing order; listed bands only, capped at B when given."""
        if self.explicit is not None:
            for b in self.explicit:
                if B is None or b <= B:
                    yield b
            return
        for lo, hi in self._band_ranges(B):
            for k in range(lo, hi + 1):
                yield self._digit(k)

    def count(self, B: int | None = None) -> int:
        if self.explicit is not None:
            return sum(1 for _ in self.digits(B))
        return sum(hi - lo + 1 for lo, hi in self._band_ranges(B))

    def __contains__(self, b: int) -> bool:
        if self.explicit is not None:
            return b in self.explicit
        if b < self.cut:
            return False
        if self.squares:
            k = math.isqrt(b)
            if k * k != b:
                return False
        else:
            k = b
        if any(lo <= k <= hi for lo, hi in self.bands):
            return True
        if self.stage_rule == "nonexistence":
            a = self.meta.get("a", [])
            n, val = len(a) - 1, a[-1] if a else 2
            while val <= k:
                n += 1
                val = (2 * val) ** n
                if val <= k <= 2 * val:
                    return True
        return False

    def max_listed(self) -> int:
        if self.explicit is not None:
            return self.explicit[-1]
        return self._digit(max(hi for _, hi in self.bands))

    def default_cutoff(self, budget: int = 5000) -> int:
        """Largest listed band end such that at most ``budget`` digits are kept."""
        if self.explicit is not None and len(self.explicit) <= budget:
            return self.explicit[-1]
        if self.explicit is not None:
            return self.explicit[budget - 1]
        total, best = 0, None
        for lo, hi in self._band_ranges(None):
            total += hi - lo + 1
            if total > budget:
                break
            best = self._digit(hi)
        if best is None:
            lo, _ = self._band_ranges(None)[0]
            best = self._digit(lo + budget - 1)
        return best

    def tail_power_sum(self, B: int, p: float) -> float:
        """Certified upper bound for the sum of b**-p over digits b > B.

        Uses sum_{k=k0}^{k1} k^-q <= k0^-q + integral_{k0}^{k1} k^-q dk on each
        band (q = 2p for squared digits), and for bands generated by the stage
        rule a bound that is summed until the remaining terms are negligible
        and then closed with a doubling bound.
        """
        if self.explicit is not None:
            return math.fsum(b ** -p for b in self.explicit if b > B)
        q = 2.0 * p if self.squares else p
        if q <= 0:
            return math.inf
        total = 0.0
        k_floor = max(self._min_base(), self._max_base(B) + 1) if B is not None else self._min_base()
        for lo, hi in self._band_ranges(None):
            lo = max(lo, k_floor)
            if lo > hi:
                continue
            total += _power_run_bound(lo, hi, q)
        if self.stage_rule == "nonexistence":
            total += self._rule_tail(q, k_floor)
        return total

    def tail_power_sum_lower(self, B: int, p: float, shift: int = 0) -> float:
        """Lower bound for the sum of (b + shift)**-p over listed digits b > B (shift in {0, 1, 2})."""
        if self.explicit is not None:
            return math.fsum((b + shift) ** -p for b in self.explicit if b > B)
        total = 0.0
        k_floor = max(self._min_base(), self._max_base(B) + 1)
        for lo, hi in self._band_ranges(None):
            lo = max(lo, k_floor)
            if lo > hi:
                continue
            if self.squares:
                # k^2 + shift <= (k + 1)^2 for k >= 1
                total += _power_run_lower(lo + 1, hi + 1, 2.0 * p)
            else:
                total += _power_run_lower(lo + shift, hi + shift, p)
        return total

    def _rule_tail(self, q: float, k_floor: int) -> float:
        if q <= 1.0:
            return math.inf
        a = self.meta["a"]
        n = len(a) - 1
        log_a = math.log(a[-1])
        log_floor = math.log(k_floor)
        acc = 0.0
        for _ in range(200):
            n += 1
            log_a = _log_next_stage(log_a, n)
            if log_a + math.log(2.0) < log_floor:
                continue
            # band [a_n, 2 a_n]: a_n + 1 terms, each at most max(a_n, k_floor)^-q
            log_t = log_a + math.log1p(math.exp(-log_a)) - q * max(log_a, log_floor)
            if log_t < -700.0 and log_a >= log_floor:
                # log a_n at least doubles per stage, so the rest is smaller still
                return acc + 2.0 * math.exp(max(log_t, -745.0))
            acc += math.exp(log_t)
        return math.inf

    def to_json(self) -> dict:
        if self.explicit is not None:
            return {"digits": list(self.explicit)}
        out = {"bands": [list(b) for b in self.bands], "squares": self.squares, "cut": self.cut}
        if self.stage_rule:
            out["stage_rule"] = self.stage_rule
            out["stages"] = len(self.meta["a"]) - 1
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "DigitSet":
        if "digits" in obj:
            return cls.of(obj["digits"])
        if obj.get("stage_rule") == "nonexistence":
            from_stages = nonexistence_bands(int(obj["stages"]))
            return cls(bands=from_stages, squares=True, cut=int(obj.get("cut", 1)),
                       stage_rule="nonexistence", description="nonexistence digit set",
                       meta={"a": nonexistence_sequence(int(obj["stages"]))})
        return cls(bands=tuple(tuple(b) for b in obj["bands"]), squares=bool(obj.get("squares", False)),
                   cut=int(obj.get("cut", 1)))


def nonexistence_bands(n_max: int) -> tuple:
    return tuple((a, 2 * a) for a in nonexistence_sequence(n_max))


def _power_run_bound(k0: int, k1: int, q: float) -> float:
    """Upper bound for sum_{k=k0}^{k1} k^-q, q > 0."""
    if k1 - k0 < 64:
        return math.fsum(float(k) ** -q for k in range(k0, k1 + 1))
    head = math.fsum(float(k) ** -q for k in range(k0, k0 + 32))
    a = float(k0 + 31)
    b = float(k1)
    if abs(q - 1.0) < 1e-15:
        integral = math.log(b / a)
    else:
        integral = (a ** (1.0 - q) - b ** (1.0 - q)) / (q - 1.0)
    return head + integral


def _power_run_lower(k0: int, k1: int, q: float) -> float:
    """Lower bound for sum_{k=k0}^{k1} k^-q, q > 0."""
    if k1 - k0 < 64:
        return math.fsum(float(k) ** -q for k in range(k0, k1 + 1))
    head = math.fsum(float(k) ** -q for k in range(k0, k0 + 32))
    a = float(k0 + 32)
    b = float(k1 + 1)
    if abs(q - 1.0) < 1e-15:
        integral = math.log(b / a)
    else:
        integral = (a ** (1.0 - q) - b ** (1.0 - q)) / (q - 1.0)
    return head + integral


def check_finite_pressure(tail: float, t: float) -> float:
    if math.isinf(tail) or math.isnan(tail):
        raise PressureInfinite(t)
    return tail
