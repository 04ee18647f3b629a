"""Interval sets, nonnegative step functions and their decreasing rearrangements."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels


class MeasureError(ValueError):
    """Invalid interval, set or step function."""


@dataclass(frozen=True, order=True)
class Interval:
    """Half-open interval [lo, hi); hi may be +inf only for domain-sized sets."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi) or lo < 0 or not math.isfinite(lo) or not hi > lo:
            raise MeasureError(f"bad interval [{self.lo}, {self.hi})")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def length(self) -> float:
        return self.hi - self.lo


class IntervalSet:
    """Finite union of disjoint half-open intervals, sorted, touching pieces merged."""

    __slots__ = ("intervals", "measure")

    def __init__(self, intervals: Iterable = ()):
        items = sorted(iv if isinstance(iv, Interval) else Interval(*iv) for iv in intervals)
        merged: list[Interval] = []
        for iv in items:
            if merged and iv.lo <= merged[-1].hi:
                if iv.hi > merged[-1].hi:
                    merged[-1] = Interval(merged[-1].lo, iv.hi)
            else:
                merged.append(iv)
        self.intervals = tuple(merged)
        self.measure = math.fsum(iv.length for iv in merged)

    def __eq__(self, other):
        return isinstance(other, IntervalSet) and self.intervals == other.intervals

    def __hash__(self):
        return hash(self.intervals)

    def __repr__(self):
        return "IntervalSet(%s)" % [(iv.lo, iv.hi) for iv in self.intervals]

    def __bool__(self):
        return bool(self.intervals)

    def __contains__(self, t: float) -> bool:
        return any(iv.lo <= t < iv.hi for iv in self.intervals)

    @property
    def sup(self) -> float:
        return self.intervals[-1].hi if self.intervals else 0.0

    def pairs(self) -> list[list[float]]:
        return [[iv.lo, iv.hi] for iv in self.intervals]

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals)

    def disjoint_from(self, other: "IntervalSet") -> bool:
        for a in self.intervals:
            for b in other.intervals:
                if a.lo < b.hi and b.lo < a.hi:
                    return False
        return True

    def slice(self, offset: float, length: float) -> "IntervalSet":
        """Sub-set covering measure positions [offset, offset+length), left to right."""
        out, pos = [], 0.0
        end = offset + length
        for iv in self.intervals:
            lo_pos, hi_pos = pos, pos + iv.length
            a, b = max(offset, lo_pos), min(end, hi_pos)
            if b > a:
                out.append((iv.lo + (a - lo_pos), min(iv.lo + (b - lo_pos), iv.hi)))
            pos = hi_pos
            if pos >= end:
                break
        if end > pos * (1 + 1e-12) + 1e-300 and not (math.isinf(end) and math.isinf(pos)):
            raise MeasureError("slice exceeds the set measure")
        return IntervalSet(iv for iv in out if iv[1] > iv[0])

    def cuts(self, lengths: Sequence[float], offset: float = 0.0) -> list["IntervalSet"]:
        """Consecutive slices with the given lengths, starting at measure position offset."""
        pos, out = offset, []
        for ln in lengths:
            out.append(self.slice(pos, ln))
            pos += ln
        return out


class StepFunction:
    """Finite nonnegative simple function sum a_i chi_{E_i} with finite-measure supports.

    Pieces with equal values are merged; zero values are dropped.
    """

    __slots__ = ("pieces", "_flat")

    def __init__(self, pieces: Iterable = ()):
        groups: dict[float, list] = {}
        for value, support in pieces:
            value = float(value)
            if math.isnan(value) or value < 0 or math.isinf(value):
                raise MeasureError(f"step values must be finite and nonnegative, got {value}")
            if not isinstance(support, IntervalSet):
                support = IntervalSet(support)
            if value == 0 or not support:
                continue
            groups.setdefault(value, []).extend(support.intervals)
        merged = []
        for value in sorted(groups, reverse=True):
            s = IntervalSet(groups[value])
            if not math.isfinite(s.measure):
                raise MeasureError("step function supports must have finite measure")
            merged.append((value, s))
        self.pieces = tuple(merged)
        flat = sorted((iv.lo, iv.hi, v) for v, s in self.pieces for iv in s.intervals)
        for a, b in zip(flat, flat[1:]):
            if b[0] < a[1]:
                raise MeasureError("step function supports overlap")
        self._flat = flat

    def __eq__(self, other):
        return isinstance(other, StepFunction) and self.pieces == other.pieces

    def __hash__(self):
        return hash(self.pieces)

    def __repr__(self):
        return "StepFunction(%s)" % [(v, s.pairs()) for v, s in self.pieces]

    @property
    def values(self) -> np.ndarray:
        return np.array([v for v, _ in self.pieces], dtype=float)

    @property
    def measures(self) -> np.ndarray:
        return np.array([s.measure for _, s in self.pieces], dtype=float)

    def is_zero(self) -> bool:
        return not self.pieces

    def max_value(self) -> float:
        return self.pieces[0][0] if self.pieces else 0.0

    def support(self) -> IntervalSet:
        return IntervalSet(iv for _, s in self.pieces for iv in s.intervals)

    @property
    def support_measure(self) -> float:
        return math.fsum(s.measure for _, s in self.pieces)

    @property
    def sup(self) -> float:
        return self._flat[-1][1] if self._flat else 0.0

    def __call__(self, t: float) -> float:
        i = bisect.bisect_right(self._flat, (t, math.inf, math.inf)) - 1
        if i >= 0 and self._flat[i][0] <= t < self._flat[i][1]:
            return self._flat[i][2]
        return 0.0

    def scale(self, c: float) -> "StepFunction":
        if c < 0:
            raise MeasureError("scale must be nonnegative")
        return StepFunction((c * v, s) for v, s in self.pieces)

    def breakpoints(self) -> list[float]:
        return sorted({x for lo, hi, _ in self._flat for x in (lo, hi)})

    def add(self, other: "StepFunction") -> "StepFunction":
        """Pointwise sum on the common refinement of both breakpoint sets."""
        pts = sorted(set(self.breakpoints()) | set(other.breakpoints()))
        pieces = []
        for a, b in zip(pts, pts[1:]):
            mid = 0.5 * (a + b)
            v = self(mid) + other(mid)
            if v > 0:
                pieces.append((v, [(a, b)]))
        return StepFunction(pieces)

    def dominated_by(self, other: "StepFunction") -> bool:
        """True if self <= other pointwise."""
        pts = sorted(set(self.breakpoints()) | set(other.breakpoints()))
        return all(self(0.5 * (a + b)) <= other(0.5 * (a + b)) for a, b in zip(pts, pts[1:]))

    def to_json(self) -> dict:
        return {"pieces": [{"value": v, "intervals": s.pairs()} for v, s in self.pieces]}

    @classmethod
    def from_json(cls, obj: dict) -> "StepFunction":
        return cls((p["value"], [tuple(iv) for iv in p["intervals"]]) for p in obj.get("pieces", []))

    @classmethod
    def indicator(cls, lo: float, hi: float, value: float = 1.0) -> "StepFunction":
        return cls([(value, [(lo, hi)])])


@dataclass(frozen=True)
class DecreasingStep:
    """f* with value values[j] on [breakpoints[j], breakpoints[j+1])."""

    values: tuple
    breakpoints: tuple

    def as_step(self) -> StepFunction:
        return StepFunction(
            (v, [(a, b)]) for v, a, b in zip(self.values, self.breakpoints, self.breakpoints[1:])
        )

    @property
    def total(self) -> float:
        return self.breakpoints[-1]

    def to_json(self) -> dict:
        return {"values": list(self.values), "breakpoints": list(self.breakpoints)}


def distribution(f: StepFunction, lam: float) -> float:
    """Measure of {|f| > lam}."""
    if lam < 0:
        raise MeasureError("lambda must be nonnegative")
    if f.is_zero():
        return 0.0
    return kernels.distribution(f.values, f.measures, lam)


def rearrange(f: StepFunction) -> DecreasingStep:
    vals, bps = kernels.rearrange(f.values, f.measures)
    return DecreasingStep(tuple(float(v) for v in vals), tuple(float(b) for b in bps))


def equimeasurable_check(f: StepFunction, g: StepFunction) -> bool:
    """Compare distribution functions at 0 and at every value of either function."""
    levels = {0.0} | {v for v, _ in f.pieces} | {v for v, _ in g.pieces}
    return all(distribution(f, lam) == distribution(g, lam) for lam in levels)


def dilate(f: StepFunction, a: float, b: float) -> StepFunction:
    """(T_{a,b} f)(t) = f((t-a)/b) on (a, a+b]."""
    if not (0 <= a < 1) or not (0 < b <= 1 - a):
        raise MeasureError("need 0 <= a < 1 and 0 < b <= 1 - a")
    if f.sup > 1:
        raise MeasureError("dilate needs support inside [0, 1]")
    return StepFunction(
        (v, [(a + b * iv.lo, a + b * iv.hi) for iv in s.intervals]) for v, s in f.pieces
    )


def sample_step(rng: np.random.Generator, length: float = 1.0, max_pieces: int = 8,
                vmin: float = 1e-3, vmax: float = 1e3) -> StepFunction:
    """Random step function: 1..max_pieces log-uniform values, disjoint supports inside [0, length]."""
    n = int(rng.integers(1, max_pieces + 1))
    n_iv = n + int(rng.integers(0, n + 1))
    pts = np.sort(rng.uniform(0.0, length, size=2 * n_iv))
    ivs = [(float(pts[2 * i]), float(pts[2 * i + 1])) for i in range(n_iv) if pts[2 * i + 1] > pts[2 * i]]
    owner = list(range(n)) + [int(x) for x in rng.integers(0, n, size=max(0, len(ivs) - n))]
    vals = np.exp(rng.uniform(math.log(vmin), math.log(vmax), size=n))
    pieces: dict[int, list] = {}
    for iv, k in zip(ivs, owner):
        pieces.setdefault(k, []).append(iv)
    return StepFunction((float(vals[k]), p) for k, p in pieces.items())
