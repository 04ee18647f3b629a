"""Decreasing weights w, their primitives W, mass partitions and W-ratio asymptotics."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr
from .orlicz import ConditionVerdict, ValidationError


class NonIntegrable(ValidationError):
    """w is not integrable at 0."""


class MassExceedsBudget(ValueError):
    def __init__(self, index: int, total: float, budget: float):
        self.index, self.total, self.budget = index, total, budget
        super().__init__(f"masses exceed the W budget at index {index}: {total!r} > {budget!r}")


def simpson(f, a: float, b: float, rtol: float = 1e-10, depth: int = 50) -> float:
    """Adaptive Simpson quadrature of f on [a, b]."""
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)
    return _simpson(f, a, b, fa, fm, fb, whole, rtol, depth)


def _simpson(f, a, b, fa, fm, fb, whole, rtol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6 * (fa + 4 * flm + fm)
    right = (b - m) / 6 * (fm + 4 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15 * rtol * abs(left + right):
        return left + right + delta / 15
    return (_simpson(f, a, m, fa, flm, fm, left, rtol, depth - 1)
            + _simpson(f, m, b, fm, frm, fb, right, rtol, depth - 1))


def log_simpson(w, a: float, b: float, rtol: float = 1e-10) -> float:
    """Integral of w over [a, b] (a > 0) after the substitution t = e^s."""
    if b <= a:
        return 0.0
    return simpson(lambda s: w(math.exp(s)) * math.exp(s), math.log(a), math.log(b), rtol)


class WeightFn:
    family = "abstract"

    def __call__(self, t: float) -> float:
        raise NotImplementedError

    def big_w(self, t: float) -> float:
        raise NotImplementedError

    def inverse(self, y: float) -> float:
        """Smallest t with W(t) >= y, by bisection on W."""
        if y <= 0:
            return 0.0
        lo, hi = 0.0, 1.0
        while self.big_w(hi) < y:
            lo, hi = hi, hi * 2
            if hi > 1e300:
                raise MassExceedsBudget(0, y, self.big_w(hi))
        if lo == 0.0:
            lo = hi
            while self.big_w(lo) >= y and lo > 1e-300:
                lo /= 2
            if self.big_w(lo) >= y:
                return lo
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if self.big_w(mid) >= y:
                hi = mid
            else:
                lo = mid
        return hi

    def mass(self, a: float, b: float) -> float:
        """W(b) - W(a)."""
        return self.big_w(b) - self.big_w(a)

    def big_ws(self, t) -> np.ndarray:
        return np.array([self.big_w(float(x)) for x in np.atleast_1d(t)])

    def to_json(self) -> dict:
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, WeightFn) and self.to_json() == other.to_json()

    def __hash__(self):
        return hash(json.dumps(self.to_json(), sort_keys=True))

    def __repr__(self):
        return f"WeightFn({self.to_json()})"


class Constant(WeightFn):
    family = "constant"

    def __init__(self, c: float = 1.0):
        if not c > 0 or not math.isfinite(c):
            raise ValidationError("constant weight needs c > 0")
        self.c = float(c)

    def __call__(self, t):
        return self.c

    def big_w(self, t):
        return self.c * t if t > 0 else 0.0

    def inverse(self, y):
        return y / self.c if y > 0 else 0.0

    def mass(self, a, b):
        return self.c * (b - a)

    def to_json(self):
        return {"family": "constant", "c": self.c}


class PowerWeight(WeightFn):
    """w(t) = t^(alpha-1), W(t) = t^alpha / alpha."""

    family = "power"

    def __init__(self, alpha: float):
        if not 0 < alpha <= 1:
            raise ValidationError("power weight needs alpha in (0, 1]")
        self.alpha = float(alpha)

    def __call__(self, t):
        return t ** (self.alpha - 1) if t > 0 else math.inf

    def big_w(self, t):
        if t <= 0:
            return 0.0
        if math.isinf(t):
            return math.inf
        return t ** self.alpha / self.alpha

    def inverse(self, y):
        return (self.alpha * y) ** (1 / self.alpha) if y > 0 else 0.0

    def to_json(self):
        return {"family": "power", "alpha": self.alpha}


class PiecewiseDecreasing(WeightFn):
    """w = values[i] on [breaks[i-1], breaks[i]), with breaks[-1] = 0 and breaks[len] = inf."""

    family = "pcd"

    def __init__(self, breaks: Sequence[float], values: Sequence[float]):
        breaks, values = [float(b) for b in breaks], [float(v) for v in values]
        if len(values) != len(breaks) + 1:
            raise ValidationError("pcd weight needs len(values) == len(breaks) + 1")
        if any(b <= a for a, b in zip(breaks, breaks[1:])) or (breaks and breaks[0] <= 0):
            raise ValidationError("pcd breaks must be positive and increasing")
        if any(v <= 0 for v in values) or any(b > a for a, b in zip(values, values[1:])):
            raise ValidationError("pcd values must be positive and nonincreasing")
        self.breaks, self.values = breaks, values
        acc = [0.0]
        edges = [0.0] + breaks
        for i, b in enumerate(breaks):
            acc.append(acc[-1] + values[i] * (b - edges[i]))
        self._edges, self._acc = edges, acc

    def _piece(self, t):
        lo, hi = 0, len(self.breaks)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.breaks[mid] <= t:
                lo = mid + 1
            else:
                hi = mid
        return lo

    def __call__(self, t):
        return self.values[self._piece(t)]

    def big_w(self, t):
        if t <= 0:
            return 0.0
        i = self._piece(t)
        return self._acc[i] + self.values[i] * (t - self._edges[i])

    def inverse(self, y):
        if y <= 0:
            return 0.0
        i = 0
        while i < len(self.breaks) and self._acc[i + 1] < y:
            i += 1
        return self._edges[i] + (y - self._acc[i]) / self.values[i]

    def to_json(self):
        return {"family": "pcd", "breaks": self.breaks, "values": self.values}


class ParsedWeight(WeightFn):
    """User expression in t; W is cached on 1024 log-spaced nodes and refined by quadrature."""

    family = "expr"
    NODES = np.logspace(-12, 12, 1024)

    def __init__(self, src: str):
        self.src = src
        self.ast = expr.compile_expr(src, "t")
        nodes = self.NODES
        cum = [self._near_zero(float(nodes[0]))]
        for a, b in zip(nodes[:-1], nodes[1:]):
            cum.append(cum[-1] + log_simpson(self, float(a), float(b)))
        self._cum = np.array(cum)

    def __call__(self, t):
        return expr.eval_ast(self.ast, ("t", t))

    def _near_zero(self, t: float) -> float:
        """W(t) as a sum of dyadic shells [t/2^(j+1), t/2^j) plus a geometric tail."""
        total, prev, prev_ratio = 0.0, None, None
        hi = t
        for j in range(1000):
            lo = hi / 2
            shell = log_simpson(self, lo, hi)
            total += shell
            if prev:
                ratio = shell / prev
                if j > 2 and ratio >= 1 - 1e-6:
                    raise NonIntegrable(f"weight {self.src!r} is not integrable at 0")
                if j > 8 and prev_ratio is not None and abs(ratio - prev_ratio) <= 1e-9 * ratio and ratio < 1:
                    return total + shell * ratio / (1 - ratio)
                if shell <= 1e-17 * total:
                    return total
                prev_ratio = ratio
            prev, hi = shell, lo
        raise NonIntegrable(f"weight {self.src!r}: no convergence near 0")

    def big_w(self, t):
        if t <= 0:
            return 0.0
        if math.isinf(t):
            return math.inf
        nodes = self.NODES
        if t < nodes[0]:
            return self._near_zero(t)
        i = int(np.searchsorted(nodes, t, side="right")) - 1
        return float(self._cum[i]) + log_simpson(self, float(nodes[i]), t)

    def to_json(self):
        return {"family": "expr", "src": self.src}


def from_json(obj) -> WeightFn:
    if isinstance(obj, str):
        obj = json.loads(obj)
    fam = obj.get("family")
    if fam == "constant":
        return Constant(obj.get("c", 1.0))
    if fam == "power":
        return PowerWeight(obj["alpha"])
    if fam == "pcd":
        return PiecewiseDecreasing(obj["breaks"], obj["values"])
    if fam == "expr":
        return validated(ParsedWeight(obj["src"]))
    raise ValidationError(f"unknown weight family {fam!r}")


def big_w(w: WeightFn, t: float) -> float:
    if t < 0:
        raise ValueError("t must be nonnegative")
    return w.big_w(t)


@dataclass
class WeightReport:
    ok: bool
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


def validate(w: WeightFn, n: int = 256) -> WeightReport:
    t = np.logspace(-8, 8, n)
    viol, warn = [], []
    try:
        vals = [w(float(x)) for x in t]
    except expr.DomainError as e:
        return WeightReport(False, [{"kind": "domain", "detail": str(e)}])
    for x, v in zip(t, vals):
        if not v > 0:
            viol.append({"kind": "positivity", "t": float(x)})
            break
    for i in range(n - 1):
        if vals[i + 1] > vals[i] * (1 + 1e-12):
            viol.append({"kind": "monotonicity", "t": float(t[i + 1])})
            break
    big = [w.big_w(10.0 ** j) for j in range(8, 13)]
    if big[-1] - big[-2] <= 1e-9 * big[-1]:
        warn.append({"kind": "W(inf) may be finite", "W": big[-1]})
    return WeightReport(not viol, viol, warn)


def validated(w: WeightFn) -> WeightFn:
    rep = validate(w)
    if not rep.ok:
        raise ValidationError(f"invalid weight {w.to_json()}: {rep.violations}")
    return w


def partition_by_mass(w: WeightFn, t_top: float, masses: Sequence[float],
                      direction: str = "Downward") -> list[float]:
    """Breakpoints whose consecutive W-increments equal the given masses.

    Downward: [t_top, t_1, ...] decreasing; Upward: [t_top, t_1, ...] increasing from t_top.
    """
    masses = [float(m) for m in masses]
    if any(not m > 0 for m in masses):
        raise ValueError("masses must be positive")
    base = w.big_w(t_top)
    if direction.lower() == "downward":
        running = 0.0
        for i, m in enumerate(masses):
            running += m
            if running > base * (1 + 1e-12):
                raise MassExceedsBudget(i, running, base)
        tails = np.cumsum(masses[::-1])[::-1].tolist() + [0.0]
        left = base - tails[0]
        if left <= 1e-12 * base:
            left = 0.0
        return [t_top] + [w.inverse(left + tails[k + 1]) if left + tails[k + 1] > 0 else 0.0
                          for k in range(len(masses))]
    if direction.lower() == "upward":
        out, acc = [t_top], base
        for m in masses:
            acc += m
            out.append(w.inverse(acc))
        return out
    raise ValueError("direction must be Downward or Upward")


@dataclass
class RatioVerdict:
    kind: str  # LimitZero | BoundedBelow | Inconclusive
    samples: list
    c: float | None = None

    def to_json(self):
        return {"kind": self.kind, "c": self.c, "samples": self.samples}


RATIO_J = 60


def ratio_samples(w1: WeightFn, w2: WeightFn, j_max: int = RATIO_J) -> list:
    return [(2.0 ** -j, w2.big_w(2.0 ** -j) / w1.big_w(2.0 ** -j)) for j in range(j_max + 1)]


def ratio_limit(w1: WeightFn, w2: WeightFn) -> RatioVerdict:
    """Classify W2(t)/W1(t) as t -> 0 from samples at t = 2^-j."""
    samples = ratio_samples(w1, w2)
    r = [x for _, x in samples]
    tail = r[RATIO_J - 33:]  # last ten decades
    if r[-1] < 1e-3 and all(b < a for a, b in zip(tail, tail[1:])):
        return RatioVerdict("LimitZero", samples, min(r))
    if all(b >= a * (1 - 1e-12) for a, b in zip(tail, tail[1:])):
        return RatioVerdict("BoundedBelow", samples, min(r))
    return RatioVerdict("Inconclusive", samples, min(r))


def dominance_check(w1: WeightFn, w2: WeightFn, t_max: float = 1.0) -> ConditionVerdict:
    """Grid sup of W2/W1 on (0, t_max]; both ends of the line when t_max is infinite."""
    if math.isinf(t_max):
        js = np.arange(-800, 801)
        t = 2.0 ** (js / 4)
        inner = np.abs(js) <= 400
        desc = "t = 2^(j/4), j = -800..800"
    else:
        js = np.arange(0, 801)
        t = t_max * 2.0 ** (-js / 4)
        inner = js <= 400
        desc = f"t = {t_max:g} * 2^(-j/4), j = 0..800"
    r = np.array([w2.big_w(float(x)) / w1.big_w(float(x)) for x in t])
    full, part = float(r.max()), float(r[inner].max())
    if np.isfinite(full) and abs(full - part) <= 1e-3 * part:
        return ConditionVerdict("Holds", {"K": full * (1 + 1e-6), "K_hat": full}, [], desc)
    return ConditionVerdict("Fails", {}, [float(t[int(np.argmax(r))])], desc,
                            ["W2/W1 keeps growing at the edge of the grid"])
