"""Orlicz functions, grid validation, growth/order condition checks and inequality solvers."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import expr, kernels

LOG_SWITCH = 700.0
LN2 = math.log(2.0)


class ValidationError(ValueError):
    """An Orlicz function or weight failed its validity gates."""


class SearchExhausted(ArithmeticError):
    """No point in the searched range satisfies the requested inequality."""

    def __init__(self, message, k=None):
        self.k = k
        super().__init__(message)


# --------------------------------------------------------------------------- families


class OrliczFn:
    family = "abstract"
    kernel: tuple | None = None

    def __call__(self, u: float) -> float:
        u = float(u)
        if u <= 0:
            return 0.0
        return self._eval(u)

    def values(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            out = self._values(np.where(u > 0, u, 1.0))
        return np.where(u > 0, out, 0.0)

    def log(self, u: float) -> float:
        """log phi(u), finite beyond the overflow threshold for closed-form families."""
        if u <= 0:
            return -math.inf
        return float(self.logs(np.array([u]))[0])

    def logs(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return self._logs(u)

    # defaults for families without closed-form logs
    def _values(self, u):
        return np.array([self._eval(float(x)) for x in u])

    def _logs(self, u):
        v = self.values(u)
        with np.errstate(divide="ignore"):
            return np.log(v)

    def to_json(self) -> dict:
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, OrliczFn) and self.to_json() == other.to_json()

    def __hash__(self):
        return hash(json.dumps(self.to_json(), sort_keys=True))

    def __repr__(self):
        return f"OrliczFn({self.to_json()})"


class Power(OrliczFn):
    family = "power"

    def __init__(self, p: float):
        if not p >= 1:
            raise ValidationError(f"power exponent must be >= 1, got {p}")
        self.p = float(p)
        self.kernel = (kernels.POWER, self.p, 0.0)

    def _eval(self, u):
        try:
            return u ** self.p
        except OverflowError:
            return math.inf

    def _values(self, u):
        return np.power(u, self.p)

    def _logs(self, u):
        return self.p * np.log(u)

    def to_json(self):
        return {"family": "power", "p": self.p}


class PowerLog(OrliczFn):
    family = "powerlog"

    def __init__(self, p: float, q: float):
        if not p >= 1 or not q >= 0:
            raise ValidationError("powerlog needs p >= 1 and q >= 0")
        self.p, self.q = float(p), float(q)
        self.kernel = (kernels.POWERLOG, self.p, self.q)

    def _eval(self, u):
        try:
            base = u ** self.p
        except OverflowError:
            return math.inf
        return base * math.log1p(u) ** self.q if self.q else base

    def _values(self, u):
        return np.power(u, self.p) * np.power(np.log1p(u), self.q)

    def _logs(self, u):
        return self.p * np.log(u) + (self.q * np.log(np.log1p(u)) if self.q else 0.0)

    def to_json(self):
        return {"family": "powerlog", "p": self.p, "q": self.q}


class ExpMinusOne(OrliczFn):
    family = "expm1"
    kernel = (kernels.EXPM1, 0.0, 0.0)

    def _eval(self, u):
        try:
            return math.expm1(u)
        except OverflowError:
            return math.inf

    def _values(self, u):
        return np.expm1(u)

    def _logs(self, u):
        small = np.minimum(u, LOG_SWITCH)
        return np.where(u > LOG_SWITCH, u + np.log1p(-np.exp(-np.maximum(u, LOG_SWITCH))),
                        np.log(np.expm1(small)))

    def to_json(self):
        return {"family": "expm1"}


class ConvexSpline(OrliczFn):
    """Piecewise linear phi with phi(0)=0 and slope slopes[i] on [knots[i], knots[i+1])."""

    family = "spline"

    def __init__(self, knots: Sequence[float], slopes: Sequence[float]):
        knots, slopes = [float(x) for x in knots], [float(s) for s in slopes]
        if not knots or knots[0] != 0 or len(knots) != len(slopes):
            raise ValidationError("spline needs knots starting at 0 and one slope per knot")
        if any(b <= a for a, b in zip(knots, knots[1:])) or any(s <= 0 for s in slopes):
            raise ValidationError("spline knots must increase and slopes must be positive")
        self.knots, self.slopes = knots, slopes
        acc = [0.0]
        for i in range(1, len(knots)):
            acc.append(acc[-1] + slopes[i - 1] * (knots[i] - knots[i - 1]))
        self._acc = np.array(acc)

    def _values(self, u):
        k = np.array(self.knots)
        i = np.searchsorted(k, u, side="right") - 1
        return self._acc[i] + np.array(self.slopes)[i] * (u - k[i])

    def _eval(self, u):
        return float(self._values(np.array([u]))[0])

    def to_json(self):
        return {"family": "spline", "knots": self.knots, "slopes": self.slopes}


class Parsed(OrliczFn):
    family = "expr"

    def __init__(self, src: str):
        self.src = src
        self.ast = expr.compile_expr(src, "u")

    def raw(self, u: float) -> float:
        """Expression value without the phi(0)=0 short-circuit."""
        return expr.eval_ast(self.ast, ("u", u))

    def _eval(self, u):
        return self.raw(u)

    def to_json(self):
        return {"family": "expr", "src": self.src}


def from_json(obj) -> OrliczFn:
    if isinstance(obj, str):
        obj = json.loads(obj)
    fam = obj.get("family")
    if fam == "power":
        return Power(obj["p"])
    if fam == "powerlog":
        return PowerLog(obj["p"], obj.get("q", 0.0))
    if fam == "expm1":
        return ExpMinusOne()
    if fam == "spline":
        return ConvexSpline(obj["knots"], obj["slopes"])
    if fam == "expr":
        return Parsed(obj["src"])
    raise ValidationError(f"unknown Orlicz family {fam!r}")


@dataclass
class EvalResult:
    value: float
    overflow: bool


def evaluate(phi: OrliczFn, u: float) -> EvalResult:
    """phi(u) with an overflow flag; the value is +inf when the flag is set."""
    if u < 0 or not math.isfinite(u):
        raise ValueError("u must be finite and nonnegative")
    v = phi(u)
    return EvalResult(v, math.isinf(v))


def inverse(phi: OrliczFn, y: float) -> float:
    """Smallest u with phi(u) >= y (bisection in log space)."""
    if y <= 0:
        return 0.0
    ly = math.log(y)
    lo, hi = 1.0, 1.0
    if phi.log(hi) >= ly:
        while phi.log(lo) >= ly:
            lo /= 2
            if lo < 1e-300:
                return lo
        hi = lo * 2
    else:
        while phi.log(hi) < ly:
            hi *= 2
            if hi > 1e300:
                raise SearchExhausted(f"phi never reaches {y}")
        lo = hi / 2
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if mid <= lo or mid >= hi:
            break
        if phi.log(mid) >= ly:
            hi = mid
        else:
            lo = mid
    return hi


# --------------------------------------------------------------------------- grids and validation


@dataclass(frozen=True)
class Grid:
    lo: float = 1e-8
    hi: float = 1e8
    n: int = 256

    def points(self) -> np.ndarray:
        return np.logspace(math.log10(self.lo), math.log10(self.hi), self.n)

    def refine(self) -> "Grid":
        """Double the density and extend one decade on each side."""
        return Grid(self.lo / 10, self.hi * 10, 2 * self.n + 2 * max(1, round(self.n / math.log10(self.hi / self.lo))))

    def describe(self) -> str:
        return f"{self.n} log-spaced points on [{self.lo:g}, {self.hi:g}]"


DEFAULT_GRID = Grid()


@dataclass
class ValidationReport:
    ok: bool
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def to_json(self):
        return {"ok": self.ok, "violations": self.violations, "warnings": self.warnings}


def validate(phi: OrliczFn, grid: Grid = DEFAULT_GRID) -> ValidationReport:
    if grid.n < 64 or grid.lo < 1e-8 * (1 - 1e-12) or grid.hi > 1e8 * (1 + 1e-12):
        raise ValueError("validation grid needs >= 64 points inside [1e-8, 1e8]")
    viol, warn = [], []
    zero = phi.raw(0.0) if isinstance(phi, Parsed) else phi(0.0)
    if zero != 0:
        viol.append({"kind": "zero", "u": 0.0, "value": zero})
    u = grid.points()
    try:
        v = phi.values(u)
    except expr.DomainError as e:
        return ValidationReport(False, viol + [{"kind": "domain", "u": None, "detail": str(e)}])
    fin = np.isfinite(v)
    if not fin.all():
        warn.append({"kind": "overflow", "u": float(u[~fin][0])})
    for i in range(len(u) - 1):
        if fin[i] and fin[i + 1] and not v[i + 1] > v[i]:
            viol.append({"kind": "monotonicity", "u": float(u[i + 1])})
    if (v[fin] <= 0).any():
        viol.append({"kind": "positivity", "u": float(u[fin][v[fin] <= 0][0])})
    stride = 1
    while stride < len(u):
        a, b = u[:-stride], u[stride:]
        va, vb = v[:-stride], v[stride:]
        mid = phi.values(0.5 * (a + b))
        ok = np.isfinite(va) & np.isfinite(vb) & np.isfinite(mid)
        scale = np.maximum(np.abs(va), np.abs(vb))
        bad = ok & (mid > 0.5 * (va + vb) + 1e-12 * scale)
        for i in np.nonzero(bad)[0][:5]:
            viol.append({"kind": "convexity", "u": [float(a[i]), float(b[i])]})
        stride *= 2
    v1 = phi(1.0)
    if fin[-1] and not v[-1] > 1e6 * v1:
        warn.append({"kind": "bounded", "u": float(u[-1])})
    return ValidationReport(not viol, viol, warn)


def require_valid(phi: OrliczFn) -> OrliczFn:
    if isinstance(phi, (Parsed, ConvexSpline)):
        rep = validate(phi)
        if not rep.ok:
            raise ValidationError(f"invalid Orlicz function {phi.to_json()}: {rep.violations[:3]}")
    return phi


# --------------------------------------------------------------------------- verdicts


@dataclass
class ConditionVerdict:
    status: str  # "Holds" | "Fails" | "Inconclusive"
    constants: dict = field(default_factory=dict)
    witness: list = field(default_factory=list)
    grid: str = ""
    notes: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.status == "Holds"

    def to_json(self):
        return {"status": self.status, "constants": self.constants, "witness": self.witness,
                "grid": self.grid, "notes": self.notes}


_REGIMES = {"zero": "Zero", "infinity": "Infinity", "global": "Global", "atinfinity": "AtInfinity"}


def _regime(name: str) -> str:
    key = name.replace("_", "").replace("-", "").lower()
    if key not in _REGIMES:
        raise ValueError(f"unknown regime {name!r}")
    return _REGIMES[key]


def _ratio(phi: OrliczFn, u: np.ndarray, l: float) -> np.ndarray:
    a, b = phi.values(l * u), phi.values(u)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        r = a / b
        lr = phi.logs(l * u) - phi.logs(u)
    use_log = ~(np.isfinite(a) & np.isfinite(b) & (b > 0))
    return np.where(use_log, np.exp(np.minimum(lr, 709.0)) * np.where(lr > 709.0, np.inf, 1.0), r)


def _restrict(grid: Grid, regime: str) -> np.ndarray:
    u = grid.points()
    if regime == "Zero":
        return np.append(u[u < 1.0], 1.0)
    if regime == "Infinity":
        return np.insert(u[u > 1.0], 0, 1.0)
    return u


def _sup_check(phi, regime, grid, l):
    desc = f"{grid.describe()}; regime {regime}"
    grids = [grid, grid.refine()]
    sups, last = [], None
    for g in grids:
        u = _restrict(g, regime)
        r = _ratio(phi, u, l)
        last = (u, r)
        if not np.isfinite(r).all() or (r > 1e6).any():
            big = np.nonzero(~np.isfinite(r) | (r > 1e6))[0]
            i0 = int(big[0]) if regime != "Zero" else int(big[-1])
            tail = r[i0:] if regime != "Zero" else r[: i0 + 1][::-1]
            ordered = tail[np.isfinite(tail)]
            if regime == "Global" or np.all(np.diff(ordered) >= -1e-12 * np.abs(ordered[:-1])):
                return ConditionVerdict("Fails", {"l": l}, [float(u[i0])],
                                        desc, [f"ratio phi({l}u)/phi(u) exceeds 1e6 and keeps growing"])
            return ConditionVerdict("Inconclusive", {"l": l}, [float(u[i0])], desc,
                                    ["ratio exceeds 1e6 but is not monotone"])
        sups.append(float(r.max()))
    if abs(sups[1] - sups[0]) <= 1e-3 * sups[0]:
        K = max(sups)
        u, r = last
        consts = {"K": K, "l": l}
        if regime == "Zero":
            consts["u0"] = 1.0
            consts["K_limit"] = float(r[0])
        elif regime == "Infinity":
            consts["u0"] = 1.0
        notes = ["Zero regime searched on [1e-8, 1] (u0 = 1)"] if regime == "Zero" else []
        return ConditionVerdict("Holds", consts, [], desc, notes)
    return ConditionVerdict("Inconclusive", {"l": l, "sups": sups}, [], desc, ["sup not stable under refinement"])


def delta2_check(phi: OrliczFn, regime: str = "Global", grid: Grid = DEFAULT_GRID) -> ConditionVerdict:
    """phi(2u) <= K phi(u) on the regime's part of the grid."""
    return _sup_check(phi, _regime(regime), grid, 2.0)


LK_CHOICES = (2.0, 1.5, 1.25, 1.1)


def delta2_lK_check(phi: OrliczFn, regime: str = "Global", grid: Grid = DEFAULT_GRID) -> ConditionVerdict:
    """phi(l u) <= K phi(u) for some l in LK_CHOICES; tries l = 2 first."""
    regime = _regime(regime)
    verdicts = [_sup_check(phi, regime, grid, l) for l in LK_CHOICES]
    if verdicts[0].holds:
        return verdicts[0]
    if all(v.status == "Fails" for v in verdicts):
        return ConditionVerdict("Fails", {"l_tried": list(LK_CHOICES)},
                                [w for v in verdicts for w in v.witness], verdicts[0].grid,
                                ["ratio unbounded for every tried l"])
    notes = ["a smaller l held while l = 2 did not"] if any(v.holds for v in verdicts) else []
    return ConditionVerdict("Inconclusive", {"l_tried": list(LK_CHOICES)}, [], verdicts[0].grid, notes)


# --------------------------------------------------------------------------- dyadic ladder for order conditions

LADDER = np.arange(-1000, 1001)
B_EXPONENTS = np.arange(-20, 21)
PERSIST = 64  # required clean stretch (in doublings) at the asymptotic end
_TOL = 1e-12


def _ladder_logs(phi, psi):
    lphi = phi.logs(np.exp2(LADDER.astype(float)))
    ext = np.arange(LADDER[0] - 20, LADDER[-1] + 21)
    lpsi = psi.logs(np.exp2(ext.astype(float)))
    return lphi, lpsi


def _ok_mask(lphi, lpsi, j):
    shifted = lpsi[20 + j: 20 + j + len(lphi)]
    valid = np.isfinite(lphi) & np.isfinite(shifted)
    with np.errstate(invalid="ignore"):  # -inf + inf where psi underflows; masked by valid
        ok = lphi <= shifted + _TOL * np.maximum(1.0, np.abs(shifted))
    return ok, valid


def _crossover(phi, psi, b, lo, hi, increasing=True):
    """Refine the switch point of phi(u) <= psi(b u) between lo (bad) and hi (good)."""
    def good(u):
        return phi.log(u) <= psi.log(b * u) + _TOL * max(1.0, abs(psi.log(b * u)))

    for _ in range(80):
        mid = math.sqrt(lo * hi)
        if mid <= min(lo, hi) or mid >= max(lo, hi):
            break
        if good(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _u0_infinity(phi, psi, b, ok, valid):
    bad = np.nonzero(valid & ~ok)[0]
    good_idx = np.nonzero(valid)[0]
    if len(bad) == 0:
        return 0.0
    last = int(bad[-1])
    if good_idx[-1] - last < PERSIST:
        return None
    return _crossover(phi, psi, b, 2.0 ** LADDER[last], 2.0 ** LADDER[last + 1])


def _u0_zero(phi, psi, b, ok, valid):
    bad = np.nonzero(valid & ~ok)[0]
    good_idx = np.nonzero(valid)[0]
    if len(bad) == 0:
        return math.inf
    first = int(bad[0])
    if first - good_idx[0] < PERSIST:
        return None
    return _crossover(phi, psi, b, 2.0 ** LADDER[first], 2.0 ** LADDER[first - 1])


LADDER_DESC = "dyadic ladder u = 2^k, k = -1000..1000; b = 2^j, j = -20..20"


def order_check(phi: OrliczFn, psi: OrliczFn, regime: str = "Global") -> ConditionVerdict:
    """phi < psi (Global) or phi <_inf psi (AtInfinity): phi(u) <= psi(b u)."""
    regime = _regime(regime)
    if regime == "Infinity":
        regime = "AtInfinity"
    lphi, lpsi = _ladder_logs(phi, psi)
    admissible = []
    for j in B_EXPONENTS:
        b = float(2.0 ** int(j))
        ok, valid = _ok_mask(lphi, lpsi, int(j))
        if regime == "Global":
            if (ok | ~valid).all():
                admissible.append((b, 0.0))
        else:
            u0 = _u0_infinity(phi, psi, b, ok, valid)
            if u0 is not None:
                admissible.append((b, u0))
    if admissible:
        pick = next(((b, u0) for b, u0 in admissible if u0 <= 1.0), admissible[0])
        return ConditionVerdict("Holds", {"b": pick[0], "u0": pick[1]}, [], LADDER_DESC)
    ok, valid = _ok_mask(lphi, lpsi, int(B_EXPONENTS[-1]))
    bad = np.nonzero(valid & ~ok)[0]
    wit = [float(2.0 ** LADDER[i]) for i in (bad[-3:] if regime == "AtInfinity" else bad[:3])]
    return ConditionVerdict("Fails", {"b_max": float(2.0 ** int(B_EXPONENTS[-1]))}, wit, LADDER_DESC,
                            ["violations persist for the largest b"])


def delta_phi_check(phi: OrliczFn, psi: OrliczFn, regime: str = "Infinity") -> ConditionVerdict:
    """For every b = 2^j find u0(b) with phi(u) <= psi(b u) beyond u0 (Infinity) or below it (Zero)."""
    regime = _regime(regime)
    if regime not in ("Zero", "Infinity"):
        raise ValueError("delta_phi_check regime must be Zero or Infinity")
    lphi, lpsi = _ladder_logs(phi, psi)
    u0s, failing = {}, []
    for j in B_EXPONENTS:
        b = float(2.0 ** int(j))
        ok, valid = _ok_mask(lphi, lpsi, int(j))
        u0 = (_u0_infinity if regime == "Infinity" else _u0_zero)(phi, psi, b, ok, valid)
        if u0 is None:
            failing.append(b)
        else:
            u0s[b] = u0
    if not failing:
        return ConditionVerdict("Holds", {"u0": u0s}, [], LADDER_DESC)
    return ConditionVerdict("Fails", {"b": max(failing)}, failing, LADDER_DESC,
                            ["no u0 on the ladder for the listed b"])


# --------------------------------------------------------------------------- inequality sequences


@dataclass
class IneqSequence:
    kind: str  # DeltaPhiInfty | DeltaPhiZero | NonDelta2
    values: list
    residuals: list

    def to_json(self):
        return {"kind": self.kind, "values": self.values, "residuals": self.residuals}


def residual_infty(phi, phi_n, k, u):
    return phi_n.log(u) - (k * LN2 + phi.log(k * k * u))


def residual_zero(phi, phi_n, k, u):
    return phi_n.log(u / k) - (k * LN2 + phi.log(k * u))


def residual_non_order(phi1, phi2, n, a):
    return phi1.log(a) - phi2.log(2.0 ** n * n * n * a)


def residual_non_delta2(phi, k, u):
    return phi.log((1 + 1 / k) * u) - (k * LN2 + phi.log(u))


def _search(h: Callable[[float], float], start: float, up: bool, strict: bool, k: int) -> float:
    def good(u):
        r = h(u)
        return r > 0 if strict else r >= 0

    u = start
    if good(u):
        return u
    step = 2.0 if up else 0.5
    prev = u
    while not good(u):
        nxt = prev * step if u != prev else u * step
        if math.isnan(h(nxt)):
            # overflow on both sides of the inequality: shrink the step instead of jumping past
            step = math.sqrt(step)
            if abs(step - 1.0) < 1e-12:
                raise SearchExhausted(f"inequality not decidable in floating point at k={k}", k)
            continue
        prev, u = u, nxt
        if u > 1e300 or u < 1e-300:
            raise SearchExhausted(f"no solution within [1e-300, 1e300] at k={k}", k)
    bad_u, good_u = prev, u
    for _ in range(80):
        mid = math.sqrt(bad_u * good_u)
        if mid in (bad_u, good_u):
            break
        if good(mid):
            good_u = mid
        else:
            bad_u = mid
    # walk outward until the stored point re-verifies
    while not good(good_u):
        good_u *= (1 + 1e-12) if up else (1 - 1e-12)
    return good_u


def _sequence(kind, h, K_max, up, strict, bounds):
    vals, res = [], []
    for k in range(1, K_max + 1):
        start = 1.0 if not vals else vals[-1] * ((1 + 2.0 ** -40) if up else (1 - 2.0 ** -40))
        if bounds is not None:
            start = max(start, bounds[k - 1]) if up else min(start, bounds[k - 1])
        u = _search(lambda x: h(k, x), start, up, strict, k)
        vals.append(u)
        res.append(h(k, u))
    return IneqSequence(kind, vals, res)


def find_delta_infty_sequence(phi, phi_n, K_max: int, lower: Sequence[float] | None = None) -> IneqSequence:
    """Increasing u_k with phi_n(u_k) >= 2^k phi(k^2 u_k); optional per-k lower bounds."""
    return _sequence("DeltaPhiInfty", lambda k, u: residual_infty(phi, phi_n, k, u), K_max, True, False, lower)


def find_delta_zero_sequence(phi, phi_n, K_max: int, upper: Sequence[float] | None = None) -> IneqSequence:
    """Decreasing u_k with phi_n(u_k / k) >= 2^k phi(k u_k); optional per-k upper bounds."""
    return _sequence("DeltaPhiZero", lambda k, u: residual_zero(phi, phi_n, k, u), K_max, False, False, upper)


def find_non_delta2_sequence(phi, K_max: int, lower: Sequence[float] | None = None) -> IneqSequence:
    """Increasing u_k with phi((1 + 1/k) u_k) > 2^k phi(u_k)."""
    return _sequence("NonDelta2", lambda k, u: residual_non_delta2(phi, k, u), K_max, True, True, lower)


def find_non_order_sequence(phi1, phi2, N: int, lower: Sequence[float] | None = None) -> IneqSequence:
    """Increasing a_n with phi1(a_n) > phi2(2^n n^2 a_n)."""
    return _sequence("NonOrder", lambda n, a: residual_non_order(phi1, phi2, n, a), N, True, True, lower)


RESIDUALS = {
    "DeltaPhiInfty": (lambda phi, phi_n, k, u: residual_infty(phi, phi_n, k, u), False),
    "DeltaPhiZero": (lambda phi, phi_n, k, u: residual_zero(phi, phi_n, k, u), False),
    "NonDelta2": (lambda phi, _unused, k, u: residual_non_delta2(phi, k, u), True),
    "NonOrder": (lambda phi2, phi1, n, a: residual_non_order(phi1, phi2, n, a), True),
}


def recheck(seq: IneqSequence, phi, phi_n=None) -> list:
    """Indices whose defining inequality fails when re-evaluated from scratch."""
    fn, strict = RESIDUALS[seq.kind]
    bad = []
    for k, u in enumerate(seq.values, 1):
        r = fn(phi, phi_n, k, u)
        if not (r > 0 if strict else r >= 0):
            bad.append(k)
    return bad
