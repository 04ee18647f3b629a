"""Truncated spaceability witnesses with re-verifiable finiteness and divergence certificates.

A construction runs in three stages:

1. solve the defining inequality sequences (stored in the bundle),
2. derive masses, rearranged breakpoints and piece lengths from them (pure),
3. lay the pieces inside E and assemble f_n, norms, the witness and certificates.

Pieces are laid in ascending length order, interleaved across families, starting at
the left end of the region. Partition masses span hundreds of decades and only
positions near 0 resolve them in double precision.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import orlicz
from .measure import IntervalSet, MeasureError, StepFunction, rearrange
from .orlicz import IneqSequence, OrliczFn, SearchExhausted
from .space import SpaceSpec, luxemburg_norm, modular, weight_increments
from .weights import WeightFn, partition_by_mass

LN2 = math.log(2.0)
TERM_TOL = 1e-9
FINITE_TOL = 1e-8
LOG_CAP = 700.0
MAX_DEPTH = 64
DEFAULT_LAMBDAS = (0.5, 1.0)


class PreconditionFailed(ValueError):
    """A hypothesis of the construction does not hold on the sampling grid."""


# --------------------------------------------------------------------------- certificates


@dataclass
class DivergenceCertificate:
    family: int
    eps: float
    k0: int
    terms: list
    partial_sum: float
    unit: float = 1.0

    @property
    def count(self) -> int:
        return len(self.terms)

    @property
    def ok(self) -> bool:
        floor = self.unit * (1 - TERM_TOL)
        return all(t >= floor for t in self.terms) and self.partial_sum >= self.count * floor

    def to_json(self):
        return {"family": self.family, "eps": self.eps, "k0": self.k0, "count": self.count,
                "unit": self.unit, "terms": self.terms, "partial_sum": self.partial_sum}

    @classmethod
    def from_json(cls, d):
        return cls(d["family"], d["eps"], d["k0"], list(d["terms"]), d["partial_sum"], d.get("unit", 1.0))


@dataclass
class FinitenessCertificate:
    scale: float
    modular: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.modular <= self.bound + FINITE_TOL

    def to_json(self):
        return {"scale": self.scale, "modular": self.modular, "bound": self.bound}

    @classmethod
    def from_json(cls, d):
        return cls(d["scale"], d["modular"], d["bound"])


# --------------------------------------------------------------------------- per-family data


@dataclass
class Family:
    index: int
    regime: str  # Infinity | Zero | NonDelta2 | NonOrder
    phi: OrliczFn | None
    share: float  # measure reserved for this family
    unit: float  # mass scale s (1 except for jointly built non-OC families)
    sequence: IneqSequence
    masses: list = field(default_factory=list)
    breakpoints: list = field(default_factory=list)
    lengths: list = field(default_factory=list)
    values: list = field(default_factory=list)
    rescale: float = 1.0
    sets: list = field(default_factory=list)
    norm: float = 0.0

    def step(self) -> StepFunction:
        return StepFunction(zip(self.values, self.sets))

    def to_json(self):
        return {"index": self.index, "regime": self.regime,
                "phi": self.phi.to_json() if self.phi is not None else None,
                "share": self.share, "unit": self.unit,
                "masses": self.masses, "breakpoints": self.breakpoints, "lengths": self.lengths,
                "values": self.values, "rescale": self.rescale, "norm": self.norm}

    @classmethod
    def from_json(cls, d, seq: dict, sets: list):
        seq = IneqSequence(seq["kind"], list(seq["values"]), list(seq["residuals"]))
        fam = cls(d["index"], d["regime"], orlicz.from_json(d["phi"]) if d["phi"] else None,
                  d["share"], d["unit"], seq)
        fam.masses, fam.breakpoints, fam.lengths = list(d["masses"]), list(d["breakpoints"]), list(d["lengths"])
        fam.values, fam.rescale, fam.norm = list(d["values"]), d["rescale"], d["norm"]
        fam.sets = [IntervalSet(tuple(iv) for iv in ps) for ps in sets]
        return fam

    def copy(self) -> "Family":
        return Family.from_json(self.to_json(), self.sequence.to_json(), [s.pairs() for s in self.sets])


def _log_mass(spec: SpaceSpec, fam: Family, k: int, u: float) -> float:
    phi = spec.phi
    if fam.regime == "Infinity":
        return -(k * LN2 + phi.log(k * k * u))
    if fam.regime == "Zero":
        return -(k * LN2 + phi.log(k * u))
    if fam.regime == "NonDelta2":
        return math.log(fam.unit) - (k * LN2 + phi.log(u))
    return -(k * LN2 + phi.log(k * k * u))  # NonOrder: spec.phi plays phi2


def _value(fam: Family, k: int, u: float) -> float:
    if fam.regime in ("Infinity", "NonOrder"):
        return k * u
    return u


def derive(spec: SpaceSpec, fam: Family) -> Family:
    """Masses, rearranged breakpoints and lengths from the stored sequence (deterministic)."""
    us = fam.sequence.values
    raw = []
    for k, u in enumerate(us, 1):
        m = math.exp(_log_mass(spec, fam, k, u))
        if not 0 < m < math.inf:
            raise MeasureError(f"family {fam.index}: mass at k={k} is not representable ({m})")
        raw.append(m)
    rescale = 1.0
    if fam.regime == "Infinity" and raw:
        rescale = spec.w.big_w(fam.share) * (1 - 1e-12) / math.fsum(raw)
    masses = [rescale * m for m in raw]
    values = [_value(fam, k, u) for k, u in enumerate(us, 1)]
    order = sorted(range(len(us)), key=lambda i: -values[i])
    bps = partition_by_mass(spec.w, 0.0, [masses[i] for i in order], "Upward") if us else [0.0]
    lengths = [0.0] * len(us)
    for j, i in enumerate(order):
        lengths[i] = bps[j + 1] - bps[j]
        if not lengths[i] > 0:
            raise MeasureError(f"family {fam.index}: piece k={i + 1} has no representable length")
    if bps[-1] > fam.share * (1 + 1e-12):
        raise MeasureError(f"family {fam.index}: pieces need {bps[-1]} > share {fam.share}")
    fam.masses, fam.breakpoints, fam.lengths, fam.values, fam.rescale = masses, bps, lengths, values, rescale
    return fam


def layout(region: IntervalSet, fams: Sequence[Family]):
    """Assign every piece a set inside region; ascending length, interleaved across families."""
    items = sorted((L, f.index, k) for f in fams for k, L in enumerate(f.lengths))
    by_index = {f.index: f for f in fams}
    for f in fams:
        f.sets = [None] * len(f.lengths)
    cuts = region.cuts([L for L, _, _ in items])
    for (L, n, k), s in zip(items, cuts):
        if abs(s.measure - L) > 1e-9 * L:
            raise MeasureError(f"region offset too large to resolve a piece of measure {L!r}; "
                               "start E closer to 0")
        by_index[n].sets[k] = s


# --------------------------------------------------------------------------- bundle


@dataclass
class WitnessBundle:
    kind: str
    spec: SpaceSpec
    E: IntervalSet
    truncation: tuple
    families: list
    params: dict
    witness: StepFunction
    finite: list
    divergent: list

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.finite) and all(c.ok for c in self.divergent)

    def partial_sum(self, scale: float) -> float:
        """Modular of scale * witness with each term capped at e^700 (a lower bound)."""
        return capped_modular(self.spec, self.witness, scale)

    def to_json(self) -> dict:
        return copy.deepcopy(self._json())

    def _json(self) -> dict:
        return {"kind": self.kind, "spec": self.spec.to_json(), "E": self.E.pairs(),
                "truncation": list(self.truncation), "params": self.params,
                "families": [f.to_json() for f in self.families],
                "sequences": {str(f.index): f.sequence.to_json() for f in self.families},
                "partitions": {str(f.index): [x.pairs() for x in f.sets] for f in self.families},
                "witness": self.witness.to_json(),
                "certificates": {"finite": [c.to_json() for c in self.finite],
                                 "divergent": [c.to_json() for c in self.divergent]}}

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, d) -> "WitnessBundle":
        if isinstance(d, str):
            d = json.loads(d)
        return cls(d["kind"], SpaceSpec.from_json(d["spec"]), IntervalSet(tuple(p) for p in d["E"]),
                   tuple(d["truncation"]),
                   [Family.from_json(f, d["sequences"][str(f["index"])], d["partitions"][str(f["index"])])
                    for f in d["families"]], d["params"],
                   StepFunction.from_json(d["witness"]),
                   [FinitenessCertificate.from_json(c) for c in d["certificates"]["finite"]],
                   [DivergenceCertificate.from_json(c) for c in d["certificates"]["divergent"]])


def capped_modular(spec: SpaceSpec, f: StepFunction, scale: float = 1.0) -> float:
    if f.is_zero():
        return 0.0
    fs = rearrange(f)
    dw = weight_increments(spec.w, fs.breakpoints)
    with np.errstate(divide="ignore"):
        logs = spec.phi.logs(scale * np.array(fs.values)) + np.log(dw)
    return math.fsum(float(x) for x in np.exp(np.minimum(logs, LOG_CAP)))


def _coefficient(kind: str, fam: Family) -> float:
    return 1.0 / (2.0 ** fam.index * fam.norm) if kind in ("infty", "zero", "mixed") else 1.0


def _family_dw(spec: SpaceSpec, fam: Family) -> list:
    fs = rearrange(fam.step())
    dw = weight_increments(spec.w, fs.breakpoints)
    pos = {v: d for v, d in zip(fs.values, dw)}
    return [float(pos[v]) for v in fam.values]


def _divergence(kind, spec, fam, eps, K) -> DivergenceCertificate:
    coef = _coefficient(kind, fam)
    dw = _family_dw(spec, fam)
    if fam.regime in ("Infinity", "Zero"):
        ratio = eps * coef
        k0 = next((k for k in range(1, K + 1) if ratio * k > 1), K + 1)
        phi = fam.phi
    elif fam.regime == "NonDelta2":
        k0 = math.floor(1 / (eps - 1)) + 1
        while not 1 + 1 / k0 < eps:
            k0 += 1
        phi = spec.phi
    else:  # NonOrder: terms n > 1/eps
        k0 = math.floor(1 / eps) + 1
        phi = fam.phi
    terms = []
    for k in range(k0, len(fam.values) + 1):
        lt = phi.log(eps * coef * fam.values[k - 1]) + math.log(dw[k - 1])
        terms.append(math.exp(min(lt, LOG_CAP)))
    return DivergenceCertificate(fam.index, eps, k0, terms, math.fsum(terms), fam.unit)


def _default_eps(kind, fam):
    if kind in ("infty", "zero", "mixed"):
        return [2.0 ** fam.index * fam.norm]
    if kind == "non_oc":
        return [1.1, 1.5, 2.0]
    return [1.0]


def assemble(kind, spec, E, truncation, fams, params, lambdas, epsilons, bound) -> WitnessBundle:
    """Norms, witness and certificates from families with sets assigned."""
    K = truncation[1]
    for fam in fams:
        fam.norm = luxemburg_norm(spec, fam.step()).value if fam.values else 0.0
    pieces = []
    for fam in fams:
        if not fam.values:
            continue
        c = _coefficient(kind, fam)
        pieces += [(v * c, s) for v, s in zip(fam.values, fam.sets)]
    f = StepFunction(pieces)
    finite, divergent = [], []
    if fams and any(fam.values for fam in fams):
        finite = [FinitenessCertificate(lam, modular(spec, f.scale(lam)), bound) for lam in lambdas]
        for fam in fams:
            if not fam.values:
                continue
            for eps in (epsilons if epsilons is not None else _default_eps(kind, fam)):
                if fam.regime == "NonDelta2" and not eps > 1:
                    continue  # rho(eps f) <= 1 for eps <= 1: no divergence claim
                divergent.append(_divergence(kind, spec, fam, float(eps), max(K, len(fam.values))))
    params = dict(params, lambdas=list(lambdas), epsilons=None if epsilons is None else list(epsilons),
                  bound=bound)
    return WitnessBundle(kind, spec, E, tuple(truncation), list(fams), params, f, finite, divergent)


# --------------------------------------------------------------------------- solving


def _solve(spec: SpaceSpec, fam: Family, K: int) -> Family:
    phi, w = spec.phi, spec.w
    try:
        if fam.regime == "Infinity":
            floor = orlicz.inverse(phi, 2.0 / w.big_w(fam.share))
            fam.sequence = orlicz.find_delta_infty_sequence(phi, fam.phi, K, [floor / k ** 2 for k in range(1, K + 1)])
        elif fam.regime == "Zero":
            fam.sequence = orlicz.find_delta_zero_sequence(phi, fam.phi, K)
        elif fam.regime == "NonDelta2":
            floor = orlicz.inverse(phi, 2.0 * fam.unit / w.big_w(fam.share))
            fam.sequence = orlicz.find_non_delta2_sequence(phi, K, [floor] * K)
        else:
            floor = orlicz.inverse(phi, 2.0 / w.big_w(fam.share))
            fam.sequence = orlicz.find_non_order_sequence(fam.phi, phi, K, [floor / n ** 2 for n in range(1, K + 1)])
    except SearchExhausted as e:
        raise SearchExhausted(f"family {fam.index} ({fam.regime}): {e}", e.k) from e
    return derive(spec, fam)


def _check_depth(*xs):
    for x in xs:
        if not 0 <= x <= MAX_DEPTH:
            raise ValueError(f"truncation depth must lie in [0, {MAX_DEPTH}], got {x}")


_PRECHECK: dict = {}


def _require_delta_phi(phi, phi_n, regime):
    key = (json.dumps(phi.to_json()), json.dumps(phi_n.to_json()), regime)
    if key not in _PRECHECK:
        _PRECHECK[key] = orlicz.delta_phi_check(phi, phi_n, regime).status
    if _PRECHECK[key] != "Holds":
        raise PreconditionFailed(f"{phi_n.to_json()} does not satisfy the {regime} growth condition "
                                 f"relative to {phi.to_json()} ({_PRECHECK[key]})")


def _as_set(E) -> IntervalSet:
    return E if isinstance(E, IntervalSet) else IntervalSet(E)


def _new(index, regime, phi, share, unit=1.0):
    return Family(index, regime, phi, share, unit, IneqSequence(regime, [], []))


def spaceable_witness_infty(phi: OrliczFn, phis: Sequence[OrliczFn], w: WeightFn, E=((0.0, 1.0),),
                            N: int = 4, K: int = 40, lambdas=DEFAULT_LAMBDAS, epsilons=None,
                            gamma: float | None = None) -> WitnessBundle:
    """Witness in the order-continuous part but outside every Lambda_{phi_n} (growth at infinity)."""
    _check_depth(N, K)
    E = _as_set(E)
    if not math.isfinite(E.measure):
        raise MeasureError("the infinity construction needs m(E) < inf")
    spec = SpaceSpec(gamma if gamma is not None else max(1.0, E.sup), phi, w)
    fams = []
    for n in range(1, N + 1):
        phi_n = phis[min(n, len(phis)) - 1]
        _require_delta_phi(phi, phi_n, "Infinity")
        fams.append(_solve(spec, _new(n, "Infinity", phi_n, E.measure / 2 ** n), K))
    layout(E, fams)
    return assemble("infty", spec, E, (N, K), fams, {}, lambdas, epsilons, 1.0)


def spaceable_witness_zero(phi: OrliczFn, phis: Sequence[OrliczFn], w: WeightFn, E=((0.0, math.inf),),
                           N: int = 4, K: int = 40, lambdas=DEFAULT_LAMBDAS, epsilons=None,
                           gamma: float = math.inf) -> WitnessBundle:
    """Same on [0, inf) for families that dominate phi near 0."""
    _check_depth(N, K)
    if math.isfinite(gamma):
        raise ValueError("the zero construction is defined on [0, inf) only")
    E = _as_set(E)
    spec = SpaceSpec(gamma, phi, w)
    fams = []
    for n in range(1, N + 1):
        phi_n = phis[min(n, len(phis)) - 1]
        _require_delta_phi(phi, phi_n, "Zero")
        fams.append(_solve(spec, _new(n, "Zero", phi_n, math.inf), K))
    layout(E, fams)
    return assemble("zero", spec, E, (N, K), fams, {}, lambdas, epsilons, 1.0)


def spaceable_witness_mixed(phi: OrliczFn, phis_tagged: Sequence[tuple], w: WeightFn,
                            E=((0.0, math.inf),), N: int = 4, K: int = 40, lambdas=DEFAULT_LAMBDAS,
                            epsilons=None, t0: float = 1.0) -> WitnessBundle:
    """Families tagged Infinity go on F1 (first t0 of E), Zero families on the rest F2."""
    _check_depth(N, K)
    E = _as_set(E)
    spec = SpaceSpec(math.inf, phi, w)
    tags = [(p, orlicz._regime(r)) for p, r in phis_tagged]
    picks = [tags[min(n, len(tags)) - 1] for n in range(1, N + 1)]
    n_inf = sum(1 for _, r in picks if r == "Infinity")
    n_zero = N - n_inf
    F1 = E.slice(0.0, t0) if n_inf else IntervalSet()
    F2 = (E.slice(t0, math.inf) if n_inf else E) if n_zero else IntervalSet()
    fams, i_inf = [], 0
    for n, (phi_n, regime) in enumerate(picks, 1):
        _require_delta_phi(phi, phi_n, regime)
        if regime == "Infinity":
            i_inf += 1
            fams.append(_solve(spec, _new(n, "Infinity", phi_n, t0 / 2 ** i_inf), K))
        elif regime == "Zero":
            fams.append(_solve(spec, _new(n, "Zero", phi_n, math.inf), K))
        else:
            raise ValueError("mixed families must be tagged Infinity or Zero")
    layout(F1, [f for f in fams if f.regime == "Infinity"])
    layout(F2, [f for f in fams if f.regime == "Zero"])
    return assemble("mixed", spec, E, (N, K), fams, {"t0": t0, "F1": F1.pairs(), "F2": F2.pairs()},
                    lambdas, epsilons, 2.0)


def non_order_continuous_family(phi: OrliczFn, w: WeightFn, E=((0.0, 1.0),), m: int = 1, K: int = 40,
                                epsilons=None, lambdas=(1.0,), gamma: float | None = None) -> list:
    """m disjoint non-order-continuous witnesses sharing E, each with mass scale 1/m."""
    _check_depth(K)
    E = _as_set(E)
    if not math.isfinite(E.measure):
        raise MeasureError("the non-order-continuous construction needs m(E) < inf")
    verdict = orlicz.delta2_check(phi, "Infinity")
    if verdict.status != "Fails":
        raise PreconditionFailed(f"{phi.to_json()} does not fail the growth condition at infinity "
                                 f"({verdict.status})")
    spec = SpaceSpec(gamma if gamma is not None else max(1.0, E.sup), phi, w)
    fams = []
    for j in range(m):
        fam = _solve(spec, _new(1, "NonDelta2", None, E.measure / m, 1.0 / m), K)
        fam.index = j + 1
        fams.append(fam)
    layout(E, fams)
    out = []
    for fam in fams:
        fam.index = 1
        out.append(assemble("non_oc", spec, E, (1, K), [fam], {"members": m}, lambdas, epsilons,
                            1.0 / m))
    return out


def non_order_continuous_witness(phi: OrliczFn, w: WeightFn, E=((0.0, 1.0),), K: int = 40,
                                 epsilons=None, lambdas=(1.0,), gamma: float | None = None) -> WitnessBundle:
    """f = sum u_k chi_{E_k} with rho(f) = 1 - 2^-K but rho(eps f) large for every eps > 1."""
    return non_order_continuous_family(phi, w, E, 1, K, epsilons, lambdas, gamma)[0]


def non_inclusion_witness(phi1: OrliczFn, phi2: OrliczFn, w: WeightFn, gamma: float = 1.0, N_max: int = 20,
                          E=None, epsilons=(1.0,)) -> WitnessBundle:
    """f in Lambda_{phi2} whose phi1-modular diverges at every scale (phi1 not below phi2 at infinity)."""
    _check_depth(N_max)
    E = _as_set(E if E is not None else [(0.0, gamma if math.isfinite(gamma) else 1.0)])
    spec = SpaceSpec(gamma, phi2, w)
    fams = []
    if N_max:
        fams.append(_solve(spec, _new(1, "NonOrder", phi1, E.measure), N_max))
        layout(E, fams)
    return assemble("non_inclusion", spec, E, (1, N_max), fams, {}, (1.0,), epsilons, 1 - 2.0 ** -N_max)


def strict_lorentz_witness(p: float, w: WeightFn, side: str = "Right", depth=(2, 30),
                           lambdas=DEFAULT_LAMBDAS, epsilons=None) -> WitnessBundle:
    """Witness in Lambda_{p,w} outside Lambda_{q,w} for q = p + 1/n (Right), p - 1/n (Left) or both."""
    N, K = depth
    side = side.capitalize()
    phi = orlicz.Power(p)
    if side == "Right":
        if not p >= 1:
            raise ValueError("Right side needs p >= 1")
        return spaceable_witness_infty(phi, [orlicz.Power(p + 1 / n) for n in range(1, N + 1)], w,
                                       [(0.0, 1.0)], N, K, lambdas, epsilons, gamma=1.0)
    if not p > 1:
        raise ValueError(f"{side} side needs p > 1")
    k0 = math.floor(1 / (p - 1)) + 1
    left = [orlicz.Power(p - 1 / n) for n in range(k0, k0 + N)]
    if side == "Left":
        return spaceable_witness_zero(phi, left, w, [(0.0, math.inf)], N, K, lambdas, epsilons)
    if side == "Both":
        right = [orlicz.Power(p + 1 / n) for n in range(1, N + 1)]
        tagged = []
        for i in range(N):
            tagged.append((right[i // 2], "Infinity") if i % 2 == 0 else (left[i // 2], "Zero"))
        return spaceable_witness_mixed(phi, tagged, w, [(0.0, math.inf)], N, K, lambdas, epsilons)
    raise ValueError("side must be Left, Right or Both")


# --------------------------------------------------------------------------- verification


@dataclass
class VerifyReport:
    ok: bool
    problems: list

    def to_json(self):
        return {"ok": self.ok, "problems": self.problems}


def _close(a, b, rtol=1e-12) -> bool:
    if a == b:
        return True
    if isinstance(a, float) and isinstance(b, float) and math.isfinite(a) and math.isfinite(b):
        return abs(a - b) <= rtol * max(abs(a), abs(b))
    return False


def _diff(path, a, b, out, rtol=1e-12):
    if isinstance(a, dict) and isinstance(b, dict):
        if set(a) != set(b):
            out.append(f"{path}: keys differ")
            return
        for k in a:
            _diff(f"{path}.{k}", a[k], b[k], out, rtol)
    elif isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        if len(a) != len(b):
            out.append(f"{path}: length {len(a)} != {len(b)}")
            return
        for i, (x, y) in enumerate(zip(a, b)):
            _diff(f"{path}[{i}]", x, y, out, rtol)
    elif isinstance(a, (int, float)) and isinstance(b, (int, float)) and not isinstance(a, bool):
        if not _close(float(a), float(b), rtol):
            out.append(f"{path}: stored {a!r} vs recomputed {b!r}")
    elif a != b:
        out.append(f"{path}: stored {a!r} vs recomputed {b!r}")


def verify_bundle(bundle, rtol: float = 1e-12) -> VerifyReport:
    """Re-derive everything from sequences and partitions and diff against the stored bundle."""
    problems: list = []
    try:
        raw = bundle if isinstance(bundle, dict) else (json.loads(bundle) if isinstance(bundle, str) else bundle.to_json())
        b = WitnessBundle.from_json(raw)
    except (KeyError, TypeError, ValueError) as e:
        return VerifyReport(False, [f"malformed bundle: {e}"])
    spec = b.spec
    for fam in b.families:
        tag = f"family[{fam.index}]"
        phi_n = fam.phi
        if fam.regime in ("Infinity", "Zero"):
            bad = orlicz.recheck(fam.sequence, spec.phi, phi_n)
        elif fam.regime == "NonDelta2":
            bad = orlicz.recheck(fam.sequence, spec.phi)
        else:
            bad = orlicz.recheck(fam.sequence, spec.phi, phi_n)
        if bad:
            problems.append(f"{tag}: inequality fails at k={bad}")
        fresh = Family(fam.index, fam.regime, fam.phi, fam.share, fam.unit, fam.sequence)
        try:
            derive(spec, fresh)
        except MeasureError as e:
            problems.append(f"{tag}: {e}")
            continue
        for name in ("masses", "breakpoints", "lengths", "values", "rescale"):
            _diff(f"{tag}.{name}", getattr(fam, name), getattr(fresh, name), problems, rtol)
        if len(fam.sets) != len(fam.lengths):
            problems.append(f"{tag}: {len(fam.sets)} sets for {len(fam.lengths)} pieces")
            continue
        for k, (s, L) in enumerate(zip(fam.sets, fresh.lengths), 1):
            if abs(s.measure - L) > 1e-9 * L:
                problems.append(f"{tag}: set k={k} has measure {s.measure!r}, expected {L!r}")
            if any(not any(e.lo <= iv.lo and iv.hi <= e.hi for e in b.E.intervals) for iv in s.intervals):
                problems.append(f"{tag}: set k={k} leaves E")
        if fam.values:
            fn = luxemburg_norm(spec, fam.step()).value
            _diff(f"{tag}.norm", fam.norm, fn, problems, rtol)
    flat = sorted((iv.lo, iv.hi) for fam in b.families for s in fam.sets for iv in s.intervals)
    if any(y[0] < x[1] for x, y in zip(flat, flat[1:])):
        problems.append("partitions overlap")
    if not problems:
        p = b.params
        again = assemble(b.kind, spec, b.E, b.truncation,
                         [f.copy() for f in b.families],
                         {k: v for k, v in p.items() if k not in ("lambdas", "epsilons", "bound")},
                         p["lambdas"], p["epsilons"], p["bound"])
        if again.witness != b.witness:
            problems.append("witness does not rebuild bit-identically")
        _diff("certificates", raw["certificates"], again.to_json()["certificates"], problems, rtol)
        for c in again.finite:
            if not c.ok:
                problems.append(f"finiteness certificate at scale {c.scale} exceeds its bound: "
                                f"{c.modular} > {c.bound}")
        for c in again.divergent:
            if not c.ok:
                problems.append(f"divergence certificate family {c.family} eps {c.eps} has a term below unit")
    return VerifyReport(not problems, problems)


# --------------------------------------------------------------------------- l-infinity and basic sequences


def _check_disjoint(fs: Sequence[StepFunction]):
    flat = sorted((iv.lo, iv.hi) for f in fs for iv in f.support().intervals)
    if any(y[0] < x[1] for x, y in zip(flat, flat[1:])):
        raise MeasureError("functions must have pairwise disjoint supports")


def combine(fs: Sequence[StepFunction], x: Sequence[float]) -> StepFunction:
    """|sum x_n f_n| for disjointly supported f_n."""
    return StepFunction((abs(c) * v, s) for c, f in zip(x, fs) if c for v, s in f.pieces)


def ell_infty_isometry_check(bundles: Sequence[WitnessBundle], x: Sequence[float], delta: float = 0.1) -> dict:
    """Bracket ||T x|| between (1 - delta)||x||_inf (certificate) and ||x||_inf."""
    if len(bundles) != len(x):
        raise ValueError("need one coefficient per bundle")
    fs = [b.witness for b in bundles]
    _check_disjoint(fs)
    spec = bundles[0].spec
    xmax = max((abs(c) for c in x), default=0.0)
    g = combine(fs, x)
    if xmax == 0:
        return {"norm": 0.0, "xmax": 0.0, "upper_ok": True, "lower_ok": True, "lower_modular": 0.0}
    nrm = luxemburg_norm(spec, g).value
    lower_mod = capped_modular(spec, g, 1.0 / ((1 - delta) * xmax))
    return {"norm": nrm, "xmax": xmax, "upper_ok": nrm <= xmax * (1 + 1e-8),
            "lower_ok": lower_mod > 1.0, "lower_modular": lower_mod,
            "lower_bound": (1 - delta) * xmax}


def disjoint_basic_check(spec: SpaceSpec, fs: Sequence[StepFunction], coeff_trials=100, seed: int = 0) -> dict:
    """||sum_{n<=s} a_n f_n|| <= ||sum_{n<=r} a_n f_n|| for s <= r over random coefficient vectors."""
    _check_disjoint(fs)
    if isinstance(coeff_trials, int):
        rng = np.random.default_rng(seed)
        trials = [rng.normal(size=len(fs)) for _ in range(coeff_trials)]
    else:
        trials = [np.asarray(t, dtype=float) for t in coeff_trials]
    worst, rows = 0.0, []
    for a in trials:
        norms = [luxemburg_norm(spec, combine(fs[:r], a[:r])).value for r in range(1, len(fs) + 1)]
        for s_, r_ in zip(norms, norms[1:]):
            worst = max(worst, s_ - r_ - 1e-9 * max(1.0, r_))
        rows.append(norms)
    return {"ok": worst <= 0, "max_violation": max(worst, 0.0), "trials": len(trials), "norms": rows}
