"""Inclusions between Orlicz-Lorentz spaces, DSS verdicts and the dominating-weight construction."""
from __future__ import annotations

import csv
import io
import math
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import orlicz
from .measure import StepFunction, distribution, rearrange, sample_step
from .orlicz import ConditionVerdict, OrliczFn
from .space import SpaceSpec, ZeroFunction, luxemburg_norm, modular
from .weights import RatioVerdict, WeightFn, dominance_check, ratio_limit, ratio_samples

DEFAULT_SEED = 0xC0FFEE
SLACK = 1e-8


@dataclass
class InclusionReport:
    source: dict
    target: dict
    condition_verdict: ConditionVerdict
    hypothesis: ConditionVerdict | None = None
    constant: float | None = None
    empirical: list = field(default_factory=list)
    violations: int = 0
    blowup: list = field(default_factory=list)

    @property
    def hypothesis_verified(self) -> bool:
        return self.hypothesis is None or self.hypothesis.holds

    def to_json(self):
        return {"source": self.source, "target": self.target,
                "condition_verdict": self.condition_verdict.to_json(),
                "hypothesis": self.hypothesis.to_json() if self.hypothesis else None,
                "hypothesis_verified": self.hypothesis_verified, "constant": self.constant,
                "violations": self.violations, "empirical": self.empirical, "blowup": self.blowup}


def _samples(gamma: float, n: int, seed: int) -> list:
    length = min(gamma, 1.0)
    streams = np.random.SeedSequence(seed).spawn(n)
    return [sample_step(np.random.default_rng(s), length) for s in streams]


def _map(fn, items, jobs: int):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def indicator_norm(phi: OrliczFn, w: WeightFn, t: float) -> float:
    """||chi_[0,t)|| from phi(1 / ||chi||) = 1 / W(t)."""
    return 1.0 / orlicz.inverse(phi, 1.0 / w.big_w(t))


def inclusion_weight_check(phi: OrliczFn, w1: WeightFn, w2: WeightFn, gamma: float = 1.0,
                           n_samples: int = 100, seed: int = DEFAULT_SEED, jobs: int = 1) -> InclusionReport:
    """Lambda_{phi,w1} into Lambda_{phi,w2}: grid-certified W2 <= K W1, then sampled norm inequalities."""
    s1, s2 = SpaceSpec(gamma, phi, w1), SpaceSpec(gamma, phi, w2)
    hyp = orlicz.delta2_check(phi, "Global" if math.isinf(gamma) else "Infinity")
    verdict = dominance_check(w1, w2, gamma)
    rep = InclusionReport(s1.to_json(), s2.to_json(), verdict, hyp)
    if verdict.holds:
        K = max(verdict.constants["K"], 1.0)
        rep.constant = K

        def row(f):
            n1, n2 = luxemburg_norm(s1, f).value, luxemburg_norm(s2, f).value
            return {"f": f.to_json(), "norm_source": n1, "norm_target": n2, "bound": K * n1,
                    "ok": n2 <= K * n1 * (1 + SLACK)}

        rep.empirical = _map(row, _samples(gamma, n_samples, seed), jobs)
        rep.violations = sum(not r["ok"] for r in rep.empirical)
    else:
        top = min(gamma, 1.0)
        for j in range(0, 61, 4):
            t = top * 2.0 ** -j
            n1, n2 = indicator_norm(phi, w1, t), indicator_norm(phi, w2, t)
            rep.blowup.append({"t": t, "norm_source": n1, "norm_target": n2, "ratio": n2 / n1})
    return rep


def inclusion_orlicz_check(phi1: OrliczFn, phi2: OrliczFn, w: WeightFn, gamma: float = 1.0,
                           n_samples: int = 100, seed: int = DEFAULT_SEED, jobs: int = 1) -> InclusionReport:
    """Lambda_{phi2,w} into Lambda_{phi1,w} from phi1 < phi2 (infinite gamma) or phi1 <_inf phi2."""
    src, dst = SpaceSpec(gamma, phi2, w), SpaceSpec(gamma, phi1, w)
    regime = "Global" if math.isinf(gamma) else "AtInfinity"
    verdict = orlicz.order_check(phi1, phi2, regime)
    rep = InclusionReport(src.to_json(), dst.to_json(), verdict)
    if not verdict.holds:
        return rep
    b, u0 = verdict.constants["b"], verdict.constants["u0"]
    rep.constant = b if regime == "Global" else None

    def row(f):
        n2 = luxemburg_norm(src, f).value
        n1 = luxemburg_norm(dst, f).value
        M = 1.0
        if regime == "AtInfinity":
            d = distribution(f, u0 * b * n2)
            M = phi1(u0) * (w.big_w(gamma) - w.big_w(d)) + 1.0
        return {"f": f.to_json(), "norm_source": n2, "norm_target": n1, "M": M, "bound": M * b * n2,
                "ok": n1 <= M * b * n2 * (1 + SLACK)}

    rep.empirical = _map(row, _samples(gamma, n_samples, seed), jobs)
    rep.violations = sum(not r["ok"] for r in rep.empirical)
    return rep


def non_inclusion_witness(phi1, phi2, w, gamma=1.0, N_max=20, **kw):
    from .witness import non_inclusion_witness as build

    return build(phi1, phi2, w, gamma, N_max, **kw)


# --------------------------------------------------------------------------- DSS


@dataclass
class DSSVerdict:
    verdict: str  # DSS | NotDSS | Inconclusive
    ratio: RatioVerdict
    hypothesis: ConditionVerdict
    counterexample: dict | None = None

    def to_json(self):
        return {"verdict": self.verdict, "c": self.ratio.c, "ratio_kind": self.ratio.kind,
                "ratio_samples": self.ratio.samples, "hypothesis": self.hypothesis.to_json(),
                "hypothesis_verified": self.hypothesis.holds, "counterexample": self.counterexample}


def _unit_interval(gamma):
    if gamma != 1.0:
        raise ValueError("DSS analysis is implemented on [0, 1) only (gamma = 1)")


def dss_check(phi: OrliczFn, w1: WeightFn, w2: WeightFn, gamma: float = 1.0, n: int = 5) -> DSSVerdict:
    """DSS iff W2/W1 -> 0; a bounded-below ratio yields a disjoint counterexample sequence."""
    _unit_interval(gamma)
    hyp = orlicz.delta2_check(phi, "Infinity")
    rv = ratio_limit(w1, w2)
    if rv.kind == "LimitZero":
        return DSSVerdict("DSS", rv, hyp)
    if rv.kind == "BoundedBelow":
        return DSSVerdict("NotDSS", rv, hyp, dss_counterexample_sequence(phi, w1, w2, n, ratio=rv))
    return DSSVerdict("Inconclusive", rv, hyp)


def dss_counterexample_sequence(phi: OrliczFn, w1: WeightFn, w2: WeightFn, n: int = 5, t_budget: float = 1.0,
                                gamma: float = 1.0, ratio: RatioVerdict | None = None) -> dict:
    """Disjoint indicators chi_{J_k} with ||.||_{w1} <= K ||.||_{w2}, K = max(1, 1/c)."""
    _unit_interval(gamma)
    rv = ratio or ratio_limit(w1, w2)
    if rv.kind == "LimitZero":
        raise ValueError("W2/W1 tends to 0: the inclusion is DSS and no counterexample exists")
    c = rv.c
    K = max(1.0, 1.0 / c)
    s1, s2 = SpaceSpec(gamma, phi, w1), SpaceSpec(gamma, phi, w2)
    rows, pos = [], 0.0
    for k in range(1, n + 1):
        t = t_budget * 4.0 ** -k
        f = StepFunction.indicator(pos, pos + t)
        n1, n2 = luxemburg_norm(s1, f).value, luxemburg_norm(s2, f).value
        rows.append({"k": k, "interval": [pos, pos + t], "t": t, "W1": w1.big_w(t), "W2": w2.big_w(t),
                     "norm_w1": n1, "norm_w2": n2, "ok": n1 <= K * n2 * (1 + SLACK)})
        pos += t
    return {"K": K, "c": c, "terms": rows, "ok": all(r["ok"] for r in rows)}


# --------------------------------------------------------------------------- dominating weight


class DominatingWeight(WeightFn):
    """v = w / sqrt(H) with H(t) = integral of phi(f*) w over [0, t)."""

    family = "dominating"

    def __init__(self, phi: OrliczFn, w: WeightFn, f: StepFunction):
        if f.is_zero():
            raise ZeroFunction("the dominating weight needs a nonzero f")
        fs = rearrange(f)
        self.w, self.phi, self.f = w, phi, f
        self.t = list(fs.breakpoints)
        self.phis = [float(phi(v)) for v in fs.values]
        self.H, self.V = [0.0], [0.0]
        for j, p in enumerate(self.phis):
            h = self.H[-1] + p * w.mass(self.t[j], self.t[j + 1])
            self.V.append(self.V[-1] + 2.0 / p * (math.sqrt(h) - math.sqrt(self.H[-1])))
            self.H.append(h)
        self.s = self.t[-1]

    def big_h(self, t: float) -> float:
        if t <= 0:
            return 0.0
        if t >= self.s:
            return self.H[-1]
        j = bisect_right(self.t, t) - 1
        return self.H[j] + self.phis[j] * self.w.mass(self.t[j], t)

    def g(self, t: float) -> float:
        h = self.big_h(t)
        return math.inf if h == 0 else h ** -0.5

    def __call__(self, t):
        return self.w(t) * self.g(t)

    def big_w(self, t):
        if t <= 0:
            return 0.0
        if t >= self.s:
            return self.V[-1] + self.w.mass(self.s, t) / math.sqrt(self.H[-1])
        j = bisect_right(self.t, t) - 1
        return self.V[j] + 2.0 / self.phis[j] * (math.sqrt(self.big_h(t)) - math.sqrt(self.H[j]))

    def to_json(self):
        return {"family": "dominating", "phi": self.phi.to_json(), "w": self.w.to_json(),
                "f": self.f.to_json()}


@dataclass
class DominatingWeightResult:
    v: DominatingWeight
    ratio_verdict: RatioVerdict
    modular_in_v: float
    closed_form: float

    def g(self, t: float) -> float:
        return self.v.g(t)

    @property
    def ok(self) -> bool:
        return bool(self.ratio_verdict.kind == "LimitZero" and self.modular_in_v <= self.closed_form + 1e-8)

    def to_json(self):
        return {"modular_in_v": self.modular_in_v, "closed_form": self.closed_form,
                "H_end": self.v.H[-1], "support": self.v.s, "ratio_verdict": self.ratio_verdict.to_json(),
                "ok": self.ok}


def dominating_weight(phi: OrliczFn, w: WeightFn, f: StepFunction, gamma: float = math.inf) -> DominatingWeightResult:
    """Weight v with w << v whose modular still sees f as finite: integral of phi(f*) v = 2 sqrt(H(s))."""
    v = DominatingWeight(phi, w, f)
    mod = modular(SpaceSpec(gamma, phi, v), f)
    return DominatingWeightResult(v, ratio_limit(v, w), mod, 2.0 * math.sqrt(v.H[-1]))


# --------------------------------------------------------------------------- export


def weight_ratio_rows(w1: WeightFn, w2: WeightFn, j_max: int = 60) -> list:
    return [(t, w1.big_w(t), w2.big_w(t), r) for t, r in ratio_samples(w1, w2, j_max)]


def export_csv(rows: Sequence[tuple], header: Sequence[str]) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(header)
    for r in rows:
        out.writerow([f"{x:.12g}" for x in r])
    return buf.getvalue()


def dominating_weight_document(phi: OrliczFn, w: WeightFn, f: StepFunction, gamma: float = math.inf) -> dict:
    res = dominating_weight(phi, w, f, gamma)
    return {"kind": "dominating_weight", "phi": phi.to_json(), "w": w.to_json(), "f": f.to_json(),
            "gamma": gamma if math.isfinite(gamma) else "inf", **res.to_json()}


def verify_dominating_weight(doc: dict, rtol: float = 1e-12) -> list:
    """Problems found when rebuilding a stored dominating-weight document."""
    from . import weights
    from .witness import _diff

    gamma = math.inf if doc["gamma"] in ("inf", "Infinity") else float(doc["gamma"])
    again = dominating_weight_document(orlicz.from_json(doc["phi"]), weights.from_json(doc["w"]),
                                       StepFunction.from_json(doc["f"]), gamma)
    problems: list = []
    _diff("dominating_weight", doc, again, problems, rtol)
    if not again["ok"]:
        problems.append("construction does not certify W/V -> 0 with the closed-form modular")
    return problems
