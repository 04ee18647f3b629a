"""Modular and Luxemburg norm of step functions in an Orlicz-Lorentz space."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .measure import MeasureError, StepFunction, distribution, rearrange
from .orlicz import OrliczFn, require_valid
from .weights import WeightFn, validated, ParsedWeight

DEFAULT_RTOL = 1e-12


class ZeroFunction(ValueError):
    """The operation needs a nonzero function."""


@dataclass(frozen=True)
class SpaceSpec:
    gamma: float
    phi: OrliczFn
    w: WeightFn

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        require_valid(self.phi)
        if isinstance(self.w, ParsedWeight):
            validated(self.w)

    def check_support(self, f: StepFunction):
        if f.sup > self.gamma:
            raise MeasureError(f"support of f reaches {f.sup}, beyond gamma = {self.gamma}")

    def to_json(self):
        return {"gamma": self.gamma if math.isfinite(self.gamma) else "inf",
                "phi": self.phi.to_json(), "w": self.w.to_json()}

    @classmethod
    def from_json(cls, obj):
        from . import orlicz, weights

        g = obj["gamma"]
        return cls(math.inf if g in ("inf", "Infinity") else float(g),
                   orlicz.from_json(obj["phi"]), weights.from_json(obj["w"]))


@dataclass
class NormResult:
    value: float
    bracket: tuple
    modular_at_value: float
    iterations: int

    def to_json(self):
        return {"value": self.value, "modular_at_value": self.modular_at_value,
                "bracket": list(self.bracket), "iterations": self.iterations}


def weight_increments(w: WeightFn, breakpoints: Sequence[float]) -> np.ndarray:
    return np.array([w.mass(a, b) for a, b in zip(breakpoints, breakpoints[1:])])


def _prepare(spec: SpaceSpec, f: StepFunction):
    spec.check_support(f)
    fs = rearrange(f)
    return np.array(fs.values), weight_increments(spec.w, fs.breakpoints)


def _rho(phi: OrliczFn, vals, dw, eps: float) -> float:
    if phi.kernel is not None:
        code, p, q = phi.kernel
        return kernels.scaled_modular(code, p, q, vals, dw, eps)
    terms = phi.values(np.asarray(vals) / eps) * dw
    return float(np.sum(terms[dw > 0]))


def modular(spec: SpaceSpec, f: StepFunction) -> float:
    """Sum of phi(v_j) (W(t_j) - W(t_{j-1})) over the pieces of f*; +inf on overflow."""
    if f.is_zero():
        return 0.0
    vals, dw = _prepare(spec, f)
    return _rho(spec.phi, vals, dw, 1.0)


def scaled_modular(spec: SpaceSpec, f: StepFunction, eps: float) -> float:
    """rho(f / eps)."""
    if f.is_zero():
        return 0.0
    vals, dw = _prepare(spec, f)
    return _rho(spec.phi, vals, dw, eps)


def luxemburg_norm(spec: SpaceSpec, f: StepFunction, rtol: float = DEFAULT_RTOL) -> NormResult:
    """inf{eps : rho(f/eps) <= 1}; the returned value is the end of the bracket where rho <= 1."""
    if f.is_zero():
        return NormResult(0.0, (0.0, 0.0), 0.0, 0)
    vals, dw = _prepare(spec, f)
    eps0 = float(vals[0])
    phi = spec.phi
    if phi.kernel is not None:
        code, p, q = phi.kernel
        lo, hi, it0 = kernels.norm_bracket(code, p, q, vals, dw, eps0)
        lo, hi, it1 = kernels.norm_bisect(code, p, q, vals, dw, lo, hi, rtol)
    else:
        lo, hi, it0, it1 = _py_norm(phi, vals, dw, eps0, rtol)
    return NormResult(hi, (lo, hi), _rho(phi, vals, dw, hi), it0 + it1)


def _py_norm(phi, vals, dw, eps, rtol):
    def rho(e):
        return _rho(phi, vals, dw, e)

    it0 = 0
    if rho(eps) > 1.0:
        while rho(eps) > 1.0:
            eps *= 2.0
            it0 += 1
        lo, hi = eps / 2, eps
    else:
        while rho(eps) <= 1.0:
            eps /= 2.0
            it0 += 1
        lo, hi = eps, eps * 2
    it1 = 0
    while hi - lo > rtol * hi and it1 < 400:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if rho(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
        it1 += 1
    return lo, hi, it0, it1


def norm(spec: SpaceSpec, f: StepFunction, rtol: float = DEFAULT_RTOL) -> float:
    return luxemburg_norm(spec, f, rtol).value


def disjoint_sum(*fs: StepFunction) -> StepFunction:
    """Sum of disjointly supported step functions (rejects overlap)."""
    pieces = [p for f in fs for p in f.pieces]
    return StepFunction(pieces)


def orth_subadd_check(spec: SpaceSpec, f: StepFunction, g: StepFunction) -> dict:
    if not f.support().disjoint_from(g.support()):
        raise MeasureError("orthogonal subadditivity needs disjoint supports")
    rf, rg = modular(spec, f), modular(spec, g)
    rs = modular(spec, disjoint_sum(f, g))
    return {"ok": rs <= rf + rg + 1e-9 * max(1.0, rf + rg), "rho_sum": rs, "rho_f": rf, "rho_g": rg}


def order_continuity_probe(spec: SpaceSpec, f, scales: Sequence[float], divergence_threshold: float = 1e3) -> dict:
    """AllScalesFinite for step functions; witness views report partial sums per scale."""
    rows = []
    for k in scales:
        if isinstance(f, StepFunction):
            rows.append({"scale": k, "modular": modular(spec, f.scale(k))})
            continue
        ps = f.partial_sum(k)
        rows.append({"scale": k, "partial_sum": ps})
        if ps >= divergence_threshold:
            return {"kind": "DivergesAtScale", "k": k, "partial_sum": ps, "rows": rows}
    return {"kind": "AllScalesFinite", "rows": rows}


def chebyshev_check(spec: SpaceSpec, f: StepFunction, tol: float = 1e-9) -> dict:
    """W(d_f(lam)) phi(lam / ||f||) <= 1 at every piece value lam."""
    if f.is_zero():
        return {"ok": True, "products": []}
    nf = norm(spec, f)
    prods = [spec.w.big_w(distribution(f, lam)) * spec.phi(lam / nf) for lam, _ in f.pieces]
    return {"ok": all(p <= 1 + tol for p in prods), "norm": nf, "products": prods}


def modular_curve(spec: SpaceSpec, f: StepFunction, eps: Sequence[float]) -> list:
    return [(e, scaled_modular(spec, f, e)) for e in eps]
