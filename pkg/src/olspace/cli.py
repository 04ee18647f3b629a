"""olspace command line: evaluate, check, construct, verify, export."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import compare, expr, orlicz, weights, witness
from .measure import MeasureError, StepFunction, rearrange
from .space import SpaceSpec, ZeroFunction, luxemburg_norm, modular, scaled_modular

DEFAULT_SEED = 0xC0FFEE
EXIT_VERIFY, EXIT_USAGE, EXIT_DOMAIN = 1, 2, 3
DOMAIN_ERRORS = (expr.ExprError, expr.DomainError, orlicz.ValidationError, orlicz.SearchExhausted,
                 MeasureError, ZeroFunction, weights.MassExceedsBudget, witness.PreconditionFailed,
                 ArithmeticError, ValueError)


# --------------------------------------------------------------------------- spec strings


def _json_or(s: str):
    s = s.strip()
    return json.loads(s) if s.startswith("{") else None


def parse_phi(s: str) -> orlicz.OrliczFn:
    """JSON, `power:p`, `powerlog:p,q`, `expm1`, `spline:0,k1;s0,s1` (knots from 0, one slope each), `expr:...` or a bare expression."""
    obj = _json_or(s)
    if obj is not None:
        return orlicz.from_json(obj)
    head, _, rest = s.partition(":")
    head = head.strip().lower()
    if head == "power" and rest:
        return orlicz.Power(float(rest))
    if head == "powerlog" and rest:
        p, _, q = rest.partition(",")
        return orlicz.PowerLog(float(p), float(q or 0))
    if head == "expm1" and not rest:
        return orlicz.ExpMinusOne()
    if head == "spline" and rest:
        knots, _, slopes = rest.partition(";")
        return orlicz.ConvexSpline(_floats(knots), _floats(slopes))
    if head == "expr" and rest:
        return orlicz.Parsed(rest)
    return orlicz.Parsed(s)


def parse_w(s: str) -> weights.WeightFn:
    """JSON, `const:c`, `power:alpha` (t^(alpha-1)), `pcd:b1,b2;v1,v2,v3`, `expr:...` or a bare expression in t."""
    obj = _json_or(s)
    if obj is not None:
        return weights.from_json(obj)
    head, _, rest = s.partition(":")
    head = head.strip().lower()
    if head == "const":
        return weights.Constant(float(rest) if rest else 1.0)
    if head == "power" and rest:
        return weights.PowerWeight(float(rest))
    if head == "pcd" and rest:
        breaks, _, values = rest.partition(";")
        return weights.PiecewiseDecreasing(_floats(breaks), _floats(values))
    if head == "expr" and rest:
        return weights.validated(weights.ParsedWeight(rest))
    return weights.validated(weights.ParsedWeight(s))


def _floats(s: str) -> list:
    return [float(x) for x in s.split(",") if x.strip()]


def parse_gamma(s: str) -> float:
    g = math.inf if s.strip().lower() in ("inf", "infinity") else float(s)
    if not g > 0:
        raise argparse.ArgumentTypeError("gamma must be positive")
    return g


def parse_tagged(s: str) -> tuple:
    spec, _, tag = s.rpartition("@")
    if not spec:
        raise ValueError("tagged family must look like SPEC@inf or SPEC@zero")
    regime = {"inf": "Infinity", "infinity": "Infinity", "zero": "Zero", "0": "Zero"}.get(tag.lower())
    if regime is None:
        raise ValueError(f"unknown regime tag {tag!r}")
    return parse_phi(spec), regime


def _read_doc(src: str):
    if src == "-":
        return json.load(sys.stdin)
    if src.lstrip().startswith(("{", "[")):
        return json.loads(src)
    with open(src) as fh:
        return json.load(fh)


def read_step(src: str) -> StepFunction:
    return StepFunction.from_json(_read_doc(src))


# --------------------------------------------------------------------------- output


def _round(obj, digits=12):
    if isinstance(obj, float):
        return float(f"{obj:.{digits}g}") if math.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: _round(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v, digits) for v in obj]
    return obj


def emit(obj, out=None, full=False):
    out = out or sys.stdout
    out.write(json.dumps(obj if full else _round(obj)) + "\n")


def _write_bundle(doc: dict, path: str | None):
    if path:
        with open(path, "w") as fh:
            json.dump(doc, fh)
            fh.write("\n")
    else:
        emit(doc, full=True)


# --------------------------------------------------------------------------- subcommands


def cmd_rearrange(a):
    emit(rearrange(read_step(a.f)).to_json())


def _spec(a):
    return SpaceSpec(a.gamma, parse_phi(a.phi), parse_w(a.w))


def cmd_norm(a):
    emit(luxemburg_norm(_spec(a), read_step(a.f), a.tol or 1e-12).to_json())


def cmd_modular(a):
    spec, f = _spec(a), read_step(a.f)
    emit({"modular": modular(spec, f) if a.scale is None else scaled_modular(spec, f, 1.0 / a.scale)})


def cmd_check(a):
    c = a.check
    if c == "delta2":
        phi = parse_phi(a.phi)
        v = orlicz.delta2_lK_check(phi, a.regime) if a.lk else orlicz.delta2_check(phi, a.regime)
        emit(v.to_json())
    elif c == "order":
        emit(orlicz.order_check(parse_phi(a.phi), parse_phi(a.psi), a.regime).to_json())
    elif c == "delta-phi":
        emit(orlicz.delta_phi_check(parse_phi(a.phi), parse_phi(a.psi), a.regime).to_json())
    elif c == "inclusion-w":
        rep = compare.inclusion_weight_check(parse_phi(a.phi), parse_w(a.w1), parse_w(a.w2), a.gamma,
                                             a.samples, a.seed, a.jobs)
        emit(rep.to_json())
    elif c == "inclusion-phi":
        rep = compare.inclusion_orlicz_check(parse_phi(a.phi1), parse_phi(a.phi2), parse_w(a.w), a.gamma,
                                             a.samples, a.seed, a.jobs)
        emit(rep.to_json())
    elif c == "dss":
        emit(compare.dss_check(parse_phi(a.phi), parse_w(a.w1), parse_w(a.w2), a.gamma, a.n).to_json())


def _E(a, default):
    return [tuple(iv) for iv in json.loads(a.E)] if a.E else default


def cmd_witness(a):
    k = a.kind
    lambdas = tuple(a.lam) if a.lam else witness.DEFAULT_LAMBDAS
    eps = tuple(a.eps) if a.eps else None
    if k == "dominating-weight":
        doc = compare.dominating_weight_document(parse_phi(a.phi), parse_w(a.w), read_step(a.f), a.gamma)
        _write_bundle(doc, a.output)
        return
    if k == "spaceable-inf":
        b = witness.spaceable_witness_infty(parse_phi(a.phi), [parse_phi(s) for s in a.phis], parse_w(a.w),
                                            _E(a, [(0.0, 1.0)]), a.N, a.K, lambdas, eps, a.gamma)
    elif k == "spaceable-zero":
        b = witness.spaceable_witness_zero(parse_phi(a.phi), [parse_phi(s) for s in a.phis], parse_w(a.w),
                                           _E(a, [(0.0, math.inf)]), a.N, a.K, lambdas, eps, a.gamma)
    elif k == "spaceable-mixed":
        b = witness.spaceable_witness_mixed(parse_phi(a.phi), [parse_tagged(s) for s in a.phis], parse_w(a.w),
                                            _E(a, [(0.0, math.inf)]), a.N, a.K, lambdas, eps, a.t0)
    elif k == "non-oc":
        b = witness.non_order_continuous_witness(parse_phi(a.phi), parse_w(a.w), _E(a, [(0.0, 1.0)]), a.K, eps,
                                                 tuple(a.lam) if a.lam else (1.0,), a.gamma)
    elif k == "non-inclusion":
        b = witness.non_inclusion_witness(parse_phi(a.phi1), parse_phi(a.phi2), parse_w(a.w), a.gamma, a.N,
                                          _E(a, None), eps or (1.0,))
    else:  # lorentz-strict
        b = witness.strict_lorentz_witness(a.p, parse_w(a.w), a.side, (a.N, a.K), lambdas, eps)
    _write_bundle(b.to_json(), a.output)


def _verify_one(path: str, tol: float) -> dict:
    doc = _read_doc(path)
    if doc.get("kind") == "dominating_weight":
        problems = compare.verify_dominating_weight(doc, tol)
    else:
        problems = witness.verify_bundle(doc, tol).problems
    return {"bundle": path, "ok": not problems, "problems": problems}


def cmd_verify(a):
    tol = a.tol or 1e-12
    if a.jobs > 1 and len(a.bundles) > 1:
        with ThreadPoolExecutor(a.jobs) as pool:
            rows = list(pool.map(lambda p: _verify_one(p, tol), a.bundles))
    else:
        rows = [_verify_one(p, tol) for p in a.bundles]
    ok = all(r["ok"] for r in rows)
    emit(rows[0] if len(rows) == 1 else {"ok": ok, "results": rows})
    return 0 if ok else EXIT_VERIFY


def cmd_export_curve(a):
    if a.f:
        spec, f = _spec(a), read_step(a.f)
        nf = luxemburg_norm(spec, f).value
        eps = [nf * 2.0 ** (j / 4) for j in range(-a.points // 2, a.points // 2 + 1)]
        rows = [(e, scaled_modular(spec, f, e)) for e in eps]
        sys.stdout.write(compare.export_csv(rows, ["epsilon", "modular"]))
    else:
        if not (a.w1 and a.w2):
            raise ValueError("export-curve needs --w1 and --w2, or --phi/--w/--f")
        rows = compare.weight_ratio_rows(parse_w(a.w1), parse_w(a.w2), a.points)
        sys.stdout.write(compare.export_csv(rows, ["t", "W1", "W2", "ratio"]))


def cmd_demo(a):
    from .recipes import RECIPES

    if a.name == "list":
        emit(sorted(RECIPES))
        return
    if a.name not in RECIPES:
        raise ValueError(f"unknown recipe {a.name!r}; try `olspace demo list`")
    argv = ["witness", *RECIPES[a.name]] + (["-o", a.output] if a.output else [])
    return run(argv)


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=lambda s: int(s, 0), default=argparse.SUPPRESS,
                        help="sampling seed (default: $OLSPACE_SEED or 0xC0FFEE)")
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS,
                        help="override the default relative tolerance")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker threads")
    p = argparse.ArgumentParser(prog="olspace", description=__doc__, parents=[common])
    sub = p.add_subparsers(dest="cmd", required=True)

    def leaf(group, name, **kw):
        return group.add_parser(name, parents=[common], **kw)

    def space_args(q, f=True):
        q.add_argument("--phi", required=True)
        q.add_argument("--w", default="const:1")
        q.add_argument("--gamma", type=parse_gamma, default=math.inf)
        if f:
            q.add_argument("--f", required=True, help="step function JSON (file, inline, or - for stdin)")

    q = leaf(sub, "rearrange")
    q.add_argument("--f", required=True)
    q.set_defaults(fn=cmd_rearrange)
    q = leaf(sub, "norm")
    space_args(q)
    q.set_defaults(fn=cmd_norm)
    q = leaf(sub, "modular")
    space_args(q)
    q.add_argument("--scale", type=float, default=None, help="evaluate rho(scale * f)")
    q.set_defaults(fn=cmd_modular)

    q = sub.add_parser("check")
    cs = q.add_subparsers(dest="check", required=True)
    c = leaf(cs, "delta2")
    c.add_argument("--phi", required=True)
    c.add_argument("--regime", default="Global", choices=["Zero", "Infinity", "Global"])
    c.add_argument("--lk", action="store_true", help="use the (l, K) form")
    for name in ("order", "delta-phi"):
        c = leaf(cs, name)
        c.add_argument("--phi", required=True)
        c.add_argument("--psi", required=True)
        c.add_argument("--regime", default="Global" if name == "order" else "Infinity",
                       choices=["Global", "AtInfinity"] if name == "order" else ["Zero", "Infinity"])
    c = leaf(cs, "inclusion-w")
    c.add_argument("--phi", required=True)
    c.add_argument("--w1", required=True)
    c.add_argument("--w2", required=True)
    c.add_argument("--gamma", type=parse_gamma, default=1.0)
    c.add_argument("--samples", type=int, default=100)
    c = leaf(cs, "inclusion-phi")
    c.add_argument("--phi1", required=True)
    c.add_argument("--phi2", required=True)
    c.add_argument("--w", default="const:1")
    c.add_argument("--gamma", type=parse_gamma, default=1.0)
    c.add_argument("--samples", type=int, default=100)
    c = leaf(cs, "dss")
    c.add_argument("--phi", required=True)
    c.add_argument("--w1", required=True)
    c.add_argument("--w2", required=True)
    c.add_argument("--gamma", type=parse_gamma, default=1.0)
    c.add_argument("--n", type=int, default=5)
    q.set_defaults(fn=cmd_check)

    q = sub.add_parser("witness")
    ws = q.add_subparsers(dest="kind", required=True)
    for name in ("spaceable-inf", "spaceable-zero", "spaceable-mixed", "non-oc", "non-inclusion",
                 "dominating-weight", "lorentz-strict"):
        c = leaf(ws, name)
        c.add_argument("-o", "--output", default=None)
        c.add_argument("--w", default="const:1")
        c.add_argument("--E", default=None, help='JSON list of [lo, hi] pairs, e.g. "[[0, 1]]"')
        c.add_argument("--lam", type=float, action="append", help="finiteness scale (repeatable)")
        c.add_argument("--eps", type=float, action="append", help="divergence scale (repeatable)")
        c.add_argument("--N", type=int, default=20 if name == "non-inclusion" else 4)
        c.add_argument("--K", type=int, default=40)
        gamma_default = {"non-inclusion": 1.0, "spaceable-inf": None, "non-oc": None}.get(name, math.inf)
        c.add_argument("--gamma", type=parse_gamma, default=gamma_default)
        if name in ("spaceable-inf", "spaceable-zero", "spaceable-mixed", "non-oc", "dominating-weight"):
            c.add_argument("--phi", required=True)
        if name.startswith("spaceable"):
            c.add_argument("--phis", action="append", required=True,
                           help="target family; repeat for phi_1, phi_2, ... (mixed: SPEC@inf or SPEC@zero)")
        if name == "spaceable-mixed":
            c.add_argument("--t0", type=float, default=1.0, help="measure of the Infinity part F1")
        if name == "non-inclusion":
            c.add_argument("--phi1", required=True)
            c.add_argument("--phi2", required=True)
        if name == "dominating-weight":
            c.add_argument("--f", required=True)
        if name == "lorentz-strict":
            c.add_argument("--p", type=float, required=True)
            c.add_argument("--side", default="right", type=str.capitalize, choices=["Left", "Right", "Both"])
    q.set_defaults(fn=cmd_witness)

    q = leaf(sub, "verify")
    q.add_argument("bundles", nargs="+", help="bundle JSON files (- for stdin)")
    q.set_defaults(fn=cmd_verify)

    q = leaf(sub, "export-curve")
    q.add_argument("--w1")
    q.add_argument("--w2")
    q.add_argument("--phi")
    q.add_argument("--w", default="const:1")
    q.add_argument("--gamma", type=parse_gamma, default=math.inf)
    q.add_argument("--f")
    q.add_argument("--points", type=int, default=60)
    q.set_defaults(fn=cmd_export_curve)

    q = leaf(sub, "demo", help="run a shipped witness recipe (`demo list` shows them)")
    q.add_argument("name")
    q.add_argument("-o", "--output", default=None)
    q.set_defaults(fn=cmd_demo)
    return p


def _error_payload(e: Exception) -> dict:
    d = {"error": type(e).__name__, "message": str(e)}
    if isinstance(e, expr.ExprError):
        d["column"] = e.column
    if getattr(e, "k", None) is not None:
        d["k"] = e.k
    return d


def run(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if getattr(a, "seed", None) is None:
        env = os.environ.get("OLSPACE_SEED")
        a.seed = int(env, 0) if env else DEFAULT_SEED
    a.tol = getattr(a, "tol", None)
    a.jobs = getattr(a, "jobs", 1)
    try:
        return a.fn(a) or 0
    except (OSError, json.JSONDecodeError) as e:
        sys.stderr.write(json.dumps(_error_payload(e)) + "\n")
        return EXIT_USAGE
    except DOMAIN_ERRORS as e:
        sys.stderr.write(json.dumps(_error_payload(e)) + "\n")
        return EXIT_DOMAIN


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
