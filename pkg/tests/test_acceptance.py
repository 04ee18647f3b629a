"""Acceptance criteria 1-15; each test records one PASS/FAIL line shown in the terminal summary."""
import json
import math
import random
import struct
import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import ACCEPTANCE
from test_expr import BUILTIN_EQUIV, MALFORMED
from olspace import expr
from olspace.cli import run
from olspace.compare import dominating_weight, dss_check, inclusion_orlicz_check, inclusion_weight_check
from olspace.measure import StepFunction, distribution, equimeasurable_check, rearrange, sample_step
from olspace.orlicz import ConvexSpline, ExpMinusOne, Parsed, Power, PowerLog
from olspace.recipes import RECIPES
from olspace.space import SpaceSpec, chebyshev_check, norm, weight_increments
from olspace.weights import Constant, PiecewiseDecreasing, PowerWeight
from olspace.witness import (disjoint_basic_check, ell_infty_isometry_check, non_order_continuous_family,
                             non_order_continuous_witness, spaceable_witness_infty, spaceable_witness_mixed,
                             spaceable_witness_zero)

INF = math.inf
ONE, HALF, PCD = Constant(1.0), PowerWeight(0.5), PiecewiseDecreasing([0.5, 1.5], [2.0, 1.0, 0.5])
WEIGHTS = [ONE, HALF, PowerWeight(0.75), PCD]
PHIS = [Power(1.5), Power(2), Power(3), PowerLog(2, 1), ExpMinusOne(), ConvexSpline([0, 1, 2], [1, 2, 4])]


@pytest.fixture
def criterion(request):
    lines = request.config.stash[ACCEPTANCE]

    @contextmanager
    def run_criterion(num, title, limit, expect_fail_reason=None):
        rec = {"detail": ""}
        t0 = time.perf_counter()
        try:
            yield rec
            dt = time.perf_counter() - t0
            assert dt < limit, f"took {dt:.2f} s, limit {limit} s"
        except BaseException as e:
            dt = time.perf_counter() - t0
            why = expect_fail_reason or rec["detail"] or str(e).splitlines()[0]
            lines.append(f"FAIL {num} {title} ({dt:.2f} s): {why}")
            raise
        lines.append(f"PASS {num} {title} ({dt:.2f} s < {limit} s) {rec['detail']}".rstrip())

    return run_criterion


def rand_steps(n, seed, length=4.0, **kw):
    streams = np.random.SeedSequence(seed).spawn(n)
    return [sample_step(np.random.default_rng(s), length, **kw) for s in streams]


def dyadic(f, bits=20):
    q = 2.0 ** bits
    pieces = [(v, [(round(iv.lo * q) / q, round(iv.hi * q) / q) for iv in s.intervals
                   if round(iv.hi * q) > round(iv.lo * q)]) for v, s in f.pieces]
    return StepFunction(p for p in pieces if p[1])


def test_c01_rearrangement(criterion):
    with criterion(1, "rearrangement equimeasurable and idempotent", 1.0) as rec:
        fs = rand_steps(1000, 1)
        bad = 0
        for f in fs:
            fs_ = rearrange(f)
            g = fs_.as_step()
            levels = [0.0] + list(fs_.values)
            bad += any(distribution(f, lam) != distribution(g, lam) for lam in levels)
            bad += rearrange(g) != fs_
        rec["detail"] = f"{bad} mismatches over {len(fs)} functions"
        assert bad == 0


def test_c02_norm_oracles(criterion):
    with criterion(2, "Lp and Lorentz norm oracles", 5.0) as rec:
        fs = rand_steps(200, 2)
        worst = 0.0
        for p in (1, 1.5, 2, 3):
            for w in (ONE, HALF, PCD):
                spec = SpaceSpec(INF, Power(p), w)
                for f in fs:
                    r = rearrange(f)
                    dw = weight_increments(w, r.breakpoints)
                    want = math.fsum(v ** p * d for v, d in zip(r.values, dw)) ** (1 / p)
                    worst = max(worst, abs(norm(spec, f) / want - 1))
        rec["detail"] = f"max rel err {worst:.1e}"
        assert worst <= 1e-9


def test_c03_indicator_identity(criterion):
    with criterion(3, "indicator norm identity", 2.0) as rec:
        pairs = [(Power(2), ONE), (Power(1.5), HALF), (PowerLog(2, 1), HALF), (ExpMinusOne(), ONE),
                 (Power(3), PCD), (ConvexSpline([0, 1, 2], [1, 2, 4]), PowerWeight(0.75))]
        worst = 0.0
        for phi, w in pairs:
            spec = SpaceSpec(INF, phi, w)
            for t in np.logspace(-6, 2, 50):
                target = 1.0 / w.big_w(t)
                got = phi(1.0 / norm(spec, StepFunction.indicator(0, t)))
                worst = max(worst, abs(got - target) / target)
        rec["detail"] = f"max rel err {worst:.1e}"
        assert worst <= 1e-8


def test_c04_norm_axioms(criterion):
    with criterion(4, "homogeneity, triangle, lattice, rearrangement invariance", 10.0) as rec:
        rng = np.random.default_rng(4)
        # dyadic endpoints keep the shifted copies exactly equimeasurable
        fs, gs = [dyadic(f) for f in rand_steps(500, 40)], [dyadic(g) for g in rand_steps(500, 41)]
        fails = {"homogeneity": 0, "triangle": 0, "lattice": 0, "rearrangement": 0}
        for i, (f, g) in enumerate(zip(fs, gs)):
            spec = SpaceSpec(INF, PHIS[i % len(PHIS)], WEIGHTS[i % len(WEIGHTS)])
            if isinstance(spec.phi, ExpMinusOne):
                f, g = f.scale(1e-2), g.scale(1e-2)
            nf, ng = norm(spec, f), norm(spec, g)
            c = float(rng.uniform(1e-3, 100))
            fails["homogeneity"] += abs(norm(spec, f.scale(c)) / (c * nf) - 1) > 1e-10
            s = f.add(g)
            ns = norm(spec, s)
            fails["triangle"] += ns > nf + ng + 1e-9 * (nf + ng)
            fails["lattice"] += not (f.dominated_by(s) and nf <= ns + 1e-12 * ns)
            moved = StepFunction((v, [(iv.lo + 7.5, iv.hi + 7.5) for iv in sup.intervals]) for v, sup in f.pieces)
            assert equimeasurable_check(f, moved)
            fails["rearrangement"] += abs(norm(spec, moved) / nf - 1) > 1e-10
        rec["detail"] = f"failures {fails} over 500 cases each"
        assert not any(fails.values())


def test_c05_chebyshev(criterion):
    with criterion(5, "Chebyshev-type bound", 5.0) as rec:
        worst = 0.0
        for i, f in enumerate(rand_steps(500, 5)):
            spec = SpaceSpec(INF, PHIS[i % len(PHIS)], WEIGHTS[i % len(WEIGHTS)])
            if isinstance(spec.phi, ExpMinusOne):
                f = f.scale(1e-2)
            worst = max([worst] + chebyshev_check(spec, f)["products"])
        rec["detail"] = f"max product {worst:.12f}"
        assert worst <= 1 + 1e-9


def test_c06_weight_inclusion(criterion):
    with criterion(6, "weight inclusion", 10.0) as rec:
        triples = [(Power(2), HALF, ONE), (Power(2), ONE, ONE), (PowerLog(2, 1), HALF, ONE),
                   (Power(3), HALF, PowerWeight(0.75)), (Power(1.5), PCD, ONE)]
        total = 0
        for phi, w1, w2 in triples:
            rep = inclusion_weight_check(phi, w1, w2, gamma=1.0, n_samples=100)
            assert rep.condition_verdict.holds and rep.hypothesis_verified and len(rep.empirical) == 100
            total += rep.violations
        rec["detail"] = f"{total} violations over {len(triples)} x 100 samples"
        assert total == 0


def test_c07_phi_inclusion(criterion):
    with criterion(7, "Orlicz-function inclusion", 10.0) as rec:
        cases = [(Parsed("u^2/2"), Power(2), HALF, INF), (Power(2), Parsed("u^2+u^3"), ONE, INF),
                 (Power(2), Power(3), ONE, 1.0), (PowerLog(2, 1), Power(3), HALF, 1.0)]
        total = 0
        consts = []
        for phi1, phi2, w, gamma in cases:
            rep = inclusion_orlicz_check(phi1, phi2, w, gamma=gamma, n_samples=100)
            assert rep.condition_verdict.holds and len(rep.empirical) == 100
            consts.append(rep.condition_verdict.constants["b"])
            total += rep.violations
        rec["detail"] = f"{total} violations over {len(cases)} x 100 samples, b = {consts}"
        assert total == 0


def test_c08_dss(criterion):
    with criterion(8, "DSS verdicts", 3.0) as rec:
        v = dss_check(Power(2), HALF, ONE)
        r20 = dict(v.ratio.samples)[2.0 ** -20]
        assert v.verdict == "DSS" and r20 <= 1e-3
        s = dss_check(Power(2), ONE, HALF)
        seq = s.counterexample
        assert s.verdict == "NotDSS" and s.ratio.c >= 2 - 1e-12
        assert len(seq["terms"]) == 5
        assert all(t["norm_w1"] <= seq["K"] * t["norm_w2"] * (1 + 1e-8) for t in seq["terms"])
        rec["detail"] = f"ratio at 2^-20 = {r20:.3e}; swapped c = {s.ratio.c:g}, K = {seq['K']:g}"


def test_c09_dominating_weight(criterion):
    with criterion(9, "dominating weight", 5.0) as rec:
        phis = [Power(1), Power(1.5), Power(2), PowerLog(2, 1), ExpMinusOne()]
        worst_closed, worst_ratio = 0.0, 0.0
        for i, f in enumerate(rand_steps(50, 9, length=2.0)):
            phi, w = phis[i % len(phis)], WEIGHTS[i % len(WEIGHTS)]
            f = f.scale(1.0 / norm(SpaceSpec(INF, phi, w), f))
            r = dominating_weight(phi, w, f)
            worst_closed = max(worst_closed, abs(r.modular_in_v / r.closed_form - 1))
            samples = r.ratio_verdict.samples
            at40 = dict(samples)[2.0 ** -40]
            worst_ratio = max(worst_ratio, at40)
            tail = [x for _, x in samples[-34:]]
            assert all(b < a for a, b in zip(tail, tail[1:]))
        rec["detail"] = f"closed-form rel err {worst_closed:.1e}, max W/V at 2^-40 {worst_ratio:.2e}"
        assert worst_closed <= 1e-8 and worst_ratio < 1e-2


def _four_constructors(lambdas):
    return {
        "infty": spaceable_witness_infty(Power(2), [Power(4), Power(3)], ONE, N=4, K=40, lambdas=lambdas),
        "zero": spaceable_witness_zero(Power(2), [Power(1)], ONE, N=4, K=40, lambdas=lambdas),
        "mixed": spaceable_witness_mixed(Power(2), [(Power(4), "Infinity"), (Power(1), "Zero")], ONE, N=4, K=40,
                                         lambdas=lambdas),
        # exp(u)-1 underflows before depth 40; this phi also fails the growth condition
        "non-delta2": non_order_continuous_witness(Parsed("u^2*exp(u^2)"), ONE, K=40, lambdas=lambdas,
                                                   epsilons=(1.1,)),
    }


def test_c10a_spaceability_witnesses(criterion):
    with criterion("10a", "spaceability witnesses, lambda in {0.5, 1}", 30.0) as rec:
        worst, min_terms, min_sum = {}, math.inf, math.inf
        for name, b in _four_constructors((0.5, 1.0)).items():
            worst[name] = max(c.modular - c.bound for c in b.finite)
            assert all(c.ok for c in b.finite)
            assert b.divergent
            for c in b.divergent:
                assert c.count >= 20 and min(c.terms) >= 1 - 1e-9 and c.partial_sum >= 20
                min_terms, min_sum = min(min_terms, c.count), min(min_sum, c.partial_sum)
        rec["detail"] = (f"max(modular - bound) {max(worst.values()):.3g}; "
                         f">= {min_terms} tail terms, partial sums >= {min_sum:.3g}")


@pytest.mark.xfail(strict=True, reason="rho(lambda f) <= bound cannot hold for lambda > 1 when f is near the unit "
                                       "sphere; the non-delta2 witness diverges at every lambda > 1 by design")
def test_c10b_spaceability_witnesses_large_lambda(criterion):
    reason = ("unattainable: the modular at lambda in {2, 4} exceeds the bound "
              "(infty/zero 1.33, 5.31; mixed 5.31 > 2; non-delta2 diverges)")
    with criterion("10b", "spaceability witnesses, lambda in {2, 4}", 30.0, expect_fail_reason=reason):
        for b in _four_constructors((2.0, 4.0)).values():
            assert all(c.ok for c in b.finite)


def test_c11_non_delta2_exact(criterion):
    with criterion(11, "non-delta2 witness modular", 1.0) as rec:
        b = non_order_continuous_witness(ExpMinusOne(), ONE, K=30, lambdas=(1.0,), epsilons=(1.1,))
        err = abs(b.finite[0].modular - (1 - 2.0 ** -30))
        rec["detail"] = f"|rho - (1 - 2^-30)| = {err:.1e}"
        assert err <= 1e-10


@pytest.fixture(scope="module")
def eight_witnesses():
    return non_order_continuous_family(ExpMinusOne(), ONE, m=8, K=30)


def test_c12_ell_infty_bracket(criterion, eight_witnesses):
    with criterion(12, "l-infinity isometry bracket", 10.0) as rec:
        rng = np.random.default_rng(12)
        worst_hi, worst_lo = 0.0, math.inf
        for _ in range(20):
            x = rng.normal(size=8) * 10.0 ** rng.uniform(-2, 2)
            r = ell_infty_isometry_check(eight_witnesses, x, delta=0.1)
            assert r["upper_ok"] and r["lower_ok"]
            assert r["lower_bound"] >= 0.9 * r["xmax"] * (1 - 1e-15)
            worst_hi = max(worst_hi, r["norm"] / r["xmax"])
            worst_lo = min(worst_lo, r["norm"] / r["xmax"])
        rec["detail"] = f"||Tx|| / ||x||_inf in [{worst_lo:.6f}, {worst_hi:.12f}]"


def test_c13_disjoint_basic(criterion, eight_witnesses):
    with criterion(13, "disjoint basic inequality", 10.0) as rec:
        spec = eight_witnesses[0].spec
        r = disjoint_basic_check(spec, [b.witness for b in eight_witnesses], coeff_trials=100, seed=13)
        rec["detail"] = f"{r['trials']} trials, max violation {r['max_violation']:.1e}"
        assert r["ok"] and r["trials"] == 100


def _random_expr(rnd, depth=0):
    if depth > 3 or rnd.random() < 0.3:
        return rnd.choice(["u", "1", "2.5", "0.5", "3e-2"])
    k = rnd.randrange(4)
    if k == 0:
        return f"({_random_expr(rnd, depth + 1)} {rnd.choice('+-*/^')} {_random_expr(rnd, depth + 1)})"
    if k == 1:
        return f"-{_random_expr(rnd, depth + 1)}"
    if k == 2:
        return f"{rnd.choice(['exp', 'sqrt', 'abs', 'log'])}({_random_expr(rnd, depth + 1)})"
    return f"max({_random_expr(rnd, depth + 1)}, {_random_expr(rnd, depth + 1)})"


def test_c14_parser(criterion):
    with criterion(14, "expression parser", 1.0) as rec:
        rnd = random.Random(14)
        srcs = [_random_expr(rnd) for _ in range(500)]
        bad_rt = sum(expr.compile_expr(expr.to_source(expr.compile_expr(s))) != expr.compile_expr(s) for s in srcs)
        u = np.logspace(-3, 2, 200)
        bad_eq = sum(any(abs(Parsed(s)(x) - phi(x)) > 1e-12 * phi(x) for x in u) for s, phi in BUILTIN_EQUIV)
        unpositioned = 0
        for s in MALFORMED:
            try:
                expr.compile_expr(s)
                unpositioned += 1
            except expr.ExprError as e:
                unpositioned += not (0 <= e.position <= len(s) and f"column {e.column}" in str(e))
        rec["detail"] = (f"{len(srcs)} round trips ({bad_rt} bad), {len(BUILTIN_EQUIV)} equivalences ({bad_eq} bad), "
                         f"{len(MALFORMED)} malformed ({unpositioned} without position)")
        assert bad_rt == bad_eq == unpositioned == 0 and len(MALFORMED) == 30


def _flip_bit(x, bit):
    (n,) = struct.unpack("<Q", struct.pack("<d", x))
    return struct.unpack("<d", struct.pack("<Q", n ^ (1 << bit)))[0]


def test_c15_end_to_end(criterion, tmp_path, capsys):
    with criterion(15, "witness -> verify end to end", 20.0) as rec:
        paths = []
        for name in sorted(RECIPES):
            path = tmp_path / f"{name}.json"
            assert run(["demo", name, "-o", str(path)]) == 0, name
            paths.append(str(path))
        code = run(["verify", *paths, "--jobs", "4"])
        out = json.loads(capsys.readouterr().out)
        assert code == 0 and out["ok"], out
        src = json.loads((tmp_path / "lorentz-strict-both.json").read_text())
        assert src["kind"] == "mixed"
        src["certificates"]["divergent"][0]["partial_sum"] = _flip_bit(
            src["certificates"]["divergent"][0]["partial_sum"], 40)
        bad = tmp_path / "tampered.json"
        bad.write_text(json.dumps(src))
        proc = subprocess.run([sys.executable, "-m", "olspace.cli", "verify", str(bad)], capture_output=True)
        assert proc.returncode == 1
        rec["detail"] = f"{len(paths)} recipes verified; bit-flipped certificate exits {proc.returncode}"
