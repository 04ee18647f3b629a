import math
import struct

import numpy as np
import pytest

from olspace.measure import StepFunction
from olspace.orlicz import ExpMinusOne, Parsed, Power
from olspace.space import SpaceSpec, order_continuity_probe
from olspace.weights import Constant, PowerWeight
from olspace.witness import (PreconditionFailed, WitnessBundle, disjoint_basic_check, ell_infty_isometry_check,
                             non_inclusion_witness, non_order_continuous_family, non_order_continuous_witness,
                             spaceable_witness_infty, spaceable_witness_mixed, spaceable_witness_zero,
                             strict_lorentz_witness, verify_bundle)

ONE, HALF = Constant(1.0), PowerWeight(0.5)


def flip_bit(x: float, bit: int) -> float:
    (n,) = struct.unpack("<Q", struct.pack("<d", x))
    return struct.unpack("<d", struct.pack("<Q", n ^ (1 << bit)))[0]


@pytest.fixture(scope="module")
def infty():
    return spaceable_witness_infty(Power(2), [Power(4)], ONE, N=2, K=30, lambdas=(1.0, 1e-3))


@pytest.fixture(scope="module")
def zero():
    return spaceable_witness_zero(Power(2), [Power(1)], ONE, N=2, K=30, lambdas=(1.0,))


@pytest.fixture(scope="module")
def non_oc():
    return non_order_continuous_witness(ExpMinusOne(), ONE, K=30, epsilons=(1.0, 1.1))


def test_infty_example(infty):
    assert infty.ok
    assert infty.finite[0].modular <= 1.0
    assert infty.finite[1].modular <= 1e-6 * infty.finite[0].modular * (1 + 1e-9)
    for c in infty.divergent:
        assert c.count >= 30 - c.k0 and c.partial_sum >= 30 - c.k0
        assert all(t >= 1 - 1e-9 for t in c.terms)
    sets = [s for f in infty.families for s in f.sets]
    assert sum(s.measure for s in sets) == pytest.approx(infty.witness.support_measure, rel=1e-12)
    assert all(iv.hi <= 1.0 for s in sets for iv in s.intervals)


def test_zero_example(zero):
    assert zero.ok and zero.finite[0].modular <= 1.0
    assert all(c.partial_sum >= c.count * (1 - 1e-9) for c in zero.divergent)
    with pytest.raises(ValueError):
        spaceable_witness_zero(Power(2), [Power(1)], ONE, N=2, K=5, gamma=10.0)
    empty = spaceable_witness_zero(Power(2), [Power(1)], ONE, N=2, K=0)
    assert empty.witness.is_zero() and not empty.finite and not empty.divergent


def test_precondition_gate():
    with pytest.raises(PreconditionFailed):
        spaceable_witness_infty(Power(2), [Power(1.5)], ONE, N=2, K=5)
    with pytest.raises(ValueError):
        spaceable_witness_infty(Power(2), [Power(4)], ONE, N=2, K=65)


def test_mixed_bound_and_degenerate_splits(infty, zero):
    mixed = spaceable_witness_mixed(Power(2), [(Power(4), "Infinity"), (Power(1), "Zero")], ONE, N=2, K=30,
                                    lambdas=(1.0,))
    assert mixed.ok and mixed.finite[0].bound == 2.0 and mixed.finite[0].modular <= 2.0
    only_inf = spaceable_witness_mixed(Power(2), [(Power(4), "Infinity")], ONE, E=[(0.0, 1.0)], N=2, K=30,
                                       lambdas=(1.0, 1e-3))
    assert only_inf.witness == infty.witness
    assert [c.to_json() for c in only_inf.divergent] == [c.to_json() for c in infty.divergent]
    only_zero = spaceable_witness_mixed(Power(2), [(Power(1), "Zero")], ONE, N=2, K=30, lambdas=(1.0,))
    assert only_zero.witness == zero.witness
    assert [c.to_json() for c in only_zero.divergent] == [c.to_json() for c in zero.divergent]


def test_non_oc_example(non_oc):
    assert non_oc.finite[0].modular == pytest.approx(1 - 2.0 ** -30, rel=1e-12)
    assert [c.eps for c in non_oc.divergent] == [1.1]  # eps = 1 makes no claim
    c = non_oc.divergent[0]
    assert c.k0 == 11 and c.count == 20 and c.partial_sum >= 20
    probe = order_continuity_probe(non_oc.spec, non_oc, [1.0, 1.5, 3.0])
    assert probe["kind"] == "DivergesAtScale" and probe["k"] == 1.5


def test_non_oc_rejects_delta2():
    with pytest.raises(PreconditionFailed):
        non_order_continuous_witness(Power(2), ONE, K=10)


def test_non_oc_superexponential():
    b = non_order_continuous_witness(Parsed("u^2*exp(u^2)"), ONE, K=40, epsilons=(1.1,))
    assert b.ok and b.divergent[0].count >= 20


def test_non_inclusion():
    b = non_inclusion_witness(ExpMinusOne(), Power(2), ONE, N_max=20)
    assert b.finite[0].modular < 1 - 2.0 ** -20 + 1e-8
    assert b.divergent[0].partial_sum >= 18
    assert verify_bundle(b).ok


def test_round_trip_and_verify(infty, zero, non_oc):
    for b in (infty, zero, non_oc):
        text = b.dumps()
        again = WitnessBundle.from_json(text)
        assert again.dumps() == text
        assert verify_bundle(text).ok


def test_monotone_truncation():
    sums = []
    for K in (10, 20, 30):
        b = non_order_continuous_witness(ExpMinusOne(), ONE, K=K, epsilons=(1.1,))
        sums.append(b.divergent[0].partial_sum)
        assert b.finite[0].modular == pytest.approx(1 - 2.0 ** -K, rel=1e-12)
    assert sums[0] < sums[1] < sums[2]


@pytest.mark.parametrize("mutate", ["bit", "value", "partition", "certificate"])
def test_tampering_detected(infty, mutate):
    d = infty.to_json()
    if mutate == "bit":
        d["families"][0]["values"][3] = flip_bit(d["families"][0]["values"][3], 30)
    elif mutate == "value":
        d["sequences"]["1"]["values"][2] *= 1 + 1e-3
    elif mutate == "partition":
        d["partitions"]["1"][0][0][1] += 1e-3
    else:
        d["certificates"]["finite"][0]["modular"] *= 1 + 1e-9
    assert not verify_bundle(d).ok
    assert verify_bundle(infty.to_json()).ok


@pytest.mark.parametrize("bit", range(13, 64, 5))
def test_certificate_bit_flip_detected(infty, bit):
    # bits below 13 change the value by less than the 1e-12 verification tolerance
    d = infty.to_json()
    d["certificates"]["divergent"][0]["partial_sum"] = flip_bit(d["certificates"]["divergent"][0]["partial_sum"], bit)
    assert not verify_bundle(d).ok


def test_malformed_bundle():
    rep = verify_bundle({"kind": "infty"})
    assert not rep.ok and "malformed" in rep.problems[0]


def test_ell_infty_examples():
    bundles = non_order_continuous_family(ExpMinusOne(), ONE, m=2, K=30)
    r = ell_infty_isometry_check(bundles, [1.0, 0.0])
    assert r["upper_ok"] and r["lower_ok"] and r["norm"] <= 1 + 1e-8
    assert ell_infty_isometry_check(bundles, [0.0, 0.0])["norm"] == 0.0
    r = ell_infty_isometry_check(bundles, [1.0, -1.0], delta=0.1)
    assert r["upper_ok"] and r["lower_ok"] and 0.9 <= r["norm"] <= 1 + 1e-8
    with pytest.raises(ValueError):
        ell_infty_isometry_check(bundles + bundles[:1], [1.0, 1.0, 1.0])


def test_disjoint_basic_examples():
    spec = SpaceSpec(math.inf, Power(2), HALF)
    fs = [StepFunction.indicator(n, n + 1) for n in range(6)]
    r = disjoint_basic_check(spec, fs, coeff_trials=[np.ones(6)])
    assert r["ok"] and all(a <= b for a, b in zip(r["norms"][0], r["norms"][0][1:]))
    assert disjoint_basic_check(spec, fs[:1])["ok"]
    assert disjoint_basic_check(spec, fs, coeff_trials=30, seed=3)["ok"]
    with pytest.raises(ValueError):
        disjoint_basic_check(spec, [fs[0], StepFunction.indicator(0.5, 2)])


def test_strict_lorentz():
    b = strict_lorentz_witness(2, ONE, "Right", depth=(2, 30))
    assert b.ok and [f.phi for f in b.families] == [Power(3), Power(2.5)]
    with pytest.raises(ValueError):
        strict_lorentz_witness(1, ONE, "Left")
    both = strict_lorentz_witness(2, ONE, "Both", depth=(2, 20))
    assert both.kind == "mixed" and both.ok
    assert {f.regime for f in both.families} == {"Infinity", "Zero"}
