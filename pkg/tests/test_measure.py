import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from olspace.measure import (Interval, IntervalSet, MeasureError, StepFunction, dilate, distribution,
                             equimeasurable_check, rearrange, sample_step)

F = StepFunction([(1.0, [(0, 1), (5, 6)]), (3.0, [(2, 4)])])


def test_distribution_examples():
    assert distribution(F, 0.5) == 4
    assert distribution(F, 2) == 2
    assert distribution(F, 3) == 0


def test_rearrange_examples():
    fs = rearrange(F)
    assert fs.values == (3.0, 1.0)
    assert fs.breakpoints == (0.0, 2.0, 4.0)
    assert rearrange(StepFunction([(2.0, [(7, 10)])])).breakpoints == (0.0, 3.0)


def test_rearrange_of_decreasing_step_is_identity():
    g = StepFunction([(5.0, [(0, 1)]), (2.0, [(1, 2.5)])])
    fs = rearrange(g)
    assert fs.as_step() == g


def test_equimeasurable_examples():
    assert equimeasurable_check(F, rearrange(F).as_step())
    assert equimeasurable_check(StepFunction.indicator(0, 1), StepFunction.indicator(3, 4))
    assert not equimeasurable_check(StepFunction.indicator(0, 1), StepFunction.indicator(0, 1, 2.0))


def test_dilate_examples():
    one = StepFunction.indicator(0, 1)
    assert dilate(one, 0, 1) == one
    assert dilate(StepFunction.indicator(0, 0.5, 2.0), 0.5, 0.5) == StepFunction.indicator(0.5, 0.75, 2.0)
    assert dilate(one, 0.25, 0.5) == StepFunction.indicator(0.25, 0.75)


def test_dilate_rejects_outside_unit_interval():
    with pytest.raises(MeasureError):
        dilate(StepFunction.indicator(0, 2), 0, 0.5)
    with pytest.raises(MeasureError):
        dilate(StepFunction.indicator(0, 1), 0.5, 0.75)


def test_interval_rules():
    with pytest.raises(MeasureError):
        Interval(1, 1)
    with pytest.raises(MeasureError):
        Interval(-1, 2)
    s = IntervalSet([(2, 3), (0, 1), (1, 1.5)])
    assert s.pairs() == [[0, 1.5], [2, 3]]
    assert s.measure == 2.5


def test_overlapping_supports_rejected():
    with pytest.raises(MeasureError):
        StepFunction([(1.0, [(0, 2)]), (2.0, [(1, 3)])])


def test_equal_values_merge():
    f = StepFunction([(1.0, [(0, 1)]), (1.0, [(3, 4)])])
    assert len(f.pieces) == 1 and f.support_measure == 2


def test_slice_and_cuts():
    E = IntervalSet([(0, 1), (2, 3)])
    assert E.slice(0.5, 1.0).pairs() == [[0.5, 1.0], [2.0, 2.5]]
    parts = E.cuts([0.25, 1.0, 0.5])
    assert [p.measure for p in parts] == [0.25, 1.0, 0.5]
    with pytest.raises(MeasureError):
        E.slice(1.5, 1.0)
    assert IntervalSet([(0, math.inf)]).slice(1, math.inf).pairs() == [[1.0, math.inf]]


def test_json_round_trip():
    assert StepFunction.from_json(F.to_json()) == F


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_rearrangement_properties(seed):
    f = sample_step(np.random.default_rng(seed), length=3.0)
    fs = rearrange(f)
    assert equimeasurable_check(f, fs.as_step())
    assert rearrange(fs.as_step()) == fs
    assert fs.total == pytest.approx(f.support_measure, rel=1e-15)
    assert all(a > b for a, b in zip(fs.values, fs.values[1:]))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0, 0.9), st.floats(0.01, 1.0))
def test_dilate_scales_measures(seed, a, frac):
    b = frac * (1 - a)
    f = sample_step(np.random.default_rng(seed))
    g = dilate(f, a, b)
    assert sorted(v for v, _ in g.pieces) == sorted(v for v, _ in f.pieces)
    for (v, s), (v2, s2) in zip(f.pieces, g.pieces):
        assert s2.measure == pytest.approx(b * s.measure, rel=1e-12, abs=1e-15)
