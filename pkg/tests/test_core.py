import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from configot.core import (
    INFINITE,
    Configuration,
    CountDistribution,
    DimensionError,
    DiscreteMeasure,
    ExtendedCost,
    half_sq_dist,
    validate_configuration,
)

coords = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@pytest.mark.parametrize(
    "x, y, expected",
    [
        (0.0, 0.0, 0.0),
        (0.0, 2.0, 2.0),
        ((0.0, 0.0), (3.0, 4.0), 12.5),
    ],
)
def test_half_sq_dist_examples(x, y, expected):
    assert half_sq_dist(x, y) == expected


def test_half_sq_dist_dimension_mismatch():
    with pytest.raises(DimensionError):
        half_sq_dist((0.0, 1.0), (0.0,))


@given(st.lists(coords, min_size=3, max_size=3), st.lists(coords, min_size=3, max_size=3))
def test_half_sq_dist_symmetric_nonnegative(x, y):
    d = half_sq_dist(x, y)
    assert d >= 0
    assert d == half_sq_dist(y, x)
    assert (d == 0) == (x == y) or d < 1e-300


def test_validate_configuration():
    c = validate_configuration([0.0, 1.0], simple=True)
    assert c.simple and c.n == 2 and c.dim == 1
    with pytest.raises(ValueError):
        validate_configuration([0.0, 0.0], simple=True)
    empty = validate_configuration([])
    assert empty.n == 0 and empty.simple
    with pytest.raises(ValueError):
        validate_configuration([0.0, float("nan")])
    multi = validate_configuration([0.0, 0.0], simple=None)
    assert not multi.simple


def test_validate_with_epsilon():
    with pytest.raises(ValueError):
        validate_configuration([0.0, 1e-12], simple=True, eps=1e-9)
    assert validate_configuration([0.0, 1e-12], simple=True).simple


def test_configuration_is_immutable():
    c = Configuration.of([[0.0, 1.0], [2.0, 3.0]])
    with pytest.raises(ValueError):
        c.points[0, 0] = 5.0


def test_configuration_json_roundtrip():
    c = Configuration.of([[0.0, 1.0], [2.0, 3.0]])
    obj = json.loads(json.dumps(c.to_json()))
    assert obj == {"points": [[0.0, 1.0], [2.0, 3.0]]}
    assert Configuration.from_json(obj) == c


def test_extended_cost_arithmetic():
    a = ExtendedCost(2.0)
    assert (a + INFINITE).is_infinite
    assert (INFINITE + a).is_infinite
    assert min(a, INFINITE) == a
    assert INFINITE > a and a < INFINITE
    assert (a + 1.5).value == 3.5
    assert float(INFINITE) == math.inf
    with pytest.raises(ValueError):
        ExtendedCost(-1.0)
    with pytest.raises(ValueError):
        ExtendedCost(math.inf)


def test_extended_cost_json():
    assert INFINITE.to_json() == "inf"
    assert ExtendedCost.from_json("inf").is_infinite
    assert ExtendedCost.from_json(2.5) == ExtendedCost(2.5)


def test_discrete_measure_invariants():
    m = DiscreteMeasure([[0.0], [1.0]], [0.25, 0.75])
    assert m.total_mass == 1.0
    with pytest.raises(ValueError):
        DiscreteMeasure([[0.0], [1.0]], [0.5])
    with pytest.raises(ValueError):
        DiscreteMeasure([[0.0]], [-1.0])
    with pytest.raises(ValueError):
        DiscreteMeasure([[0.0], [1.0]], [0.5, 0.5], total_mass=2.0)


@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=20).filter(lambda w: sum(w) > 1e-6), st.floats(0.1, 100))
def test_reweighting_preserves_normalization(weights, factor):
    m = DiscreteMeasure(np.arange(len(weights)).reshape(-1, 1), weights)
    n = m.normalized()
    assert abs(n.weights.sum() - 1.0) <= 1e-9
    s = m.scaled(factor)
    assert abs(s.weights.sum() - s.total_mass) <= 1e-9 * max(1.0, s.total_mass)


def test_count_distribution():
    c = CountDistribution([0.5, 0.5])
    assert c.n_max == 1 and c[3] == 0.0
    with pytest.raises(ValueError):
        CountDistribution([0.5, 0.4])
    c = CountDistribution.from_counts([0, 1, 1, 3])
    assert c.pmf.tolist() == [0.25, 0.5, 0.0, 0.25]
