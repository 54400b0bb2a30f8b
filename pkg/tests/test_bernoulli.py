from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halftsp.analysis import bernoulli_extremes, poisson_binomial, profile_value, reference_extremes


def test_reference_values_to_1e12():
    ref = reference_extremes()
    for name, case in ref.items():
        assert abs(case["result"]["value"] - case["expected"]) <= 1e-12, name
    one = ref["three_edges_exactly_one"]
    assert abs(one["profile_check"] - 9 / 16) <= 1e-12
    even = ref["min_cut_even"]["result"]
    assert np.allclose(even["profile"], [1, 1 / 3, 1 / 3, 1 / 3])


def test_poisson_binomial():
    assert np.allclose(poisson_binomial([0.5, 0.5]), [0.25, 0.5, 0.25])
    pmf = poisson_binomial([0.1, 0.7, 0.3, 1.0])
    assert math.isclose(pmf.sum(), 1.0) and pmf[0] == 0.0
    assert profile_value([1, 0.25, 0.25], lambda k: k == 1) == pytest.approx(9 / 16)


def test_argument_errors():
    with pytest.raises(ValueError):
        bernoulli_extremes(3, 1.5, [0, 1])
    with pytest.raises(ValueError):
        bernoulli_extremes(3, 1.5, [0, 1, 0, 0], sense="best")
    with pytest.raises(ValueError):
        bernoulli_extremes(2, 5.0, [0, 1, 0])


@settings(max_examples=80, deadline=None)
@given(
    st.integers(1, 5),
    st.integers(0, 2**32 - 1),
    st.booleans(),
)
def test_extremes_bound_every_profile_with_the_same_mean(m, seed, pin):
    rng = np.random.default_rng(seed)
    g = rng.random(m + 1)
    ps = rng.random(m)
    if pin:
        ps[0] = 1.0
    mean = float(ps.sum())
    low = bernoulli_extremes(m, mean, g, fixed_ones=int(pin))["value"]
    high = bernoulli_extremes(m, mean, g, fixed_ones=int(pin), sense="max")["value"]
    v = profile_value(ps, g)
    assert low <= v + 1e-9 and v <= high + 1e-9
