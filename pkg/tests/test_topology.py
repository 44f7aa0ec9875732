import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dimerchain.errors import DomainError
from dimerchain.geometry import DimerSpec
from dimerchain.topology import indicator, indicator_sweep, mirror_pairs


def test_mirror_pairs():
    assert mirror_pairs([1, 2, 3, 4]).tolist() == [2, 1, 4, 3]
    assert mirror_pairs([5, 5, 7, 7]).tolist() == [5, 5, 7, 7]
    with pytest.raises(DomainError):
        mirror_pairs([1, 2, 3])


@pytest.mark.parametrize(
    "v, expected",
    [(np.ones(6), 1.0), (np.array([1.0, -1, 1, -1]), -1.0), (np.array([1.0, 0, 0, 0]), 0.0)],
)
def test_indicator_values(v, expected):
    assert indicator(v) == expected


def test_indicator_zero_vector():
    with pytest.raises(DomainError):
        indicator(np.zeros(4))


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(arrays(float, st.integers(1, 20).map(lambda k: 2 * k), elements=finite))
def test_indicator_properties(v):
    if not np.any(v):
        return
    np.testing.assert_array_equal(mirror_pairs(mirror_pairs(v)), v)
    j = indicator(v)
    assert -1 - 1e-12 <= j <= 1 + 1e-12
    assert indicator(mirror_pairs(v)) == pytest.approx(j, abs=1e-12)


def test_sweep_band_edge_signs():
    plus = indicator_sweep(DimerSpec(1, 2), 40)
    minus = indicator_sweep(DimerSpec(2, 1), 40)
    assert plus.band_edge_value > 0.9
    assert minus.band_edge_value < -0.9
    assert len(plus.entries) == 80
    assert plus.band_edge_eigenvalue <= 1.0 and minus.band_edge_eigenvalue <= 1.0 + 1e-12
    for _, j in plus.entries + minus.entries:
        assert abs(j) <= 1 + 1e-12


def test_sweep_at_fixed_value_and_gapless():
    sweep = indicator_sweep(DimerSpec(1, 2), 40, at=1.0)
    assert abs(sweep.band_edge_eigenvalue - 1.0) < 0.01
    flat = indicator_sweep(DimerSpec(1, 1), 10)
    assert len(flat.entries) == 20
    with pytest.raises(DomainError):
        indicator_sweep(DimerSpec(1, 2), 1)
