import inspect
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from inhchannel.errors import DomainError
from inhchannel.los import LosModel, p_los, sample_los


def test_new_model_branches():
    assert p_los(LosModel.NEW_INH, 0.0) == 1.0
    assert p_los(LosModel.NEW_INH, 1.0) == 1.0
    assert p_los(LosModel.NEW_INH, 1.2) == 1.0
    assert p_los(LosModel.NEW_INH, 5.0) == pytest.approx(0.4455, abs=0.001)
    assert p_los(LosModel.NEW_INH, 6.5) == pytest.approx(0.32)
    assert p_los(LosModel.NEW_INH, 6.5 + 32.6) == pytest.approx(0.32 / math.e)


def test_new_model_keeps_printed_gap_at_6p5():
    below = p_los(LosModel.NEW_INH, np.nextafter(6.5, 0))
    assert below == pytest.approx(math.exp(-5.3 / 4.7))
    assert 0 < below - p_los(LosModel.NEW_INH, 6.5) <= 0.004


def test_reference_values():
    assert p_los(LosModel.ITU_ORIGINAL, 40.0) == 0.5
    assert p_los(LosModel.ITU_ORIGINAL, 18.0) == 1.0
    assert p_los(LosModel.ITU_ORIGINAL, 25.0) == pytest.approx(math.exp(-7 / 27))
    assert p_los(LosModel.ITU_UPDATED, 5.0) == pytest.approx(math.exp(-4 / 4.9))
    assert p_los(LosModel.ITU_UPDATED, 20.0) == 0.17
    assert p_los(LosModel.WINNER_B3_ORIGINAL, 55.0) == pytest.approx(math.exp(-1))
    assert p_los(LosModel.WINNER_B3_UPDATED, 10.4) == pytest.approx(math.exp(-1))
    assert p_los(LosModel.WINNER_A1_ORIGINAL, 10.0) == pytest.approx(0.1823, abs=0.001)
    assert p_los(LosModel.WINNER_A1_ORIGINAL, 2.5) == 1.0
    assert p_los(LosModel.WINNER_A1_UPDATED, 2.6) == 1.0
    x = 1.16 - 0.4 * math.log10(20.0)
    assert p_los(LosModel.WINNER_A1_UPDATED, 20.0) == pytest.approx(1 - 0.9 * (1 - x**3) ** (1 / 3))


def test_itu_curves_hold_tail_value_where_exponential_undershoots():
    # exp(-(36.9-18)/27) = 0.497 < 0.5 just before the 37 m switch.
    assert p_los(LosModel.ITU_ORIGINAL, 36.9) == 0.5
    assert p_los(LosModel.ITU_UPDATED, 9.75) == 0.17
    assert p_los(LosModel.ITU_UPDATED, 9.0) == pytest.approx(math.exp(-8 / 4.9))


def test_a1_clamped_far_away():
    assert p_los(LosModel.WINNER_A1_ORIGINAL, 5000.0) == 0.0


@pytest.mark.parametrize("model", list(LosModel))
def test_range_and_monotone(model):
    d = np.linspace(0.0, 1000.0, 10_001)
    p = p_los(model, d)
    assert np.all((p >= 0) & (p <= 1))
    assert np.all(np.diff(p) <= 0)
    far = p_los(model, np.linspace(0.0, 1e4, 10_001))
    assert np.all((far >= 0) & (far <= 1))


@given(st.sampled_from(list(LosModel)), st.floats(0.0, 1e4))
def test_range_property(model, d):
    assert 0.0 <= p_los(model, d) <= 1.0


def test_no_frequency_argument():
    assert list(inspect.signature(p_los).parameters) == ["model", "d"]


def test_negative_distance():
    with pytest.raises(DomainError):
        p_los(LosModel.NEW_INH, -0.1)


def test_accepts_string_ids():
    assert p_los("winner_b3_updated", 1.0) == 1.0


def test_sample_always_los_inside_plateau():
    rng = np.random.default_rng(3)
    assert np.all(sample_los(LosModel.NEW_INH, np.full(1000, 0.5), rng))


def test_sample_never_los_far_away():
    # exp(-199/9.4) < 1e-9
    assert p_los(LosModel.WINNER_B3_UPDATED, 200.0) < 1e-9
    rng = np.random.default_rng(4)
    assert not np.any(sample_los(LosModel.WINNER_B3_UPDATED, np.full(10_000, 200.0), rng))


def test_sample_reproducible():
    a = sample_los(LosModel.NEW_INH, np.full(100, 5.0), np.random.default_rng(9))
    b = sample_los(LosModel.NEW_INH, np.full(100, 5.0), np.random.default_rng(9))
    assert np.array_equal(a, b)
    assert isinstance(sample_los(LosModel.NEW_INH, 5.0, np.random.default_rng(9)), bool)


@pytest.mark.parametrize("model,d", [(LosModel.NEW_INH, 5.0), (LosModel.ITU_UPDATED, 3.0), (LosModel.WINNER_A1_UPDATED, 8.0)])
def test_empirical_frequency(model, d):
    draws = sample_los(model, np.full(100_000, d), np.random.default_rng(11))
    assert abs(draws.mean() - p_los(model, d)) <= 0.01
