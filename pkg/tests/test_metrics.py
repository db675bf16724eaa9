import numpy as np
import pytest
from hypothesis import given, strategies as st

from ctmpfit.metrics import mae, smape, summarize

values = st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30)


def test_mae_examples():
    assert mae([1, 2], [1, 2]) == 0
    assert mae([0], [2]) == 2
    assert mae([1, 3], [2, 2]) == 1


def test_smape_examples():
    assert smape([0], [3]) == 100
    assert smape([2.5], [2.5]) == 0
    assert smape([1], [3]) == 50
    assert smape([0, 0], [0, 0]) == 0


def test_length_errors():
    with pytest.raises(ValueError):
        mae([1], [1, 2])
    with pytest.raises(ValueError):
        smape([], [])


def test_summarize():
    s = summarize([1.0, 2.0, 4.0], [1.0, 1.0, 1.0])
    assert s.mae == pytest.approx(4 / 3)
    assert s.std == pytest.approx(np.std([0, 1, 3], ddof=1))
    assert s.l_count == 3


@given(st.data())
def test_smape_symmetric_and_bounded(data):
    a = data.draw(values)
    b = data.draw(st.lists(st.floats(-1e6, 1e6), min_size=len(a), max_size=len(a)))
    v = smape(a, b)
    assert 0 <= v <= 100
    assert v == pytest.approx(smape(b, a), abs=1e-12)
    assert mae(a, b) >= 0


@given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=20), st.integers(-1000, 1000),
       st.integers(-1000, 1000))
def test_mae_translation_invariant(a, shift, c):
    b = [x + shift for x in a]
    assert mae(np.add(a, c), np.add(b, c)) == mae(a, b)
