import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtrace.metrics import MetricsCounters, dpix, image_error, merge, nrmse


def test_counter_totals():
    c = MetricsCounters(rays=4, c_int=6, eval=10, cpix=1, iterations=2)
    assert c.int_total == 16
    assert c.int_per_ray == 4.0
    assert MetricsCounters().int_per_ray == 0.0
    assert c.as_dict()["int"] == 16


counters = st.builds(MetricsCounters, *(st.integers(0, 10**6) for _ in range(5)))


@given(a=counters, b=counters, c=counters)
def test_merge_is_commutative_monoid(a, b, c):
    assert merge(a, b) == merge(b, a)
    assert merge(merge(a, b), c) == merge(a, merge(b, c))
    assert merge(a, MetricsCounters()) == a
    assert (a + b).int_total == a.int_total + b.int_total


def test_nrmse_and_dpix_examples():
    ref = np.full((2, 2, 3), 100, np.uint8)
    cand = ref.copy()
    assert nrmse(ref, cand) == 0.0
    cand[0, 0] = (110, 100, 100)
    assert nrmse(ref, cand) == pytest.approx(np.sqrt(100 / 12) / 100)
    assert dpix(ref, cand) == (1, 25.0)
    mask = np.array([[True, False], [False, False]])
    assert dpix(ref, cand, mask) == (0, 0.0)
    err = image_error(ref, cand)
    assert err.dpix == 1


def test_black_reference():
    z = np.zeros((1, 1, 3), np.uint8)
    assert nrmse(z, z) == 0.0
    assert nrmse(z, z + 1) == float("inf")


def test_shape_mismatch():
    with pytest.raises(ValueError):
        dpix(np.zeros((2, 2, 3)), np.zeros((2, 3, 3)))


def test_nrmse_ignores_masked_pixels():
    ref = np.full((1, 2, 3), 50, np.uint8)
    cand = ref.copy()
    cand[0, 1] = 0
    mask = np.array([[False, True]])
    assert nrmse(ref, cand) > 0
    assert nrmse(ref, cand, mask) == 0.0
    assert nrmse(ref, cand, np.ones((1, 2), bool)) == 0.0
