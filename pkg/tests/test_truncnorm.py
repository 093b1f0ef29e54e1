import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridsense.truncnorm import gaussian_interval_moments, truncated_moments

mp.mp.dps = 60


def _reference(a, b):
    """Mean and variance of N(0,1) truncated to (a, b], high precision."""
    a, b = mp.mpf(a), mp.mpf(b)
    if a + b < 0:
        m, v = _reference(-b, -a)
        return -m, v
    pdf = lambda t: mp.exp(-t * t / 2) / mp.sqrt(2 * mp.pi)
    Z = (mp.erfc(a / mp.sqrt(2)) - mp.erfc(b / mp.sqrt(2))) / 2
    pa, pb = pdf(a), pdf(b)
    ta = a * pa if mp.isfinite(a) else 0
    tb = b * pb if mp.isfinite(b) else 0
    mean = (pa - pb) / Z
    second = 1 + (ta - tb) / Z
    return float(mean), float(second - mean * mean)


CASES = [
    (-np.inf, np.inf), (-np.inf, 0.0), (0.0, np.inf), (-1.0, 1.0), (2.0, 3.0),
    (10.0, np.inf), (35.0, np.inf), (-np.inf, -40.0), (20.0, 20.5), (8.0, 8.001),
    (-0.1, -0.099), (5.0, 12.0), (-3.0, 30.0),
]


@pytest.mark.parametrize("a, b", CASES)
def test_against_high_precision(a, b):
    m, v = truncated_moments(np.array([a]), np.array([b]))
    mr, vr = _reference(a, b)
    assert m[0] == pytest.approx(mr, rel=1e-10, abs=1e-14)
    assert v[0] == pytest.approx(vr, rel=1e-8)


def test_full_line_is_standard_normal():
    m, v = truncated_moments(np.array([-np.inf]), np.array([np.inf]))
    assert m[0] == pytest.approx(0, abs=1e-15) and v[0] == pytest.approx(1)


def test_location_scale():
    m, v = gaussian_interval_moments(np.array([2.0]), np.array([4.0]), np.array([2.0]), np.array([np.inf]))
    assert m[0] == pytest.approx(2 + 2 * np.sqrt(2 / np.pi))
    assert v[0] == pytest.approx(4 * (1 - 2 / np.pi))


@settings(max_examples=200, deadline=None)
@given(a=st.floats(-50, 50), w=st.floats(1e-6, 100))
def test_moments_inside_interval(a, w):
    b = a + w
    m, v = truncated_moments(np.array([a]), np.array([b]))
    assert a - 1e-9 * max(1, abs(a)) <= m[0] <= b + 1e-9 * max(1, abs(b))
    assert 0 <= v[0] <= min(1.0, w * w / 4) * (1 + 1e-8)
