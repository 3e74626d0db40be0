import math

import pytest
from hypothesis import given, strategies as st

from bhdsim.units import dbm_to_watts, linear_to_db, watts_to_dbm


def test_dbm_to_watts_known_values():
    # 10.9 dBm is the 12.3 mW operating point quoted both ways
    assert dbm_to_watts(10.9) == pytest.approx(12.3e-3, abs=0.05e-3)
    assert dbm_to_watts(0.0) == pytest.approx(1e-3, rel=1e-12)
    # direct evaluation of 10^(-1.7) mW
    assert dbm_to_watts(-17.0) == pytest.approx(19.9526e-6, rel=1e-4)


def test_watts_to_dbm_rejects_nonpositive():
    with pytest.raises(ValueError):
        watts_to_dbm(0.0)
    with pytest.raises(ValueError):
        watts_to_dbm(-1e-3)


@given(st.floats(min_value=-120.0, max_value=60.0))
def test_round_trip_exact_to_1e12(p_dbm):
    again = watts_to_dbm(dbm_to_watts(p_dbm))
    assert math.isclose(again, p_dbm, rel_tol=1e-12, abs_tol=1e-12)


@given(st.floats(min_value=1e-15, max_value=1e3))
def test_round_trip_watts(p_w):
    again = dbm_to_watts(watts_to_dbm(p_w))
    assert math.isclose(again, p_w, rel_tol=1e-12)


def test_linear_to_db():
    assert linear_to_db(100.0) == pytest.approx(20.0, rel=1e-12)
    with pytest.raises(ValueError):
        linear_to_db(0.0)
