import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdiff.errors import ConfigurationError
from qdiff.schedules import (ConstantGamma, ConstantT, LinearToZero, Logarithmic, PowerDecay,
                             ScheduleWarning, ZeroGamma, quantum_at, quantum_from_config,
                             schedule_to_config, thermal_at, thermal_from_config, validate_joint)


def test_thermal_values():
    assert thermal_at(Logarithmic(1.0), 0.0) == 1.0
    assert thermal_at(Logarithmic(1.0), 2.0) == pytest.approx(0.5)
    assert thermal_at(ConstantT(0.4), 1e6) == 0.4


def test_quantum_values():
    assert quantum_at(PowerDecay(1.0, 1.0), 3.0) == pytest.approx((0.25, -0.0625))
    assert quantum_at(LinearToZero(1.0, 10.0), 20.0) == (0.0, 0.0)
    assert quantum_at(ZeroGamma(), 7.0) == (0.0, 0.0)


def test_joint_validity():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        r = validate_joint(Logarithmic(1.2), PowerDecay(1.0, 1.0), 0.5625, 0.0, 100.0)
    assert r.t0_exceeds_2M and r.lambda_nonincreasing
    r = validate_joint(ConstantT(0.4), ZeroGamma(), 0.5625, 0.0, 100.0)
    assert r.lambda_max == 0.0 and r.lambda_nonincreasing
    with pytest.warns(ScheduleWarning):
        r = validate_joint(Logarithmic(1.0), ConstantGamma(0.5), 0.1, 0.0, 100.0)
    assert not r.lambda_nonincreasing


def test_m_star_sup_reported():
    r = validate_joint(Logarithmic(1.2), PowerDecay(0.5), 0.5, 0.5, 10.0,
                       m_star=lambda g: (1.0 + g) * 0.5)
    assert r.m_star_sup == pytest.approx(0.75)
    assert not r.t0_exceeds_2m_star_sup


def test_config_round_trip():
    for s in (PowerDecay(0.5, 2.0), LinearToZero(1.0, 3.0), ConstantGamma(0.2), ZeroGamma()):
        assert quantum_from_config(schedule_to_config(s)) == s
    for s in (ConstantT(0.4), Logarithmic(1.2)):
        assert thermal_from_config(schedule_to_config(s)) == s
    with pytest.raises(ConfigurationError):
        thermal_from_config({"kind": "cubic"})
    with pytest.raises(ConfigurationError):
        quantum_from_config({"kind": "power_decay", "gamma0": 1.0, "q": 2})
    with pytest.raises(ConfigurationError):
        ConstantT(-0.1)


SCHEDULES = [ConstantT(0.4), Logarithmic(1.2), ZeroGamma(), ConstantGamma(0.3), PowerDecay(0.5, 1.5),
             LinearToZero(1.0, 5.0)]


@settings(max_examples=50, deadline=None)
@given(ts=st.lists(st.floats(0.0, 1e4), min_size=2, max_size=30))
def test_schedules_nonincreasing(ts):
    t = np.sort(np.array(ts))
    for s in SCHEDULES:
        v = s.at(t)
        v = v[0] if isinstance(v, tuple) else v
        assert np.all(np.diff(v) <= 1e-15)


@settings(max_examples=50, deadline=None)
@given(t=st.floats(0.0, 50.0))
def test_derivative_matches_fd(t):
    h = 1e-6
    for s in (PowerDecay(0.5, 1.5), LinearToZero(1.0, 5.0)):
        if isinstance(s, LinearToZero) and abs(t - s.t_end) < 1e-3:
            continue
        lo = max(t - h, 0.0)
        fd = (s.at(t + h)[0] - s.at(lo)[0]) / (t + h - lo)
        assert s.at(t)[1] == pytest.approx(fd, abs=1e-6)
