import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from raps.power_model import (
    PowerModelParams,
    SlotPowerTrace,
    dbm_to_watt,
    energy_efficiency,
    frame_supply_power,
    supply_power,
)

P_MAX = dbm_to_watt(46.0)


def test_table_defaults():
    p = PowerModelParams()
    assert p.p0 == {1: 185.0, 2: 260.0}
    assert p.delta_pm == 4.7
    assert p.p_sleep == 150.0
    assert p.p_max == pytest.approx(39.81, abs=5e-3)
    assert p.p_max_dbm == pytest.approx(46.0)


@pytest.mark.parametrize(
    "m_t, p_tx, expected",
    [
        (2, 0.0, 150.0),
        (2, 10.0, 307.0),
        (1, P_MAX, 185 + 4.7 * P_MAX),
    ],
)
def test_supply_power_examples(params, m_t, p_tx, expected):
    assert supply_power(params, m_t, p_tx) == pytest.approx(expected, rel=1e-12)


def test_supply_power_46dbm_single_chain(params):
    assert supply_power(params, 1, P_MAX) == pytest.approx(372.1, abs=0.05)


@pytest.mark.parametrize("p_tx", [-1.0, 50.0])
def test_supply_power_budget_violation(params, p_tx):
    with pytest.raises(ValueError):
        supply_power(params, 2, p_tx)


@pytest.mark.parametrize("m_t", [0, 3, 4])
def test_supply_power_unsupported_antennas(params, m_t):
    with pytest.raises(ValueError):
        supply_power(params, m_t, 1.0)


def test_dust_below_floor_sleeps(params):
    assert supply_power(params, 2, 1e-13) == params.p_sleep
    assert supply_power(params, 2, 1e-11) > params.p0[2]


def test_frame_supply_examples(params):
    assert frame_supply_power(params, SlotPowerTrace(np.zeros(10), 2)) == 150.0
    assert frame_supply_power(params, SlotPowerTrace([10.0, 0.0], 2)) == pytest.approx(228.5)
    full = frame_supply_power(params, SlotPowerTrace(np.full(10, params.p_max), 2))
    assert full == pytest.approx(447.1, abs=0.05)
    assert full == pytest.approx(params.max_supply(2))


def test_empty_trace_rejected():
    with pytest.raises(ValueError):
        SlotPowerTrace([], 2)


@pytest.mark.parametrize(
    "supply, rate, expected",
    [(150.0, 0.0, 0.0), (300.0, 30e6, 1e5), (447.1, 160e6, 160e6 / 447.1)],
)
def test_energy_efficiency(supply, rate, expected):
    assert energy_efficiency(supply, rate) == pytest.approx(expected)


def test_energy_efficiency_at_pmax_consumption():
    assert energy_efficiency(447.1, 160e6) == pytest.approx(3.58e5, rel=1e-3)


def test_energy_efficiency_rejects_nonpositive_supply():
    with pytest.raises(ValueError):
        energy_efficiency(0.0, 1.0)


@pytest.mark.parametrize(
    "kw",
    [
        {"p_sleep": 200.0},
        {"p0": {1: 300.0, 2: 260.0}},
        {"delta_pm": 0.0},
        {"p_max": -1.0},
        {"p0": {1: 185.0}},
    ],
)
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        PowerModelParams(**kw)


def test_params_roundtrip_dict(params):
    again = PowerModelParams.from_dict(params.to_dict())
    assert again.p0 == params.p0
    assert again.p_max == pytest.approx(params.p_max, rel=1e-14)


power = st.floats(min_value=1e-9, max_value=P_MAX / 2)


@given(m=st.sampled_from([1, 2]), eps=power)
def test_discontinuity_at_zero(m, eps):
    p = PowerModelParams()
    jump = supply_power(p, m, eps) - supply_power(p, m, 0.0)
    assert jump >= p.p0[m] - p.p_sleep > 0


@given(m=st.sampled_from([1, 2]), a=power, b=power)
def test_affinity(m, a, b):
    p = PowerModelParams()
    lhs = supply_power(p, m, a) + supply_power(p, m, b)
    rhs = supply_power(p, m, a + b) + p.p0[m]
    assert lhs == pytest.approx(rhs, rel=1e-12)


@given(st.lists(st.sampled_from([0.0, 1.0, 5.5, 20.0, P_MAX]), min_size=1, max_size=12), st.randoms())
def test_frame_supply_permutation_invariant(trace, rnd):
    p = PowerModelParams()
    shuffled = list(trace)
    rnd.shuffle(shuffled)
    a = frame_supply_power(p, SlotPowerTrace(trace, 2))
    b = frame_supply_power(p, SlotPowerTrace(shuffled, 2))
    assert a == pytest.approx(b, rel=1e-12)
