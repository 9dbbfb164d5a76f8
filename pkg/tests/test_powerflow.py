import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dgopt.network import Branch, Bus, HourlySeries, NetworkModel, scale_loads
from dgopt.powerflow import (
    InjectionSet,
    VoltageCollapseError,
    loss_index,
    solve_horizon,
    solve_hour,
    sweep,
    voltage_deviation_index,
    write_solution_csv,
)
from oracles import newton_power_flow, two_bus_voltage

# Frozen from the Newton oracle on the bundled data (tests/oracles.py).
NOMINAL_LOSS_KW = 202.67712645598453
NOMINAL_VMIN_PU = 0.9130904793610498
NOMINAL_VDEV_PU = 1.7009444233722641  # one hour, all 33 buses


def two_bus(r_pu=0.1, x_pu=0.0, p_pu=0.1, q_pu=0.0):
    base_kv, base_mva = 12.66, 100.0
    zb = base_kv**2 / base_mva
    return NetworkModel(
        buses=(Bus(1), Bus(2, p_pu * base_mva * 1e3, q_pu * base_mva * 1e3)),
        branches=(Branch(1, 1, 2, r_pu * zb, x_pu * zb),),
        base_kv=base_kv,
        base_mva=base_mva,
    )


def test_nominal_base_case(net33):
    sol = solve_hour(net33)
    assert sol.converged
    assert sol.total_loss_kw == pytest.approx(NOMINAL_LOSS_KW, rel=1e-8)
    v, bus = sol.min_voltage
    assert bus == 18
    assert v == pytest.approx(NOMINAL_VMIN_PU, abs=1e-8)


def test_zero_demand_flat_voltage(net33):
    sol = solve_hour(scale_loads(net33, 0.0))
    np.testing.assert_array_equal(sol.v_mag, 1.0)
    assert sol.total_loss_kw == 0.0
    assert sol.p_slack_kw == 0.0 and sol.q_slack_kvar == 0.0


def test_two_bus_closed_form():
    sol = solve_hour(two_bus())
    expected = (1 + math.sqrt(0.96)) / 2
    assert expected == pytest.approx(two_bus_voltage(0.1, 0.1))
    assert sol.v_mag[1] == pytest.approx(expected, abs=1e-9)
    assert sol.v_mag[1] == pytest.approx(0.98990, abs=1e-5)
    loss_pu = sol.total_loss_kw / 1e5
    assert loss_pu == pytest.approx(0.1 * (0.1 / expected) ** 2, rel=1e-8)
    assert loss_pu == pytest.approx(0.0010206, rel=1e-4)


def test_oracle_equivalence_random_injections(net33):
    rng = np.random.default_rng(42)
    for _ in range(25):
        p_inj = np.zeros(33)
        q_inj = np.zeros(33)
        buses = rng.choice(np.arange(1, 33), size=3, replace=False)
        p_inj[buses] = rng.uniform(0, 2500, size=3)
        q_inj[buses] = rng.uniform(-300, 300, size=3)
        sol = solve_hour(net33, InjectionSet(p_inj, q_inj))
        V, i_amp, loss = newton_power_flow(net33, net33.p_demand - p_inj, net33.q_demand - q_inj)
        assert np.max(np.abs(sol.v_mag - np.abs(V))) <= 1e-6
        assert np.max(np.abs(sol.v_ang - np.angle(V))) <= 1e-6
        np.testing.assert_allclose(sol.i_amp, i_amp, rtol=1e-6)
        assert sol.total_loss_kw == pytest.approx(loss.sum(), rel=1e-6)


def test_branch_loss_is_i_squared_r(net33):
    sol = solve_hour(net33)
    r = np.array([br.r for br in net33.branches])
    np.testing.assert_allclose(sol.loss_kw, 3e-3 * sol.i_amp**2 * r, rtol=1e-9, atol=0)


def test_slack_voltage_exact(net33):
    sol = solve_hour(net33)
    assert sol.v_mag[0] == net33.v_nom and sol.v_ang[0] == 0.0


@given(
    st.lists(st.floats(0, 2000), min_size=3, max_size=3),
    st.lists(st.integers(2, 33), min_size=3, max_size=3),
    st.floats(0.2, 1.2),
)
@settings(max_examples=40, deadline=None)
def test_power_balance(net33, sizes, buses, mult):
    p_inj = np.zeros(33)
    for s, b in zip(sizes, buses):
        p_inj[b - 1] += s
    net = scale_loads(net33, mult)
    sol = solve_hour(net, InjectionSet(p_inj, np.zeros(33)))
    demand = net.p_demand.sum()
    p_gap = sol.p_slack_kw + p_inj.sum() - demand - sol.loss_kw.sum()
    q_gap = sol.q_slack_kvar - net.q_demand.sum() - sol.q_loss_kvar.sum()
    tol = 1e-6 * max(demand, 1.0)
    assert abs(p_gap) <= tol
    assert abs(q_gap) <= tol


@given(st.integers(2, 33), st.floats(0, 1))
@settings(max_examples=40, deadline=None)
def test_injection_never_lowers_min_voltage(net33, bus, frac):
    p_inj = np.zeros(33)
    p_inj[bus - 1] = frac * net33.p_demand[bus - 1]
    base = solve_hour(net33).v_mag.min()
    with_dg = solve_hour(net33, InjectionSet(p_inj, np.zeros(33))).v_mag.min()
    assert with_dg >= base - 1e-12


def test_batch_columns_independent(net33):
    rng = np.random.default_rng(3)
    p = net33.p_demand[:, None] * rng.uniform(0.3, 1.5, size=(1, 7))
    q = net33.q_demand[:, None] * rng.uniform(0.3, 1.5, size=(1, 7))
    together = sweep(net33, p, q)
    for j in range(7):
        alone = sweep(net33, p[:, j], q[:, j])
        np.testing.assert_array_equal(together.v_re[:, j], alone.v_re)
        np.testing.assert_array_equal(together.loss_kw[:, j], alone.loss_kw)
        assert together.iterations[j] == alone.iterations


def test_non_convergence_is_flagged(net33):
    res = sweep(net33, net33.p_demand, net33.q_demand, max_iter=2)
    assert not res.converged and not res.collapsed and res.iterations == 2


def test_voltage_collapse_raises():
    with pytest.raises(VoltageCollapseError):
        solve_hour(two_bus(p_pu=3.0))


def test_horizon_flat_profile_is_24_hours(net33):
    h = solve_horizon(net33, HourlySeries.flat(1.0))
    assert len(h.hours) == 24
    assert h.total_loss_kwh == pytest.approx(24 * NOMINAL_LOSS_KW, rel=1e-8)
    assert voltage_deviation_index(h, 1.0) == pytest.approx(24 * NOMINAL_VDEV_PU, rel=1e-8)


def test_horizon_zero_profile(net33):
    h = solve_horizon(net33, HourlySeries.flat(0.0))
    assert h.total_loss_kwh == 0.0 and loss_index(h) == 0.0
    assert voltage_deviation_index(h, 1.0) == 0.0


def test_horizon_totals_are_hourly_sums(net33, profiles):
    h = solve_horizon(net33, profiles["load"])
    assert h.total_loss_kwh == pytest.approx(sum(s.total_loss_kw for s in h.hours), rel=1e-9)
    assert loss_index(h) == h.total_loss_kwh
    vd = sum(np.abs(s.v_mag - 1.0).sum() for s in h.hours)
    assert h.vdev_puh == pytest.approx(vd, rel=1e-9)


def test_single_hour_horizon(net33):
    h = solve_horizon(net33, [1.0])
    assert loss_index(h) == pytest.approx(solve_hour(net33).total_loss_kw, rel=1e-12)


def test_vdev_hand_examples(net33):
    h = solve_horizon(net33, HourlySeries.flat(0.0))
    assert voltage_deviation_index(h) == 0.0
    # One bus pinned at 0.9 pu every hour, others at 1.0.
    hours = []
    for s in h.hours:
        v = s.v_mag.copy()
        v[5] = 0.9
        hours.append(type(s)(**{**vars(s), "v_mag": v}))
    fake = type(h)(tuple(hours), 0.0, 0.0)
    assert voltage_deviation_index(fake, 1.0) == pytest.approx(2.4)


def test_base_case_vdev_frozen(net33):
    h = solve_horizon(net33, HourlySeries.flat(1.0))
    assert h.vdev_puh == pytest.approx(24 * NOMINAL_VDEV_PU, rel=1e-8)


def test_injection_set_validation():
    with pytest.raises(ValueError):
        InjectionSet([1.0, float("nan")], [0.0, 0.0])
    with pytest.raises(ValueError):
        InjectionSet([1.0], [0.0, 0.0])


def test_solution_dump(net33, tmp_path):
    h = solve_horizon(net33, [1.0, 0.5])
    vpath, bpath = write_solution_csv(h, tmp_path)
    vlines = vpath.read_text().splitlines()
    blines = bpath.read_text().splitlines()
    assert vlines[0] == "hour,bus,v_pu" and len(vlines) == 1 + 2 * 33
    assert blines[0] == "hour,branch,i_amp,loss_kw" and len(blines) == 1 + 2 * 32
    assert blines[-1].startswith("2,32,")
