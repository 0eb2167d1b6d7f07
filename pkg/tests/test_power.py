import math

import numpy as np
import pytest

from hiergraph.cases import two_bus_case, zero_demand_case
from hiergraph.drivers import RunPlan, run, solve_day_receding
from hiergraph.graph import flatten
from hiergraph.power.build import BoundaryError, BoundaryState, DayBuilder, build_dauc, build_timepoint
from hiergraph.power.data import (
    DA, HA, ST, Bus, DemandData, GeneratorData, LayerSchedule, Line, NetworkData, Schedule,
)


@pytest.fixture(scope="module")
def two_bus_solved():
    net, dem = two_bus_case(1)
    b = DayBuilder(net, dem)
    values, _ = solve_day_receding(b, RunPlan())
    return net, dem, b, values


def test_data_validation():
    with pytest.raises(ValueError):
        GeneratorData("g", "1", "x")
    with pytest.raises(ValueError):
        GeneratorData("g", "1", "d", c_min=5, c_max=1)
    with pytest.raises(ValueError):
        Line("1", "2", 1.0, 5, -5)
    with pytest.raises(ValueError):
        DemandData({"1": [-1.0]}, {"1": [0.0]})
    with pytest.raises(ValueError):
        DemandData({"1": [1.0]}, {"2": [1.0]})


def test_schedule_defaults_and_validation():
    s = Schedule()
    assert (s.ratio, s.ha_per_st) == (4, 12)
    assert s.st.steps(0, 1) == list(range(13, 29))
    assert s.ha.steps(1, 3) == list(range(96 + 4, 96 + 9))
    assert s.da.steps(0, 0) == list(range(1, 25))
    with pytest.raises(ValueError):
        LayerSchedule(ST, 0.25, 4.1, 3.0)
    with pytest.raises(ValueError):
        Schedule(ha=LayerSchedule(HA, 0.25, 2.0, 0.25))  # HA horizon would leave its ST window


def test_demand_layers_and_interpolation():
    d = DemandData({"1": [10.0, 20.0]}, {"1": [30.0, 40.0]}, reserve_uc=0.1, reserve_ed=0.02)
    assert d.load(DA, "1", 2, 1.0) == 20.0
    assert d.load(HA, "1", 6, 0.25) == pytest.approx(35.0)     # t = 1.5 h
    assert d.load(ST, "1", 6, 0.25) == pytest.approx(25.0)
    assert d.load(HA, "1", 40, 0.25) == 40.0                  # held past the data
    assert d.reserve(HA, "1", 6, 0.25) == pytest.approx(0.7)
    assert d.reserve(ST, "1", 6, 0.25) == pytest.approx(2.5)


def test_timepoint_structure():
    net, dem = two_bus_case(1)
    tp = build_timepoint(net, dem, DA, 5)
    assert len(tp.graph.local_nodes) == len(net.buses) + len(net.lines)
    flow = [e for e in tp.graph.local_edges if e.label.startswith("flow")]
    assert len(flow) == 1 and len(flow[0].support) == 3
    # DA points carry the DA unit's commitment only; the ST unit is absent there
    assert tp.has("gd", "x") and "gs" not in tp.gen_node
    st = build_timepoint(net, dem, ST, 5)
    assert st.has("gs", "x") and not st.has("gd", "x")
    ha = build_timepoint(net, dem, HA, 5)
    assert not ha.has("gd", "x") and not ha.has("gs", "x") and ha.has("gs", "Gp")


def test_hour_mapping_and_ownership():
    net, dem = two_bus_case(1)
    b = DayBuilder(net, dem)
    assert [b.hour_of(q) for q in (1, 4, 5, 96, 97, 104)] == [1, 1, 2, 24, 24, 24]
    assert b.owning_st(0) == 0 and b.owning_st(11) == 0 and b.owning_st(12) == 1
    strict = DayBuilder(net, dem, beyond_horizon="error")
    with pytest.raises(BoundaryError):
        strict.hour_of(97)
    with pytest.raises(ValueError):
        DayBuilder(net, dem, beyond_horizon="wrap")


def test_later_day_needs_prior_state():
    net, dem = two_bus_case(2)
    with pytest.raises(BoundaryError):
        DayBuilder(net, dem, day=1)
    b = DayBuilder(net, dem, day=1, prior=BoundaryState({"gd": 50.0, "gs": 0.0}, {"gd": 1.0}, {"gs": 0.0}))
    assert b.first_hour == 25 and b.first_fine == 97
    assert b.build_stuc(0).steps[0] == 97


def test_constraint_placement():
    net, dem = two_bus_case(1)
    b = DayBuilder(net, dem)
    g = b.build_day_graph()
    da = b.da.graph
    # DA commitment logic spans time points of the DA subproblem only
    assert any(e.label.startswith("onoff[gd") for e in da.local_edges)
    # HA rows referencing DA or ST decisions live on the day graph
    root_labels = {e.label.split("[")[0] for e in g.local_edges}
    assert {"dacap_lo", "stcap_hi", "daband_hi", "stband_lo", "su_st"} <= root_labels
    for e in g.local_edges:
        assert len({id(n.graph.parent) for n in e.support}) >= 2
    # every edge is owned by the smallest graph containing its support
    for sub in g.subgraphs:
        for e in sub.local_edges:
            assert all(sub.owns(n) for n in e.support)


def test_dauc_standalone_builder():
    net, dem = two_bus_case(1)
    g = build_dauc(net, dem)
    assert g.label == "DA" and len(g.subgraphs) == 24
    m, _ = flatten(g)
    assert m.num_columns == g.num_variables()


def test_commitment_rules_hold_on_solution(two_bus_solved):
    net, dem, b, v = two_bus_solved
    gd = net.gen_map["gd"]
    x = [v[b.da_commit("gd", h)] for h in range(1, 25)]
    assert all(val in (0.0, 1.0) for val in x)
    # minimum up/down time in hours
    runs, cur, length = [], x[0], 0
    for val in x:
        if val == cur:
            length += 1
        else:
            runs.append((cur, length))
            cur, length = val, 1
    for k, (val, length) in enumerate(runs[1:], 1):  # completed interior runs
        need = gd.min_up_h if val == 1 else gd.min_down_h
        assert length >= need


def test_realized_ramps_respect_limits(two_bus_solved):
    net, dem, b, v = two_bus_solved
    gd = net.gen_map["gd"]
    out = [b.build_haed(i).first.output("gd").value(v) for i in range(96)]
    on = [v[b.da_commit("gd", b.hour_of(q))] for q in range(1, 97)]
    for q in range(1, 96):
        step = out[q] - out[q - 1]
        if on[q] and on[q - 1]:
            crossing = b.hour_of(q + 1) != b.hour_of(q)
            limit = gd.ramp_up * (1.0 if crossing else 0.25)
            assert step <= limit + 1e-6
            assert -step <= gd.ramp_down * (1.0 if crossing else 0.25) + 1e-6
        if on[q]:
            assert gd.c_min - 1e-6 <= out[q] <= gd.c_max + 1e-6
        else:
            assert abs(out[q]) <= 1e-6


def test_boundary_state(two_bus_solved):
    net, dem, b, v = two_bus_solved
    s = b.boundary(v)
    assert set(s.gen_total) == {"gd", "gs"}
    assert s.da_commit["gd"] == v[b.da_commit("gd", 24)]
    assert set(s.to_dict()) == {"gen_total", "da_commit", "st_commit"}


def test_zero_demand_everything_off():
    net, dem = zero_demand_case(3)
    rep = run(net, dem, RunPlan())
    assert rep.realized_cost == pytest.approx(0.0, abs=1e-9)
    assert rep.day_objectives[0] == pytest.approx(0.0, abs=1e-9)
    assert all(r["committed_da"] == 0 and r["committed_st"] == 0 for r in rep.rows)


def test_renewable_only_bus_needs_series():
    net = NetworkData([Bus("1")], [], [GeneratorData("w", "1", "r", c_max=10)])
    dem = DemandData({"1": np.ones(24)}, {"1": np.ones(24)})
    with pytest.raises(KeyError):
        build_timepoint(net, dem, DA, 1)
    assert math.isclose(DemandData.hourly(np.array([]), 3), 0.0)
