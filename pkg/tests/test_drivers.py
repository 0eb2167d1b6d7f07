import csv
import json

import pytest

import hiergraph.drivers as drivers
from hiergraph.cases import two_bus_case
from hiergraph.drivers import REPORT_FIELDS, RunPlan, StageFailure, run, run_monolithic, run_receding
from hiergraph.solver import INFEASIBLE, Solution


@pytest.fixture(scope="module")
def two_day_report():
    net, dem = two_bus_case(2)
    return run_receding(net, dem, days=2)


def test_plan_validation():
    with pytest.raises(ValueError):
        RunPlan(mode="parallel")
    with pytest.raises(ValueError):
        RunPlan(days=0)
    with pytest.raises(ValueError):
        RunPlan(scenario="none")
    assert RunPlan().monolithic.mip_gap == 0.05 and RunPlan().da.mip_gap == 0.005


def test_two_day_receding(two_day_report):
    rep = two_day_report
    assert len(rep.rows) == 192 and len(rep.day_objectives) == 2
    assert [r["step"] for r in rep.rows] == list(range(1, 193))
    assert len(rep.solves) == 2 * 105
    assert rep.realized_cost == pytest.approx(sum(r["cost"] for r in rep.rows))
    assert rep.realized_cost > 0


def test_report_outputs(two_day_report, tmp_path):
    rep = two_day_report
    rep.write_csv(tmp_path / "r.csv")
    rep.write_json(tmp_path / "s.json")
    with open(tmp_path / "r.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == REPORT_FIELDS and len(rows) == 192
    assert float(rows[4]["time"]) == pytest.approx(1.25)
    summary = json.loads((tmp_path / "s.json").read_text())
    assert summary["days"] == 2 and summary["mode"] == "receding"
    assert summary["total_shed_mwh"] == pytest.approx(rep.total_shed_mwh)
    assert "boundary" in summary


def test_monolithic_single_day():
    net, dem = two_bus_case(1)
    rep = run_monolithic(net, dem)
    assert rep.mode == "monolithic" and len(rep.solves) == 1 and len(rep.rows) == 96


def test_demand_too_short():
    net, dem = two_bus_case(1)
    with pytest.raises(ValueError):
        run(net, dem, RunPlan(days=2))


def test_stage_failure(monkeypatch):
    net, dem = two_bus_case(1)
    monkeypatch.setattr(drivers, "solve_milp", lambda *a, **k: Solution(INFEASIBLE))
    with pytest.raises(StageFailure) as err:
        run(net, dem, RunPlan())
    rec = err.value.record()
    assert rec == {"error": "stage_failure", "day": 0, "layer": "DA", "index": 0, "status": INFEASIBLE}
