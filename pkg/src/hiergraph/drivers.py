"""Receding-horizon and monolithic solution schemes with realized-metric reporting."""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .graph import extract_subproblem, flatten, incident_edges
from .power.build import BoundaryState, DayBuilder, LayerProblem, ed_cost
from .power.data import DA, HA, ST, DemandData, NetworkData, RESERVE_SCENARIOS, Schedule
from .solver import GAP_REACHED, OPTIMAL, SolveOptions, max_violation, solve_milp

log = logging.getLogger(__name__)

RECEDING, MONOLITHIC = "receding", "monolithic"
BOUNDARY_NOTE = "next day starts from the last realized HA point, DA hour 24 and the latest ST commitment"
REPORT_FIELDS = ("time", "committed_da", "committed_st", "overgen_curtail_mw", "shed_mw")


class StageFailure(RuntimeError):
    """A subproblem solve ended without a usable solution."""

    def __init__(self, day: int, layer: str, index: int, status: str):
        super().__init__(f"day {day} {layer} subproblem {index}: solver status {status}")
        self.day, self.layer, self.index, self.status = day, layer, index, status

    def record(self) -> dict:
        return {"error": "stage_failure", "day": self.day, "layer": self.layer,
                "index": self.index, "status": self.status}


def _uc(gap: float) -> SolveOptions:
    return SolveOptions(mip_gap=gap)


@dataclass
class RunPlan:
    mode: str = RECEDING
    days: int = 1
    da: SolveOptions = field(default_factory=lambda: _uc(0.005))
    st: SolveOptions = field(default_factory=lambda: _uc(0.005))
    ha: SolveOptions = field(default_factory=lambda: _uc(0.005))
    monolithic: SolveOptions = field(default_factory=lambda: _uc(0.05))
    scenario: str | None = None
    schedule: Schedule = field(default_factory=Schedule)

    def __post_init__(self):
        if self.mode not in (RECEDING, MONOLITHIC):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.days < 1:
            raise ValueError("days must be at least 1")
        if self.scenario is not None and self.scenario not in RESERVE_SCENARIOS:
            raise ValueError(f"unknown reserve scenario {self.scenario!r}")

    def options(self, layer: str) -> SolveOptions:
        return {DA: self.da, ST: self.st, HA: self.ha}[layer]


@dataclass
class SolveRecord:
    day: int
    layer: str
    index: int
    status: str
    objective: float
    gap: float
    seconds: float
    nodes: int = 0
    max_violation: float = 0.0


@dataclass
class RunReport:
    mode: str
    rows: list[dict] = field(default_factory=list)
    realized_cost: float = 0.0
    solves: list[SolveRecord] = field(default_factory=list)
    day_objectives: list[float] = field(default_factory=list)
    boundary_note: str = BOUNDARY_NOTE

    def series(self, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.rows], dtype=float)

    @property
    def total_shed_mwh(self) -> float:
        return float(sum(r["shed_mw"] * r["delta_h"] for r in self.rows))

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "days": len(self.day_objectives),
            "realized_cost": self.realized_cost,
            "total_shed_mwh": self.total_shed_mwh,
            "day_objectives": self.day_objectives,
            "boundary": self.boundary_note,
            "solves": [vars(s) for s in self.solves],
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=REPORT_FIELDS, extrasaction="ignore", lineterminator="\n")
            w.writeheader()
            for r in self.rows:
                w.writerow({k: (f"{r[k]:.6g}" if isinstance(r[k], float) else r[k]) for k in REPORT_FIELDS})

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def compute_metrics(builder: DayBuilder, values) -> tuple[list[dict], float]:
    """Metrics at the first point of each HA subproblem, plus realized ED cost."""
    sched = builder.schedule
    per = sched.ha_per_st
    rows, cost = [], 0.0
    for i in range(sched.ha.per_day):
        ha = builder.build_haed(i)
        tp = ha.first
        q = tp.step
        st = builder.build_stuc(i // per)
        n_da = sum(values[builder.da_commit(g.label, builder.hour_of(q))] for g in builder.da_units)
        n_st = sum(values[st.tps[q].var(g.label, "x")] for g in builder.st_units)
        over = sum(values[tp.var(g, "Gm")] for g in tp.gen_node)
        shed = sum(values[node.var("D")] for node in tp.bus.values())
        step_cost = ed_cost(tp, builder.network).value(values) * tp.delta
        cost += step_cost
        rows.append({"day": builder.day, "step": q, "time": q * tp.delta, "delta_h": tp.delta,
                     "committed_da": int(round(n_da)), "committed_st": int(round(n_st)),
                     "overgen_curtail_mw": float(over), "shed_mw": float(shed), "cost": float(step_cost)})
    return rows, cost


def _round_binaries(values: dict, refs) -> None:
    for r in refs:
        if r.definition.is_binary:
            values[r] = float(round(values[r]))


def day_objective(graph, values) -> float:
    """Objective of the flattened day model at ``values``."""
    return float(sum(node.objective.value(values) for node in graph.all_nodes()))


def assembled_violation(graph, values) -> float:
    model, cmap = flatten(graph)
    x = np.array([values[r] for r in cmap.refs])
    return max_violation(model.arrays(), x, 1e-6)


def _record(day, layer, index, sol, seconds) -> SolveRecord:
    return SolveRecord(day, layer, index, sol.status, float(sol.objective), float(sol.gap), seconds,
                       int(sol.stats.get("nodes", 0)), float(sol.stats.get("max_violation", 0.0)))


def solve_day_receding(builder: DayBuilder, plan: RunPlan) -> tuple[dict, list[SolveRecord]]:
    graph = builder.build_day_graph()
    index = incident_edges(graph)
    values: dict = {}
    records = []
    for prob in builder.solve_order():
        sp = extract_subproblem(prob.graph, values, index)
        t0 = time.perf_counter()
        sol = solve_milp(sp.model, plan.options(prob.layer))
        rec = _record(builder.day, prob.layer, prob.index, sol, time.perf_counter() - t0)
        records.append(rec)
        if sol.status not in (OPTIMAL, GAP_REACHED) or sol.values is None:
            raise StageFailure(builder.day, prob.layer, prob.index, sol.status)
        new = sp.columns.values(sol.values)
        _round_binaries(new, sp.columns.refs)
        values.update(new)
        log.debug("day %d %s%d: %s obj=%.4f", builder.day, prob.layer, prob.index, sol.status, sol.objective)
    return values, records


def solve_day_monolithic(builder: DayBuilder, plan: RunPlan) -> tuple[dict, list[SolveRecord]]:
    graph = builder.build_day_graph()
    model, cmap = flatten(graph)
    t0 = time.perf_counter()
    sol = solve_milp(model, plan.monolithic)
    rec = _record(builder.day, "day", 0, sol, time.perf_counter() - t0)
    if sol.status not in (OPTIMAL, GAP_REACHED) or sol.values is None:
        raise StageFailure(builder.day, "day", 0, sol.status)
    values = cmap.values(sol.values)
    _round_binaries(values, cmap.refs)
    return values, [rec]


def run(network: NetworkData, demand: DemandData, plan: RunPlan,
        prior: BoundaryState | None = None) -> RunReport:
    if plan.scenario is not None:
        demand = demand.with_reserves(*RESERVE_SCENARIOS[plan.scenario])
    if demand.hours < 24 * plan.days:
        raise ValueError(f"demand data covers {demand.hours} h, plan needs {24 * plan.days} h")
    solve_day = solve_day_receding if plan.mode == RECEDING else solve_day_monolithic
    report = RunReport(plan.mode)
    for day in range(plan.days):
        builder = DayBuilder(network, demand, day, prior if day == 0 else state, plan.schedule)
        values, records = solve_day(builder, plan)
        rows, cost = compute_metrics(builder, values)
        report.rows.extend(rows)
        report.realized_cost += cost
        report.solves.extend(records)
        report.day_objectives.append(day_objective(builder.graph, values))
        state = builder.boundary(values)
    return report


def run_receding(network: NetworkData, demand: DemandData, plan: RunPlan | None = None, **kw) -> RunReport:
    plan = replace(plan or RunPlan(), mode=RECEDING, **kw)
    return run(network, demand, plan)


def run_monolithic(network: NetworkData, demand: DemandData, plan: RunPlan | None = None, **kw) -> RunReport:
    plan = replace(plan or RunPlan(), mode=MONOLITHIC, **kw)
    return run(network, demand, plan)


__all__ = [
    "RECEDING", "MONOLITHIC", "RunPlan", "RunReport", "SolveRecord", "StageFailure",
    "compute_metrics", "run", "run_receding", "run_monolithic", "solve_day_receding",
    "solve_day_monolithic", "day_objective", "assembled_violation", "LayerProblem",
]
