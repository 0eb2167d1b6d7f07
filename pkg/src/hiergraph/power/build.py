"""Graph construction for the DA-UC / ST-UC / HA-ED hierarchy.

Time is indexed by global 1-based steps: DA steps are hours, ST and HA steps
are quarter hours (``Schedule.ratio`` fine steps per hour).  A step labels the
interval that *ends* at ``step * delta`` hours, so the DA hour containing fine
step ``q`` is ``ceil(q / ratio)``.

Each subproblem is a subgraph of time points; each time point holds one node
per bus and one per line.  Constraints between time points of the same
subproblem live on the subproblem graph, constraints between subproblems live
on the day graph.
"""

from __future__ import annotations

import gc
import math
from dataclasses import dataclass, field

from ..expr import EQ, GE, LE, LinExpr, LinearConstraint, VarRef, eq, ge, le, linearize_abs_band
from ..graph import OptiGraph, OptiNode, support_of
from .data import DA, DA_CONV, HA, RENEWABLE, ST, ST_CONV, DemandData, GeneratorData, NetworkData, Schedule

DEFAULT_SCHEDULE = Schedule()


class BoundaryError(ValueError):
    pass


@dataclass
class BoundaryState:
    """Realized state just before a day starts (cold start when empty)."""

    gen_total: dict[str, float] = field(default_factory=dict)   # G+ + G- at the last realized step
    da_commit: dict[str, float] = field(default_factory=dict)   # DA units, last DA hour
    st_commit: dict[str, float] = field(default_factory=dict)   # ST units, last fine step

    def to_dict(self) -> dict:
        return {"gen_total": self.gen_total, "da_commit": self.da_commit, "st_commit": self.st_commit}


@dataclass
class TimePoint:
    graph: OptiGraph
    layer: str
    step: int
    delta: float
    bus: dict[str, OptiNode]
    line: dict[str, OptiNode]
    gen_node: dict[str, OptiNode]

    _refs: dict = field(default_factory=dict, repr=False)

    def var(self, gen: str, name: str) -> VarRef:
        key = (gen, name)
        ref = self._refs.get(key)
        if ref is None:
            ref = self._refs[key] = self.gen_node[gen].var(f"{name}[{gen}]")
        return ref

    def has(self, gen: str, name: str) -> bool:
        node = self.gen_node.get(gen)
        return node is not None and node.has_var(f"{name}[{gen}]")

    def output(self, gen: str) -> LinExpr:
        """Total output ``G+ + G-`` of ``gen``."""
        return LinExpr({self.var(gen, "Gp"): 1.0, self.var(gen, "Gm"): 1.0})


def layer_generators(network: NetworkData, layer: str) -> list[GeneratorData]:
    if layer == DA:
        return [g for g in network.generators if g.category in (DA_CONV, RENEWABLE)]
    return list(network.generators)


def committed_generators(network: NetworkData, layer: str) -> list[GeneratorData]:
    """Units whose on/off binaries are decided in ``layer``."""
    if layer == DA:
        return network.category(DA_CONV)
    if layer == ST:
        return network.category(ST_CONV)
    return []


def uc_cost(tp: TimePoint, gens: list[GeneratorData]) -> LinExpr:
    """Startup plus no-load cost of the units committed at ``tp``."""
    out = LinExpr()
    for g in gens:
        out.iadd(tp.var(g.label, "s"), g.phi_s)
        out.iadd(tp.var(g.label, "x"), g.phi_f * tp.delta)
    return out


def bus_ed_cost(node: OptiNode, unmet_cost: float, gens: list[GeneratorData]) -> LinExpr:
    out = LinExpr({node.var("D"): unmet_cost})
    for g in gens:
        if g.conventional:
            out.iadd(node.var(f"Gp[{g.label}]"), g.phi_v)
            out.iadd(node.var(f"Gm[{g.label}]"), g.phi_o)
        else:
            out.iadd(node.var(f"Gm[{g.label}]"), g.phi_c)
    return out


def ed_cost(tp: TimePoint, network: NetworkData) -> LinExpr:
    """Dispatch cost rate at ``tp`` ($/h): variable, unmet demand, overgeneration, curtailment."""
    present = {g for g in tp.gen_node}
    out = LinExpr()
    for b in network.buses:
        gens = [g for g in network.generators_at(b.label) if g.label in present]
        out.iadd(bus_ed_cost(tp.bus[b.label], b.unmet_cost, gens))
    return out


def _row(terms: dict, sense: str, rhs: float) -> LinearConstraint:
    return LinearConstraint(LinExpr(terms), sense, float(rhs))


def build_timepoint(network: NetworkData, demand: DemandData, layer: str, step: int,
                    schedule: Schedule = DEFAULT_SCHEDULE, label: str | None = None) -> TimePoint:
    """One network snapshot: a node per bus, a node per line, flow-balance and DC-flow edges."""
    delta = schedule.layer(layer).delta
    present = {g.label for g in layer_generators(network, layer)}
    committed = {g.label for g in committed_generators(network, layer)}
    g = OptiGraph(label or f"t{step}", kind="timepoint", layer=layer, step=step)
    bus_nodes: dict[str, OptiNode] = {}
    gen_node: dict[str, OptiNode] = {}
    injections: dict[str, dict] = {}
    for b in network.buses:
        node = g.add_node(f"bus_{b.label}", kind="bus", bus=b.label)
        bus_nodes[b.label] = node
        D = node.add_variable("D", lower=0.0)
        node.add_variable("theta", lower=b.theta_min, upper=b.theta_max)
        cost = {D: b.unmet_cost * delta}
        inj = {D: 1.0}
        for gd in network.generators_at(b.label):
            if gd.label not in present:
                continue
            gen_node[gd.label] = node
            gp = node.add_variable(f"Gp[{gd.label}]", lower=0.0)
            gm = node.add_variable(f"Gm[{gd.label}]", lower=0.0)
            inj[gp] = 1.0
            if gd.category == RENEWABLE:
                node.add_constraint(_row({gp: 1.0, gm: 1.0}, EQ, demand.availability(gd.label, step, delta)))
                cost[gm] = gd.phi_c * delta
            else:
                cost[gp] = gd.phi_v * delta
                cost[gm] = gd.phi_o * delta
            if gd.label in committed:
                x = node.add_variable(f"x[{gd.label}]", binary=True)
                s = node.add_variable(f"s[{gd.label}]", binary=True)
                node.add_variable(f"z[{gd.label}]", binary=True)
                node.add_constraint(_row({gp: 1.0, gm: 1.0, x: -gd.c_min}, GE, 0.0))
                node.add_constraint(_row({gp: 1.0, gm: 1.0, x: -gd.c_max}, LE, 0.0))
                cost[s] = gd.phi_s
                cost[x] = gd.phi_f * delta
        node.add_objective(LinExpr(cost))
        injections[b.label] = inj
    line_nodes: dict[str, OptiNode] = {}
    for ln in network.lines:
        node = g.add_node(f"line_{ln.label}", kind="line", line=ln.label)
        F = node.add_variable("F", lower=ln.f_min, upper=ln.f_max)
        line_nodes[ln.label] = node
        th_j = bus_nodes[ln.from_bus].var("theta")
        th_k = bus_nodes[ln.to_bus].var("theta")
        g.add_link_constraint(_row({F: 1.0, th_j: -ln.susceptance, th_k: ln.susceptance}, EQ, 0.0),
                              f"flow[{ln.label}]")
        injections[ln.to_bus][F] = injections[ln.to_bus].get(F, 0.0) + 1.0
        injections[ln.from_bus][F] = injections[ln.from_bus].get(F, 0.0) - 1.0
    for b in network.buses:
        rhs = demand.load(layer, b.label, step, delta) + demand.reserve(layer, b.label, step, delta)
        g.add_link_constraint(_row(injections[b.label], EQ, rhs), f"balance[{b.label}]")
    return TimePoint(g, layer, step, delta, bus_nodes, line_nodes, gen_node)


@dataclass
class LayerProblem:
    graph: OptiGraph
    layer: str
    index: int
    steps: list[int]
    tps: dict[int, TimePoint]

    @property
    def first(self) -> TimePoint:
        return self.tps[self.steps[0]]


def _ramp_limits(g: GeneratorData, delta: float) -> tuple[float, float, float, float]:
    # limits beyond capacity are vacuous; capping keeps coefficients finite
    cap = g.c_max
    return (min(g.ramp_up * delta, cap), min(g.ramp_down * delta, cap),
            min(g.startup_lim, cap), min(g.shutdown_lim, cap))


def startup_ramp(g: GeneratorData, delta: float, out_prev, out_cur, x_prev, x_cur, s_cur) -> LinearConstraint:
    """Ramp-up row with the startup allowance (<= 0 form)."""
    ru, _, su, _ = _ramp_limits(g, delta)
    body = LinExpr.lift(out_cur) - out_prev
    body.iadd(s_cur, -(su - ru - g.c_min))
    body.iadd(x_cur, -(ru + g.c_min))
    body.iadd(x_prev, g.c_min)
    return le(body, 0.0)


def shutdown_ramp(g: GeneratorData, delta: float, out_prev, out_cur, x_prev, x_cur, z_cur) -> LinearConstraint:
    """Ramp-down row with the shutdown allowance (<= 0 form)."""
    _, rd, _, sd = _ramp_limits(g, delta)
    body = LinExpr.lift(out_prev) - out_cur
    body.iadd(z_cur, -(sd - rd - g.c_min))
    body.iadd(x_prev, -(rd + g.c_min))
    body.iadd(x_cur, g.c_min)
    return le(body, 0.0)


def plain_ramps(g: GeneratorData, delta: float, out_prev, out_cur) -> tuple[LinearConstraint, LinearConstraint]:
    ru, rd, _, _ = _ramp_limits(g, delta)
    return le(LinExpr.lift(out_cur) - out_prev, ru), le(LinExpr.lift(out_prev) - out_cur, rd)


def _window(steps: list[int], k: int, hours: float, delta: float) -> list[int]:
    length = math.ceil(hours / delta - 1e-9)
    if length <= 0:
        return []
    return [t for t in steps if k - length + 1 <= t <= k]


class DayBuilder:
    """Builds the subproblems of one day and wires them onto a day graph.

    Subproblems are created on demand (each pulls in the upstream ones it
    references) and embedded in :attr:`graph` as they are built.
    """

    def __init__(self, network: NetworkData, demand: DemandData, day: int = 0,
                 prior: BoundaryState | None = None, schedule: Schedule = DEFAULT_SCHEDULE,
                 beyond_horizon: str = "hold"):
        if beyond_horizon not in ("hold", "error"):
            raise ValueError("beyond_horizon must be 'hold' or 'error'")
        if day > 0 and prior is None:
            raise BoundaryError(f"day {day} needs the realized state of day {day - 1}")
        self.network = network
        self.demand = demand
        self.day = day
        self.prior = prior or BoundaryState()
        self.schedule = schedule
        self.beyond_horizon = beyond_horizon
        self.graph = OptiGraph(f"day{day + 1}", kind="day", day=day)
        self.da: LayerProblem | None = None
        self.st: dict[int, LayerProblem] = {}
        self.ha: dict[int, LayerProblem] = {}
        self.da_units = network.category(DA_CONV)
        self.st_units = network.category(ST_CONV)

    # step arithmetic ------------------------------------------------------

    @property
    def first_hour(self) -> int:
        return self.day * self.schedule.da.steps_per_day + 1

    @property
    def last_hour(self) -> int:
        return (self.day + 1) * self.schedule.da.steps_per_day

    @property
    def first_fine(self) -> int:
        return self.day * self.schedule.st.steps_per_day + 1

    def hour_of(self, q: int) -> int:
        """DA hour containing fine step ``q``; hours past the day hold the last one."""
        h = -(-q // self.schedule.ratio)
        if h > self.last_hour:
            if self.beyond_horizon == "error":
                raise BoundaryError(f"fine step {q} maps to hour {h}, outside the DA horizon")
            h = self.last_hour
        return h

    def owning_st(self, ha_index: int) -> int:
        return ha_index // self.schedule.ha_per_st

    # upstream references -------------------------------------------------

    def _place(self, prob: LayerProblem, c: LinearConstraint, label: str) -> None:
        support = support_of(c)
        # every node sits in a time-point graph directly under its subproblem
        inside = all(n.graph.parent is prob.graph for n in support)
        if inside and len(support) == 1:
            support[0].add_constraint(c)
        elif inside:
            prob.graph.add_link_constraint(c, label, support)
        else:
            self.graph.add_link_constraint(c, label, support)

    def da_commit(self, g: str, hour: int, name: str = "x"):
        """DA binary ``name`` of unit ``g`` for ``hour`` (prior constant before the day)."""
        if hour < self.first_hour:
            if name != "x":
                raise BoundaryError("startup/shutdown indicators are not carried across days")
            return float(self.prior.da_commit.get(g, 0.0))
        return self.build_dauc().tps[hour].var(g, name)

    def da_output(self, g: str, hour: int) -> LinExpr:
        return self.build_dauc().tps[hour].output(g)

    def st_commit(self, g: str, q: int, owner: int, name: str = "x"):
        """ST binary of unit ``g`` at fine step ``q`` as seen by consumers of ST subproblem ``owner``.

        Steps before ``owner``'s horizon resolve to the previous ST subproblem
        (the latest solve covering them) or to the prior state.
        """
        prob = self.build_stuc(owner)
        if q in prob.tps:
            return prob.tps[q].var(g, name)
        if name != "x":
            raise BoundaryError("startup/shutdown indicators only exist inside an ST horizon")
        if owner > 0:
            prev = self.build_stuc(owner - 1)
            if q in prev.tps:
                return prev.tps[q].var(g, "x")
            raise BoundaryError(f"fine step {q} is not covered by ST subproblem {owner - 1}")
        if q < self.first_fine:
            return float(self.prior.st_commit.get(g, 0.0))
        raise BoundaryError(f"fine step {q} precedes ST subproblem {owner}")

    def realized_output(self, g: str, q: int):
        """Realized output at fine step ``q``: the first point of the HA subproblem ending there."""
        k = q - self.first_fine
        if k < 0:
            return float(self.prior.gen_total.get(g, 0.0))
        return self.build_haed(k).first.output(g)

    # layers ---------------------------------------------------------------

    def _layer(self, layer: str, index: int, label: str) -> LayerProblem:
        sched = self.schedule.layer(layer)
        steps = sched.steps(self.day, index)
        sub = OptiGraph(label, kind="subproblem", layer=layer, index=index)
        tps = {}
        for k, step in enumerate(steps, 1):
            tp = build_timepoint(self.network, self.demand, layer, step, self.schedule, label=f"t{k}")
            sub.add_subgraph(tp.graph)
            tps[step] = tp
        self.graph.add_subgraph(sub)
        return LayerProblem(sub, layer, index, steps, tps)

    def _commitment_logic(self, prob: LayerProblem, units, x_before, delta: float) -> None:
        steps = prob.steps
        for g in units:
            gl = g.label
            for k in steps:
                tp = prob.tps[k]
                x_prev = prob.tps[k - 1].var(gl, "x") if k - 1 in prob.tps else x_before(gl, k - 1)
                body = tp.var(gl, "x") - x_prev - tp.var(gl, "s") + tp.var(gl, "z")
                self._place(prob, eq(body, 0.0), f"onoff[{gl},{k}]")
                up = _window(steps, k, g.min_up_h, delta)
                if up:
                    body = LinExpr()
                    for t in up:
                        body.add_term(prob.tps[t].var(gl, "s"), 1.0)
                    body.add_term(tp.var(gl, "x"), -1.0)
                    self._place(prob, le(body, 0.0), f"minup[{gl},{k}]")
                down = _window(steps, k, g.min_down_h, delta)
                if down:
                    body = LinExpr()
                    for t in down:
                        body.add_term(prob.tps[t].var(gl, "z"), 1.0)
                    body.add_term(tp.var(gl, "x"), 1.0)
                    self._place(prob, le(body, 1.0), f"mindown[{gl},{k}]")

    def _own_ramps(self, prob: LayerProblem, units, x_before, out_before, delta: float) -> None:
        """Startup/shutdown ramp rows for units committed in the same layer."""
        for g in units:
            gl = g.label
            for k in prob.steps:
                tp = prob.tps[k]
                if k - 1 in prob.tps:
                    prev = prob.tps[k - 1]
                    out_prev, x_prev = prev.output(gl), prev.var(gl, "x")
                else:
                    out_prev, x_prev = out_before(gl, k - 1), x_before(gl, k - 1)
                args = (out_prev, tp.output(gl), x_prev, tp.var(gl, "x"))
                self._place(prob, startup_ramp(g, delta, *args, tp.var(gl, "s")), f"su[{gl},{k}]")
                self._place(prob, shutdown_ramp(g, delta, *args, tp.var(gl, "z")), f"sd[{gl},{k}]")

    def _da_unit_links(self, prob: LayerProblem, out_before, band: str) -> None:
        """Capacity, band and ramp rows tying a fine-resolution layer to DA commitments."""
        fine = self.schedule.layer(prob.layer).delta
        coarse = self.schedule.da.delta
        for g in self.da_units:
            gl = g.label
            width = getattr(g, band)
            for q in prob.steps:
                tp = prob.tps[q]
                out = tp.output(gl)
                h = self.hour_of(q)
                x = self.da_commit(gl, h)
                self._place(prob, ge(out - g.c_min * x, 0.0), f"dacap_lo[{gl},{q}]")
                self._place(prob, le(out - g.c_max * x, 0.0), f"dacap_hi[{gl},{q}]")
                if math.isfinite(width):
                    lo_row, hi_row = linearize_abs_band(out, self.da_output(gl, h), width)
                    self._place(prob, lo_row, f"daband_hi[{gl},{q}]")
                    self._place(prob, hi_row, f"daband_lo[{gl},{q}]")
                out_prev = prob.tps[q - 1].output(gl) if q - 1 in prob.tps else out_before(gl, q - 1)
                h_prev = self.hour_of(q - 1)
                if h_prev != h:
                    args = (out_prev, out, self.da_commit(gl, h_prev), x)
                    self._place(prob, startup_ramp(g, coarse, *args, self.da_commit(gl, h, "s")), f"su_da[{gl},{q}]")
                    self._place(prob, shutdown_ramp(g, coarse, *args, self.da_commit(gl, h, "z")), f"sd_da[{gl},{q}]")
                else:
                    up, down = plain_ramps(g, fine, out_prev, out)
                    self._place(prob, up, f"ru[{gl},{q}]")
                    self._place(prob, down, f"rd[{gl},{q}]")

    def build_dauc(self) -> LayerProblem:
        if self.da is not None:
            return self.da
        prob = self._layer(DA, 0, "DA")
        self.da = prob
        delta = self.schedule.da.delta
        prior_x = lambda gl, k: float(self.prior.da_commit.get(gl, 0.0))  # noqa: E731
        prior_out = lambda gl, k: float(self.prior.gen_total.get(gl, 0.0))  # noqa: E731
        self._commitment_logic(prob, self.da_units, prior_x, delta)
        self._own_ramps(prob, self.da_units, prior_x, prior_out, delta)
        return prob

    def build_stuc(self, i: int) -> LayerProblem:
        if i in self.st:
            return self.st[i]
        if not 0 <= i < self.schedule.st.per_day:
            raise IndexError(f"ST subproblem {i} outside 0..{self.schedule.st.per_day - 1}")
        self.build_dauc()
        if i > 0:
            self.build_stuc(i - 1)
            self.build_haed(i * self.schedule.ha_per_st - 1)
        prob = self._layer(ST, i, f"ST{i + 1}")
        self.st[i] = prob
        delta = self.schedule.st.delta

        def x_before(gl, q):
            if i > 0:
                return self.st[i - 1].tps[q].var(gl, "x")
            return float(self.prior.st_commit.get(gl, 0.0))

        self._commitment_logic(prob, self.st_units, x_before, delta)
        self._own_ramps(prob, self.st_units, x_before, self.realized_output, delta)
        self._da_unit_links(prob, self.realized_output, "eps_s")
        return prob

    def build_haed(self, i: int) -> LayerProblem:
        if i in self.ha:
            return self.ha[i]
        if not 0 <= i < self.schedule.ha.per_day:
            raise IndexError(f"HA subproblem {i} outside 0..{self.schedule.ha.per_day - 1}")
        j = self.owning_st(i)
        self.build_stuc(j)
        if i > 0:
            self.build_haed(i - 1)
        prob = self._layer(HA, i, f"HA{i + 1}")
        self.ha[i] = prob
        self._da_unit_links(prob, self.realized_output, "eps")
        st_prob = self.st[j]
        delta = self.schedule.st.delta
        for g in self.st_units:
            gl = g.label
            for q in prob.steps:
                tp = prob.tps[q]
                out = tp.output(gl)
                x = st_prob.tps[q].var(gl, "x")
                self._place(prob, ge(out - g.c_min * x, 0.0), f"stcap_lo[{gl},{q}]")
                self._place(prob, le(out - g.c_max * x, 0.0), f"stcap_hi[{gl},{q}]")
                if math.isfinite(g.eps):
                    lo_row, hi_row = linearize_abs_band(out, st_prob.tps[q].output(gl), g.eps)
                    self._place(prob, lo_row, f"stband_hi[{gl},{q}]")
                    self._place(prob, hi_row, f"stband_lo[{gl},{q}]")
                out_prev = prob.tps[q - 1].output(gl) if q - 1 in prob.tps else self.realized_output(gl, q - 1)
                args = (out_prev, out, self.st_commit(gl, q - 1, j), x)
                self._place(prob, startup_ramp(g, delta, *args, st_prob.tps[q].var(gl, "s")), f"su_st[{gl},{q}]")
                self._place(prob, shutdown_ramp(g, delta, *args, st_prob.tps[q].var(gl, "z")), f"sd_st[{gl},{q}]")
        return prob

    def solve_order(self) -> list[LayerProblem]:
        """DA, then each ST subproblem followed by the HA subproblems it owns."""
        order = [self.build_dauc()]
        per = self.schedule.ha_per_st
        for j in range(self.schedule.st.per_day):
            order.append(self.build_stuc(j))
            order.extend(self.build_haed(i) for i in range(j * per, (j + 1) * per))
        return order

    def build_day_graph(self) -> OptiGraph:
        # construction allocates many small acyclic objects; cyclic GC passes only slow it down
        paused = gc.isenabled()
        gc.disable()
        try:
            self.solve_order()
        finally:
            if paused:
                gc.enable()
        return self.graph

    # reading solutions ---------------------------------------------------------

    def boundary(self, values) -> BoundaryState:
        """Realized state handed to the next day."""
        last_q = (self.day + 1) * self.schedule.st.steps_per_day
        last_ha = self.build_haed(self.schedule.ha.per_day - 1)
        last_st = self.build_stuc(self.schedule.st.per_day - 1)
        state = BoundaryState()
        for g in self.network.generators:
            if g.conventional:
                state.gen_total[g.label] = float(last_ha.first.output(g.label).value(values))
        for g in self.da_units:
            state.da_commit[g.label] = float(round(values[self.da_commit(g.label, self.last_hour)]))
        for g in self.st_units:
            state.st_commit[g.label] = float(round(values[last_st.tps[last_q].var(g.label, "x")]))
        return state


def build_dauc(network: NetworkData, demand: DemandData, day: int = 0, prior: BoundaryState | None = None,
               schedule: Schedule = DEFAULT_SCHEDULE) -> OptiGraph:
    return DayBuilder(network, demand, day, prior, schedule).build_dauc().graph


def build_day_graph(network: NetworkData, demand: DemandData, day: int = 0,
                    prior: BoundaryState | None = None, schedule: Schedule = DEFAULT_SCHEDULE) -> OptiGraph:
    return DayBuilder(network, demand, day, prior, schedule).build_day_graph()
