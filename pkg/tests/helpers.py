"""Builders shared by several test modules."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from hiergraph.expr import BINARY, CONTINUOUS, EQ, GE, LE, LinExpr, LinearConstraint, VariableDef
from hiergraph.graph import OptiGraph
from hiergraph.solver import MilpModel

DATA = Path(__file__).parent / "data"


def load_oracle(name: str) -> list[dict]:
    return json.loads((DATA / name).read_text())


def milp_from_instance(inst: dict) -> MilpModel:
    cols = []
    for j in range(inst["n"]):
        lo = -math.inf if inst["lb"][j] is None else inst["lb"][j]
        hi = math.inf if inst["ub"][j] is None else inst["ub"][j]
        cols.append(VariableDef(f"x{j}", BINARY if j < inst["nb"] else CONTINUOUS, lo, hi))
    rows = []
    for terms, sense, rhs in inst["rows"]:
        body = LinExpr()
        for j, v in terms:
            body.add_term(j, float(v))
        rows.append(LinearConstraint(body, sense, float(rhs)))
    obj = LinExpr({j: float(v) for j, v in enumerate(inst["obj"]) if v})
    return MilpModel(cols, rows, obj)


def random_nested_graph(rng: np.random.Generator, max_vars: int = 50) -> OptiGraph:
    """Random feasible, bounded graph of nested subgraphs with edges at every level.

    Built around an integral point ``x0`` so it always has a solution; all
    variables are boxed so the optimum is finite.
    """
    root = OptiGraph("root")
    graphs = [root]
    n_sub = int(rng.integers(1, 5))
    for k in range(n_sub):
        parent = graphs[int(rng.integers(0, len(graphs)))]
        graphs.append(parent.new_subgraph(f"g{k}"))
    budget = int(rng.integers(8, max_vars + 1))
    n_bin = 0
    refs, x0 = [], {}
    nodes = []
    while budget > 0:
        g = graphs[int(rng.integers(0, len(graphs)))]
        node = g.add_node()
        nodes.append(node)
        for v in range(min(budget, int(rng.integers(1, 5)))):
            if n_bin < 8 and rng.random() < 0.3:
                r = node.add_variable(f"b{v}", binary=True)
                val = int(rng.integers(0, 2))
                n_bin += 1
            else:
                lo = int(rng.integers(-3, 1))
                hi = lo + int(rng.integers(1, 8))
                r = node.add_variable(f"v{v}", lower=lo, upper=hi)
                val = int(rng.integers(lo, hi + 1))
            refs.append(r)
            x0[r] = val
            budget -= 1
        node.add_objective(LinExpr({r: float(rng.integers(-5, 6)) for r in node.refs()}))

    def row(keys):
        body = LinExpr({k: float(rng.integers(-4, 5) or 1) for k in keys})
        lhs = body.value(x0)
        sense = str(rng.choice([LE, GE, EQ], p=[0.45, 0.45, 0.1]))
        slack = float(rng.integers(0, 3))
        rhs = lhs + slack if sense == LE else lhs - slack if sense == GE else lhs
        return LinearConstraint(body, sense, rhs)

    for node in nodes:
        for _ in range(int(rng.integers(0, 3))):
            own = node.refs()
            pick = rng.choice(len(own), size=min(len(own), int(rng.integers(1, 3))), replace=False)
            node.add_constraint(row([own[i] for i in pick]))
    for g in graphs:
        members = g.all_nodes()
        if len(members) < 2:
            continue
        for _ in range(int(rng.integers(1, 4))):
            pick = rng.choice(len(members), size=min(len(members), int(rng.integers(2, 4))), replace=False)
            keys = []
            for i in pick:
                own = members[i].refs()
                keys.append(own[int(rng.integers(0, len(own)))])
            g.add_link_constraint(row(keys))
    return root


def canonical_rows(model: MilpModel, col_key) -> list:
    """Rows as sortable tuples with columns renamed by ``col_key``."""
    out = []
    for r in model.rows:
        terms = tuple(sorted((col_key(j), v) for j, v in r.body.terms.items()))
        out.append((terms, r.sense, r.rhs))
    return sorted(out)
