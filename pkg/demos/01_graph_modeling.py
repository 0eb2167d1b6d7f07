"""
Modeling with nested hypergraphs
================================

A two-layer toy: an upper and a lower subgraph, each with its own linking
constraint, tied together by a constraint owned by the root graph.
"""

from hiergraph.expr import eq, le
from hiergraph.graph import OptiGraph, aggregate, flatten
from hiergraph.solver import SolveOptions, solve_milp

# Each node owns its variables, local constraints and objective terms.
root = OptiGraph("root")
upper = root.new_subgraph("upper")
lower = root.new_subgraph("lower")

build = upper.add_node("build")
size = build.add_variable("size", 0, 10)
open_ = build.add_variable("open", binary=True)
build.add_constraint(le(size - 10 * open_, 0))
build.add_objective(20 * open_ + 2 * size)

sell = []
for k in range(3):
    node = lower.add_node(f"market{k}")
    q = node.add_variable("q", 0, 4)
    node.add_objective(-(6 + k) * q)
    sell.append(q)

# Edges hold linking constraints.  This one lives on the lower subgraph.
lower.add_link_constraint(le(sell[0] + sell[1] + sell[2], 9), "capacity")
# The root edge couples the two layers: sales cannot exceed what was built.
root.add_link_constraint(le(sell[0] + sell[1] + sell[2] - size, 0), "supply")

print(root.stats())

# Flattening gives one MILP over every node's columns.
model, columns = flatten(root)
sol = solve_milp(model, SolveOptions(mip_gap=0.0))
print("optimal objective", round(sol.objective, 6))
for j, ref in enumerate(columns.refs):
    print(f"  {model.columns[j].name:28s} {sol.values[j] + 0.0:8.3f}")

# Collapsing a subgraph into one node leaves the optimization problem unchanged.
collapsed = aggregate(root, lower)
agg_model, _ = flatten(collapsed.graph)
print("after aggregating 'lower':", collapsed.graph.stats())
print("same optimum:", abs(solve_milp(agg_model, SolveOptions(mip_gap=0.0)).objective - sol.objective) < 1e-9)
