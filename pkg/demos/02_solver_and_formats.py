"""
The built-in MILP solver and MPS/LP files
=========================================

Small models are solved by a bounded-variable simplex inside best-bound
branch and bound; wider ones go to HiGHS.  Models can be written to MPS or LP
and read back.
"""

from hiergraph.expr import BINARY, LinExpr, LinearConstraint, VariableDef
from hiergraph.solver import (
    MilpModel, SolveOptions, export_lp, export_mps, parse_lp, parse_mps, solve_lp, solve_milp,
)

# A knapsack with a continuous filler item.
weights = [3, 4, 5, 6, 7]
values = [4, 5, 7, 8, 9]
cols = [VariableDef(f"item{j}", BINARY, 0, 1) for j in range(5)] + [VariableDef("filler", lower=0, upper=1)]
cap = LinearConstraint(LinExpr({**{j: float(w) for j, w in enumerate(weights)}, 5: 1.0}), "<=", 15.0)
model = MilpModel(cols, [cap], LinExpr({**{j: -float(v) for j, v in enumerate(values)}, 5: -0.1}))

relaxed = solve_lp(model)
print("LP relaxation bound:", relaxed.objective)

for gap in (0.0, 0.2):
    sol = solve_milp(model, SolveOptions(mip_gap=gap, backend="native"))
    print(f"gap target {gap:4.2f}: status={sol.status} objective={sol.objective} "
          f"bound={sol.best_bound:.4f} gap={sol.gap:.4f} nodes={sol.stats['nodes']}")

# Round trip through both text formats.
mps = export_mps(model)
print(mps.decode().splitlines()[:6])
for name, again in (("MPS", parse_mps(mps)), ("LP", parse_lp(export_lp(model)))):
    print(name, "re-solved:", solve_milp(again, SolveOptions(mip_gap=0.0)).objective)
