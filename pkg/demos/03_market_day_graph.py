"""
The three-layer market day as one graph
=======================================

One day holds a day-ahead unit commitment (24 hourly points), eight
short-term commitments (16 quarter-hour points each, every 3 h) and 96
hour-ahead dispatches (5 points each, every 15 min).  Every time point is a
subgraph with one node per bus and per line.
"""

from pathlib import Path

from hiergraph.cases import three_bus_case
from hiergraph.export import AGG_SUBPROBLEMS, AGG_TIMEPOINTS, to_dot, to_graphml
from hiergraph.power.build import DayBuilder

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

network, demand = three_bus_case(days=1)
builder = DayBuilder(network, demand)
day = builder.build_day_graph()
print(day.stats())

by_layer = {}
for sub in day.subgraphs:
    by_layer.setdefault(sub.attrs["layer"], []).append(len(sub.subgraphs))
for layer, points in by_layer.items():
    print(f"{layer}: {len(points)} subproblems, {points[0]} time points each")

# Constraints that reach across subproblems sit on the day graph itself.
print("day-level linking constraints:", len(day.local_edges))
print("example:", day.local_edges[0].label, "touching", [n.path for n in day.local_edges[0].support])

# Quotient views: each subproblem (or each time point) becomes one vertex.
(out / "day_subproblems.dot").write_text(to_dot(day, AGG_SUBPROBLEMS))
(out / "day_timepoints.graphml").write_text(to_graphml(day, AGG_TIMEPOINTS))
print("wrote", sorted(p.name for p in out.iterdir()))
