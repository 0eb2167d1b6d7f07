import io

import networkx as nx
import pydot
import pytest

from hiergraph.cases import two_bus_case
from hiergraph.expr import eq, le
from hiergraph.export import AGG_SUBPROBLEMS, AGG_TIMEPOINTS, FULL, to_dot, to_graphml, view_structure
from hiergraph.graph import OptiGraph
from hiergraph.power.build import DayBuilder


@pytest.fixture
def tiny():
    g = OptiGraph("root")
    s = g.new_subgraph("A", layer="ST")
    a, b, c = s.add_node("a"), s.add_node("b"), g.add_node("c")
    x, y, z = a.add_variable("x"), b.add_variable("y"), c.add_variable("z")
    s.add_link_constraint(le(x + y, 1), "ab")
    g.add_link_constraint(eq(x + y + z, 0), "abc")
    g.add_link_constraint(le(z, 2), "pin")
    return g


def test_full_view_hyperedges(tiny):
    dot = to_dot(tiny)
    assert '"root/A/a" -- {"root/A/b" "root/c"} [label="abc"];' in dot
    assert '"root/c" -- "root/c" [label="pin"];' in dot
    assert 'color="red"' in dot
    parsed = pydot.graph_from_dot_data(dot)[0]
    assert len(parsed.get_nodes()) == 3
    gml = nx.read_graphml(io.BytesIO(to_graphml(tiny).encode()))
    assert isinstance(gml, nx.MultiGraph)
    hyper = {d["hyperedge"] for _, _, d in gml.edges(data=True)}
    assert hyper == {0, 1, 2}
    # a support-k edge becomes k-1 star edges sharing one hyperedge id
    assert sum(1 for _, _, d in gml.edges(data=True) if d["label"] == "abc") == 2


def test_quotient_view_drops_internal_edges(tiny):
    verts, links = view_structure(tiny, AGG_SUBPROBLEMS)
    assert sorted(v.id for v in verts) == ["root/A", "root/c"]
    assert len(links) == 1 and links[0].weight == 1
    agg = next(v for v in verts if v.id == "root/A")
    assert (agg.n_vars, agg.n_cons) == (2, 1)


def test_custom_coloring(tiny):
    assert 'color="green"' in to_dot(tiny, FULL, {"ST": "green"})


def test_day_graph_views():
    net, dem = two_bus_case(1)
    g = DayBuilder(net, dem).build_day_graph()
    q = nx.read_graphml(io.BytesIO(to_graphml(g, AGG_SUBPROBLEMS).encode()))
    assert q.number_of_nodes() == 105
    colors = {d["color"] for _, d in q.nodes(data=True)}
    assert colors == {"black", "red", "blue"}
    da = next(n for n, d in q.nodes(data=True) if d["layer"] == "DA")
    # every ST and HA subproblem references DA commitments
    assert len(set(q.neighbors(da))) == 104
    tps = nx.read_graphml(io.BytesIO(to_graphml(g, AGG_TIMEPOINTS).encode()))
    assert tps.number_of_nodes() == 24 + 8 * 16 + 96 * 5
    assert to_dot(g, AGG_TIMEPOINTS) == to_dot(DayBuilder(net, dem).build_day_graph(), AGG_TIMEPOINTS)


def test_unknown_view(tiny):
    with pytest.raises(ValueError):
        to_dot(tiny, "sideways")
