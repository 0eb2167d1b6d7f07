"""DOT and GraphML views of an OptiGraph.

Three views are available: ``full`` (every node and linking constraint),
``aggregate_timepoints`` and ``aggregate_subproblems`` (quotient graphs whose
vertices are blocks of nodes).  Output depends only on graph structure and
insertion order, so repeated exports are byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape, quoteattr

from .graph import OptiGraph, OptiNode

FULL, AGG_TIMEPOINTS, AGG_SUBPROBLEMS = "full", "aggregate_timepoints", "aggregate_subproblems"
VIEWS = (FULL, AGG_TIMEPOINTS, AGG_SUBPROBLEMS)
LAYER_COLORS = {"DA": "black", "ST": "red", "HA": "blue"}
DEFAULT_COLOR = "gray"


@dataclass
class _Vertex:
    id: str
    layer: str
    kind: str
    n_vars: int
    n_cons: int


@dataclass
class _Link:
    ends: tuple[str, ...]     # full view: support in order; quotient: a sorted pair
    label: str
    weight: int = 1


def _attr_up(graph: OptiGraph | None, key: str, default: str = "") -> str:
    while graph is not None:
        if key in graph.attrs:
            return str(graph.attrs[key])
        graph = graph.parent
    return default


def _node_kind(node: OptiNode) -> str:
    return str(node.attrs.get("kind", "node"))


def _blocks(graph: OptiGraph, view: str) -> list[OptiGraph]:
    kind = "timepoint" if view == AGG_TIMEPOINTS else "subproblem"
    tagged = [g for g in graph.all_subgraphs() if g.attrs.get("kind") == kind]
    if tagged:
        return tagged
    # untagged graphs: leaf subgraphs for time points, top-level subgraphs for subproblems
    if view == AGG_TIMEPOINTS:
        return [g for g in graph.all_subgraphs() if not g.subgraphs]
    return list(graph.subgraphs)


def _full(graph: OptiGraph) -> tuple[list[_Vertex], list[_Link]]:
    verts = [_Vertex(n.path, _attr_up(n.graph, "layer"), _node_kind(n), len(n.variables), len(n.constraints))
             for n in graph.all_nodes()]
    links = [_Link(tuple(n.path for n in e.support), e.label) for e in graph.all_edges()]
    return verts, links


def _quotient(graph: OptiGraph, view: str) -> tuple[list[_Vertex], list[_Link]]:
    owner: dict[int, str] = {}
    verts: list[_Vertex] = []
    for b in _blocks(graph, view):
        if any(id(n) in owner for n in b.all_nodes()):
            continue  # nested inside an earlier block
        for n in b.all_nodes():
            owner[id(n)] = b.path
        verts.append(_Vertex(b.path, _attr_up(b, "layer"), str(b.attrs.get("kind", "block")),
                             b.num_variables(), b.num_constraints()))
    for n in graph.all_nodes():
        if id(n) not in owner:
            owner[id(n)] = n.path
            verts.append(_Vertex(n.path, _attr_up(n.graph, "layer"), _node_kind(n),
                                 len(n.variables), len(n.constraints)))
    pairs: dict[tuple[str, str], int] = {}
    for e in graph.all_edges():
        blocks = sorted({owner[id(n)] for n in e.support})
        for i, a in enumerate(blocks):
            for b in blocks[i + 1:]:
                pairs[(a, b)] = pairs.get((a, b), 0) + 1
    order = {v.id: k for k, v in enumerate(verts)}
    links = [_Link(p, "", w) for p, w in sorted(pairs.items(), key=lambda kv: (order[kv[0][0]], order[kv[0][1]]))]
    return verts, links


def view_structure(graph: OptiGraph, view: str = FULL) -> tuple[list[_Vertex], list[_Link]]:
    if view not in VIEWS:
        raise ValueError(f"unknown view {view!r}; expected one of {VIEWS}")
    return _full(graph) if view == FULL else _quotient(graph, view)


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(graph: OptiGraph, view: str = FULL, coloring: dict[str, str] | None = None) -> str:
    """Undirected DOT text; each linking constraint is one statement in the full view."""
    colors = LAYER_COLORS if coloring is None else coloring
    verts, links = view_structure(graph, view)
    out = [f"graph {_q(graph.label)} {{"]
    for v in verts:
        color = colors.get(v.layer, DEFAULT_COLOR)
        out.append(f"  {_q(v.id)} [layer={_q(v.layer)}, kind={_q(v.kind)}, n_vars={v.n_vars}, "
                   f"n_cons={v.n_cons}, color={_q(color)}];")
    for ln in links:
        head, rest = ln.ends[0], ln.ends[1:]
        if view == FULL:
            if not rest:
                target = _q(head)
            elif len(rest) == 1:
                target = _q(rest[0])
            else:
                target = "{" + " ".join(_q(r) for r in rest) + "}"
            out.append(f"  {_q(head)} -- {target} [label={_q(ln.label)}];")
        else:
            out.append(f"  {_q(head)} -- {_q(rest[0])} [weight={ln.weight}];")
    out.append("}")
    return "\n".join(out) + "\n"


_NODE_KEYS = (("layer", "string"), ("kind", "string"), ("n_vars", "int"), ("n_cons", "int"), ("color", "string"))
_EDGE_KEYS = (("label", "string"), ("hyperedge", "int"), ("weight", "int"))


def to_graphml(graph: OptiGraph, view: str = FULL, coloring: dict[str, str] | None = None) -> str:
    """GraphML 1.0 text.

    A linking constraint over k > 2 nodes becomes k - 1 edges sharing a
    ``hyperedge`` id (a star from its first node); single-node constraints are
    self-loops.  Standard parsers read the result as a multigraph.
    """
    colors = LAYER_COLORS if coloring is None else coloring
    verts, links = view_structure(graph, view)
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           '<graphml xmlns="http://graphml.graphdrawing.org/xmlns" '
           'xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" '
           'xsi:schemaLocation="http://graphml.graphdrawing.org/xmlns '
           'http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd">']
    for name, typ in _NODE_KEYS:
        out.append(f'  <key id="n_{name}" for="node" attr.name="{name}" attr.type="{typ}"/>')
    for name, typ in _EDGE_KEYS:
        out.append(f'  <key id="e_{name}" for="edge" attr.name="{name}" attr.type="{typ}"/>')
    out.append(f'  <graph id={quoteattr(graph.label)} edgedefault="undirected">')
    for v in verts:
        out.append(f"    <node id={quoteattr(v.id)}>")
        vals = (v.layer, v.kind, v.n_vars, v.n_cons, colors.get(v.layer, DEFAULT_COLOR))
        for (name, _), val in zip(_NODE_KEYS, vals):
            out.append(f'      <data key="n_{name}">{escape(str(val))}</data>')
        out.append("    </node>")
    k = 0
    for h, ln in enumerate(links):
        head, rest = ln.ends[0], ln.ends[1:] or (ln.ends[0],)
        for tgt in rest:
            out.append(f'    <edge id="e{k}" source={quoteattr(head)} target={quoteattr(tgt)}>')
            if ln.label:
                out.append(f'      <data key="e_label">{escape(ln.label)}</data>')
            out.append(f'      <data key="e_hyperedge">{h}</data>')
            out.append(f'      <data key="e_weight">{ln.weight}</data>')
            out.append("    </edge>")
            k += 1
    out.append("  </graph>")
    out.append("</graphml>")
    return "\n".join(out) + "\n"
