"""Hypergraph model containers.

An :class:`OptiGraph` owns nodes (each with its own variables, constraints and
objective terms), hyperedges (one linking constraint each) and nested
subgraphs.  The optimization problem a graph stands for is: minimize the sum
of all node objectives subject to every node constraint and every edge
constraint anywhere in the subgraph tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator, Mapping

from .expr import BINARY, CONTINUOUS, InconsistentFixing, LinExpr, LinearConstraint, VariableDef, VarRef, substitute
from .solver.model import MilpModel


class GraphError(ValueError):
    pass


class DuplicateLabel(GraphError):
    pass


class DanglingReference(GraphError):
    pass


class OwnershipError(GraphError):
    pass


class FrozenGraphError(GraphError):
    pass


class OptiNode:
    """A subproblem: variables plus constraints/objective over them only."""

    def __init__(self, label: str, graph: OptiGraph | None = None, **attrs):
        self.label = label
        self.graph = graph
        self.variables: list[VariableDef] = []
        self.constraints: list[LinearConstraint] = []
        self.objective = LinExpr()
        self.attrs = dict(attrs)
        self._by_name: dict[str, int] = {}

    def __repr__(self):
        return f"OptiNode({self.path!r}, {len(self.variables)} vars)"

    @property
    def path(self) -> str:
        return f"{self.graph.path}/{self.label}" if self.graph is not None else self.label

    def _check_mutable(self):
        if self.graph is not None and self.graph.frozen:
            raise FrozenGraphError(f"{self.path} belongs to a frozen graph")

    def add_variable(self, name: str, lower: float = -math.inf, upper: float = math.inf,
                     binary: bool = False, start: float | None = None) -> VarRef:
        self._check_mutable()
        if name in self._by_name:
            raise DuplicateLabel(f"variable {name!r} already on node {self.path}")
        if binary:
            lower, upper = max(lower, 0.0), min(upper, 1.0)
        self.variables.append(VariableDef(name, BINARY if binary else CONTINUOUS, lower, upper, start))
        self._by_name[name] = len(self.variables) - 1
        return VarRef(self, len(self.variables) - 1)

    def _add_def(self, vdef: VariableDef) -> VarRef:
        self.variables.append(vdef)
        self._by_name[vdef.name] = len(self.variables) - 1
        return VarRef(self, len(self.variables) - 1)

    def var(self, name: str) -> VarRef:
        return VarRef(self, self._by_name[name])

    __getitem__ = var

    def has_var(self, name: str) -> bool:
        return name in self._by_name

    def refs(self) -> list[VarRef]:
        return [VarRef(self, i) for i in range(len(self.variables))]

    def _check_local(self, keys):
        for k in keys:
            if not isinstance(k, VarRef) or k.node is not self:
                raise DanglingReference(f"node {self.path} cannot reference {k!r}")
            if not 0 <= k.index < len(self.variables):
                raise DanglingReference(f"{k!r} has no variable definition")

    def add_constraint(self, c: LinearConstraint) -> LinearConstraint:
        self._check_mutable()
        self._check_local(c.body.terms)
        self.constraints.append(c)
        return c

    def add_objective(self, expr) -> None:
        self._check_mutable()
        expr = LinExpr.lift(expr)
        self._check_local(expr.terms)
        self.objective.iadd(expr)


@dataclass(eq=False)
class OptiEdge:
    label: str
    constraint: LinearConstraint
    support: tuple[OptiNode, ...]
    graph: OptiGraph | None = None

    def __repr__(self):
        return f"OptiEdge({self.label!r}, support={[n.label for n in self.support]})"


def support_of(c: LinearConstraint) -> tuple[OptiNode, ...]:
    seen: dict[int, OptiNode] = {}
    for k in c.body.terms:
        if not isinstance(k, VarRef):
            raise DanglingReference(f"linking constraint key {k!r} is not a variable reference")
        seen.setdefault(id(k.node), k.node)
    return tuple(seen.values())


class OptiGraph:
    def __init__(self, label: str = "graph", **attrs):
        self.label = label
        self.parent: OptiGraph | None = None
        self.local_nodes: list[OptiNode] = []
        self.local_edges: list[OptiEdge] = []
        self.subgraphs: list[OptiGraph] = []
        self.attrs = dict(attrs)
        self.frozen = False
        self._labels: dict[str, object] = {}

    def __repr__(self):
        return f"OptiGraph({self.path!r}, {len(self.local_nodes)} local nodes, {len(self.subgraphs)} subgraphs)"

    @property
    def path(self) -> str:
        return f"{self.parent.path}/{self.label}" if self.parent is not None else self.label

    @property
    def root(self) -> OptiGraph:
        g = self
        while g.parent is not None:
            g = g.parent
        return g

    def _check_mutable(self):
        if self.frozen:
            raise FrozenGraphError(f"graph {self.path} is frozen")

    def _claim(self, label: str, obj) -> None:
        if label in self._labels:
            raise DuplicateLabel(f"label {label!r} already used in graph {self.path}")
        self._labels[label] = obj

    def add_node(self, label: str | None = None, **attrs) -> OptiNode:
        self._check_mutable()
        if label is None:
            label = f"n{len(self.local_nodes)}"
        self._claim(label, None)
        node = OptiNode(label, self, **attrs)
        self._labels[label] = node
        self.local_nodes.append(node)
        return node

    def add_subgraph(self, child: OptiGraph) -> OptiGraph:
        self._check_mutable()
        if child.parent is not None:
            raise OwnershipError(f"graph {child.label!r} is already embedded in {child.parent.path}")
        g = self
        while g is not None:
            if g is child:
                raise OwnershipError("embedding would create a cycle")
            g = g.parent
        self._claim(child.label, child)
        child.parent = self
        self.subgraphs.append(child)
        return child

    def new_subgraph(self, label: str, **attrs) -> OptiGraph:
        return self.add_subgraph(OptiGraph(label, **attrs))

    def __getitem__(self, label: str):
        return self._labels[label]

    def owns(self, node: OptiNode) -> bool:
        """True when ``node`` lies anywhere in this graph's subgraph tree."""
        g = node.graph
        while g is not None:
            if g is self:
                return True
            g = g.parent
        return False

    def add_link_constraint(self, c: LinearConstraint, label: str | None = None,
                            support: tuple[OptiNode, ...] | None = None) -> OptiEdge:
        """Attach ``c`` as an edge; ``support`` may be passed when already known."""
        self._check_mutable()
        if not c.body.terms:
            raise GraphError("linking constraint has an empty expression")
        if support is None:
            support = support_of(c)
        for node in support:
            if not self.owns(node):
                raise DanglingReference(f"node {node.path} is outside graph {self.path}")
        for k in c.body.terms:
            if not 0 <= k.index < len(k.node.variables):
                raise DanglingReference(f"{k!r} has no variable definition")
        edge = OptiEdge(label or f"e{len(self.local_edges)}", c, support, self)
        self.local_edges.append(edge)
        return edge

    # traversal ----------------------------------------------------------

    def all_nodes(self) -> list[OptiNode]:
        out = list(self.local_nodes)
        for g in self.subgraphs:
            out.extend(g.all_nodes())
        return out

    def all_edges(self) -> list[OptiEdge]:
        out = list(self.local_edges)
        for g in self.subgraphs:
            out.extend(g.all_edges())
        return out

    def all_subgraphs(self) -> Iterator[OptiGraph]:
        for g in self.subgraphs:
            yield g
            yield from g.all_subgraphs()

    def find(self, path: str):
        """Resolve a ``/``-separated label path relative to this graph."""
        obj = self
        for part in path.split("/"):
            if part:
                obj = obj[part]
        return obj

    # statistics ---------------------------------------------------------

    def num_nodes(self) -> int:
        return len(self.local_nodes) + sum(g.num_nodes() for g in self.subgraphs)

    def num_edges(self) -> int:
        return len(self.local_edges) + sum(g.num_edges() for g in self.subgraphs)

    def num_variables(self) -> int:
        return sum(len(n.variables) for n in self.local_nodes) + sum(g.num_variables() for g in self.subgraphs)

    def num_binaries(self) -> int:
        own = sum(v.is_binary for n in self.local_nodes for v in n.variables)
        return own + sum(g.num_binaries() for g in self.subgraphs)

    def num_constraints(self) -> int:
        own = sum(len(n.constraints) for n in self.local_nodes) + len(self.local_edges)
        return own + sum(g.num_constraints() for g in self.subgraphs)

    def stats(self) -> dict:
        return {
            "nodes": self.num_nodes(),
            "edges": self.num_edges(),
            "subgraphs": sum(1 for _ in self.all_subgraphs()),
            "variables": self.num_variables(),
            "binaries": self.num_binaries(),
            "constraints": self.num_constraints(),
        }

    def freeze(self) -> OptiGraph:
        self.frozen = True
        for g in self.subgraphs:
            g.freeze()
        return self


# flattening ---------------------------------------------------------------


class ColumnMap:
    """Two-way map between variable references and flat column indices."""

    def __init__(self, refs: list[VarRef]):
        self.refs = refs
        self._offsets: dict[int, int] = {}
        for col, r in enumerate(refs):
            if r.index == 0:
                self._offsets[id(r.node)] = col

    def __len__(self):
        return len(self.refs)

    def column(self, ref: VarRef) -> int:
        try:
            return self._offsets[id(ref.node)] + ref.index
        except KeyError:
            raise DanglingReference(f"{ref!r} is not part of this model") from None

    def __contains__(self, ref: VarRef) -> bool:
        return id(ref.node) in self._offsets

    def ref(self, col: int) -> VarRef:
        return self.refs[col]

    def values(self, x) -> dict[VarRef, float]:
        return {r: float(x[j]) for j, r in enumerate(self.refs)}

    def remap(self, c: LinearConstraint) -> LinearConstraint:
        col = self.column
        return LinearConstraint(LinExpr({col(k): v for k, v in c.body.terms.items()}), c.sense, c.rhs)

    def remap_expr(self, e: LinExpr) -> LinExpr:
        col = self.column
        return LinExpr({col(k): v for k, v in e.terms.items()}, e.constant)


def _columns_for(nodes: list[OptiNode]) -> tuple[list[VariableDef], ColumnMap]:
    refs: list[VarRef] = []
    cols: list[VariableDef] = []
    for node in nodes:
        path = node.path
        for i, v in enumerate(node.variables):
            refs.append(VarRef(node, i))
            cols.append(replace(v, name=f"{path}.{v.name}"))
    return cols, ColumnMap(refs)


def flatten(graph: OptiGraph) -> tuple[MilpModel, ColumnMap]:
    """Concatenate every variable, node constraint and edge into one model."""
    nodes = graph.all_nodes()
    cols, cmap = _columns_for(nodes)
    rows: list[LinearConstraint] = []
    names: list[str] = []
    objective = LinExpr()
    for node in nodes:
        for k, c in enumerate(node.constraints):
            rows.append(cmap.remap(c))
            names.append(f"{node.path}#{k}")
        if node.objective.terms or node.objective.constant:
            objective.iadd(cmap.remap_expr(node.objective))
    for e in graph.all_edges():
        rows.append(cmap.remap(e.constraint))
        names.append(f"{e.graph.path}/{e.label}")
    return MilpModel(cols, rows, objective, row_names=names), cmap


def incident_edges(graph: OptiGraph) -> dict[int, list[OptiEdge]]:
    """Edges of ``graph``'s whole tree keyed by ``id`` of each supporting node."""
    index: dict[int, list[OptiEdge]] = {}
    for e in graph.all_edges():
        for n in e.support:
            index.setdefault(id(n), []).append(e)
    return index


@dataclass
class Subproblem:
    model: MilpModel
    columns: ColumnMap
    block: OptiGraph
    deferred_edges: list[OptiEdge]
    linked_edges: list[OptiEdge]


def extract_subproblem(block: OptiGraph, known: Mapping[VarRef, float],
                       index: dict[int, list[OptiEdge]] | None = None,
                       tol: float = 1e-6) -> Subproblem:
    """Model for ``block`` alone, with outside variables fixed to ``known``.

    Edges leaving the block are included once every outside variable they
    touch has a known value (substituted as data); edges touching an outside
    variable without a value are deferred to whichever block is solved later.
    """
    if index is None:
        index = incident_edges(block.root)
    nodes = block.all_nodes()
    cols, cmap = _columns_for(nodes)
    rows: list[LinearConstraint] = []
    names: list[str] = []
    objective = LinExpr()
    for node in nodes:
        for k, c in enumerate(node.constraints):
            rows.append(cmap.remap(c))
            names.append(f"{node.path}#{k}")
        if node.objective.terms or node.objective.constant:
            objective.iadd(cmap.remap_expr(node.objective))
    seen: set[int] = set()
    deferred, linked = [], []
    for node in nodes:
        for e in index.get(id(node), ()):
            if id(e) in seen:
                continue
            seen.add(id(e))
            outside = [k for k in e.constraint.body.terms if k not in cmap]
            if not outside:
                rows.append(cmap.remap(e.constraint))
                names.append(f"{e.graph.path}/{e.label}")
                continue
            if any(k not in known for k in outside):
                deferred.append(e)
                continue
            try:
                c = substitute(e.constraint, {k: known[k] for k in outside}, tol)
            except InconsistentFixing as err:
                raise InconsistentFixing(e.constraint, err.residual) from None
            rows.append(cmap.remap(c))
            names.append(f"{e.graph.path}/{e.label}")
            linked.append(e)
    return Subproblem(MilpModel(cols, rows, objective, row_names=names), cmap, block, deferred, linked)


# aggregation --------------------------------------------------------------


@dataclass
class Aggregation:
    graph: OptiGraph
    var_map: dict[VarRef, VarRef]
    node_map: dict[int, OptiNode]

    def node_for(self, old: OptiNode) -> OptiNode:
        return self.node_map[id(old)]


def aggregate(graph: OptiGraph, targets) -> Aggregation:
    """Copy ``graph`` with each target subgraph collapsed into one node.

    ``targets`` is a subgraph (or an iterable of them) anywhere below
    ``graph``.  The original graph is left untouched.
    """
    if isinstance(targets, OptiGraph):
        targets = [targets]
    target_ids = {id(t) for t in targets}
    for t in targets:
        g = t.parent
        while g is not None and g is not graph:
            g = g.parent
        if g is None or t is graph:
            raise GraphError(f"subgraph {t.path} is not below {graph.path}")

    var_map: dict[VarRef, VarRef] = {}
    node_map: dict[int, OptiNode] = {}
    collapsed: list[tuple[OptiNode, OptiGraph]] = []
    copied: list[tuple[OptiGraph, OptiGraph]] = []

    def copy_vars(old: OptiNode, new: OptiNode, prefix: str = ""):
        node_map[id(old)] = new
        for i, v in enumerate(old.variables):
            ref = new._add_def(replace(v, name=prefix + v.name) if prefix else v)
            var_map[VarRef(old, i)] = ref

    def copy_graph(g: OptiGraph) -> OptiGraph:
        new = OptiGraph(g.label, **g.attrs)
        copied.append((g, new))
        for node in g.local_nodes:
            nn = new.add_node(node.label, **node.attrs)
            copy_vars(node, nn)
        for sub in g.subgraphs:
            if id(sub) in target_ids:
                agg = new.add_node(sub.label, **sub.attrs, aggregated_from=sub.path)
                base = sub.path
                for node in sub.all_nodes():
                    rel = node.path[len(base) + 1:]
                    copy_vars(node, agg, prefix=rel + ".")
                collapsed.append((agg, sub))
            else:
                new.add_subgraph(copy_graph(sub))
        return new

    result = copy_graph(graph)

    def mapped(c: LinearConstraint) -> LinearConstraint:
        return LinearConstraint(LinExpr({var_map[k]: v for k, v in c.body.terms.items()}), c.sense, c.rhs)

    for old, new in copied:
        for node in old.local_nodes:
            nn = node_map[id(node)]
            nn.constraints = [mapped(c) for c in node.constraints]
            nn.objective = LinExpr({var_map[k]: v for k, v in node.objective.terms.items()}, node.objective.constant)
        for e in old.local_edges:
            new.add_link_constraint(mapped(e.constraint), e.label)
    for agg, sub in collapsed:
        for node in sub.all_nodes():
            agg.constraints.extend(mapped(c) for c in node.constraints)
            agg.objective.iadd(LinExpr({var_map[k]: v for k, v in node.objective.terms.items()}, node.objective.constant))
        for e in sub.all_edges():
            agg.constraints.append(mapped(e.constraint))
    return Aggregation(result, var_map, node_map)
