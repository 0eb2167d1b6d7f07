"""Sparse linear expressions and constraints.

Expressions map variable keys to coefficients.  A key is anything hashable:
graph-level code uses :class:`VarRef` (node + position), flattened models use
plain column integers.  The same algebra serves both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping

LE, EQ, GE = "<=", "==", ">="
SENSES = (LE, EQ, GE)

SUBSTITUTION_TOL = 1e-6


CONTINUOUS, BINARY = "continuous", "binary"


@dataclass(frozen=True)
class VariableDef:
    name: str
    domain: str = CONTINUOUS
    lower: float = -math.inf
    upper: float = math.inf
    start: float | None = None

    def __post_init__(self):
        if self.domain not in (CONTINUOUS, BINARY):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.lower > self.upper:
            raise ValueError(f"{self.name}: lower bound {self.lower} exceeds upper {self.upper}")
        if self.domain == BINARY and (self.lower < 0 or self.upper > 1):
            raise ValueError(f"{self.name}: binary bounds must lie within [0, 1]")

    @property
    def is_binary(self) -> bool:
        return self.domain == BINARY


class VarRef:
    """Handle to the ``index``-th variable of ``node``."""

    __slots__ = ("node", "index", "_hash")

    def __init__(self, node, index: int):
        self.node = node
        self.index = index
        self._hash = hash((id(node), index))

    def __eq__(self, other):
        return type(other) is VarRef and other.node is self.node and other.index == self.index

    def __hash__(self):
        return self._hash

    def __repr__(self):
        try:
            name = self.node.variables[self.index].name
        except (AttributeError, IndexError):
            name = f"#{self.index}"
        return f"VarRef({getattr(self.node, 'label', '?')}.{name})"

    @property
    def definition(self):
        return self.node.variables[self.index]

    def _expr(self) -> LinExpr:
        return _make({self: 1.0}, 0.0)

    def __add__(self, other):
        return self._expr() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self._expr() - other

    def __rsub__(self, other):
        return (-self._expr()) + other

    def __mul__(self, k):
        return self._expr() * k

    __rmul__ = __mul__

    def __neg__(self):
        return self._expr() * -1.0

    def __le__(self, other):
        return self._expr() <= other

    def __ge__(self, other):
        return self._expr() >= other


class LinExpr:
    """Affine form ``sum(coef * key) + constant`` with a sparse term map."""

    __slots__ = ("terms", "constant")

    def __init__(self, terms: Mapping[Hashable, float] | None = None, constant: float = 0.0):
        self.terms: dict = {}
        if terms:
            for k, v in terms.items():
                v = float(v)
                if v != 0.0:
                    self.terms[k] = v
        self.constant = float(constant)

    @classmethod
    def lift(cls, value) -> LinExpr:
        if isinstance(value, LinExpr):
            return value
        if isinstance(value, VarRef):
            return _make({value: 1.0}, 0.0)
        return LinExpr(constant=float(value))

    def copy(self) -> LinExpr:
        return _make(dict(self.terms), self.constant)

    def add_term(self, key, coef: float) -> None:
        """In-place accumulation; drops entries that cancel to zero."""
        v = self.terms.get(key, 0.0) + coef
        if v == 0.0:
            self.terms.pop(key, None)
        else:
            self.terms[key] = v

    def iadd(self, other, scale: float = 1.0) -> LinExpr:
        if isinstance(other, VarRef):
            self.add_term(other, scale)
        elif isinstance(other, LinExpr):
            terms = self.terms
            for k, v in other.terms.items():
                v = terms.get(k, 0.0) + scale * v
                if v == 0.0:
                    terms.pop(k, None)
                else:
                    terms[k] = v
            self.constant += scale * other.constant
        else:
            self.constant += scale * float(other)
        return self

    def __add__(self, other):
        return self.copy().iadd(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.copy().iadd(other, -1.0)

    def __rsub__(self, other):
        return (self * -1.0).iadd(other)

    def __mul__(self, k):
        k = float(k)
        if k == 0.0:
            return LinExpr()
        return LinExpr({key: v * k for key, v in self.terms.items()}, self.constant * k)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __le__(self, other):
        return LinearConstraint.build(self, LE, other)

    def __ge__(self, other):
        return LinearConstraint.build(self, GE, other)

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        parts = [f"{v:+g}*{k!r}" for k, v in self.terms.items()]
        if self.constant or not parts:
            parts.append(f"{self.constant:+g}")
        return "LinExpr(" + " ".join(parts) + ")"

    def value(self, values: Mapping) -> float:
        return self.constant + sum(v * values[k] for k, v in self.terms.items())

    def keys(self):
        return self.terms.keys()


def _make(terms: dict, constant: float) -> LinExpr:
    # trusted construction: ``terms`` already holds nonzero floats
    out = object.__new__(LinExpr)
    out.terms = terms
    out.constant = constant
    return out


def quicksum(items: Iterable) -> LinExpr:
    out = LinExpr()
    for it in items:
        out.iadd(it)
    return out


def canonicalize(e: LinExpr) -> LinExpr:
    """Return ``e`` with zero coefficients removed (idempotent)."""
    return LinExpr({k: v for k, v in e.terms.items() if v != 0.0}, e.constant)


def expr_add(e1, e2) -> LinExpr:
    return LinExpr.lift(e1) + e2


def expr_sub(e1, e2) -> LinExpr:
    return LinExpr.lift(e1) - e2


def expr_scale(e, k: float) -> LinExpr:
    return LinExpr.lift(e) * k


@dataclass(frozen=True, eq=False)
class LinearConstraint:
    """``body sense rhs`` with the body's constant already folded into ``rhs``."""

    body: LinExpr
    sense: str
    rhs: float

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"unknown sense {self.sense!r}")
        if not math.isfinite(self.rhs):
            raise ValueError("constraint rhs must be finite")

    @classmethod
    def build(cls, lhs, sense: str, rhs=0.0) -> LinearConstraint:
        body = LinExpr.lift(lhs) - rhs
        rhs_value = -body.constant
        body.constant = 0.0
        return cls(body, sense, rhs_value)

    @property
    def keys(self):
        return self.body.terms.keys()

    def violation(self, values: Mapping) -> float:
        """Amount by which ``values`` violate the row (0 when satisfied)."""
        lhs = self.body.value(values)
        if self.sense == LE:
            return max(0.0, lhs - self.rhs)
        if self.sense == GE:
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)

    def is_tautology(self) -> bool:
        return not self.body.terms

    def remap(self, mapping: Mapping) -> LinearConstraint:
        return LinearConstraint(
            LinExpr({mapping[k]: v for k, v in self.body.terms.items()}), self.sense, self.rhs
        )

    def __repr__(self):
        return f"LinearConstraint({self.body!r} {self.sense} {self.rhs:g})"


def eq(lhs, rhs=0.0) -> LinearConstraint:
    return LinearConstraint.build(lhs, EQ, rhs)


def le(lhs, rhs=0.0) -> LinearConstraint:
    return LinearConstraint.build(lhs, LE, rhs)


def ge(lhs, rhs=0.0) -> LinearConstraint:
    return LinearConstraint.build(lhs, GE, rhs)


class InconsistentFixing(ValueError):
    """A constraint whose every variable was fixed is violated."""

    def __init__(self, constraint: LinearConstraint, residual: float):
        super().__init__(f"fully substituted constraint violated by {residual:.3g}: {constraint!r}")
        self.constraint = constraint
        self.residual = residual


def substitute(c: LinearConstraint, fixed: Mapping, tol: float = SUBSTITUTION_TOL) -> LinearConstraint:
    """Fold the fixed variables of ``c`` into its right-hand side.

    If nothing is left in the body the result is a tautology; raises
    :class:`InconsistentFixing` when that tautology is false by more than
    ``tol``.
    """
    terms = {}
    shift = 0.0
    for k, v in c.body.terms.items():
        if k in fixed:
            val = float(fixed[k])
            if not math.isfinite(val):
                raise ValueError(f"non-finite fixed value for {k!r}")
            shift += v * val
        else:
            terms[k] = v
    out = LinearConstraint(LinExpr(terms), c.sense, c.rhs - shift)
    if not terms:
        residual = out.violation({})
        if residual > tol:
            raise InconsistentFixing(c, residual)
    return out


def linearize_abs_band(e, center, eps: float) -> tuple[LinearConstraint, LinearConstraint]:
    """Rows equivalent to ``|e - center| <= eps``."""
    if eps < 0:
        raise ValueError("band half-width must be nonnegative")
    diff = LinExpr.lift(e) - center
    return le(diff, eps), ge(diff, -eps)
