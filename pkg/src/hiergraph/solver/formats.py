"""Fixed-format MPS and CPLEX-style LP writers/readers, plus solution import.

Columns and rows are exported as ``C0000000`` / ``R0000000`` so every name fits
the 8-character MPS name fields and the mapping back to model indices is
deterministic.
"""

from __future__ import annotations

import math
import re

import numpy as np

from ..expr import BINARY, CONTINUOUS, EQ, GE, LE, LinExpr, LinearConstraint, VariableDef
from .model import OPTIMAL, MilpModel, Solution, relative_gap

OBJ_ROW = "OBJ"


class FormatError(ValueError):
    pass


class SolutionImportError(ValueError):
    def __init__(self, msg: str, max_residual: float | None = None):
        super().__init__(msg)
        self.max_residual = max_residual


def column_name(j: int) -> str:
    return f"C{j:07d}"


def row_name(i: int) -> str:
    return f"R{i:07d}"


def _num(v: float) -> str:
    """Shortest text for ``v`` that fits a 12-character MPS field."""
    v = float(v)
    if v == int(v) and abs(v) < 1e11:
        return str(int(v))
    s = repr(v)
    if len(s) <= 12:
        return s
    for p in range(11, 0, -1):
        s = f"{v:.{p}g}"
        if len(s) <= 12:
            return s
    raise FormatError(f"cannot format {v!r} in 12 characters")


def _field_line(f1="", f2="", f3="", f4="", f5="", f6="") -> str:
    line = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5:
        line += f"   {f5:<8}  {f6:>12}"
    return line.rstrip()


def export_mps(m: MilpModel, name: str = "MODEL") -> bytes:
    n = m.num_columns
    by_col: list[list[tuple[str, float]]] = [[] for _ in range(n)]
    for j, v in sorted(m.objective.terms.items()):
        by_col[j].append((OBJ_ROW, v))
    for i, r in enumerate(m.rows):
        for j, v in sorted(r.body.terms.items()):
            by_col[j].append((row_name(i), v))

    out = [f"NAME          {name}", "ROWS", f" N  {OBJ_ROW}"]
    code = {LE: "L", GE: "G", EQ: "E"}
    for i, r in enumerate(m.rows):
        out.append(f" {code[r.sense]}  {row_name(i)}")
    out.append("COLUMNS")
    in_int = False
    marker = 0
    for j, col in enumerate(m.columns):
        if col.is_binary != in_int:
            tag = "'INTORG'" if col.is_binary else "'INTEND'"
            out.append(_field_line("", f"M{marker:07d}", "'MARKER'", "", tag))
            marker += 1
            in_int = col.is_binary
        entries = by_col[j] or [(OBJ_ROW, 0.0)]
        for rname, v in entries:
            out.append(_field_line("", column_name(j), rname, _num(v)))
    if in_int:
        out.append(_field_line("", f"M{marker:07d}", "'MARKER'", "", "'INTEND'"))
    out.append("RHS")
    if m.objective.constant != 0.0:
        out.append(_field_line("", "RHS", OBJ_ROW, _num(-m.objective.constant)))
    for i, r in enumerate(m.rows):
        if r.rhs != 0.0:
            out.append(_field_line("", "RHS", row_name(i), _num(r.rhs)))
    out.append("BOUNDS")
    for j, col in enumerate(m.columns):
        cn = column_name(j)
        lo, hi = col.lower, col.upper
        if col.is_binary and lo == 0.0 and hi == 1.0:
            out.append(_field_line("BV", "BND", cn))
        elif lo == hi:
            out.append(_field_line("FX", "BND", cn, _num(lo)))
        elif lo == -math.inf and hi == math.inf:
            out.append(_field_line("FR", "BND", cn))
        else:
            if lo == -math.inf:
                out.append(_field_line("MI", "BND", cn))
            elif lo != 0.0 or col.is_binary:
                out.append(_field_line("LO", "BND", cn, _num(lo)))
            if hi != math.inf:
                out.append(_field_line("UP", "BND", cn, _num(hi)))
            elif col.is_binary:
                out.append(_field_line("PL", "BND", cn))
    out.append("ENDATA")
    return ("\n".join(out) + "\n").encode("ascii")


def parse_mps(data: bytes | str) -> MilpModel:
    text = data.decode("ascii") if isinstance(data, bytes) else data
    section = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    obj_row = None
    col_index: dict[str, int] = {}
    col_binary: list[bool] = []
    entries: dict[str, dict[int, float]] = {}
    rhs: dict[str, float] = {}
    lower: list[float] = []
    upper: list[float] = []
    in_int = False
    sense_map = {"L": LE, "G": GE, "E": EQ}
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            section = raw.split()[0]
            if section not in ("NAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA", "OBJSENSE"):
                raise FormatError(f"line {lineno}: unknown section {section!r}")
            if section == "RANGES":
                raise FormatError(f"line {lineno}: RANGES are not supported")
            continue
        tok = raw.split()
        if section == "ROWS":
            kind, name = tok
            if kind == "N":
                if obj_row is None:
                    obj_row = name
                continue
            row_sense[name] = sense_map[kind]
            row_order.append(name)
            entries[name] = {}
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1] == "'MARKER'":
                in_int = tok[2] == "'INTORG'"
                continue
            cname = tok[0]
            if cname not in col_index:
                col_index[cname] = len(col_binary)
                col_binary.append(in_int)
                lower.append(0.0)
                upper.append(1.0 if in_int else math.inf)
            j = col_index[cname]
            for rname, val in zip(tok[1::2], tok[2::2]):
                if rname == obj_row:
                    entries.setdefault(obj_row, {})[j] = float(val)
                elif rname in entries:
                    entries[rname][j] = float(val)
                else:
                    raise FormatError(f"line {lineno}: unknown row {rname!r}")
        elif section == "RHS":
            pairs = tok[1:] if len(tok) % 2 == 1 else tok
            for rname, val in zip(pairs[0::2], pairs[1::2]):
                rhs[rname] = float(val)
        elif section == "BOUNDS":
            kind, cname = tok[0], tok[2]
            if cname not in col_index:
                raise FormatError(f"line {lineno}: bound on unknown column {cname!r}")
            j = col_index[cname]
            val = float(tok[3]) if len(tok) > 3 else None
            if kind == "UP":
                upper[j] = val
            elif kind == "LO":
                lower[j] = val
            elif kind == "FX":
                lower[j] = upper[j] = val
            elif kind == "FR":
                lower[j], upper[j] = -math.inf, math.inf
            elif kind == "MI":
                lower[j] = -math.inf
            elif kind == "PL":
                upper[j] = math.inf
            elif kind == "BV":
                lower[j], upper[j] = 0.0, 1.0
                col_binary[j] = True
            else:
                raise FormatError(f"line {lineno}: unsupported bound type {kind!r}")
    names = sorted(col_index, key=col_index.get)
    columns = [
        VariableDef(nm, BINARY if col_binary[j] else CONTINUOUS, lower[j], upper[j])
        for j, nm in enumerate(names)
    ]
    rows = [LinearConstraint(LinExpr(entries[r]), row_sense[r], rhs.get(r, 0.0)) for r in row_order]
    obj = LinExpr(entries.get(obj_row, {}), -rhs.get(obj_row, 0.0) if obj_row else 0.0)
    return MilpModel(columns, rows, obj, row_names=list(row_order))


def _lp_terms(terms: dict, first_col: str | None = None) -> list[str]:
    out = []
    for j, v in sorted(terms.items()):
        sign = "-" if v < 0 else "+"
        out.append(f"{sign} {repr(abs(float(v)))} {column_name(j)}")
    if not out and first_col is not None:
        out.append(f"+ 0 {first_col}")
    return out


def _wrap(head: str, tokens: list[str], tail: str = "", width: int = 200) -> list[str]:
    lines, cur = [], head
    for t in tokens:
        if len(cur) + len(t) + 1 > width:
            lines.append(cur)
            cur = "  "
        cur += " " + t
    if tail:
        cur += " " + tail
    lines.append(cur)
    return lines


def _lp_num(v: float) -> str:
    if v == math.inf:
        return "+inf"
    if v == -math.inf:
        return "-inf"
    return repr(float(v))


def export_lp(m: MilpModel) -> bytes:
    anchor = column_name(0) if m.num_columns else None
    out = ["\\ linear model written by hiergraph", "Minimize"]
    obj_tokens = _lp_terms(m.objective.terms, anchor)
    if m.objective.constant != 0.0:
        c = m.objective.constant
        obj_tokens.append(f"{'-' if c < 0 else '+'} {repr(abs(c))}")
    out += _wrap(" obj:", obj_tokens)
    out.append("Subject To")
    for i, r in enumerate(m.rows):
        out += _wrap(f" {row_name(i)}:", _lp_terms(r.body.terms, anchor), f"{r.sense if r.sense != EQ else '='} {_lp_num(r.rhs)}")
    out.append("Bounds")
    for j, col in enumerate(m.columns):
        cn = column_name(j)
        if col.lower == -math.inf and col.upper == math.inf:
            out.append(f" {cn} free")
        else:
            out.append(f" {_lp_num(col.lower)} <= {cn} <= {_lp_num(col.upper)}")
    binaries = [column_name(j) for j in m.binary_columns]
    if binaries:
        out.append("Binaries")
        for k in range(0, len(binaries), 8):
            out.append(" " + " ".join(binaries[k:k + 8]))
    out.append("End")
    return ("\n".join(out) + "\n").encode("ascii")


_SECTIONS = {
    "minimize": "obj", "minimise": "obj", "min": "obj",
    "subject to": "rows", "such that": "rows", "st": "rows", "s.t.": "rows",
    "bounds": "bounds", "binaries": "bin", "binary": "bin", "end": "end",
}
_NUM = r"[+-]?(?:inf|infinity|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"


def _parse_linear(tokens: list[str], col_index: dict) -> tuple[dict, float]:
    terms: dict[int, float] = {}
    const = 0.0
    sign = 1.0
    coef = None
    for t in tokens:
        if t in "+-":
            sign = -1.0 if t == "-" else 1.0
            continue
        if re.fullmatch(_NUM, t, flags=re.I):
            if coef is not None:
                const += sign * coef
                sign = 1.0
            coef = float(t)
            continue
        j = col_index.setdefault(t, len(col_index))
        terms[j] = terms.get(j, 0.0) + sign * (1.0 if coef is None else coef)
        sign, coef = 1.0, None
    if coef is not None:
        const += sign * coef
    return terms, const


def parse_lp(data: bytes | str) -> MilpModel:
    text = data.decode("ascii") if isinstance(data, bytes) else data
    blocks: dict[str, list[str]] = {"obj": [], "rows": [], "bounds": [], "bin": []}
    section = None
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = line.lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            if section == "end":
                break
            continue
        if section is None:
            raise FormatError(f"content before any section: {line!r}")
        blocks[section].append(line)

    col_index: dict[str, int] = {}
    obj_text = " ".join(blocks["obj"])
    obj_text = obj_text.split(":", 1)[1] if ":" in obj_text else obj_text
    obj_terms, obj_const = _parse_linear(obj_text.split(), col_index)

    rows, row_names = [], []
    pending = ""
    for line in blocks["rows"]:
        pending = f"{pending} {line}".strip()
        mt = re.search(r"(<=|>=|=<|=>|=|<|>)\s*(" + _NUM + r")\s*$", pending, flags=re.I)
        if not mt:
            continue
        head = pending[: mt.start()]
        name = None
        if ":" in head:
            name, head = head.split(":", 1)
            name = name.strip()
        terms, const = _parse_linear(head.split(), col_index)
        op = {"<=": LE, "=<": LE, "<": LE, ">=": GE, "=>": GE, ">": GE, "=": EQ}[mt.group(1)]
        rows.append(LinearConstraint(LinExpr(terms), op, float(mt.group(2)) - const))
        row_names.append(name or row_name(len(rows) - 1))
        pending = ""
    if pending:
        raise FormatError(f"unterminated constraint: {pending!r}")

    n = len(col_index)
    lower = [0.0] * n
    upper = [math.inf] * n
    binary = [False] * n
    for line in blocks["bounds"]:
        tok = line.replace("<=", " <= ").replace(">=", " >= ").split()
        if len(tok) == 2 and tok[1].lower() == "free":
            j = col_index.setdefault(tok[0], len(col_index))
            while len(lower) <= j:
                lower.append(0.0); upper.append(math.inf); binary.append(False)
            lower[j], upper[j] = -math.inf, math.inf
        elif len(tok) == 5:
            j = col_index.setdefault(tok[2], len(col_index))
            while len(lower) <= j:
                lower.append(0.0); upper.append(math.inf); binary.append(False)
            lower[j], upper[j] = float(tok[0]), float(tok[4])
        elif len(tok) == 3:
            j = col_index.setdefault(tok[0], len(col_index))
            while len(lower) <= j:
                lower.append(0.0); upper.append(math.inf); binary.append(False)
            if tok[1] == "<=":
                upper[j] = float(tok[2])
            elif tok[1] == ">=":
                lower[j] = float(tok[2])
            elif tok[1] == "=":
                lower[j] = upper[j] = float(tok[2])
            else:
                raise FormatError(f"bad bound line {line!r}")
        else:
            raise FormatError(f"bad bound line {line!r}")
    for line in blocks["bin"]:
        for nm in line.split():
            j = col_index.setdefault(nm, len(col_index))
            while len(lower) <= j:
                lower.append(0.0); upper.append(math.inf); binary.append(False)
            binary[j] = True
            if upper[j] == math.inf:
                upper[j] = 1.0
    while len(lower) < len(col_index):
        lower.append(0.0); upper.append(math.inf); binary.append(False)
    # exported names sort into their original column order
    names = sorted(col_index)
    new_index = {col_index[nm]: k for k, nm in enumerate(names)}
    columns = []
    for nm in names:
        j = col_index[nm]
        columns.append(VariableDef(nm, BINARY if binary[j] else CONTINUOUS, lower[j], upper[j]))
    rows = [r.remap(new_index) for r in rows]
    obj = LinExpr({new_index[j]: v for j, v in obj_terms.items()}, obj_const)
    return MilpModel(columns, rows, obj, row_names=row_names)


def import_solution(m: MilpModel, text: str, feas_tol: float = 1e-6) -> Solution:
    """Read ``name value`` lines written by an external solver for an exported model."""
    index = {column_name(j): j for j in range(m.num_columns)}
    x = np.full(m.num_columns, np.nan)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SolutionImportError(f"line {lineno}: expected 'name value', got {raw!r}")
        name, val = parts
        if name not in index:
            raise SolutionImportError(f"line {lineno}: unknown column {name!r}")
        try:
            x[index[name]] = float(val)
        except ValueError:
            raise SolutionImportError(f"line {lineno}: bad value {val!r} for {name}") from None
    missing = np.flatnonzero(np.isnan(x))
    if len(missing):
        raise SolutionImportError(f"no value for column {column_name(int(missing[0]))} ({len(missing)} missing)")
    worst = m.max_violation(x, int_tol=feas_tol)
    if worst > feas_tol:
        raise SolutionImportError(f"imported point is infeasible (max residual {worst:.3g})", worst)
    obj = m.objective_value(x)
    return Solution(OPTIMAL, obj, obj, relative_gap(obj, obj), x, {"imported": True, "max_violation": worst})
