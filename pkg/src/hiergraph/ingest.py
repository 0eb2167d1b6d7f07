"""CSV/YAML case ingestion with file/line/field diagnostics."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .drivers import RunPlan
from .power.data import (
    RESERVE_SCENARIOS,
    Bus,
    DemandData,
    GeneratorData,
    LayerSchedule,
    Line,
    NetworkData,
    Schedule,
)
from .solver import SolveOptions

NETWORK_HEADER = ("kind", "label", "theta_min", "theta_max", "unmet_cost", "from", "to",
                  "susceptance", "f_min", "f_max")
GENERATOR_HEADER = ("label", "bus", "category", "phi_s", "phi_f", "phi_v", "phi_o", "phi_c", "c_min", "c_max",
                    "ramp_up", "ramp_down", "startup_lim", "shutdown_lim", "min_up_h", "min_down_h", "eps", "eps_s")


class IngestError(ValueError):
    def __init__(self, file, line: int | None, field_name: str | None, message: str):
        where = f"{file}" + (f":{line}" if line is not None else "") + (f" [{field_name}]" if field_name else "")
        super().__init__(f"{where}: {message}")
        self.file, self.line, self.field, self.message = str(file), line, field_name, message

    def record(self) -> dict:
        return {"error": "ingest", "file": self.file, "line": self.line, "field": self.field,
                "message": self.message}


def _read_rows(path: Path, required: tuple[str, ...]) -> list[tuple[int, dict]]:
    if not path.is_file():
        raise IngestError(path, None, None, "file not found")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        missing = [h for h in required if h not in header]
        if missing:
            raise IngestError(path, 1, missing[0], "missing column")
        reader.fieldnames = header
        rows = []
        for row in reader:
            if not any((v or "").strip() for v in row.values()):
                continue
            rows.append((reader.line_num, {k: (v or "").strip() for k, v in row.items() if k is not None}))
        return rows


def _num(path, line, name, text, default=None, nonneg=False) -> float:
    if text == "":
        if default is None:
            raise IngestError(path, line, name, "value required")
        return default
    try:
        val = float(text)
    except ValueError:
        raise IngestError(path, line, name, f"not a number: {text!r}") from None
    if math.isnan(val) or (nonneg and val < 0):
        raise IngestError(path, line, name, f"invalid value {text!r}")
    return val


def read_network(path, generators_path) -> NetworkData:
    path, generators_path = Path(path), Path(generators_path)
    buses, lines = [], []
    seen_bus: set[str] = set()
    for line, row in _read_rows(path, ("kind", "label")):
        kind = row["kind"].lower()
        if kind == "bus":
            label = row["label"]
            if not label:
                raise IngestError(path, line, "label", "bus label required")
            if label in seen_bus:
                raise IngestError(path, line, "label", f"duplicate bus {label!r}")
            seen_bus.add(label)
            buses.append(Bus(label,
                             _num(path, line, "theta_min", row.get("theta_min", ""), -math.pi),
                             _num(path, line, "theta_max", row.get("theta_max", ""), math.pi),
                             _num(path, line, "unmet_cost", row.get("unmet_cost", ""), 1000.0, nonneg=True)))
        elif kind == "line":
            vals = {k: _num(path, line, k, row.get(k, "")) for k in ("susceptance", "f_min", "f_max")}
            if vals["f_min"] > vals["f_max"]:
                raise IngestError(path, line, "f_min", "f_min exceeds f_max")
            lines.append((line, Line(row.get("from", ""), row.get("to", ""), vals["susceptance"],
                                     vals["f_min"], vals["f_max"], row["label"])))
        else:
            raise IngestError(path, line, "kind", f"expected 'bus' or 'line', got {row['kind']!r}")
    labels: set[str] = set()
    for line, ln in lines:
        for end in ("from", "to"):
            bus = ln.from_bus if end == "from" else ln.to_bus
            if bus not in seen_bus:
                raise IngestError(path, line, end, f"unknown bus {bus!r}")
        if ln.label in labels:
            raise IngestError(path, line, "label", f"duplicate line {ln.label!r}")
        labels.add(ln.label)
    gens = []
    defaults = {f.name: f.default for f in fields(GeneratorData) if f.name not in ("label", "bus", "category")}
    gen_labels: set[str] = set()
    for line, row in _read_rows(generators_path, ("label", "bus", "category")):
        if row["bus"] not in seen_bus:
            raise IngestError(generators_path, line, "bus", f"unknown bus {row['bus']!r}")
        if row["category"] not in ("d", "s", "r"):
            raise IngestError(generators_path, line, "category", f"expected d, s or r, got {row['category']!r}")
        if row["label"] in gen_labels or not row["label"]:
            raise IngestError(generators_path, line, "label", f"missing or duplicate generator {row['label']!r}")
        gen_labels.add(row["label"])
        kw = {k: _num(generators_path, line, k, row.get(k, ""), d, nonneg=True) for k, d in defaults.items()}
        if kw["c_min"] > kw["c_max"]:
            raise IngestError(generators_path, line, "c_min", "c_min exceeds c_max")
        gens.append(GeneratorData(row["label"], row["bus"], row["category"], **kw))
    return NetworkData(buses, [ln for _, ln in lines], gens)


def read_matrix(path, key: str) -> dict[str, np.ndarray]:
    """``key`` column of row labels, then one column per hourly timestamp."""
    path = Path(path)
    if not path.is_file():
        raise IngestError(path, None, None, "file not found")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestError(path, 1, None, "empty file") from None
        if not header or header[0] != key:
            raise IngestError(path, 1, key, f"first column must be {key!r}")
        stamps = header[1:]
        if not stamps:
            raise IngestError(path, 1, None, "no timestamp columns")
        out: dict[str, np.ndarray] = {}
        for row in reader:
            if not any(c.strip() for c in row):
                continue
            line = reader.line_num
            if len(row) != len(header):
                raise IngestError(path, line, None, f"expected {len(header)} fields, got {len(row)}")
            label = row[0].strip()
            if label in out:
                raise IngestError(path, line, key, f"duplicate {key} {label!r}")
            vals = [_num(path, line, stamps[k], row[k + 1].strip()) for k in range(len(stamps))]
            if any(v < 0 for v in vals):
                k = next(k for k, v in enumerate(vals) if v < 0)
                raise IngestError(path, line, stamps[k], "negative value")
            out[label] = np.array(vals)
        return out


def read_demand(da_path, rt_path, renewables_path, network: NetworkData,
                reserve_uc: float, reserve_ed: float) -> DemandData:
    da = read_matrix(da_path, "bus")
    rt = read_matrix(rt_path, "bus")
    buses = [b.label for b in network.buses]
    for path, series in ((da_path, da), (rt_path, rt)):
        for b in series:
            if b not in buses:
                raise IngestError(path, None, "bus", f"unknown bus {b!r}")
        for b in buses:
            series.setdefault(b, np.zeros(len(next(iter(series.values()), []))))
    ren = read_matrix(renewables_path, "generator") if renewables_path else {}
    gens = network.gen_map
    for g in ren:
        if g not in gens or gens[g].category != "r":
            raise IngestError(renewables_path, None, "generator", f"{g!r} is not a renewable generator")
    for g in network.category("r"):
        if g.label not in ren:
            raise IngestError(renewables_path or "renewables", None, "generator",
                              f"no availability series for renewable {g.label!r}")
    return DemandData(da, rt, ren, reserve_uc, reserve_ed)


@dataclass
class CaseConfig:
    network: Path
    generators: Path
    demand_da: Path
    demand_rt: Path
    renewables: Path | None = None
    scenario: str = "low"
    reserve_uc: float | None = None
    reserve_ed: float | None = None
    schedule: Schedule = field(default_factory=Schedule)
    da_gap: float = 0.005
    st_gap: float = 0.005
    ha_gap: float = 0.005
    monolithic_gap: float = 0.05
    time_limit: float = math.inf
    backend: str = "auto"
    days: int = 1
    output_dir: Path = Path("out")

    @property
    def reserves(self) -> tuple[float, float]:
        uc, ed = RESERVE_SCENARIOS[self.scenario]
        return (uc if self.reserve_uc is None else self.reserve_uc,
                ed if self.reserve_ed is None else self.reserve_ed)

    def plan(self, mode: str, days: int | None = None) -> RunPlan:
        def opts(gap):
            return SolveOptions(mip_gap=gap, time_limit=self.time_limit, backend=self.backend)
        return RunPlan(mode=mode, days=days or self.days, da=opts(self.da_gap), st=opts(self.st_gap),
                       ha=opts(self.ha_gap), monolithic=opts(self.monolithic_gap), schedule=self.schedule)


_FILE_KEYS = ("network", "generators", "demand_da", "demand_rt", "renewables")
_SCALAR_KEYS = {"scenario": str, "reserve_uc": float, "reserve_ed": float, "da_gap": float, "st_gap": float,
                "ha_gap": float, "monolithic_gap": float, "time_limit": float, "backend": str, "days": int}


def load_config(path) -> CaseConfig:
    path = Path(path)
    if not path.is_file():
        raise IngestError(path, None, None, "config file not found")
    try:
        raw = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as err:
        line = getattr(getattr(err, "problem_mark", None), "line", None)
        raise IngestError(path, None if line is None else line + 1, None, "invalid YAML") from None
    if not isinstance(raw, dict):
        raise IngestError(path, None, None, "top level must be a mapping")
    known = set(_FILE_KEYS) | set(_SCALAR_KEYS) | {"schedule", "output_dir"}
    for key in raw:
        if key not in known:
            raise IngestError(path, None, key, "unknown key")
    base = path.parent
    kw: dict = {}
    for key in _FILE_KEYS:
        val = raw.get(key)
        if val is None:
            if key != "renewables":
                raise IngestError(path, None, key, "required key missing")
            continue
        p = Path(os.path.expanduser(str(val)))
        p = p if p.is_absolute() else base / p
        if not p.is_file():
            raise IngestError(path, None, key, f"file {p} does not exist")
        kw[key] = p
    for key, typ in _SCALAR_KEYS.items():
        if key in raw and raw[key] is not None:
            try:
                kw[key] = typ(raw[key])
            except (TypeError, ValueError):
                raise IngestError(path, None, key, f"expected {typ.__name__}") from None
    if kw.get("scenario", "low") not in RESERVE_SCENARIOS:
        raise IngestError(path, None, "scenario", f"expected one of {sorted(RESERVE_SCENARIOS)}")
    if kw.get("backend", "auto") not in ("auto", "native", "highs"):
        raise IngestError(path, None, "backend", "expected auto, native or highs")
    if kw.get("days", 1) < 1:
        raise IngestError(path, None, "days", "must be at least 1")
    if "output_dir" in raw:
        out = Path(str(raw["output_dir"]))
        kw["output_dir"] = out if out.is_absolute() else base / out
    else:
        kw["output_dir"] = base / "out"
    sched = raw.get("schedule") or {}
    if not isinstance(sched, dict):
        raise IngestError(path, None, "schedule", "must be a mapping")
    layers = {}
    default = Schedule()
    for name in ("da", "st", "ha"):
        cur = getattr(default, name)
        over = sched.get(name) or {}
        if not isinstance(over, dict) or set(over) - {"delta", "horizon", "period"}:
            raise IngestError(path, None, f"schedule.{name}", "expected keys delta, horizon, period")
        try:
            layers[name] = LayerSchedule(cur.layer, float(over.get("delta", cur.delta)),
                                         float(over.get("horizon", cur.horizon)),
                                         float(over.get("period", cur.period)))
        except (TypeError, ValueError) as err:
            raise IngestError(path, None, f"schedule.{name}", str(err)) from None
    try:
        kw["schedule"] = Schedule(**layers)
    except ValueError as err:
        raise IngestError(path, None, "schedule", str(err)) from None
    return CaseConfig(**kw)


def ingest(config: CaseConfig, scenario: str | None = None) -> tuple[NetworkData, DemandData]:
    network = read_network(config.network, config.generators)
    uc, ed = config.reserves if scenario is None else RESERVE_SCENARIOS[scenario]
    demand = read_demand(config.demand_da, config.demand_rt, config.renewables, network, uc, ed)
    return network, demand


# writers (used by demos and the dataset converter) -------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v) if v != int(v) else str(int(v))
    return str(v)


def write_network(network: NetworkData, path, generators_path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(NETWORK_HEADER)
        for b in network.buses:
            w.writerow(["bus", b.label, _fmt(b.theta_min), _fmt(b.theta_max), _fmt(b.unmet_cost), "", "", "", "", ""])
        for ln in network.lines:
            w.writerow(["line", ln.label, "", "", "", ln.from_bus, ln.to_bus, _fmt(ln.susceptance),
                        _fmt(ln.f_min), _fmt(ln.f_max)])
    with open(generators_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GENERATOR_HEADER)
        for g in network.generators:
            w.writerow([_fmt(getattr(g, k)) for k in GENERATOR_HEADER])


def write_matrix(series: dict[str, np.ndarray], path, key: str) -> None:
    n = max((len(v) for v in series.values()), default=0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([key] + [str(h) for h in range(1, n + 1)])
        for label, vals in series.items():
            w.writerow([label] + [_fmt(float(v)) for v in vals])


def write_case(directory, network: NetworkData, demand: DemandData, **config) -> Path:
    """Write a complete case (CSVs plus ``case.yaml``) and return the config path."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_network(network, d / "network.csv", d / "generators.csv")
    write_matrix(demand.da, d / "demand_da.csv", "bus")
    write_matrix(demand.rt, d / "demand_rt.csv", "bus")
    cfg = {"network": "network.csv", "generators": "generators.csv",
           "demand_da": "demand_da.csv", "demand_rt": "demand_rt.csv"}
    if demand.renewables:
        write_matrix(demand.renewables, d / "renewables.csv", "generator")
        cfg["renewables"] = "renewables.csv"
    cfg.update(config)
    (d / "case.yaml").write_text(yaml.safe_dump(cfg, sort_keys=False))
    return d / "case.yaml"


def convert_matpower(bus, branch, gen, base_mva: float = 100.0, categories=None) -> NetworkData:
    """Map MATPOWER-style arrays onto :class:`NetworkData`.

    ``bus`` rows start with the bus number; ``branch`` rows are
    ``(fbus, tbus, r, x, b, rateA, ...)``; ``gen`` rows are
    ``(bus, Pg, Qg, Qmax, Qmin, Vg, mBase, status, Pmax, Pmin, ...)``.
    Susceptances become MW per radian (``base_mva / x``) and ``rateA`` sets
    symmetric flow limits (0 means unlimited).  Costs, ramps and up/down
    times are not part of these arrays and keep their defaults; ``categories``
    optionally maps generator index to ``d``/``s``/``r``.
    """
    categories = categories or {}
    buses = [Bus(str(int(row[0]))) for row in np.atleast_2d(bus)]
    lines = []
    for k, row in enumerate(np.atleast_2d(branch)):
        x = float(row[3])
        if x == 0:
            raise ValueError(f"branch {k} has zero reactance")
        rate = float(row[5]) if len(row) > 5 and row[5] > 0 else math.inf
        lines.append(Line(str(int(row[0])), str(int(row[1])), base_mva / x, -rate, rate, f"L{k + 1}"))
    gens = []
    for k, row in enumerate(np.atleast_2d(gen)):
        if len(row) > 7 and row[7] <= 0:
            continue
        gens.append(GeneratorData(f"G{k + 1}", str(int(row[0])), categories.get(k, "d"),
                                  c_min=max(float(row[9]), 0.0), c_max=float(row[8])))
    return NetworkData(buses, lines, gens)
