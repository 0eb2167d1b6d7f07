"""Network, generator, demand and schedule data for the tri-level market model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DA, ST, HA = "DA", "ST", "HA"
LAYERS = (DA, ST, HA)

# generator categories
DA_CONV, ST_CONV, RENEWABLE = "d", "s", "r"


@dataclass
class Bus:
    label: str
    theta_min: float = -math.pi
    theta_max: float = math.pi
    unmet_cost: float = 1000.0


@dataclass
class Line:
    from_bus: str
    to_bus: str
    susceptance: float
    f_min: float
    f_max: float
    label: str = ""

    def __post_init__(self):
        if not self.label:
            self.label = f"{self.from_bus}-{self.to_bus}"
        if self.f_min > self.f_max:
            raise ValueError(f"line {self.label}: f_min > f_max")


@dataclass
class GeneratorData:
    label: str
    bus: str
    category: str
    phi_s: float = 0.0      # startup cost, $
    phi_f: float = 0.0      # no-load cost, $/h
    phi_v: float = 0.0      # variable cost, $/MWh
    phi_o: float = 0.0      # overgeneration cost, $/MWh
    phi_c: float = 0.0      # curtailment cost, $/MWh
    c_min: float = 0.0
    c_max: float = 0.0
    ramp_up: float = math.inf      # MW/h
    ramp_down: float = math.inf
    startup_lim: float = math.inf  # MW
    shutdown_lim: float = math.inf
    min_up_h: float = 0.0
    min_down_h: float = 0.0
    eps: float = math.inf          # HA band width, MW
    eps_s: float = math.inf        # ST band width vs DA, MW

    def __post_init__(self):
        if self.category not in (DA_CONV, ST_CONV, RENEWABLE):
            raise ValueError(f"generator {self.label}: unknown category {self.category!r}")
        if self.c_min > self.c_max:
            raise ValueError(f"generator {self.label}: c_min > c_max")
        for name in ("phi_s", "phi_f", "phi_v", "phi_o", "phi_c", "c_min", "ramp_up", "ramp_down",
                     "startup_lim", "shutdown_lim", "min_up_h", "min_down_h", "eps", "eps_s"):
            if getattr(self, name) < 0:
                raise ValueError(f"generator {self.label}: {name} must be nonnegative")

    @property
    def conventional(self) -> bool:
        return self.category != RENEWABLE


@dataclass
class NetworkData:
    buses: list[Bus]
    lines: list[Line]
    generators: list[GeneratorData]

    def __post_init__(self):
        labels = [b.label for b in self.buses]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate bus label")
        known = set(labels)
        for ln in self.lines:
            if ln.from_bus not in known or ln.to_bus not in known:
                raise ValueError(f"line {ln.label} references an unknown bus")
        if len({ln.label for ln in self.lines}) != len(self.lines):
            raise ValueError("duplicate line label")
        gl = [g.label for g in self.generators]
        if len(set(gl)) != len(gl):
            raise ValueError("duplicate generator label")
        for g in self.generators:
            if g.bus not in known:
                raise ValueError(f"generator {g.label} attached to unknown bus {g.bus!r}")

    @property
    def bus_map(self) -> dict[str, Bus]:
        return {b.label: b for b in self.buses}

    def generators_at(self, bus: str) -> list[GeneratorData]:
        return [g for g in self.generators if g.bus == bus]

    def category(self, cat: str) -> list[GeneratorData]:
        return [g for g in self.generators if g.category == cat]

    @property
    def gen_map(self) -> dict[str, GeneratorData]:
        return {g.label: g for g in self.generators}


# reserve profiles as (UC layers, ED layer) fractions of demand
RESERVE_SCENARIOS = {
    "low": (0.10, 0.025),
    "very_low": (0.05, 0.0125),
}


@dataclass
class DemandData:
    """Hourly series (hour-ending samples) per bus and per renewable generator.

    ``da[bus][h]`` is the day-ahead forecast for the hour ending at ``h + 1``
    (global hours across all days); ``rt`` is the realized real-time load.
    Quarter-hour values interpolate linearly between hourly samples and hold
    the end values outside the data.
    """

    da: dict[str, np.ndarray]
    rt: dict[str, np.ndarray]
    renewables: dict[str, np.ndarray] = field(default_factory=dict)
    reserve_uc: float = 0.10
    reserve_ed: float = 0.025

    def __post_init__(self):
        self.da = {k: np.asarray(v, dtype=float) for k, v in self.da.items()}
        self.rt = {k: np.asarray(v, dtype=float) for k, v in self.rt.items()}
        self.renewables = {k: np.asarray(v, dtype=float) for k, v in self.renewables.items()}
        for name, series in (("da", self.da), ("rt", self.rt), ("renewables", self.renewables)):
            for k, v in series.items():
                if np.any(v < 0):
                    raise ValueError(f"negative {name} value for {k!r}")
        if self.da.keys() != self.rt.keys():
            raise ValueError("day-ahead and real-time demand cover different buses")

    @classmethod
    def with_scenario(cls, da, rt, renewables=None, scenario: str = "low") -> DemandData:
        uc, ed = RESERVE_SCENARIOS[scenario]
        return cls(da, rt, renewables or {}, reserve_uc=uc, reserve_ed=ed)

    def with_reserves(self, reserve_uc: float, reserve_ed: float) -> DemandData:
        return DemandData(self.da, self.rt, self.renewables, reserve_uc, reserve_ed)

    @property
    def hours(self) -> int:
        return min((len(v) for v in self.da.values()), default=0)

    @property
    def days(self) -> int:
        return self.hours // 24

    @staticmethod
    def hourly(series: np.ndarray, hour: int) -> float:
        """Sample for the hour ending at global hour ``hour`` (1-based), held at the ends."""
        if len(series) == 0:
            return 0.0
        return float(series[min(max(hour, 1), len(series)) - 1])

    @staticmethod
    def interpolate(series: np.ndarray, time_h: float) -> float:
        if len(series) == 0:
            return 0.0
        return float(np.interp(time_h, np.arange(1, len(series) + 1), series))

    def load(self, layer: str, bus: str, step: int, delta: float) -> float:
        """Demand at global step ``step`` of a layer with resolution ``delta`` hours."""
        if layer == DA and delta == 1.0:
            return self.hourly(self.da[bus], step)
        t = step * delta
        da = self.interpolate(self.da[bus], t)
        rt = self.interpolate(self.rt[bus], t)
        if layer == DA:
            return da
        if layer == ST:
            return 0.5 * (da + rt)
        return rt

    def reserve(self, layer: str, bus: str, step: int, delta: float) -> float:
        frac = self.reserve_ed if layer == HA else self.reserve_uc
        return frac * self.load(layer, bus, step, delta)

    def availability(self, gen: str, step: int, delta: float) -> float:
        series = self.renewables.get(gen)
        if series is None:
            raise KeyError(f"no availability series for renewable {gen!r}")
        if delta == 1.0:
            return self.hourly(series, step)
        return self.interpolate(series, step * delta)


@dataclass(frozen=True)
class LayerSchedule:
    layer: str
    delta: float      # hours per step
    horizon: float    # hours
    period: float     # hours between consecutive subproblem starts

    def __post_init__(self):
        for name, val in (("horizon", self.horizon / self.delta), ("period", self.period / self.delta),
                          ("per day", 24.0 / self.period)):
            if abs(val - round(val)) > 1e-9 or round(val) < 1:
                raise ValueError(f"{self.layer} schedule: {name} must be a positive whole number of steps")

    @property
    def points(self) -> int:
        return round(self.horizon / self.delta)

    @property
    def period_steps(self) -> int:
        return round(self.period / self.delta)

    @property
    def per_day(self) -> int:
        return round(24.0 / self.period)

    @property
    def steps_per_day(self) -> int:
        return round(24.0 / self.delta)

    def steps(self, day: int, i: int) -> list[int]:
        """Global 1-based step indices of subproblem ``i`` on ``day``."""
        first = day * self.steps_per_day + i * self.period_steps + 1
        return list(range(first, first + self.points))


@dataclass(frozen=True)
class Schedule:
    da: LayerSchedule = LayerSchedule(DA, 1.0, 24.0, 24.0)
    st: LayerSchedule = LayerSchedule(ST, 0.25, 4.0, 3.0)
    ha: LayerSchedule = LayerSchedule(HA, 0.25, 1.25, 0.25)

    def __post_init__(self):
        if self.st.delta != self.ha.delta:
            raise ValueError("ST and HA layers must share a resolution")
        ratio = self.da.delta / self.st.delta
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("DA resolution must be a whole multiple of the ST resolution")
        if self.da.per_day != 1:
            raise ValueError("exactly one DA subproblem per day is supported")
        per_st = self.st.period / self.ha.period
        if abs(per_st - round(per_st)) > 1e-9:
            raise ValueError("ST period must be a whole multiple of the HA period")
        # an HA horizon must stay inside the horizon of the ST subproblem that owns it
        if self.st.period - self.ha.period + self.ha.horizon > self.st.horizon + 1e-9:
            raise ValueError("HA horizons would extend past their ST subproblem")

    @property
    def ratio(self) -> int:
        """Fine (ST/HA) steps per DA step."""
        return round(self.da.delta / self.st.delta)

    @property
    def ha_per_st(self) -> int:
        return round(self.st.period / self.ha.period)

    def layer(self, name: str) -> LayerSchedule:
        return {DA: self.da, ST: self.st, HA: self.ha}[name]
