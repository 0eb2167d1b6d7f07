"""Small synthetic cases for tests and demos."""

from __future__ import annotations

import numpy as np

from .power.data import Bus, DemandData, GeneratorData, Line, NetworkData


def _profile(days: int, base: float, swing: float, phase: float = 6.0) -> np.ndarray:
    h = np.arange(24 * days)
    return base + swing * np.sin(2 * np.pi * (h - phase) / 24)


def two_bus_case(days: int = 1, load: float = 60.0) -> tuple[NetworkData, DemandData]:
    """One DA unit at bus 1, one ST unit at bus 2, a single line."""
    net = NetworkData(
        [Bus("1"), Bus("2")],
        [Line("1", "2", 20.0, -80.0, 80.0, "L1")],
        [GeneratorData("gd", "1", "d", phi_s=300, phi_f=50, phi_v=20, phi_o=5, c_min=10, c_max=120,
                       ramp_up=80, ramp_down=80, startup_lim=40, shutdown_lim=40, min_up_h=3, min_down_h=2,
                       eps=20, eps_s=30),
         GeneratorData("gs", "2", "s", phi_s=50, phi_f=10, phi_v=40, phi_o=5, c_min=5, c_max=40,
                       ramp_up=120, ramp_down=120, startup_lim=20, shutdown_lim=20, min_up_h=0.5,
                       min_down_h=0.5, eps=10)])
    da = _profile(days, load, 0.3 * load)
    rt = da * 1.05
    demand = DemandData({"1": 0.4 * da, "2": 0.6 * da}, {"1": 0.4 * rt, "2": 0.6 * rt})
    return net, demand


def three_bus_case(days: int = 1) -> tuple[NetworkData, DemandData]:
    """Triangle network with one DA unit, one ST unit and one wind farm."""
    net = NetworkData(
        [Bus("1"), Bus("2"), Bus("3")],
        [Line("1", "2", 10, -60, 60, "L12"), Line("2", "3", 10, -60, 60, "L23"), Line("1", "3", 10, -60, 60, "L13")],
        [GeneratorData("g1", "1", "d", phi_s=500, phi_f=100, phi_v=20, phi_o=5, c_min=20, c_max=150,
                       ramp_up=60, ramp_down=60, startup_lim=40, shutdown_lim=40, min_up_h=4, min_down_h=3,
                       eps=15, eps_s=25),
         GeneratorData("g2", "2", "s", phi_s=100, phi_f=30, phi_v=45, phi_o=5, c_min=5, c_max=60,
                       ramp_up=120, ramp_down=120, startup_lim=30, shutdown_lim=30, min_up_h=1,
                       min_down_h=1, eps=10),
         GeneratorData("w", "3", "r", phi_c=2, c_max=80)])
    base = _profile(days, 60.0, 30.0)
    h = np.arange(24 * days)
    da = {"1": 0.3 * base, "2": 0.3 * base, "3": 0.4 * base}
    rt = {"1": 0.33 * base, "2": 0.3 * base, "3": 0.42 * base}
    wind = 30 + 20 * np.cos(2 * np.pi * h / 24)
    return net, DemandData(da, rt, {"w": wind})


def shortage_case(days: int = 1) -> tuple[NetworkData, DemandData]:
    """Single bus where the forecast undershoots real-time load.

    A 105 MW base unit covers the forecast plus a 5% reserve but not 10%;
    only the 10% reserve commits the peaker that real-time load needs.
    """
    net = NetworkData(
        [Bus("1")], [],
        [GeneratorData("base", "1", "d", phi_s=100, phi_f=20, phi_v=10, phi_o=5, c_min=0, c_max=105),
         GeneratorData("peak", "1", "d", phi_s=200, phi_f=40, phi_v=60, phi_o=5, c_min=0, c_max=30)])
    n = 24 * days
    return net, DemandData({"1": np.full(n, 100.0)}, {"1": np.full(n, 120.0)})


def zero_demand_case(n_bus: int = 2, days: int = 1) -> tuple[NetworkData, DemandData]:
    """Chain network with no load; every unit should stay off."""
    buses = [Bus(str(k + 1)) for k in range(n_bus)]
    lines = [Line(str(k + 1), str(k + 2), 10.0, -50.0, 50.0, f"L{k + 1}") for k in range(n_bus - 1)]
    gens = [GeneratorData("gd", "1", "d", phi_s=100, phi_f=10, phi_v=20, c_min=5, c_max=50),
            GeneratorData("gs", buses[-1].label, "s", phi_s=50, phi_f=5, phi_v=30, c_min=2, c_max=20)]
    n = 24 * days
    zeros = {b.label: np.zeros(n) for b in buses}
    return NetworkData(buses, lines, gens), DemandData(zeros, {k: v.copy() for k, v in zeros.items()})


def synthetic_case(n_bus: int, seed: int = 0, days: int = 1) -> tuple[NetworkData, DemandData]:
    """Random connected network with one DA and one ST unit per bus."""
    rng = np.random.default_rng(seed)
    buses = [Bus(str(k + 1)) for k in range(n_bus)]
    lines = [Line(str(k + 1), str(k + 2), 10.0, -60.0, 60.0, f"L{k + 1}") for k in range(n_bus - 1)]
    if n_bus > 2:
        lines.append(Line("1", str(n_bus), 8.0, -40.0, 40.0, f"L{n_bus}"))
    gens = []
    for b in buses:
        gens.append(GeneratorData(f"d{b.label}", b.label, "d", phi_s=float(rng.integers(100, 500)), phi_f=50,
                                  phi_v=float(rng.integers(15, 30)), phi_o=5, c_min=10, c_max=80,
                                  ramp_up=60, ramp_down=60, startup_lim=30, shutdown_lim=30, min_up_h=2,
                                  min_down_h=2, eps=20, eps_s=20))
        gens.append(GeneratorData(f"s{b.label}", b.label, "s", phi_s=50, phi_f=10,
                                  phi_v=float(rng.integers(35, 60)), phi_o=5, c_min=2, c_max=25,
                                  ramp_up=100, ramp_down=100, startup_lim=15, shutdown_lim=15, eps=10))
    base = _profile(days, 25.0, 8.0)
    da = {b.label: base * rng.uniform(0.7, 1.3) for b in buses}
    rt = {k: v * rng.uniform(0.95, 1.1) for k, v in da.items()}
    return NetworkData(buses, lines, gens), DemandData(da, rt)
