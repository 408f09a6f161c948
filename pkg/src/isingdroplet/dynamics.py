"""Zero-temperature heat-bath dynamics: graphical and rejection-free engines."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _backend
from .lattice import FieldParameter, SpinConfiguration
from .rng import ClockField

# flips within this many cells of the ghost margin count as window overflow
OVERFLOW_CELLS = 2


class WindowOverflow(RuntimeError):
    """A flip reached the edge of the simulation window."""


class ExtinctionCensored(RuntimeError):
    """The horizon ran out before the droplet disappeared."""

    def __init__(self, horizon: float, remaining: int):
        super().__init__(f"droplet still has {remaining} minus sites at horizon {horizon}")
        self.horizon = horizon
        self.remaining = remaining


def update_rule(neighbor_spins: Sequence[int], params: FieldParameter,
                tie_mark: int, uniform: float) -> int:
    """New spin value at a ring, given the four neighbours."""
    if len(neighbor_spins) != 4:
        raise ValueError("exactly four neighbour spins are required")
    S = int(sum(neighbor_spins))
    if not params.zero_temperature:
        if math.isinf(params.h):
            return 1
        x = params.beta * S + params.h
        return 1 if uniform < 1.0 / (1.0 + math.exp(-2.0 * x)) else -1
    if S > 0:
        return 1
    if S < 0:
        return -1
    if math.isinf(params.h):
        return 1
    return 1 if tie_mark > 0 else -1


@dataclass
class Trajectory:
    sampled_times: list[float]
    snapshots: list[SpinConfiguration]
    event_count: int
    extinction_time: float | None
    flips_to_plus: int = 0
    flips_to_minus: int = 0
    overflow_time: float | None = None
    rings: int | None = None
    engine: str = "graphical"
    absorbed: bool = False
    final_time: float = 0.0

    @property
    def censored(self) -> bool:
        return self.extinction_time is None

    @property
    def final(self) -> SpinConfiguration:
        return self.snapshots[-1]


def _prepare_times(sample_times, horizon: float) -> np.ndarray:
    st = np.asarray(list(sample_times) if sample_times is not None else [], dtype=float)
    if st.size and (np.any(np.diff(st) < 0) or st[0] < 0):
        raise ValueError("sample_times must be nonnegative and increasing")
    if st.size and st[-1] > horizon:
        raise ValueError("horizon must be >= max(sample_times)")
    return np.ascontiguousarray(st)


def _trajectory(raw: dict, config: SpinConfiguration, st: np.ndarray, engine: str,
                strict: bool) -> Trajectory:
    snaps = [config.with_spins(a) for a in raw["snapshots"]]
    overflow = raw["overflow"] if raw["overflow"] >= 0 else None
    if strict and overflow is not None:
        raise WindowOverflow(f"flip within {OVERFLOW_CELLS} cells of the window edge at t={overflow:.6g}")
    return Trajectory(
        sampled_times=[float(t) for t in st[: len(snaps)]],
        snapshots=snaps,
        event_count=int(raw["events"]),
        extinction_time=float(raw["extinction"]) if raw["extinction"] >= 0 else None,
        flips_to_plus=int(raw["to_plus"]),
        flips_to_minus=int(raw["to_minus"]),
        overflow_time=overflow,
        rings=raw.get("rings"),
        engine=engine,
        absorbed=bool(raw["absorbed"]),
        final_time=float(raw["time"]),
    )


def _band(config: SpinConfiguration) -> int:
    # Lambda_L with a declared boundary is the whole system; only windows that
    # stand in for an infinite lattice (frozen-mask) can overflow
    if config.boundary_rule == "frozen-mask":
        return config.margin + OVERFLOW_CELLS
    return config.margin


def run_graphical(config: SpinConfiguration, clocks: ClockField, params: FieldParameter,
                  horizon: float, sample_times=(), strict: bool = False) -> Trajectory:
    """Exact graphical construction; a pure function of (config, clocks, params).

    Rings of a site whose update cannot change its spin are skipped lazily; the
    site's clock is caught up when it becomes live again, so the realised path
    is the one obtained by executing every ring.
    """
    st = _prepare_times(sample_times, horizon)
    spins = config.spins.copy()
    raw = _backend.graphical_run(spins, config.frozen, -config.offset, -config.offset,
                                 float(params.h), float(params.beta), float(horizon), st,
                                 clocks.master_seed, _band(config))
    return _trajectory(raw, config, st, "graphical", strict)


def run_kmc(config: SpinConfiguration, params: FieldParameter, horizon: float, seed: int,
            sample_times=(), strict: bool = False, max_events: int = -1) -> Trajectory:
    """Rejection-free (n-fold way) engine for the zero-temperature chain."""
    if not params.zero_temperature:
        raise ValueError("run_kmc supports beta = inf only")
    st = _prepare_times(sample_times, horizon)
    spins = config.spins.copy()
    raw = _backend.kmc_run(spins, config.frozen, params.p_plus, params.p_minus, float(horizon),
                           st, int(seed) & ((1 << 64) - 1), _band(config), int(max_events))
    return _trajectory(raw, config, st, "kmc", strict)


def coupled_run(configs: Sequence[SpinConfiguration], clocks: ClockField, params: FieldParameter,
                horizon: float, sample_times=()) -> list[Trajectory]:
    """Run each configuration on the same clocks and tie marks."""
    if not configs:
        return []
    ref = configs[0]
    for c in configs[1:]:
        if c.half_width != ref.half_width or c.margin != ref.margin:
            raise ValueError("coupled configurations must share the window")
    return [run_graphical(c, clocks, params, horizon, sample_times) for c in configs]


def extinction_time(config: SpinConfiguration, params: FieldParameter, seed: int,
                    horizon: float = math.inf, engine: str = "kmc") -> float:
    """First time the droplet is empty; raises ExtinctionCensored past the horizon."""
    if not params.zero_temperature:
        raise ValueError("extinction_time is defined at beta = inf")
    if engine == "kmc":
        traj = run_kmc(config, params, horizon, seed)
    elif engine == "graphical":
        traj = run_graphical(config, ClockField(seed), params, horizon)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    if traj.extinction_time is None:
        remaining = config.minus_count() + traj.flips_to_minus - traj.flips_to_plus
        raise ExtinctionCensored(horizon, remaining)
    return traj.extinction_time
