"""Per-worker computation/communication energy, timing, and energy settlement.

All formulas operate in canonical internal units (J, W, Hz, bit, s); dBm and
megabyte conversions happen at the boundary.  Energy demand is settled
hierarchically: harvested energy first, then battery, then grid, with any
harvest surplus charging the battery up to its capacity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

IDLE_SENTINEL = math.inf

DISTANCE_MIN_M = 10.0
DISTANCE_MAX_M = 500.0


@dataclass(frozen=True)
class WorkerProfile:
    """Static hardware capabilities of one worker device.

    Attributes:
        id: worker index within the fleet.
        switched_capacitance: effective switched capacitance, W/Hz^3.
        flops_per_cycle: FLOPs the CPU completes per cycle.
        f_max: maximum CPU frequency, Hz.
        p_max: maximum transmission power, W.
        battery_capacity: maximum battery energy, J.
        device_class: "low_end" or "high_end".
    """

    id: int
    switched_capacitance: float
    flops_per_cycle: float
    f_max: float
    p_max: float
    battery_capacity: float
    device_class: str = "low_end"

    def __post_init__(self) -> None:
        for name in ("switched_capacitance", "flops_per_cycle", "f_max", "p_max", "battery_capacity"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass
class WorkerState:
    """Per-round dynamic state of one worker.

    Attributes:
        battery: currently stored energy, J (0 <= battery <= capacity).
        dataset_size: local training samples this round.
        distance: distance to the coordinator, m.
        local_iterations: local training passes needed this round.
        harvest_available: renewable energy harvestable this round, J.
    """

    battery: float
    dataset_size: int
    distance: float
    local_iterations: int
    harvest_available: float


@dataclass(frozen=True)
class EnergyBreakdown:
    """Where one worker's round energy came from and went.

    ``renewable_used + battery_used + grid_used`` equals the settled demand;
    harvest surplus beyond demand charges the battery up to capacity.
    """

    computation: float
    transmission: float
    wasted: float
    renewable_used: float
    battery_used: float
    grid_used: float
    battery_before: float
    battery_after: float
    surplus_stored: float

    @property
    def demand(self) -> float:
        return self.renewable_used + self.battery_used + self.grid_used

    @property
    def green_used(self) -> float:
        """Energy served by non-grid sources (harvest plus stored renewables)."""
        return self.renewable_used + self.battery_used


def computation_energy(
    profile: WorkerProfile,
    state: WorkerState,
    f: float,
    model_complexity: float,
) -> float:
    """Local-training energy (J): sigma * I * alpha * s * f^2 / c."""
    if f < 0.0 or f > profile.f_max * (1.0 + 1e-9):
        raise ValueError(f"frequency {f} outside [0, {profile.f_max}]")
    return (
        profile.switched_capacitance
        * state.local_iterations
        * model_complexity
        * state.dataset_size
        * f**2
        / profile.flops_per_cycle
    )


def computation_time(
    profile: WorkerProfile,
    state: WorkerState,
    f: float,
    model_complexity: float,
) -> float:
    """Local-training time (s): I * alpha * s / (c * f); inf when f == 0 (idle)."""
    if f < 0.0:
        raise ValueError(f"frequency must be >= 0, got {f}")
    if f == 0.0:
        return IDLE_SENTINEL
    return state.local_iterations * model_complexity * state.dataset_size / (profile.flops_per_cycle * f)


def channel_gain(distance_m: float) -> float:
    """Linear channel gain from the distance-based path-loss model.

    Path loss in dB is 127 + 30*log10(d) with d in kilometers; the linear
    gain is 10^(-PL/10).  Valid for distances in [10, 500] m.
    """
    if not DISTANCE_MIN_M <= distance_m <= DISTANCE_MAX_M:
        raise ValueError(f"distance {distance_m} m outside [{DISTANCE_MIN_M}, {DISTANCE_MAX_M}]")
    path_loss_db = 127.0 + 30.0 * math.log10(distance_m / 1000.0)
    return 10.0 ** (-path_loss_db / 10.0)


def achievable_rate(b: float, p: float, gain: float, n0: float) -> float:
    """Shannon rate (bit/s): b * log2(1 + g*p / (b*N0)); zero without power or bandwidth."""
    if b < 0.0 or p < 0.0:
        raise ValueError("bandwidth and power must be >= 0")
    if b == 0.0 or p == 0.0:
        return 0.0
    return b * math.log2(1.0 + gain * p / (b * n0))


def transmission_time(rate: float, model_size_bits: float) -> float:
    """Upload time (s): m / r; inf when the rate is zero (cannot transmit)."""
    if rate <= 0.0:
        return IDLE_SENTINEL
    return model_size_bits / rate


def transmission_energy(p: float, rate: float, model_size_bits: float) -> float:
    """Upload energy (J): m * p / r, identically p * transmission_time."""
    if rate <= 0.0:
        return IDLE_SENTINEL
    return model_size_bits * p / rate


def participation_indicator(
    f: float,
    p: float,
    b: float,
    f_threshold: float = 0.0,
    p_threshold: float = 0.0,
    b_threshold: float = 0.0,
) -> int:
    """1 iff all of f, p, b exceed their thresholds, else 0.

    Continuous policies never emit exact zeros, so callers pass thresholds
    (typically 1% of each maximum) below which a component counts as zero.
    """
    return int(f > f_threshold and p > p_threshold and b > b_threshold)


def settle_iteration(
    state: WorkerState,
    profile: WorkerProfile,
    demand: float,
    computation: float = 0.0,
    transmission: float = 0.0,
    wasted: float = 0.0,
) -> EnergyBreakdown:
    """Settle one round's energy demand through harvest, battery, then grid.

    Harvest covers the demand first; any shortfall drains the battery; the
    grid covers the rest.  Harvest surplus charges the battery, clipped at
    capacity.  The optional bookkeeping fields are recorded verbatim.
    """
    if demand < 0.0:
        raise ValueError(f"demand must be >= 0, got {demand}")
    harvest = state.harvest_available
    battery_before = state.battery
    renewable_used = min(demand, harvest)
    residual = demand - renewable_used
    battery_used = min(residual, battery_before)
    grid_used = residual - battery_used
    surplus = harvest - renewable_used
    battery_after = min(profile.battery_capacity, battery_before - battery_used + surplus)
    surplus_stored = battery_after - (battery_before - battery_used)
    return EnergyBreakdown(
        computation=computation,
        transmission=transmission,
        wasted=wasted,
        renewable_used=renewable_used,
        battery_used=battery_used,
        grid_used=grid_used,
        battery_before=battery_before,
        battery_after=battery_after,
        surplus_stored=surplus_stored,
    )


def discounted_grid_total(per_round_grid, gamma: float) -> float:
    """Discounted sum of per-round grid energy: sum_n gamma^(n-1) * grid_n."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    total = 0.0
    factor = 1.0
    for grid in per_round_grid:
        total += factor * grid
        factor *= gamma
    return total


def dbm_to_watts(dbm: float) -> float:
    """Convert dBm to Watts: 10^((dBm - 30) / 10)."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    """Convert Watts to dBm (inverse of :func:`dbm_to_watts`)."""
    if watts <= 0.0:
        raise ValueError("power must be strictly positive")
    return 10.0 * math.log10(watts) + 30.0
