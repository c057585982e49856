"""One federated-learning episode: sample a fleet, run rounds, track energy.

A round clamps the per-worker action (CPU frequency, transmit power,
bandwidth), computes locally, contends for the shared channel through the
FCFS scheduler, settles energy hierarchically (harvest, battery, grid), and
feeds the on-time participation fraction into a surrogate convergence model.
The episode ends when the surrogate error reaches the global target or the
round cap.
"""

from __future__ import annotations

import dataclasses
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .channel import QUEUE_DISCIPLINES, ChannelTimeline, ScheduleOutcome, TransmissionRequest, schedule_round
from .energy import (
    EnergyBreakdown,
    WorkerProfile,
    WorkerState,
    achievable_rate,
    channel_gain,
    computation_energy,
    computation_time,
    dbm_to_watts,
    discounted_grid_total,
    settle_iteration,
    transmission_time,
)
from .weather import HarvestParams, WeatherRecord, build_harvest_series


@dataclass(frozen=True)
class ScenarioConfig:
    """Scenario knobs: fleet make-up, channel, workload, and outage regime.

    ``scenario_kind`` selects the renewable regime: 1 = every worker harvests
    and starts with a full battery; 2 = a random subset (up to 60% of the
    fleet) suffers one contiguous harvest outage window and starts fully
    charged while the rest start at 50-100% charge; 3 = the affected subset
    has zero harvest and zero stored energy for the whole episode.
    """

    worker_count: int = 20
    scenario_kind: int = 1
    seed: int = 0
    # Fleet composition.
    low_end_fraction_cap: float = 0.6
    low_end_fraction_mean: float = 0.3
    low_end_fraction_std: float = 0.1
    low_end_f_range_hz: tuple[float, float] = (1.0e9, 3.0e9)
    low_end_p_range_dbm: tuple[float, float] = (23.0, 28.0)
    low_end_flops_per_cycle: float = 4.0
    high_end_f_range_hz: tuple[float, float] = (3.2e9, 5.0e9)
    high_end_p_range_dbm: tuple[float, float] = (29.0, 33.0)
    high_end_flops_per_cycle: float = 2.0
    switched_capacitance: float = 1.0e-28
    battery_capacity_range_j: tuple[float, float] = (15.0, 50.0)
    # Wireless environment.
    distance_range_m: tuple[float, float] = (10.0, 500.0)
    channel_capacity_range_hz: tuple[float, float] = (50.0e6, 100.0e6)
    noise_psd_dbm_per_hz: float = -158.0
    # FL workload.
    model_size_bits: float = 2.51e6 * 8.0
    model_complexity_flops: float = 1.8e6
    samples_range: tuple[int, int] = (200, 800)
    local_iterations_range: tuple[int, int] = (5, 15)
    local_target: float = 0.5
    global_target: float = 0.04
    deadline_s: float = 20.0
    discount: float = 0.99
    # Mechanics and calibration.
    surrogate_target_rounds: int = 11
    truncation_rounds: int = 50
    participation_threshold_fraction: float = 0.01
    gss_exploration_rate: float = 0.1
    outage_fraction_cap: float = 0.6
    queue_discipline: str = "fcfs_blocking"
    # Harvesting hardware; the efficiency factor models device-level limits
    # on how much of the locally available renewable power is usable.
    harvest_efficiency: float = 0.02
    panel_area_m2: float = 0.03
    air_density_kg_m3: float = 1.225
    sweep_area_m2: float = 0.1
    weibull_shape: float = 2.0

    def __post_init__(self) -> None:
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")
        if self.scenario_kind not in (1, 2, 3):
            raise ValueError(f"scenario_kind must be 1, 2 or 3, got {self.scenario_kind}")
        if self.queue_discipline not in QUEUE_DISCIPLINES:
            raise ValueError(f"queue_discipline must be one of {QUEUE_DISCIPLINES}")

    @property
    def noise_psd_w_per_hz(self) -> float:
        return dbm_to_watts(self.noise_psd_dbm_per_hz)

    def harvest_params(self) -> HarvestParams:
        return HarvestParams(
            panel_area=self.panel_area_m2,
            air_density=self.air_density_kg_m3,
            sweep_area=self.sweep_area_m2,
            weibull_shape=self.weibull_shape,
            horizon=self.deadline_s,
        )

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        data = json.loads(text)
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown scenario config keys: {sorted(unknown)}")
        for f in dataclasses.fields(cls):
            if f.name in data and isinstance(data[f.name], list):
                data[f.name] = tuple(data[f.name])
        return cls(**data)


@dataclass(frozen=True)
class ActionVector:
    """Physical per-worker control action: CPU frequency, power, bandwidth."""

    f: np.ndarray  # Hz
    p: np.ndarray  # W
    b: np.ndarray  # Hz

    def __post_init__(self) -> None:
        if not (len(self.f) == len(self.p) == len(self.b)):
            raise ValueError("f, p, b must have equal length")

    def __len__(self) -> int:
        return len(self.f)


@dataclass(frozen=True)
class FLState:
    """Global training progress of the surrogate model."""

    round_index: int
    error: float
    terminal_round: int | None


@dataclass(frozen=True)
class RoundInputs:
    """Everything drawn for the upcoming round before the action is chosen."""

    index: int
    b_max: float
    distances: np.ndarray
    samples: np.ndarray
    local_iterations: np.ndarray
    harvest: np.ndarray
    batteries: np.ndarray


@dataclass
class RoundOutcome:
    """Full record of one global iteration."""

    index: int
    b_max: float
    action: ActionVector
    participated: np.ndarray
    local_iterations: np.ndarray
    samples: np.ndarray
    distances: np.ndarray
    harvest: np.ndarray
    tau: np.ndarray
    tq: np.ndarray
    tr: np.ndarray
    total_time: np.ndarray
    on_time: np.ndarray
    p1: np.ndarray
    p3: np.ndarray
    p2: bool
    breakdowns: list[EnergyBreakdown]
    schedule: dict[int, ScheduleOutcome]
    timeline: ChannelTimeline
    duration: float
    participation_fraction: float

    @property
    def total_energy(self) -> float:
        return sum(b.demand for b in self.breakdowns)

    @property
    def grid_energy(self) -> float:
        return sum(b.grid_used for b in self.breakdowns)

    @property
    def renewable_energy(self) -> float:
        return sum(b.renewable_used for b in self.breakdowns)

    @property
    def battery_energy(self) -> float:
        return sum(b.battery_used for b in self.breakdowns)

    @property
    def green_energy(self) -> float:
        return self.renewable_energy + self.battery_energy

    @property
    def wasted_energy(self) -> float:
        return sum(b.wasted for b in self.breakdowns)

    @property
    def batteries_after(self) -> np.ndarray:
        return np.array([b.battery_after for b in self.breakdowns])


@dataclass(frozen=True)
class EpisodeMetrics:
    """Episode aggregates matching the comparison-table rows."""

    total_energy: float
    grid_energy: float
    green_energy: float
    mean_round_duration: float
    violations_per_worker: float
    global_iterations: int
    converged: bool
    wasted_energy: float
    discounted_grid_energy: float

    def as_table_row(self) -> dict[str, float]:
        return {
            "Total Energy (J)": self.total_energy,
            "Grid Energy (J)": self.grid_energy,
            "Green Energy (J)": self.green_energy,
            "Duration of Global Iteration (s)": self.mean_round_duration,
            "Violations per Worker": self.violations_per_worker,
            "Global Iterations": float(self.global_iterations),
        }


TABLE_METRICS = (
    "Total Energy (J)",
    "Grid Energy (J)",
    "Green Energy (J)",
    "Duration of Global Iteration (s)",
    "Violations per Worker",
    "Global Iterations",
)


def sample_worker_fleet(config: ScenarioConfig, seed) -> list[WorkerProfile]:
    """Draw the heterogeneous worker fleet for one episode.

    The low-end head count comes from a truncated normal (mean 0.3K,
    std 0.1K, truncated to [0, 0.6K]); per-worker capacities are uniform in
    their class ranges.
    """
    rng = np.random.default_rng(seed)
    k = config.worker_count
    cap = math.floor(config.low_end_fraction_cap * k)
    mean = config.low_end_fraction_mean * k
    std = config.low_end_fraction_std * k
    while True:
        draw = rng.normal(mean, std)
        if 0.0 <= draw <= cap:
            break
    low_count = int(round(draw))
    low_set = set(rng.permutation(k)[:low_count].tolist())
    fleet = []
    for worker in range(k):
        if worker in low_set:
            f_lo, f_hi = config.low_end_f_range_hz
            p_lo, p_hi = config.low_end_p_range_dbm
            cycles = config.low_end_flops_per_cycle
            device_class = "low_end"
        else:
            f_lo, f_hi = config.high_end_f_range_hz
            p_lo, p_hi = config.high_end_p_range_dbm
            cycles = config.high_end_flops_per_cycle
            device_class = "high_end"
        fleet.append(
            WorkerProfile(
                id=worker,
                switched_capacitance=config.switched_capacitance,
                flops_per_cycle=cycles,
                f_max=float(rng.uniform(f_lo, f_hi)),
                p_max=dbm_to_watts(float(rng.uniform(p_lo, p_hi))),
                battery_capacity=float(rng.uniform(*config.battery_capacity_range_j)),
                device_class=device_class,
            )
        )
    return fleet


def sample_outages(config: ScenarioConfig, seed, iterations: int) -> np.ndarray:
    """Boolean (workers x iterations) mask of rounds with zero harvest.

    Scenario 1 has no outages.  Scenario 2 gives each affected worker one
    contiguous outage window; scenario 3 blacks the affected subset out for
    the whole episode.  The affected subset size is uniform in
    [1, floor(0.6K)].
    """
    k = config.worker_count
    mask = np.zeros((k, iterations), dtype=bool)
    if config.scenario_kind == 1:
        return mask
    rng = np.random.default_rng(seed)
    cap = max(1, math.floor(config.outage_fraction_cap * k))
    count = int(rng.integers(1, cap + 1))
    affected = sorted(rng.permutation(k)[:count].tolist())
    if config.scenario_kind == 3:
        mask[affected, :] = True
        return mask
    for worker in affected:
        start = int(rng.integers(0, iterations))
        end = int(rng.integers(start + 1, iterations + 1))
        mask[worker, start:end] = True
    return mask


def initial_batteries(config: ScenarioConfig, fleet: list[WorkerProfile], outage_mask: np.ndarray, rng) -> np.ndarray:
    """Initial per-worker battery charge according to the scenario rules."""
    capacities = np.array([w.battery_capacity for w in fleet])
    fractions = rng.uniform(0.5, 1.0, len(fleet))
    if config.scenario_kind == 1:
        return capacities.copy()
    affected = outage_mask.any(axis=1)
    if config.scenario_kind == 2:
        return np.where(affected, capacities, capacities * fractions)
    return np.where(affected, 0.0, capacities * fractions)


def sample_local_iterations(worker: int, round_index: int, seed: int, bounds: tuple[int, int] = (5, 15)) -> int:
    """Local iterations needed this round: uniform integer in ``bounds``, seeded per (worker, round)."""
    rng = np.random.default_rng((seed, worker, round_index))
    return int(rng.integers(bounds[0], bounds[1] + 1))


def surrogate_update(
    e_prev: float,
    participation: float,
    global_target: float = 0.04,
    target_rounds: int = 11,
) -> float:
    """Advance the surrogate global error by one round.

    The error decays multiplicatively, ``e * rho**u``, where ``u`` is the
    on-time sample-weighted participation fraction and ``rho`` is calibrated
    so that full participation reaches ``global_target`` from 1.0 in
    ``target_rounds`` rounds.  The error never increases.
    """
    if not 0.0 < e_prev <= 1.0:
        raise ValueError(f"error must be in (0, 1], got {e_prev}")
    if not 0.0 <= participation <= 1.0:
        raise ValueError(f"participation must be in [0, 1], got {participation}")
    rho = global_target ** (1.0 / target_rounds)
    return e_prev * rho**participation


def run_round(
    fleet: list[WorkerProfile],
    states: list[WorkerState],
    action: ActionVector,
    config: ScenarioConfig,
    b_max: float,
    round_index: int = 0,
) -> RoundOutcome:
    """Execute one global iteration for a clamped action.

    Workers whose frequency, power, or bandwidth falls below 1% of its
    maximum sit the round out (their battery still charges from harvest).
    Deadline misses waste the energy actually spent (full computation plus
    transmit power integrated up to the deadline) and are excluded from the
    participation fraction.
    """
    k = len(fleet)
    if len(action) != k or len(states) != k:
        raise ValueError("fleet, states and action sizes must agree")
    h = config.deadline_s
    n0 = config.noise_psd_w_per_hz
    frac = config.participation_threshold_fraction

    f = np.minimum(np.asarray(action.f, dtype=float), [w.f_max for w in fleet])
    p = np.minimum(np.asarray(action.p, dtype=float), [w.p_max for w in fleet])
    b = np.minimum(np.asarray(action.b, dtype=float), b_max)
    f = np.maximum(f, 0.0)
    p = np.maximum(p, 0.0)
    b = np.maximum(b, 0.0)

    f_thr = frac * np.array([w.f_max for w in fleet])
    p_thr = frac * np.array([w.p_max for w in fleet])
    b_thr = frac * b_max
    participated = (f > f_thr) & (p > p_thr) & (b > b_thr)
    p2 = bool(np.all(f <= f_thr))

    tau = np.zeros(k)
    comp_energy = np.zeros(k)
    requests = []
    for w in range(k):
        if not participated[w]:
            continue
        tau[w] = computation_time(fleet[w], states[w], f[w], config.model_complexity_flops)
        comp_energy[w] = computation_energy(fleet[w], states[w], f[w], config.model_complexity_flops)
        gain = channel_gain(states[w].distance)
        rate = achievable_rate(b[w], p[w], gain, n0)
        requests.append(
            TransmissionRequest(
                worker=w,
                ready_at=tau[w],
                bandwidth=b[w],
                duration_if_served=transmission_time(rate, config.model_size_bits),
            )
        )
    if requests:
        schedule, timeline = schedule_round(requests, b_max, h, config.queue_discipline)
    else:
        schedule, timeline = {}, ChannelTimeline(capacity=b_max)

    tq = np.zeros(k)
    tr = np.zeros(k)
    total_time = np.zeros(k)
    on_time = np.zeros(k, dtype=bool)
    p1 = np.zeros(k, dtype=bool)
    p3 = np.zeros(k, dtype=bool)
    breakdowns: list[EnergyBreakdown] = []
    for w in range(k):
        if not participated[w]:
            breakdowns.append(settle_iteration(states[w], fleet[w], 0.0))
            continue
        outcome = schedule[w]
        tq[w] = outcome.queued_for
        if outcome.never_admitted:
            p3[w] = True
            p1[w] = True
            total_time[w] = math.inf
            wasted = comp_energy[w]
            breakdowns.append(
                settle_iteration(states[w], fleet[w], wasted, computation=comp_energy[w], wasted=wasted)
            )
            continue
        tr[w] = outcome.finished_at - outcome.started_at
        total_time[w] = outcome.finished_at
        if outcome.finished_at < h:
            on_time[w] = True
            tx_energy = p[w] * tr[w]
            demand = comp_energy[w] + tx_energy
            breakdowns.append(
                settle_iteration(states[w], fleet[w], demand, computation=comp_energy[w], transmission=tx_energy)
            )
        else:
            p1[w] = True
            tx_seconds = max(0.0, min(outcome.finished_at, h) - outcome.started_at)
            tx_energy = p[w] * tx_seconds
            wasted = comp_energy[w] + tx_energy
            breakdowns.append(
                settle_iteration(
                    states[w], fleet[w], wasted,
                    computation=comp_energy[w], transmission=tx_energy, wasted=wasted,
                )
            )

    samples = np.array([s.dataset_size for s in states], dtype=float)
    participation = float(samples[on_time].sum() / samples.sum()) if samples.sum() > 0 else 0.0
    capped = np.minimum(total_time[participated], h)
    duration = float(capped.max()) if participated.any() else 0.0

    return RoundOutcome(
        index=round_index,
        b_max=b_max,
        action=ActionVector(f=f, p=p, b=b),
        participated=participated,
        local_iterations=np.array([s.local_iterations for s in states]),
        samples=np.array([s.dataset_size for s in states]),
        distances=np.array([s.distance for s in states]),
        harvest=np.array([s.harvest_available for s in states]),
        tau=tau,
        tq=tq,
        tr=tr,
        total_time=total_time,
        on_time=on_time,
        p1=p1,
        p3=p3,
        p2=p2,
        breakdowns=breakdowns,
        schedule=schedule,
        timeline=timeline,
        duration=duration,
        participation_fraction=participation,
    )


class Episode:
    """Stateful driver for one episode, consumed round by round.

    RNG streams for the fleet, outages, harvest offset, batteries, per-round
    environment draws, and local-iteration counts are all derived from the
    single episode seed, so an episode is a pure function of
    ``(config, records, seed)``.
    """

    # Convergence check tolerates the float error of rho**target_rounds.
    _TARGET_SLACK = 1.0 + 1e-9

    def __init__(self, config: ScenarioConfig, records: list[WeatherRecord], seed: int):
        if seed < 0:
            raise ValueError("seed must be >= 0")
        self.config = config
        self.seed = seed
        root = np.random.SeedSequence((seed, 0x67666C))
        fleet_ss, outage_ss, harvest_ss, battery_ss, round_ss, iter_ss, policy_ss, samples_ss = root.spawn(8)
        self.fleet = sample_worker_fleet(config, fleet_ss)
        self.samples = np.random.default_rng(samples_ss).integers(
            config.samples_range[0], config.samples_range[1] + 1, config.worker_count
        )
        cap = config.truncation_rounds
        self.outage_mask = sample_outages(config, outage_ss, cap)
        self.harvest_series = build_harvest_series(
            records,
            config.worker_count,
            cap,
            config.harvest_params(),
            harvest_ss,
            efficiency=config.harvest_efficiency,
        )
        self.batteries = initial_batteries(config, self.fleet, self.outage_mask, np.random.default_rng(battery_ss))
        self.initial_batteries = self.batteries.copy()
        self._round_rng = np.random.default_rng(round_ss)
        self._iter_seed = int(iter_ss.generate_state(1)[0])
        self.policy_rng = np.random.default_rng(policy_ss)
        self.error = 1.0
        self.round_index = 0
        self.terminal_round: int | None = None
        self.outcomes: list[RoundOutcome] = []
        self._pending: RoundInputs | None = None

    @property
    def done(self) -> bool:
        return self.converged or self.round_index >= self.config.truncation_rounds

    @property
    def converged(self) -> bool:
        return self.error <= self.config.global_target * self._TARGET_SLACK

    @property
    def fl_state(self) -> FLState:
        return FLState(round_index=self.round_index, error=self.error, terminal_round=self.terminal_round)

    def round_inputs(self) -> RoundInputs:
        """Draw (once) and return the environment for the upcoming round."""
        if self._pending is not None:
            return self._pending
        if self.done:
            raise RuntimeError("episode is finished")
        cfg = self.config
        n = self.round_index
        b_max = float(self._round_rng.uniform(*cfg.channel_capacity_range_hz))
        distances = self._round_rng.uniform(*cfg.distance_range_m, cfg.worker_count)
        iters = np.array(
            [
                sample_local_iterations(w, n, self._iter_seed, cfg.local_iterations_range)
                for w in range(cfg.worker_count)
            ]
        )
        harvest = self.harvest_series.total[:, n] * (~self.outage_mask[:, n])
        self._pending = RoundInputs(
            index=n,
            b_max=b_max,
            distances=distances,
            samples=self.samples.copy(),
            local_iterations=iters,
            harvest=harvest,
            batteries=self.batteries.copy(),
        )
        return self._pending

    def apply(self, action: ActionVector) -> RoundOutcome:
        """Run the current round with ``action`` and advance the episode."""
        inputs = self.round_inputs()
        states = [
            WorkerState(
                battery=float(self.batteries[w]),
                dataset_size=int(inputs.samples[w]),
                distance=float(inputs.distances[w]),
                local_iterations=int(inputs.local_iterations[w]),
                harvest_available=float(inputs.harvest[w]),
            )
            for w in range(self.config.worker_count)
        ]
        outcome = run_round(self.fleet, states, action, self.config, inputs.b_max, round_index=inputs.index)
        self.error = surrogate_update(
            self.error,
            outcome.participation_fraction,
            self.config.global_target,
            self.config.surrogate_target_rounds,
        )
        self.batteries = outcome.batteries_after
        self.outcomes.append(outcome)
        self.round_index += 1
        self._pending = None
        if self.converged and self.terminal_round is None:
            self.terminal_round = self.round_index
        return outcome

    def metrics(self) -> EpisodeMetrics:
        """Aggregate the episode so far into the comparison-table metrics."""
        rounds = self.outcomes
        n = len(rounds)
        grid_per_round = [r.grid_energy for r in rounds]
        total = sum(r.total_energy for r in rounds)
        grid = sum(grid_per_round)
        green = sum(r.green_energy for r in rounds)
        return EpisodeMetrics(
            total_energy=total,
            grid_energy=grid,
            green_energy=green,
            mean_round_duration=float(np.mean([r.duration for r in rounds])) if rounds else 0.0,
            violations_per_worker=sum(int(r.p1.sum()) for r in rounds) / self.config.worker_count,
            global_iterations=n,
            converged=self.converged,
            wasted_energy=sum(r.wasted_energy for r in rounds),
            discounted_grid_energy=discounted_grid_total(grid_per_round, self.config.discount),
        )


def run_episode(
    config: ScenarioConfig,
    policy,
    seed: int,
    records: list[WeatherRecord],
) -> tuple[EpisodeMetrics, list[RoundOutcome]]:
    """Play one full episode under ``policy`` (any object with reset/act)."""
    episode = Episode(config, records, seed)
    policy.reset(episode.fleet, config, episode.policy_rng)
    last: RoundOutcome | None = None
    while not episode.done:
        inputs = episode.round_inputs()
        action = policy.act(inputs, episode.fleet, last)
        last = episode.apply(action)
    return episode.metrics(), episode.outcomes


def trace_csv(outcomes: list[RoundOutcome]) -> str:
    """Deterministic per-round trace CSV for debugging and reproducibility checks."""
    buf = io.StringIO()
    buf.write(
        "round,b_max_hz,duration_s,participation,p1_count,p2,p3_count,"
        "total_energy_j,grid_j,renewable_j,battery_j,wasted_j\n"
    )
    for r in outcomes:
        buf.write(
            f"{r.index},{r.b_max!r},{r.duration!r},{r.participation_fraction!r},"
            f"{int(r.p1.sum())},{int(r.p2)},{int(r.p3.sum())},"
            f"{r.total_energy!r},{r.grid_energy!r},{r.renewable_energy!r},"
            f"{r.battery_energy!r},{r.wasted_energy!r}\n"
        )
    return buf.getvalue()
