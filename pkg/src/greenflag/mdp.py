"""RL-facing environment: observation assembly, reward, and wire protocol.

The observation is a fixed-order vector of length ``8K + 2``::

    [0,   K)   local iterations completed last round      / max iterations
    [K,  2K)   wasted energy last round (J)               / running max
    [2K, 3K)   per-worker max CPU frequency (Hz)          min-max over fleet range
    [3K, 4K)   per-worker max transmit power (W)          min-max over fleet range
    [4K, 5K)   local dataset size (samples)               min-max over samples range
    [5K, 6K)   renewable energy available last round (J)  / running max
    [6K, 7K)   battery capacity (J)                       min-max over capacity range
    [7K, 8K)   stored battery energy (J)                  / own capacity
    8K         global surrogate error
    8K + 1     channel capacity last round (Hz)           min-max over capacity range

External agents interact over line-delimited JSON (local stream socket or
stdio): ``{"cmd":"reset","seed":S,"scenario":N}`` -> ``{"state":[...]}``;
``{"cmd":"step","action":[3K floats in [-1,1]]}`` ->
``{"state":[...],"reward":R,"done":D,"info":{...}}``; ``{"cmd":"close"}``
ends the session without a reply.  Malformed messages get
``{"error":"..."}`` and the session continues.  Step actions are ordered
``[f_1..f_K, p_1..p_K, b_1..b_K]``.
"""

from __future__ import annotations

import dataclasses
import json
import socket
import sys
from dataclasses import dataclass

import numpy as np

from .energy import WorkerProfile, dbm_to_watts
from .flsim import ActionVector, Episode, RoundOutcome, ScenarioConfig
from .weather import WeatherRecord


@dataclass(frozen=True)
class PenaltyWeights:
    """Penalty weights for deadline, all-idle, and channel-admission violations."""

    mu1: float = 0.3
    mu2: float = 0.4
    mu3: float = 0.3

    def __post_init__(self) -> None:
        if min(self.mu1, self.mu2, self.mu3) < 0.0:
            raise ValueError("penalty weights must be >= 0")


@dataclass(frozen=True)
class RewardBreakdown:
    """Additive components of the (nonpositive) per-round reward."""

    grid_demand: float
    wasted: float
    p1_penalty: float
    p2_penalty: float
    p3_penalty: float
    total: float

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


@dataclass
class RunningMax:
    """Running normalizers for the unbounded energy observations."""

    wasted: float = 1.0
    harvest: float = 1.0

    def update(self, outcome: RoundOutcome) -> None:
        self.wasted = max(self.wasted, float(np.max([b.wasted for b in outcome.breakdowns])))
        self.harvest = max(self.harvest, float(np.max(outcome.harvest)))


def state_dim(worker_count: int) -> int:
    return 8 * worker_count + 2


def action_dim(worker_count: int) -> int:
    return 3 * worker_count


def clamp_action(raw, f_max, p_max, b_max: float) -> ActionVector:
    """Map a raw agent action in [-1, 1]^(3K) onto the physical bounds.

    Each component is clipped to [-1, 1] and then scaled affinely to
    [0, max]; endpoints map exactly onto the bounds, so the mapping is
    idempotent under re-clamping.
    """
    raw = np.asarray(raw, dtype=float)
    f_max = np.asarray(f_max, dtype=float)
    p_max = np.asarray(p_max, dtype=float)
    k = len(f_max)
    if raw.shape != (3 * k,):
        raise ValueError(f"action must have length {3 * k}, got {raw.shape}")
    unit = (np.clip(raw, -1.0, 1.0) + 1.0) / 2.0
    return ActionVector(
        f=unit[:k] * f_max,
        p=unit[k : 2 * k] * p_max,
        b=unit[2 * k :] * b_max,
    )


def _minmax(values, lo: float, hi: float) -> np.ndarray:
    return np.clip((np.asarray(values, dtype=float) - lo) / (hi - lo), 0.0, 1.0)


def _flatten_state(
    fleet: list[WorkerProfile],
    config: ScenarioConfig,
    *,
    local_iterations,
    wasted,
    samples,
    harvest,
    batteries,
    error: float,
    b_max: float,
    norm: RunningMax,
) -> np.ndarray:
    f_lo, f_hi = config.low_end_f_range_hz[0], config.high_end_f_range_hz[1]
    p_lo = dbm_to_watts(config.low_end_p_range_dbm[0])
    p_hi = dbm_to_watts(config.high_end_p_range_dbm[1])
    caps = np.array([w.battery_capacity for w in fleet])
    parts = [
        np.asarray(local_iterations, dtype=float) / config.local_iterations_range[1],
        np.asarray(wasted, dtype=float) / norm.wasted,
        _minmax([w.f_max for w in fleet], f_lo, f_hi),
        _minmax([w.p_max for w in fleet], p_lo, p_hi),
        _minmax(samples, config.samples_range[0], config.samples_range[1]),
        np.asarray(harvest, dtype=float) / norm.harvest,
        _minmax(caps, *config.battery_capacity_range_j),
        np.asarray(batteries, dtype=float) / caps,
        [error],
        [_minmax([b_max], *config.channel_capacity_range_hz)[0]],
    ]
    return np.concatenate(parts)


def build_state(
    outcome: RoundOutcome,
    fleet: list[WorkerProfile],
    config: ScenarioConfig,
    error: float,
    norm: RunningMax,
) -> np.ndarray:
    """Flatten the last round's outcome into the documented observation order."""
    return _flatten_state(
        fleet,
        config,
        local_iterations=outcome.local_iterations * outcome.participated,
        wasted=[b.wasted for b in outcome.breakdowns],
        samples=outcome.samples,
        harvest=outcome.harvest,
        batteries=outcome.batteries_after,
        error=error,
        b_max=outcome.b_max,
        norm=norm,
    )


def penalty_indicators(outcome: RoundOutcome) -> tuple[np.ndarray, int, np.ndarray]:
    """Per-worker deadline flags, the all-idle flag, and admission flags.

    A worker violates the deadline when its computation + queueing +
    transmission time reaches the round horizon (never-transmitting workers
    count as infinite); the admission flag marks workers the channel never
    admitted before the deadline.
    """
    return outcome.p1.astype(int), int(outcome.p2), outcome.p3.astype(int)


def compute_reward(outcome: RoundOutcome, weights: PenaltyWeights = PenaltyWeights()) -> RewardBreakdown:
    """Reward for one round: negative grid draw, waste, and weighted penalties.

    The energy term is each participating worker's demand net of its harvest
    and stored energy, clipped at zero, which the hierarchical settlement
    makes identical to its grid draw.
    """
    p1, p2, p3 = penalty_indicators(outcome)
    grid = outcome.grid_energy
    wasted = outcome.wasted_energy
    p1_penalty = weights.mu1 * float(p1.sum())
    p2_penalty = weights.mu2 * p2
    p3_penalty = weights.mu3 * float((p3 * p1).sum())
    total = -(grid + wasted + p1_penalty + p2_penalty + p3_penalty)
    return RewardBreakdown(
        grid_demand=grid,
        wasted=wasted,
        p1_penalty=p1_penalty,
        p2_penalty=p2_penalty,
        p3_penalty=p3_penalty,
        total=total,
    )


class GreenFlagEnv:
    """Sequential reset/step environment over the episode driver."""

    def __init__(
        self,
        config: ScenarioConfig,
        records: list[WeatherRecord],
        weights: PenaltyWeights = PenaltyWeights(),
    ):
        self._base_config = config
        self._records = records
        self._weights = weights
        self._episode: Episode | None = None
        self._norm = RunningMax()

    @property
    def episode(self) -> Episode:
        if self._episode is None:
            raise RuntimeError("reset the environment before stepping")
        return self._episode

    @property
    def config(self) -> ScenarioConfig:
        return self.episode.config

    def reset(self, seed: int, scenario: int | None = None) -> np.ndarray:
        config = self._base_config
        if scenario is not None:
            config = dataclasses.replace(config, scenario_kind=scenario)
        self._episode = Episode(config, self._records, seed)
        self._norm = RunningMax()
        inputs = self._episode.round_inputs()
        return _flatten_state(
            self._episode.fleet,
            config,
            local_iterations=np.zeros(config.worker_count),
            wasted=np.zeros(config.worker_count),
            samples=inputs.samples,
            harvest=np.zeros(config.worker_count),
            batteries=inputs.batteries,
            error=self._episode.error,
            b_max=inputs.b_max,
            norm=self._norm,
        )

    def step(self, raw_action) -> tuple[np.ndarray, float, bool, dict]:
        episode = self.episode
        if episode.done:
            raise RuntimeError("episode is done; reset before stepping again")
        inputs = episode.round_inputs()
        action = clamp_action(
            raw_action,
            [w.f_max for w in episode.fleet],
            [w.p_max for w in episode.fleet],
            inputs.b_max,
        )
        outcome = episode.apply(action)
        reward = compute_reward(outcome, self._weights)
        self._norm.update(outcome)
        state = build_state(outcome, episode.fleet, episode.config, episode.error, self._norm)
        done = episode.done
        info = {
            "round": outcome.index,
            "fl_error": episode.error,
            "total_energy": outcome.total_energy,
            "grid_energy": outcome.grid_energy,
            "green_energy": outcome.green_energy,
            "wasted_energy": outcome.wasted_energy,
            "duration": outcome.duration,
            "participation": outcome.participation_fraction,
            "p1_count": int(outcome.p1.sum()),
            "p2": int(outcome.p2),
            "p3_count": int(outcome.p3.sum()),
            "converged": episode.converged,
            "truncated": done and not episode.converged,
            "reward_breakdown": reward.as_dict(),
        }
        return state, reward.total, done, info


class ProtocolSession:
    """Maps line-delimited JSON commands onto one environment instance."""

    def __init__(self, env: GreenFlagEnv):
        self._env = env

    def handle(self, line: str) -> tuple[str | None, bool]:
        """Process one message; returns (reply or None, session_should_end)."""
        line = line.strip()
        if not line:
            return None, False
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            return json.dumps({"error": f"invalid JSON: {exc.msg}"}), False
        if not isinstance(message, dict) or "cmd" not in message:
            return json.dumps({"error": "message must be an object with a 'cmd' field"}), False
        cmd = message["cmd"]
        try:
            if cmd == "reset":
                seed = int(message.get("seed", 0))
                scenario = message.get("scenario")
                scenario = int(scenario) if scenario is not None else None
                state = self._env.reset(seed, scenario)
                return json.dumps({"state": state.tolist()}), False
            if cmd == "step":
                if "action" not in message:
                    return json.dumps({"error": "step requires an 'action' field"}), False
                state, reward, done, info = self._env.step(message["action"])
                return (
                    json.dumps({"state": state.tolist(), "reward": reward, "done": done, "info": info}),
                    False,
                )
            if cmd == "close":
                return None, True
            return json.dumps({"error": f"unknown command {cmd!r}"}), False
        except (ValueError, RuntimeError, TypeError) as exc:
            return json.dumps({"error": str(exc)}), False


def serve_stream(env: GreenFlagEnv, reader, writer) -> None:
    """Serve one session over text file-like reader/writer objects."""
    session = ProtocolSession(env)
    for line in reader:
        reply, should_close = session.handle(line)
        if reply is not None:
            writer.write(reply + "\n")
            writer.flush()
        if should_close:
            break


def serve_protocol(
    config: ScenarioConfig,
    records: list[WeatherRecord],
    listen: str | None = None,
    stdio: bool = False,
    weights: PenaltyWeights = PenaltyWeights(),
) -> None:
    """Serve a single agent session over stdio or a local TCP socket.

    ``listen`` has the form ``host:port``; the server accepts exactly one
    connection, serves it until close/EOF, and returns.
    """
    env = GreenFlagEnv(config, records, weights)
    if stdio:
        serve_stream(env, sys.stdin, sys.stdout)
        return
    if listen is None:
        raise ValueError("either stdio or a listen address is required")
    host, _, port = listen.rpartition(":")
    if not host or not port:
        raise ValueError(f"listen address must be host:port, got {listen!r}")
    with socket.create_server((host, int(port))) as server:
        print(f"listening on {host}:{int(port)}", file=sys.stderr, flush=True)
        conn, _ = server.accept()
        with conn:
            reader = conn.makefile("r", encoding="utf-8", newline="\n")
            writer = conn.makefile("w", encoding="utf-8", newline="\n")
            serve_stream(env, reader, writer)
