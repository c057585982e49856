"""Baseline action sources: best-effort, random, and greedy schemes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import WorkerProfile
from .flsim import ActionVector, RoundInputs, RoundOutcome, ScenarioConfig

POLICY_NAMES = ("bes", "rss", "gss", "random")


@dataclass
class GssMemory:
    """Best round seen so far by the greedy scheme within one episode.

    ``last_action`` tracks what the scheme issued for the round whose outcome
    arrives next, so adoption stores the issued action rather than its
    channel-clamped echo.
    """

    best_round_energy: float = math.inf
    best_action: ActionVector | None = None
    exploration_rate: float = 0.1
    last_action: ActionVector | None = None


def bes_action(fleet: list[WorkerProfile], b_max: float) -> ActionVector:
    """Best-effort action: every worker at full capacity, bandwidth split evenly.

    The even split is the unique allocation that serves all workers
    simultaneously with zero admission violations (the requests sum exactly
    to the channel capacity).
    """
    k = len(fleet)
    return ActionVector(
        f=np.array([w.f_max for w in fleet]),
        p=np.array([w.p_max for w in fleet]),
        b=np.full(k, b_max / k),
    )


def rss_action(fleet: list[WorkerProfile], b_max: float, rng) -> ActionVector:
    """Random action: each component uniform in [0, its maximum]."""
    k = len(fleet)
    return ActionVector(
        f=rng.uniform(0.0, [w.f_max for w in fleet]),
        p=rng.uniform(0.0, [w.p_max for w in fleet]),
        b=rng.uniform(0.0, b_max, k),
    )


def gss_action(
    memory: GssMemory,
    fleet: list[WorkerProfile],
    b_max: float,
    last_outcome: RoundOutcome | None,
    rng,
) -> tuple[ActionVector, GssMemory]:
    """Greedy action: replay the lowest-energy action seen so far.

    The memory adopts the previous round's action whenever its total energy
    beat the best so far.  With probability ``exploration_rate`` (and always
    on the first round) a fresh random action is drawn instead of replaying.
    """
    best_energy = memory.best_round_energy
    best_action = memory.best_action
    if last_outcome is not None and last_outcome.total_energy < best_energy:
        best_energy = last_outcome.total_energy
        best_action = memory.last_action if memory.last_action is not None else last_outcome.action
    explore = best_action is None or rng.uniform() < memory.exploration_rate
    if explore:
        action = rss_action(fleet, b_max, rng)
    else:
        # Replayed bandwidth may exceed this round's channel; run_round clamps.
        action = best_action
    return action, GssMemory(
        best_round_energy=best_energy,
        best_action=best_action,
        exploration_rate=memory.exploration_rate,
        last_action=action,
    )


class BesPolicy:
    """Round driver for the best-effort scheme."""

    name = "bes"

    def reset(self, fleet, config: ScenarioConfig, rng) -> None:
        pass

    def act(self, inputs: RoundInputs, fleet, last_outcome) -> ActionVector:
        return bes_action(fleet, inputs.b_max)


class RssPolicy:
    """Round driver for the random scheme."""

    name = "rss"

    def __init__(self) -> None:
        self._rng = None

    def reset(self, fleet, config: ScenarioConfig, rng) -> None:
        self._rng = rng

    def act(self, inputs: RoundInputs, fleet, last_outcome) -> ActionVector:
        return rss_action(fleet, inputs.b_max, self._rng)


class GssPolicy:
    """Round driver for the greedy scheme; memory resets every episode."""

    name = "gss"

    def __init__(self) -> None:
        self._rng = None
        self._memory = GssMemory()

    def reset(self, fleet, config: ScenarioConfig, rng) -> None:
        self._rng = rng
        self._memory = GssMemory(exploration_rate=config.gss_exploration_rate)

    def act(self, inputs: RoundInputs, fleet, last_outcome) -> ActionVector:
        action, self._memory = gss_action(self._memory, fleet, inputs.b_max, last_outcome, self._rng)
        return action


def make_policy(name: str):
    """Instantiate a baseline policy by CLI name (``random`` aliases ``rss``)."""
    lowered = name.lower()
    if lowered == "bes":
        return BesPolicy()
    if lowered in ("rss", "random"):
        return RssPolicy()
    if lowered == "gss":
        return GssPolicy()
    raise ValueError(f"unknown policy {name!r}; expected one of {POLICY_NAMES}")
