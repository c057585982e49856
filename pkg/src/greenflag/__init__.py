"""Renewable-powered federated-learning round simulator and RL environment."""

from .channel import ChannelTimeline, ScheduleOutcome, TransmissionRequest, audit_timeline, schedule_round
from .energy import (
    EnergyBreakdown,
    WorkerProfile,
    WorkerState,
    dbm_to_watts,
    discounted_grid_total,
    settle_iteration,
)
from .flsim import (
    ActionVector,
    Episode,
    EpisodeMetrics,
    RoundOutcome,
    ScenarioConfig,
    run_episode,
    sample_worker_fleet,
    surrogate_update,
)
from .mdp import GreenFlagEnv, PenaltyWeights, RewardBreakdown, clamp_action, compute_reward, serve_protocol
from .policies import bes_action, gss_action, make_policy, rss_action
from .weather import (
    HarvestParams,
    HarvestSeries,
    WeatherRecord,
    build_harvest_series,
    clearness_index,
    load_weather_csv,
    solar_energy,
    wind_energy,
    wind_power_density,
)

__version__ = "0.1.0"
