import dataclasses

import numpy as np
import pytest

from greenflag.energy import dbm_to_watts
from greenflag.flsim import (
    ActionVector,
    Episode,
    ScenarioConfig,
    run_episode,
    run_round,
    sample_local_iterations,
    sample_outages,
    sample_worker_fleet,
    initial_batteries,
    surrogate_update,
    trace_csv,
)
from greenflag.energy import WorkerProfile, WorkerState
from greenflag.policies import make_policy

CONFIG = ScenarioConfig()


class TestFleetSampling:
    def test_deterministic(self):
        assert sample_worker_fleet(CONFIG, 9) == sample_worker_fleet(CONFIG, 9)

    def test_ranges_and_cap(self):
        low_counts = []
        for seed in range(2000):
            fleet = sample_worker_fleet(CONFIG, seed)
            lows = [w for w in fleet if w.device_class == "low_end"]
            highs = [w for w in fleet if w.device_class == "high_end"]
            low_counts.append(len(lows))
            assert len(lows) <= 12  # 0.6 * 20
            for w in lows:
                assert 1.0e9 <= w.f_max <= 3.0e9
                assert dbm_to_watts(23.0) <= w.p_max <= dbm_to_watts(28.0)
                assert w.flops_per_cycle == 4.0
            for w in highs:
                assert 3.2e9 <= w.f_max <= 5.0e9
                assert dbm_to_watts(29.0) <= w.p_max <= dbm_to_watts(33.0)
                assert w.flops_per_cycle == 2.0
            for w in fleet:
                assert 15.0 <= w.battery_capacity <= 50.0
                assert w.switched_capacitance == 1e-28
        assert 4.0 <= np.mean(low_counts) <= 8.0  # truncated normal around 6


class TestOutages:
    def test_scenario_1_no_outages(self):
        mask = sample_outages(CONFIG, 1, 50)
        assert not mask.any()

    def test_scenario_3_whole_episode(self):
        config = dataclasses.replace(CONFIG, scenario_kind=3)
        mask = sample_outages(config, 1, 50)
        affected = mask.any(axis=1)
        assert 1 <= affected.sum() <= 12
        assert np.all(mask[affected].all(axis=1))
        assert not mask[~affected].any()

    def test_scenario_2_contiguous_window(self):
        config = dataclasses.replace(CONFIG, scenario_kind=2)
        mask = sample_outages(config, 5, 50)
        assert np.array_equal(mask, sample_outages(config, 5, 50))
        affected = mask.any(axis=1)
        assert 1 <= affected.sum() <= 12
        for row in mask[affected]:
            on = np.flatnonzero(row)
            assert len(on) >= 1
            assert np.array_equal(on, np.arange(on[0], on[-1] + 1))  # contiguous

    def test_initial_batteries(self):
        rng = np.random.default_rng(0)
        fleet = sample_worker_fleet(CONFIG, 3)
        caps = np.array([w.battery_capacity for w in fleet])

        mask1 = sample_outages(CONFIG, 3, 50)
        assert np.array_equal(initial_batteries(CONFIG, fleet, mask1, rng), caps)

        config2 = dataclasses.replace(CONFIG, scenario_kind=2)
        mask2 = sample_outages(config2, 3, 50)
        b2 = initial_batteries(config2, fleet, mask2, np.random.default_rng(0))
        affected = mask2.any(axis=1)
        assert np.all(b2[affected] == caps[affected])
        assert np.all(b2[~affected] >= 0.5 * caps[~affected] - 1e-12)
        assert np.all(b2[~affected] <= caps[~affected])

        config3 = dataclasses.replace(CONFIG, scenario_kind=3)
        mask3 = sample_outages(config3, 3, 50)
        b3 = initial_batteries(config3, fleet, mask3, np.random.default_rng(0))
        assert np.all(b3[mask3.any(axis=1)] == 0.0)


class TestLocalIterations:
    def test_reproducible(self):
        assert sample_local_iterations(3, 7, 42) == sample_local_iterations(3, 7, 42)

    def test_bounds(self):
        values = [sample_local_iterations(w, n, 1) for w in range(20) for n in range(50)]
        assert min(values) >= 5 and max(values) <= 15

    def test_mean(self):
        values = [sample_local_iterations(w, n, 2) for w in range(200) for n in range(500)]
        assert np.mean(values) == pytest.approx(10.0, abs=0.1)


class TestSurrogate:
    def test_no_participation_no_progress(self):
        assert surrogate_update(0.5, 0.0) == 0.5

    def test_full_participation_calibration(self):
        e = 1.0
        for _ in range(11):
            e = surrogate_update(e, 1.0)
        assert e <= 0.04 * (1 + 1e-9)
        assert e == pytest.approx(0.04, rel=1e-9)

    def test_half_participation_halves_log_improvement(self):
        full = np.log(surrogate_update(1.0, 1.0))
        half = np.log(surrogate_update(1.0, 0.5))
        assert half == pytest.approx(full / 2.0, rel=1e-12)

    def test_never_increases(self):
        for u in np.linspace(0, 1, 20):
            assert surrogate_update(0.3, float(u)) <= 0.3


def _single_worker_setup(f_max=2e9, p_max=0.5, harvest=0.0, battery=10.0, capacity=20.0,
                         samples=500, iterations=10, distance=100.0):
    fleet = [
        WorkerProfile(
            id=0,
            switched_capacitance=1e-28,
            flops_per_cycle=4.0,
            f_max=f_max,
            p_max=p_max,
            battery_capacity=capacity,
        )
    ]
    states = [
        WorkerState(
            battery=battery,
            dataset_size=samples,
            distance=distance,
            local_iterations=iterations,
            harvest_available=harvest,
        )
    ]
    config = dataclasses.replace(CONFIG, worker_count=1)
    return fleet, states, config


class TestRunRound:
    def test_all_idle(self):
        fleet, states, config = _single_worker_setup(harvest=5.0)
        action = ActionVector(f=np.zeros(1), p=np.zeros(1), b=np.zeros(1))
        outcome = run_round(fleet, states, action, config, b_max=75e6)
        assert outcome.p2
        assert outcome.total_energy == 0.0
        assert outcome.duration == 0.0
        assert outcome.participation_fraction == 0.0
        assert not outcome.p1.any() and not outcome.p3.any()
        # Idle workers still bank their harvest.
        assert outcome.breakdowns[0].battery_after == pytest.approx(15.0)

    def test_single_generous_worker_runs_on_harvest(self):
        fleet, states, config = _single_worker_setup(harvest=50.0)
        action = ActionVector(f=np.array([2e9]), p=np.array([0.5]), b=np.full(1, 20e6))
        outcome = run_round(fleet, states, action, config, b_max=75e6)
        assert outcome.on_time[0]
        assert outcome.grid_energy == 0.0
        assert outcome.participation_fraction == 1.0
        assert outcome.total_energy > 0.0
        assert outcome.duration == pytest.approx(outcome.total_time[0])
        assert outcome.duration < config.deadline_s

    def test_slow_cpu_misses_deadline(self):
        # tau = 10 * 1.8e6 * 500 / (4 * f); f small enough that tau > 20 s.
        fleet, states, config = _single_worker_setup(f_max=2e9)
        f = np.array([0.05e9])  # tau = 45 s
        action = ActionVector(f=f, p=np.array([0.5]), b=np.full(1, 20e6))
        outcome = run_round(fleet, states, action, config, b_max=75e6)
        assert outcome.p1[0] and outcome.p3[0]
        assert not outcome.on_time[0]
        assert outcome.participation_fraction == 0.0
        expected_ec = 1e-28 * 10 * 1.8e6 * 500 * f[0] ** 2 / 4
        assert outcome.breakdowns[0].wasted == pytest.approx(expected_ec, rel=1e-12)
        assert outcome.duration == config.deadline_s

    def test_action_sizes_checked(self):
        fleet, states, config = _single_worker_setup()
        with pytest.raises(ValueError):
            run_round(fleet, states, ActionVector(f=np.zeros(2), p=np.zeros(2), b=np.zeros(2)), config, 75e6)


class TestEpisode:
    def test_determinism(self, sample_records):
        m1, t1 = run_episode(CONFIG, make_policy("rss"), 7, sample_records)
        m2, t2 = run_episode(CONFIG, make_policy("rss"), 7, sample_records)
        assert m1 == m2
        assert trace_csv(t1) == trace_csv(t2)

    def test_metrics_conservation(self, sample_records):
        for name in ("bes", "rss", "gss"):
            metrics, outcomes = run_episode(CONFIG, make_policy(name), 3, sample_records)
            assert metrics.total_energy == pytest.approx(metrics.grid_energy + metrics.green_energy, rel=1e-9)
            per_round = sum(o.grid_energy + o.green_energy for o in outcomes)
            assert metrics.total_energy == pytest.approx(per_round, rel=1e-9)

    def test_bes_round_count_calibration(self, sample_records):
        for seed in range(10):
            metrics, _ = run_episode(CONFIG, make_policy("bes"), seed, sample_records)
            assert 9 <= metrics.global_iterations <= 14
            assert metrics.converged

    def test_duration_bounded_by_deadline(self, sample_records):
        _, outcomes = run_episode(CONFIG, make_policy("rss"), 11, sample_records)
        assert all(o.duration <= CONFIG.deadline_s for o in outcomes)

    def test_error_monotone_and_terminal(self, sample_records):
        episode = Episode(CONFIG, sample_records, 4)
        policy = make_policy("rss")
        policy.reset(episode.fleet, CONFIG, episode.policy_rng)
        errors = [episode.error]
        last = None
        while not episode.done:
            action = policy.act(episode.round_inputs(), episode.fleet, last)
            last = episode.apply(action)
            errors.append(episode.error)
        assert all(a >= b for a, b in zip(errors, errors[1:]))
        assert episode.terminal_round == episode.round_index

    def test_scenario_3_affected_workers_fully_grid(self, sample_records):
        config = dataclasses.replace(CONFIG, scenario_kind=3)
        episode = Episode(config, sample_records, 5)
        affected = episode.outage_mask.any(axis=1)
        assert affected.any()
        policy = make_policy("bes")
        policy.reset(episode.fleet, config, episode.policy_rng)
        last = None
        while not episode.done:
            last = episode.apply(policy.act(episode.round_inputs(), episode.fleet, last))
        for outcome in episode.outcomes:
            for w in np.flatnonzero(affected):
                breakdown = outcome.breakdowns[w]
                assert breakdown.renewable_used == 0.0
                assert breakdown.battery_used == 0.0
                assert breakdown.grid_used == pytest.approx(breakdown.demand)

    def test_trace_csv_shape(self, sample_records):
        _, outcomes = run_episode(CONFIG, make_policy("bes"), 0, sample_records)
        lines = trace_csv(outcomes).strip().split("\n")
        assert lines[0].startswith("round,b_max_hz,duration_s")
        assert len(lines) == len(outcomes) + 1


class TestConfig:
    def test_json_roundtrip(self):
        config = dataclasses.replace(CONFIG, scenario_kind=2, worker_count=5)
        again = ScenarioConfig.from_json(config.to_json())
        assert again == config

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            ScenarioConfig.from_json('{"not_a_field": 1}')

    def test_invalid_kind_rejected(self):
        with pytest.raises(ValueError):
            ScenarioConfig(scenario_kind=4)

    def test_invalid_queue_discipline_rejected(self):
        with pytest.raises(ValueError):
            ScenarioConfig(queue_discipline="lifo")

    def test_first_fit_discipline_reduces_admission_failures(self, sample_records):
        blocking, _ = run_episode(CONFIG, make_policy("rss"), 12, sample_records)
        relaxed, _ = run_episode(
            dataclasses.replace(CONFIG, queue_discipline="fcfs_first_fit"),
            make_policy("rss"),
            12,
            sample_records,
        )
        assert relaxed.violations_per_worker <= blocking.violations_per_worker

    def test_noise_psd(self):
        assert CONFIG.noise_psd_w_per_hz == pytest.approx(10 ** (-18.8), rel=1e-12)
