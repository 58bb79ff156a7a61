"""Tests for the collision-avoidance environment."""

import math
from dataclasses import replace

import numpy as np
import pytest

from camlab.conjunction import (
    ConjunctionScenario,
    DebrisRecord,
    ScenarioConfig,
    generate_scenario,
)
from camlab.env import (
    N_ACTIONS,
    THRUST_VALUES,
    ConjunctionEnv,
    EnvConfig,
    EnvState,
    EpisodeDoneError,
    Observation,
    RewardBreakdown,
    action_fuel_units,
    apply_impulse,
    collision_probability,
    compute_reward,
    decode_action,
    encode_action,
    find_tca,
    observe,
    resolve_sigma_c,
    trace_header,
    trace_row,
)
from camlab.orbits import (
    KeplerianElements,
    StateVector,
    elements_to_state,
    propagate,
    propagate_positions,
    state_to_elements,
)

PROTECTED = KeplerianElements(a=7.0e6, e=0.01, i=0.9, raan=0.4, argp=1.1, mean_anomaly=0.2)


def head_on_config(**overrides):
    """Scenario whose debris passes exactly through the protected object."""
    base = dict(
        start_time=0.0,
        end_time=7200.0,
        n_debris=1,
        sigma_pos=0.0,
        sigma_vr=0.0,
        theta_ranges=((1e-3, 1e-3), (1e-3, 1e-3)),
        protected_elements=PROTECTED,
        rng_seed=42,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def crossing_config(**overrides):
    """Like head_on_config but with a clearly crossing debris geometry."""
    return head_on_config(theta_ranges=((0.1, 0.3), (0.1, 0.3)), **overrides)


def far_miss_scenario():
    """A debris orbit hundreds of kilometers away at all times."""
    cfg = head_on_config()
    far_elements = replace(PROTECTED, a=PROTECTED.a + 3.0e5)
    record = DebrisRecord(
        elements=far_elements,
        collision_time=3600.0,
        collision_state=propagate(far_elements, 3600.0),
    )
    return ConjunctionScenario(config=cfg, debris=(record,))


class TestActionCodec:
    def test_bijection_over_all_indices(self):
        for index in range(N_ACTIONS):
            dv, slot = decode_action(index)
            digits = [THRUST_VALUES.index(v) for v in dv]
            assert encode_action(digits[0], digits[1], digits[2], slot) == index

    def test_zero_action(self):
        dv, slot = decode_action(0)
        assert np.array_equal(dv, np.zeros(3))
        assert slot == 0

    def test_last_action(self):
        dv, slot = decode_action(624, dv_scale=2.0)
        assert np.allclose(dv, np.array([-0.05, -0.05, -0.05]) * 2.0)
        assert slot == 4

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            decode_action(-1)
        with pytest.raises(ValueError):
            decode_action(625)
        with pytest.raises(ValueError):
            encode_action(5, 0, 0, 0)

    def test_fuel_units(self):
        assert action_fuel_units(0) == 0.0
        index = encode_action(3, 4, 1, 2)  # 0.1, -0.05, 0.01
        assert action_fuel_units(index) == pytest.approx(0.16, abs=1e-15)


class TestApplyImpulse:
    def test_zero_dv_identity(self):
        s = StateVector(np.array([7e6, 0, 0]), np.array([0, 7.5e3, 0]), epoch=10.0)
        out = apply_impulse(s, np.zeros(3))
        assert np.array_equal(out.position, s.position)
        assert np.array_equal(out.velocity, s.velocity)
        assert out.epoch == 10.0

    def test_additivity(self):
        s = StateVector(np.array([7e6, 0, 0]), np.array([0, 7.5e3, 0]))
        out = apply_impulse(apply_impulse(s, np.array([1.0, 0, 0])), np.array([1.0, 0, 0]))
        assert out.velocity[0] == pytest.approx(2.0)

    def test_prograde_burn_raises_semi_major_axis(self):
        kep = KeplerianElements(a=7e6, e=0.0, i=0.3, raan=0.1, argp=0.0, mean_anomaly=0.9)
        s = elements_to_state(kep)
        dv = 10.0 * s.velocity / np.linalg.norm(s.velocity)
        out = state_to_elements(apply_impulse(s, dv))
        assert out.a > kep.a


class TestCollisionProbability:
    def test_forced_value(self):
        assert collision_probability(0.0, 10.0, 1000.0) == pytest.approx(5e-5, rel=1e-12)

    def test_decay_to_zero(self):
        assert collision_probability(1e9, 10.0, 1000.0) == 0.0

    def test_capped_at_one(self):
        assert collision_probability(0.0, 1e6, 1.0) == 1.0

    def test_degenerate_sigma(self):
        assert collision_probability(5.0, 10.0, 0.0) == 1.0
        assert collision_probability(10.0, 10.0, 0.0) == 1.0
        assert collision_probability(10.1, 10.0, 0.0) == 0.0

    def test_monotone_in_distance(self):
        ds = np.linspace(0.0, 5000.0, 100)
        ps = [collision_probability(float(d), 10.0, 500.0) for d in ds]
        assert all(b <= a for a, b in zip(ps, ps[1:]))

    def test_monotone_in_radius(self):
        rs = np.linspace(0.0, 100.0, 50)
        ps = [collision_probability(200.0, float(r), 500.0) for r in rs]
        assert all(b >= a for a, b in zip(ps, ps[1:]))

    def test_rejects_negative_inputs(self):
        with pytest.raises(ValueError):
            collision_probability(-1.0, 10.0, 100.0)


class TestFindTca:
    def test_identical_orbits(self):
        t, d = find_tca(PROTECTED, PROTECTED, horizon=3600.0)
        assert t == 0.0
        assert d == 0.0

    def test_bounds(self):
        other = replace(PROTECTED, mean_anomaly=PROTECTED.mean_anomaly + 0.5)
        t, d = find_tca(PROTECTED, other, horizon=3600.0)
        assert 0.0 <= t <= 3600.0
        assert d >= 0.0

    def test_constructed_collision_found(self):
        for seed in range(5):
            scenario = generate_scenario(crossing_config(sigma_pos=1000.0, rng_seed=seed))
            rec = scenario.debris[0]
            t, d = find_tca(PROTECTED, rec.elements, horizon=7200.0)
            protected_at = propagate(PROTECTED, rec.collision_time)
            planned_miss = float(
                np.linalg.norm(protected_at.position - rec.collision_state.position)
            )
            assert abs(t - rec.collision_time) <= 100.0
            assert d <= planned_miss + 1e-6

    def test_beats_coarse_grid_and_finds_valley_floor(self):
        for seed in (3, 9, 14):
            scenario = generate_scenario(crossing_config(sigma_pos=500.0, rng_seed=seed))
            rec = scenario.debris[0]
            t, d = find_tca(PROTECTED, rec.elements, horizon=7200.0, coarse_dt=100.0)
            # Never worse than an independent evaluation of the coarse grid.
            ts = np.append(np.arange(0.0, 7200.0, 100.0), 7200.0)
            pa, _ = propagate_positions(PROTECTED, ts)
            pb, _ = propagate_positions(rec.elements, ts)
            grid_min = float(np.min(np.linalg.norm(pa - pb, axis=1)))
            assert d <= grid_min + 1e-6
            # And at least as deep as dense 1 s sampling of its own bracket.
            local = np.arange(max(0.0, t - 100.0), min(7200.0, t + 100.0), 1.0)
            pa, _ = propagate_positions(PROTECTED, local)
            pb, _ = propagate_positions(rec.elements, local)
            local_min = float(np.min(np.linalg.norm(pa - pb, axis=1)))
            assert d <= local_min + 1.0

    def test_rejects_bad_horizon(self):
        with pytest.raises(ValueError):
            find_tca(PROTECTED, PROTECTED, horizon=0.0)


def make_state(scenario, protected_elements=None, fuel=None, time=None):
    cfg = scenario.config
    elements = protected_elements if protected_elements is not None else cfg.protected_elements
    t = time if time is not None else cfg.start_time
    protected = propagate(elements, 0.0, cfg.mu)
    protected = StateVector(protected.position, protected.velocity, epoch=t)
    debris = tuple(
        StateVector(s.position, s.velocity, epoch=t)
        for s in (propagate(r.elements, t - cfg.start_time, cfg.mu) for r in scenario.debris)
    )
    return EnvState(
        protected=protected,
        debris=debris,
        protected_elements=elements,
        reference_elements=cfg.protected_elements,
        fuel_remaining=fuel if fuel is not None else cfg.fuel_capacity,
        step_index=0,
        time=t,
    )


class TestObserve:
    def test_zero_noise_is_exact(self):
        scenario = far_miss_scenario()
        state = make_state(scenario)
        rng = np.random.default_rng(0)
        obs = observe(state, scenario, 0.0, 0.0, rng)
        assert np.array_equal(obs.protected_pos, state.protected.position)
        assert np.array_equal(obs.debris_vel[0], state.debris[0].velocity)
        assert obs.fuel_fraction == 1.0
        assert obs.time_fraction == 0.0

    def test_noise_statistics(self):
        scenario = far_miss_scenario()
        state = make_state(scenario)
        rng = np.random.default_rng(1)
        errors = np.array(
            [
                observe(state, scenario, 100.0, 0.1, rng).protected_pos - state.protected.position
                for _ in range(10_000)
            ]
        )
        stds = errors.std(axis=0)
        assert np.all(np.abs(stds - 100.0) < 5.0)

    def test_fraction_validation(self):
        with pytest.raises(ValueError):
            Observation(np.zeros(3), np.zeros(3), (), (), fuel_fraction=1.5, time_fraction=0.0)


class TestRewardBreakdown:
    def test_components_must_be_non_positive(self):
        with pytest.raises(ValueError):
            RewardBreakdown(0.1, 0.0, 0.0, 0.1)

    def test_build_sums(self):
        r = RewardBreakdown.build(-1.0, -2.0, -3.0)
        assert r.total == -6.0


class TestComputeReward:
    def test_all_quiet_is_zero(self):
        scenario = far_miss_scenario()
        state = make_state(scenario)
        r = compute_reward(state, 0.0, scenario, EnvConfig())
        assert r.total == 0.0

    def test_deviation_activates_strictly(self):
        scenario = far_miss_scenario()
        env_cfg = EnvConfig()
        at_threshold = replace(PROTECTED, a=PROTECTED.a + 100.0)
        state = make_state(scenario, protected_elements=at_threshold)
        assert compute_reward(state, 0.0, scenario, env_cfg).deviation_penalty == 0.0
        beyond = replace(PROTECTED, a=PROTECTED.a + 150.0)
        state = make_state(scenario, protected_elements=beyond)
        r = compute_reward(state, 0.0, scenario, env_cfg)
        assert r.deviation_penalty == pytest.approx(-0.5, rel=1e-9)

    def test_deviation_of_each_element(self):
        scenario = far_miss_scenario()
        env_cfg = EnvConfig()
        for field, delta, threshold in (
            ("e", 0.02, 0.01),
            ("i", 0.02, 0.01),
            ("raan", 0.02, 0.01),
            ("argp", 0.02, 0.01),
        ):
            changed = replace(PROTECTED, **{field: getattr(PROTECTED, field) + delta})
            state = make_state(scenario, protected_elements=changed)
            r = compute_reward(state, 0.0, scenario, env_cfg)
            assert r.deviation_penalty == pytest.approx(-(delta - threshold) / threshold, rel=1e-6), field

    def test_mean_anomaly_shift_is_free(self):
        scenario = far_miss_scenario()
        shifted = replace(PROTECTED, mean_anomaly=PROTECTED.mean_anomaly + 1.0)
        state = make_state(scenario, protected_elements=shifted)
        assert compute_reward(state, 0.0, scenario, EnvConfig()).deviation_penalty == 0.0

    def test_fuel_penalty_formula(self):
        scenario = far_miss_scenario()
        state = make_state(scenario)
        r = compute_reward(state, 0.3, scenario, EnvConfig())
        assert r.fuel_penalty == pytest.approx(-0.3 / 20.0, rel=1e-12)

    def test_low_fuel_penalty_strict(self):
        scenario = far_miss_scenario()
        env_cfg = EnvConfig()
        at = make_state(scenario, fuel=10.0)
        assert compute_reward(at, 0.0, scenario, env_cfg).fuel_penalty == 0.0
        below = make_state(scenario, fuel=9.999)
        assert compute_reward(below, 0.0, scenario, env_cfg).fuel_penalty == pytest.approx(-5.0)

    def test_collision_probability_penalty_formula(self):
        # p = 1e-3 at threshold 1e-4 gives -w_c * (1 + log10(10)) = -200.
        scenario = generate_scenario(head_on_config())
        env_cfg = EnvConfig()
        state = make_state(scenario)
        details = []
        r = compute_reward(state, 0.0, scenario, env_cfg, details=details)
        p = max(d["probability"] for d in details)
        assert p > env_cfg.probability_threshold
        expected = -env_cfg.collision_weight * (1.0 + math.log10(p / env_cfg.probability_threshold))
        assert r.collision_penalty == pytest.approx(expected, rel=1e-12)

    def test_terminal_collision_adds_weight(self):
        scenario = far_miss_scenario()
        state = make_state(scenario)
        quiet = compute_reward(state, 0.0, scenario, EnvConfig())
        hit = compute_reward(state, 0.0, scenario, EnvConfig(), collided=True)
        assert hit.collision_penalty - quiet.collision_penalty == pytest.approx(-1000.0)


class TestEnvLifecycle:
    def test_reset_observation(self):
        env = ConjunctionEnv(far_miss_scenario(), EnvConfig(sigma_obs_pos=0.0, sigma_obs_vel=0.0))
        obs = env.reset()
        expected = elements_to_state(PROTECTED)
        assert np.allclose(obs.protected_pos, expected.position, rtol=0, atol=1e-9)
        assert obs.fuel_fraction == 1.0
        assert obs.time_fraction == 0.0

    def test_reset_determinism(self):
        scenario = far_miss_scenario()
        a = ConjunctionEnv(scenario, observation_seed=5).reset()
        b = ConjunctionEnv(scenario, observation_seed=5).reset()
        assert np.array_equal(a.protected_pos, b.protected_pos)
        assert np.array_equal(a.debris_pos[0], b.debris_pos[0])

    def test_step_after_done_raises(self):
        env = ConjunctionEnv(far_miss_scenario())
        with pytest.raises(EpisodeDoneError):
            env.step(0)

    def test_coasting_far_miss_runs_to_end(self):
        scenario = far_miss_scenario()
        env = ConjunctionEnv(scenario, observation_seed=3)
        env.reset()
        n_steps = 0
        done = False
        while not done:
            _, reward, done, info = env.step(0)
            n_steps += 1
            assert not info["collision"]
            assert reward.total == 0.0
        assert n_steps == 72
        assert info["time_out"]
        elements = env.state.protected_elements
        assert elements.a == PROTECTED.a
        assert elements.e == PROTECTED.e
        assert elements.i == PROTECTED.i
        assert elements.raan == PROTECTED.raan
        assert elements.argp == PROTECTED.argp

    def test_coasting_head_on_collides_by_constructed_time(self):
        # The constructed collision is the latest possible impact; orbits of
        # equal period can also intersect at the antipodal node earlier.
        scenario = generate_scenario(head_on_config())
        t_c = scenario.debris[0].collision_time
        env = ConjunctionEnv(scenario, observation_seed=3)
        env.reset()
        done = False
        while not done:
            _, _, done, info = env.step(0)
        assert info["collision"]
        t_flag = info["collision_time"]
        assert t_flag <= t_c + 100.0
        # The flagged time is a true impact per an independent propagation.
        protected = propagate(PROTECTED, t_flag)
        debris = propagate(scenario.debris[0].elements, t_flag)
        d = np.linalg.norm(protected.position - debris.position)
        assert d < env.combined_radius

    def test_fuel_depletion_ends_episode(self):
        scenario = far_miss_scenario()
        scenario = ConjunctionScenario(
            config=replace(scenario.config, fuel_capacity=0.05), debris=scenario.debris
        )
        env = ConjunctionEnv(scenario)
        env.reset()
        burn = encode_action(3, 0, 0, 0)  # 0.1 m/s along x
        _, _, done, info = env.step(burn)
        assert done
        assert info["fuel_out"]
        assert env.state.fuel_remaining == 0.0

    def test_fuel_ledger_exact(self):
        scenario = far_miss_scenario()
        scenario = ConjunctionScenario(
            config=replace(scenario.config, fuel_capacity=1000.0), debris=scenario.debris
        )
        env = ConjunctionEnv(scenario, observation_seed=1)
        env.reset()
        rng = np.random.default_rng(2)
        expected = scenario.config.fuel_capacity
        for _ in range(30):
            action = int(rng.integers(0, N_ACTIONS))
            env.step(action)
            expected -= action_fuel_units(action)
        assert env.state.fuel_remaining == expected

    def test_zero_action_consumes_no_fuel(self):
        env = ConjunctionEnv(far_miss_scenario())
        env.reset()
        env.step(0)
        assert env.state.fuel_remaining == env.scenario.config.fuel_capacity

    def test_episode_determinism_bitwise(self):
        scenario = generate_scenario(head_on_config(sigma_pos=800.0))
        actions = [0, 375, 0, encode_action(1, 2, 3, 4), 0, 375]
        runs = []
        for _ in range(2):
            env = ConjunctionEnv(scenario, observation_seed=11)
            obs = env.reset()
            trajectory = [(obs.protected_pos.copy(), None)]
            for action in actions:
                obs, reward, done, _ = env.step(action)
                trajectory.append((obs.protected_pos.copy(), reward.total))
                if done:
                    break
            runs.append(trajectory)
        for (pa, ra), (pb, rb) in zip(runs[0], runs[1]):
            assert np.array_equal(pa, pb)
            assert ra == rb

    def test_burn_slot_zero_matches_direct_impulse(self):
        scenario = far_miss_scenario()
        env_cfg = EnvConfig(sigma_obs_pos=0.0, sigma_obs_vel=0.0)
        env = ConjunctionEnv(scenario, env_cfg)
        env.reset()
        action = encode_action(3, 1, 2, 0)
        env.step(action)
        dv, _ = decode_action(action, env_cfg.dv_scale)
        start = elements_to_state(PROTECTED)
        burned = state_to_elements(apply_impulse(start, dv))
        expected = propagate(burned, env_cfg.dt_step)
        assert np.allclose(env.state.protected.position, expected.position, rtol=1e-9, atol=1e-3)
        assert np.allclose(env.state.protected.velocity, expected.velocity, rtol=1e-9, atol=1e-6)

    def test_burn_slots_differ(self):
        scenario = far_miss_scenario()
        ends = []
        for slot in (0, 4):
            env = ConjunctionEnv(scenario, EnvConfig(sigma_obs_pos=0.0, sigma_obs_vel=0.0))
            env.reset()
            env.step(encode_action(3, 0, 0, slot))
            ends.append(env.state.protected.position.copy())
        assert not np.allclose(ends[0], ends[1], atol=1e-3)

    def test_late_slot_burn_coasts_then_burns(self):
        scenario = far_miss_scenario()
        env_cfg = EnvConfig(sigma_obs_pos=0.0, sigma_obs_vel=0.0)
        env = ConjunctionEnv(scenario, env_cfg)
        env.reset()
        action = encode_action(3, 0, 0, 4)
        env.step(action)
        dv, _ = decode_action(action, env_cfg.dv_scale)
        offset = 4 * env_cfg.dt_step / 5
        coasted = propagate(PROTECTED, offset)
        burned = state_to_elements(apply_impulse(coasted, dv))
        expected = propagate(burned, env_cfg.dt_step - offset)
        assert np.allclose(env.state.protected.position, expected.position, rtol=1e-9, atol=1e-3)


class TestTrace:
    def test_header_and_row_lengths_match(self):
        scenario = far_miss_scenario()
        env = ConjunctionEnv(scenario, observation_seed=1)
        obs = env.reset()
        header = trace_header(n_debris=1)
        obs, reward, done, _ = env.step(0)
        row = trace_row(0, 0, reward, done, env.state, obs)
        assert len(row) == len(header)


class TestSigmaC:
    def test_default_combines_uncertainties(self):
        scenario = generate_scenario(head_on_config(sigma_pos=300.0))
        assert resolve_sigma_c(EnvConfig(), scenario) == pytest.approx(math.hypot(100.0, 300.0))

    def test_override_wins(self):
        scenario = generate_scenario(head_on_config(sigma_pos=300.0))
        assert resolve_sigma_c(EnvConfig(sigma_c=50.0), scenario) == 50.0
