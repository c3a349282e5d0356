import math
import unittest

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from fedpowerctl.learning import (
    AdamState,
    AgentConfig,
    DQNLearner,
    EpisodeBuffer,
    ExplorationSchedule,
    Mlp,
    PolicyGradientLearner,
    Transition,
    discounted_returns,
    dqn_episode_update,
    epsilon,
    forward,
    grad_td_loss,
    init_weights,
    make_learner,
    network_dims,
    parameter_count,
    pg_episode_update,
    select_action_dqn,
    select_action_pg,
    select_actions_dqn,
    select_actions_pg,
    softmax,
)
from fedpowerctl.tools.testing import ConstantStateBandit

OBSERVATION_DIM = 7
N_LEVELS = 10


def zero_net(output_dim: int = N_LEVELS) -> Mlp:
    return Mlp(weights=[np.zeros(shape=(OBSERVATION_DIM, output_dim))], biases=[np.zeros(shape=output_dim)])


def bias_net(biases) -> Mlp:
    biases = np.asarray(biases, dtype=np.float64)
    return Mlp(weights=[np.zeros(shape=(OBSERVATION_DIM, biases.size))], biases=[biases])


def random_transition(rng: np.random.Generator, reward: float = 1.0) -> Transition:
    return Transition(
        state=rng.normal(size=OBSERVATION_DIM),
        action=int(rng.integers(N_LEVELS)),
        reward=reward,
        next_state=rng.normal(size=OBSERVATION_DIM),
    )


class TestExploration(unittest.TestCase):
    schedule = ExplorationSchedule(eps_start=0.9, eps_end=0.01, decay_horizon=1000)

    def test_schedule(self):
        assert epsilon(self.schedule, 0) == 0.9
        assert epsilon(self.schedule, 500) == pytest.approx(0.455)
        assert epsilon(self.schedule, 1000) == 0.01
        assert epsilon(self.schedule, 5000) == 0.01

    def test_schedule_is_nonincreasing(self):
        values = [epsilon(self.schedule, episode) for episode in range(1200)]

        assert np.all(np.diff(values) <= 0)

    def test_negative_episode(self):
        with self.assertRaisesRegex(ValueError, "The episode index must be nonnegative!"):
            epsilon(self.schedule, -1)

    def test_make_learner_decay_horizon(self):
        learner = make_learner("dqn", zero_net(), AgentConfig(), capacity_per_link=10, n_episodes=1000)

        assert learner.schedule.decay_horizon == 800
        assert learner.exploration_rate(0) == 0.9
        assert learner.exploration_rate(800) == 0.01


class TestActionSelection(unittest.TestCase):
    def test_greedy_without_exploration(self):
        net = bias_net([0.0, 3.0, 1.0, 3.0])
        rng = np.random.default_rng(0)

        assert all(select_action_dqn(net, np.ones(OBSERVATION_DIM), eps=0.0, rng=rng) == 1 for _ in range(20))

    def test_ties_go_to_lowest_index(self):
        assert select_action_dqn(zero_net(), np.ones(OBSERVATION_DIM), eps=0.0, rng=np.random.default_rng(0)) == 0

    def test_uniform_exploration(self):
        n_draws = 100_000
        states = np.ones(shape=(n_draws, OBSERVATION_DIM))

        actions = select_actions_dqn(bias_net(np.arange(N_LEVELS)), states, eps=1.0, rng=np.random.default_rng(1))

        counts = np.bincount(actions, minlength=N_LEVELS)
        sigma = math.sqrt(n_draws * 0.1 * 0.9)
        assert np.all(np.abs(counts - n_draws / N_LEVELS) < 4 * sigma)

    def test_invalid_exploration_rate(self):
        with self.assertRaisesRegex(ValueError, "The exploration rate must lie in \\[0, 1\\]!"):
            select_action_dqn(zero_net(), np.ones(OBSERVATION_DIM), eps=1.5, rng=np.random.default_rng(0))

    def test_uniform_policy(self):
        action, log_probability = select_action_pg(zero_net(), np.ones(OBSERVATION_DIM), rng=np.random.default_rng(0))

        assert 0 <= action < N_LEVELS
        assert log_probability == pytest.approx(-math.log(N_LEVELS), rel=1e-12)

    def test_concentrated_policy(self):
        net = bias_net([20.0] + [-20.0] * (N_LEVELS - 1))
        states = np.ones(shape=(10_000, OBSERVATION_DIM))

        actions, _ = select_actions_pg(net, states, rng=np.random.default_rng(2))

        assert np.mean(actions == 0) > 0.999

    def test_policy_sampling_frequencies(self):
        probabilities = np.array([0.1, 0.2, 0.3, 0.4])
        net = bias_net(np.log(probabilities))
        states = np.ones(shape=(100_000, OBSERVATION_DIM))

        actions, log_probabilities = select_actions_pg(net, states, rng=np.random.default_rng(3))

        assert_allclose(np.bincount(actions, minlength=4) / 100_000, probabilities, atol=0.01)
        assert_allclose(log_probabilities, np.log(probabilities)[actions], rtol=1e-12)

    def test_same_seed_same_samples(self):
        net = init_weights(network_dims(OBSERVATION_DIM, (16,), N_LEVELS), rng=np.random.default_rng(0))
        states = np.random.default_rng(1).normal(size=(50, OBSERVATION_DIM))

        first, _ = select_actions_pg(net, states, rng=np.random.default_rng(4))
        second, _ = select_actions_pg(net, states, rng=np.random.default_rng(4))

        assert_array_equal(first, second)


class TestReturns(unittest.TestCase):
    def test_discounted_returns(self):
        assert_allclose(discounted_returns([1.0, 0.0, 1.0], gamma=0.5), [1.25, 0.5, 1.0], rtol=1e-12)

    def test_no_discounting_of_the_future(self):
        assert_array_equal(discounted_returns([0.3, 2.0, -1.0], gamma=0.0), [0.3, 2.0, -1.0])


class TestEpisodeBuffer(unittest.TestCase):
    def test_groups_by_link(self):
        rng = np.random.default_rng(0)
        buffer = EpisodeBuffer(capacity=2)
        for _ in range(2):
            for link in [(0, 0), (0, 1)]:
                buffer.append(link=link, transition=random_transition(rng))

        assert len(buffer) == 4
        assert [len(trajectory) for trajectory in buffer.trajectories()] == [2, 2]
        buffer.clear()
        assert len(buffer) == 0

    def test_link_capacity(self):
        rng = np.random.default_rng(0)
        buffer = EpisodeBuffer(capacity=1)
        buffer.append(link=0, transition=random_transition(rng))

        with self.assertRaisesRegex(ValueError, "The buffer already holds 1 transitions for link 0."):
            buffer.append(link=0, transition=random_transition(rng))

    def test_non_finite_reward(self):
        with self.assertRaisesRegex(ValueError, "Rewards must be finite!"):
            EpisodeBuffer(capacity=1).append(link=0, transition=random_transition(np.random.default_rng(0), np.nan))


class TestDQNUpdate(unittest.TestCase):
    def test_zero_net_unit_rewards(self):
        rng = np.random.default_rng(0)
        buffer = EpisodeBuffer(capacity=10)
        for step in range(10):
            buffer.append(link=step % 2, transition=random_transition(rng, reward=1.0))

        net = zero_net()
        _, adam, loss = dqn_episode_update(net, AdamState.zeros(len(net.flatten())), buffer, gamma=0.0)

        assert loss == 1.0
        assert adam.t == 1
        assert len(buffer) == 0

    def test_scaled_unit_rewards(self):
        rng = np.random.default_rng(0)
        buffer = EpisodeBuffer(capacity=10)
        for step in range(10):
            buffer.append(link=step % 2, transition=random_transition(rng, reward=1.0))

        net = zero_net()
        _, _, loss = dqn_episode_update(net, AdamState.zeros(len(net.flatten())), buffer, gamma=0.0, reward_scale=0.5)

        assert loss == 0.25

    def test_reward_scale_matches_scaled_rewards(self):
        net = init_weights(network_dims(OBSERVATION_DIM, (8,), N_LEVELS), rng=np.random.default_rng(1))
        rng = np.random.default_rng(2)
        transitions = [random_transition(rng, reward=float(rng.uniform(0.0, 20.0))) for _ in range(6)]
        scaled_buffer, rescaled_buffer = EpisodeBuffer(capacity=6), EpisodeBuffer(capacity=6)
        for transition in transitions:
            scaled_buffer.append(link=0, transition=transition)
            rescaled = Transition(transition.state, transition.action, 0.05 * transition.reward, transition.next_state)
            rescaled_buffer.append(link=0, transition=rescaled)
        adam = AdamState.zeros(len(net.flatten()))

        scaled, _, scaled_loss = dqn_episode_update(net, adam, scaled_buffer, gamma=0.5, reward_scale=0.05)
        rescaled, _, rescaled_loss = dqn_episode_update(net, adam, rescaled_buffer, gamma=0.5)

        assert scaled_loss == pytest.approx(rescaled_loss, rel=1e-12)
        assert_allclose(scaled.flatten().values, rescaled.flatten().values, rtol=1e-12, atol=1e-15)

    def test_targets_equal_to_estimates(self):
        net = zero_net()
        buffer = EpisodeBuffer(capacity=5)
        rng = np.random.default_rng(0)
        for _ in range(5):
            buffer.append(link=0, transition=random_transition(rng, reward=0.0))

        updated, _, loss = dqn_episode_update(net, AdamState.zeros(len(net.flatten())), buffer, gamma=0.0)

        assert loss == 0.0
        assert_array_equal(updated.flatten().values, net.flatten().values)

    def test_single_transition_loss(self):
        net = init_weights(network_dims(OBSERVATION_DIM, (8,), N_LEVELS), rng=np.random.default_rng(1))
        transition = random_transition(np.random.default_rng(2), reward=0.7)
        buffer = EpisodeBuffer(capacity=1)
        buffer.append(link=0, transition=transition)
        target = 0.7 + 0.9 * np.max(forward(net, transition.next_state))

        _, _, loss = dqn_episode_update(net, AdamState.zeros(len(net.flatten())), buffer, gamma=0.9)

        assert loss == pytest.approx(grad_td_loss(net, transition.state, transition.action, target)[1], rel=1e-12)

    def test_empty_buffer(self):
        with self.assertRaisesRegex(ValueError, "Cannot update from an empty episode buffer!"):
            net = zero_net()
            dqn_episode_update(net, AdamState.zeros(len(net.flatten())), EpisodeBuffer(capacity=1), gamma=0.9)

    def test_zero_learning_rate_keeps_weights(self):
        net = init_weights(network_dims(OBSERVATION_DIM, (8,), N_LEVELS), rng=np.random.default_rng(1))
        learner = DQNLearner(
            net=net,
            config=AgentConfig(learning_rate=0.0),
            capacity_per_link=3,
            schedule=ExplorationSchedule(decay_horizon=10),
        )
        rng = np.random.default_rng(5)
        states = rng.normal(size=(2, OBSERVATION_DIM))
        for _ in range(3):
            actions = learner.act(states, rng=rng, episode=0)
            learner.record(states=states, actions=actions, reward=1.0, next_states=states)
        learner.update(episode=0)

        assert_array_equal(learner.get_weights().values, net.flatten().values)

    def test_target_network_sync(self):
        net = init_weights(network_dims(OBSERVATION_DIM, (8,), N_LEVELS), rng=np.random.default_rng(1))
        config = AgentConfig(use_target_net=True, target_sync_period=2, learning_rate=0.01)
        learner = DQNLearner(net=net, config=config, capacity_per_link=1, schedule=ExplorationSchedule())
        state = np.ones(shape=(1, OBSERVATION_DIM))

        learner.record(states=state, actions=[3], reward=1.0, next_states=state)
        learner.update(episode=0)
        assert_array_equal(learner.target_net.flatten().values, net.flatten().values)
        assert not np.array_equal(learner.get_weights().values, net.flatten().values)

        learner.record(states=state, actions=[3], reward=1.0, next_states=state)
        learner.update(episode=1)
        assert_array_equal(learner.target_net.flatten().values, learner.get_weights().values)

    def test_replay_memory_persists(self):
        config = AgentConfig(replay_capacity=8, replay_batch_size=4)
        learner = DQNLearner(
            net=zero_net(),
            config=config,
            capacity_per_link=2,
            schedule=ExplorationSchedule(),
            rng=np.random.default_rng(0),
        )
        state = np.ones(shape=(1, OBSERVATION_DIM))
        for episode in range(6):
            for _ in range(2):
                learner.record(states=state, actions=[episode], reward=1.0, next_states=state)
            learner.update(episode=episode)

        assert len(learner.replay) == 8
        assert len(learner.buffer) == 0

    def test_replay_requires_random_generator(self):
        with self.assertRaisesRegex(ValueError, "A random generator is required when replay is enabled!"):
            DQNLearner(
                net=zero_net(),
                config=AgentConfig(replay_capacity=8, replay_batch_size=4),
                capacity_per_link=2,
                schedule=ExplorationSchedule(),
            )


class TestPolicyGradientUpdate(unittest.TestCase):
    def test_single_step_with_baseline_is_a_no_op(self):
        net = init_weights(network_dims(OBSERVATION_DIM, (8,), N_LEVELS), rng=np.random.default_rng(0))
        episode = [(np.ones(OBSERVATION_DIM), 4, 2.5)]

        updated, adam, objective = pg_episode_update(net, AdamState.zeros(len(net.flatten())), episode, gamma=1.0)

        assert objective == 0.0
        assert adam.t == 1
        assert_array_equal(updated.flatten().values, net.flatten().values)

    def test_ascent_direction(self):
        net = zero_net()
        state = np.ones(OBSERVATION_DIM)
        episode = [(state, 2, 1.0)]

        updated, _, _ = pg_episode_update(
            net, AdamState.zeros(len(net.flatten()), lr=0.01), episode, gamma=0.9, use_baseline=False
        )

        probabilities = softmax(forward(updated, state))
        assert np.argmax(probabilities) == 2
        assert probabilities[2] > 1.0 / N_LEVELS

    def test_accepts_transitions(self):
        net = zero_net()
        rng = np.random.default_rng(0)
        transitions = [random_transition(rng, reward=reward) for reward in (1.0, 0.0, 1.0)]
        tuples = [(step.state, step.action, step.reward) for step in transitions]

        from_transitions = pg_episode_update(net, AdamState.zeros(len(net.flatten())), transitions, gamma=0.5)
        from_tuples = pg_episode_update(net, AdamState.zeros(len(net.flatten())), tuples, gamma=0.5)

        assert_array_equal(from_transitions[0].flatten().values, from_tuples[0].flatten().values)

    def test_empty_episode(self):
        with self.assertRaisesRegex(ValueError, "Cannot update from an empty episode!"):
            pg_episode_update(zero_net(), AdamState.zeros(len(zero_net().flatten())), [], gamma=0.9)


class TestLearners(unittest.TestCase):
    def test_unknown_algorithm(self):
        with self.assertRaisesRegex(ValueError, "Unknown learning algorithm 'a2c'!"):
            make_learner("a2c", zero_net(), AgentConfig(), capacity_per_link=1, n_episodes=10)

    def test_weights_are_copied(self):
        net = zero_net()
        learner = make_learner("pg", net, AgentConfig(), capacity_per_link=1, n_episodes=10)
        learner.net.biases[0][0] = 1.0

        assert net.biases[0][0] == 0.0

    def test_layout_mismatch(self):
        learner = make_learner("pg", zero_net(), AgentConfig(), capacity_per_link=1, n_episodes=10)

        with self.assertRaisesRegex(ValueError, "Layout mismatch"):
            learner.set_weights(zero_net(output_dim=5).flatten())

    def test_dqn_learns_the_best_level(self):
        config = AgentConfig(gamma=0.0, learning_rate=0.01, hidden_layers=(32,))
        net = init_weights(network_dims(OBSERVATION_DIM, config.hidden_layers, 5), rng=np.random.default_rng(0))
        learner = make_learner("dqn", net, config, capacity_per_link=10, n_episodes=500)
        bandit = ConstantStateBandit(n_power_levels=5, observation_dim=OBSERVATION_DIM)

        bandit.play(learner, n_episodes=500, horizon=10, rng=np.random.default_rng(1))

        assert learner.act_greedy(bandit.state)[0] == 4

    def test_policy_gradient_prefers_high_levels(self):
        config = AgentConfig()
        net = init_weights(network_dims(OBSERVATION_DIM, config.hidden_layers, N_LEVELS), rng=np.random.default_rng(0))
        learner = make_learner("pg", net, config, capacity_per_link=10, n_episodes=500)
        bandit = ConstantStateBandit(n_power_levels=N_LEVELS, observation_dim=OBSERVATION_DIM)
        assert isinstance(learner, PolicyGradientLearner)

        bandit.play(learner, n_episodes=500, horizon=10, rng=np.random.default_rng(1))

        probabilities = softmax(forward(learner.net, bandit.state))
        assert probabilities[-1] > 0.95


def test_parameter_count_of_default_network():
    assert parameter_count(network_dims(OBSERVATION_DIM, (128, 64), N_LEVELS)) == 8 * 128 + 129 * 64 + 65 * 10
