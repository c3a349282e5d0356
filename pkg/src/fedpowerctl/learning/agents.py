"""Per-base-station learners: action selection, episode storage and one update per episode."""
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass
from typing import Dict, Hashable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .nn import (
    AdamState,
    Mlp,
    WeightVector,
    adam_step,
    forward,
    log_softmax,
    softmax,
    td_loss_gradient_batch,
    weighted_log_policy_gradient,
)
from ..utils import ArrayType


@dataclass(frozen=True)
class AgentConfig:
    """
    Learning hyperparameters shared by every learner of a run.

    Parameters
    ----------
    gamma : float, default: 0.9
        Discount factor.
    eps_start, eps_end : float, default: 0.9, 0.01
        Exploration rate of the DQN learner at the first episode and after the decay.
    eps_decay_frac : float, default: 0.8
        Fraction of the training episodes over which the exploration rate decays linearly.
    use_baseline : bool, default: True
        Subtract the episode-mean return from the policy gradient returns.
    use_target_net : bool, default: False
        Bootstrap DQN targets from a frozen copy synced every `target_sync_period` episodes.
    replay_capacity : int, default: 0
        When larger than the number of transitions of one episode, DQN updates draw from a FIFO memory
        that persists across episodes.
    reward_scale : float, default: 1.0
        Positive factor applied to rewards inside DQN targets. It keeps Q values near the network output range
        without changing the greedy policy.
    learning_rate : float, default: 0.001
    hidden_layers : tuple of ints, default: (128, 64)
    """

    gamma: float = 0.9
    eps_start: float = 0.9
    eps_end: float = 0.01
    eps_decay_frac: float = 0.8
    use_baseline: bool = True
    use_target_net: bool = False
    target_sync_period: int = 10
    replay_capacity: int = 0
    replay_batch_size: int = 0
    reward_scale: float = 1.0
    learning_rate: float = 1e-3
    hidden_layers: Tuple[int, ...] = (128, 64)

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(width) for width in self.hidden_layers))
        if not 0 <= self.gamma <= 1:
            raise ValueError(f"'gamma' must lie in [0, 1]! Received {self.gamma}.")
        if not 0 <= self.eps_end <= self.eps_start <= 1:
            raise ValueError(
                f"The exploration rates must satisfy 0 <= eps_end <= eps_start <= 1! "
                f"Received eps_start={self.eps_start}, eps_end={self.eps_end}."
            )
        if not 0 <= self.eps_decay_frac <= 1:
            raise ValueError(f"'eps_decay_frac' must lie in [0, 1]! Received {self.eps_decay_frac}.")
        if self.learning_rate < 0:
            raise ValueError(f"'learning_rate' must be nonnegative! Received {self.learning_rate}.")
        if self.reward_scale <= 0:
            raise ValueError(f"'reward_scale' must be positive! Received {self.reward_scale}.")


@dataclass(frozen=True, eq=False)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray


@dataclass(frozen=True)
class ExplorationSchedule:
    eps_start: float = 0.9
    eps_end: float = 0.01
    decay_horizon: int = 1000


def epsilon(schedule: ExplorationSchedule, episode: int) -> float:
    """Linear decay from `eps_start` to `eps_end` over `decay_horizon` episodes, then constant."""
    if episode < 0:
        raise ValueError(f"The episode index must be nonnegative! Received {episode}.")
    if episode >= schedule.decay_horizon:
        return schedule.eps_end
    fraction = episode / schedule.decay_horizon
    return schedule.eps_start + (schedule.eps_end - schedule.eps_start) * fraction


class EpisodeBuffer:
    """
    Transitions of the current episode, grouped by user link in arrival order.

    Parameters
    ----------
    capacity : int
        Maximum number of transitions per link, usually the episode horizon.
    """

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._trajectories: Dict[Hashable, List[Transition]] = dict()

    def append(self, link: Hashable, transition: Transition):
        if not np.isfinite(transition.reward):
            raise ValueError(f"Rewards must be finite! Received {transition.reward}.")
        trajectory = self._trajectories.setdefault(link, [])
        if len(trajectory) >= self.capacity:
            raise ValueError(f"The buffer already holds {self.capacity} transitions for link {link!r}.")
        trajectory.append(transition)

    def __len__(self) -> int:
        return sum(len(trajectory) for trajectory in self._trajectories.values())

    def transitions(self) -> List[Transition]:
        return [transition for trajectory in self._trajectories.values() for transition in trajectory]

    def trajectories(self) -> List[List[Transition]]:
        return [list(trajectory) for trajectory in self._trajectories.values()]

    def clear(self):
        self._trajectories.clear()


class ReplayMemory:
    """FIFO transition memory that persists across episodes."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._transitions = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._transitions)

    def extend(self, transitions: Sequence[Transition]):
        self._transitions.extend(transitions)

    def sample(self, batch_size: int, rng: np.random.Generator) -> List[Transition]:
        indices = rng.choice(len(self._transitions), size=min(batch_size, len(self._transitions)), replace=False)
        return [self._transitions[index] for index in np.sort(indices)]


def select_actions_dqn(net: Mlp, states: ArrayType, eps: float, rng: np.random.Generator) -> np.ndarray:
    """Epsilon-greedy level for every row of `states`; ties of the greedy argmax go to the lowest index."""
    if not 0 <= eps <= 1:
        raise ValueError(f"The exploration rate must lie in [0, 1]! Received {eps}.")
    q_values = np.atleast_2d(forward(net, states))
    explore = rng.random(size=q_values.shape[0]) < eps
    random_actions = rng.integers(low=0, high=net.output_dim, size=q_values.shape[0])
    return np.where(explore, random_actions, np.argmax(q_values, axis=1))


def select_action_dqn(net: Mlp, state: ArrayType, eps: float, rng: np.random.Generator) -> int:
    """
    Epsilon-greedy action for one observation.

    With probability 1 - eps the argmax of the Q-values (lowest index on ties), otherwise a uniform level.
    """
    return int(select_actions_dqn(net, states=[state], eps=eps, rng=rng)[0])


def select_actions_pg(
    net: Mlp, states: ArrayType, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """Sample a level from the softmax policy for every row, returning the levels and their log-probabilities."""
    logits = np.atleast_2d(forward(net, states))
    cumulative = np.cumsum(softmax(logits), axis=1)
    draws = rng.random(size=logits.shape[0]) * cumulative[:, -1]
    actions = np.minimum(np.sum(cumulative <= draws[:, np.newaxis], axis=1), net.output_dim - 1)
    rows = np.arange(logits.shape[0])
    return actions, log_softmax(logits)[rows, actions]


def select_action_pg(net: Mlp, state: ArrayType, rng: np.random.Generator) -> Tuple[int, float]:
    """Sample one level from pi(.|state) and return it with its log-probability."""
    actions, log_probabilities = select_actions_pg(net, states=[state], rng=rng)
    return int(actions[0]), float(log_probabilities[0])


def greedy_actions(net: Mlp, states: ArrayType) -> np.ndarray:
    """Largest Q-value or largest probability per row; exploration off."""
    return np.argmax(np.atleast_2d(forward(net, states)), axis=1)


def discounted_returns(rewards: ArrayType, gamma: float) -> np.ndarray:
    """Returns-to-go computed backwards with R_t = r_t + gamma * R_{t+1}."""
    rewards = np.asarray(rewards, dtype=np.float64)
    returns = np.zeros_like(rewards)
    running = 0.0
    for index in reversed(range(rewards.shape[0])):
        running = rewards[index] + gamma * running
        returns[index] = running
    return returns


def _restore_like(net: Mlp, values: np.ndarray) -> Mlp:
    return Mlp.restore(WeightVector(values=values, layer_dims=net.layer_dims))


def dqn_episode_update(
    net: Mlp,
    adam: AdamState,
    buffer: EpisodeBuffer,
    gamma: float,
    target_net: Optional[Mlp] = None,
    replay: Optional[ReplayMemory] = None,
    replay_batch_size: int = 0,
    rng: Optional[np.random.Generator] = None,
    reward_scale: float = 1.0,
) -> Tuple[Mlp, AdamState, float]:
    """
    One Adam step on the mean TD loss of the episode, then clear the buffer.

    Targets are reward_scale * r + gamma * max_a Q(s', a), evaluated with `target_net` when given, and held constant.
    With a replay memory the episode is appended to it first and the step uses a sample of the memory.

    Returns
    -------
    net : Mlp
    adam : AdamState
    loss : float
        Mean squared TD error before the step.
    """
    transitions = buffer.transitions()
    if not transitions:
        raise ValueError("Cannot update from an empty episode buffer!")
    if replay is not None:
        replay.extend(transitions)
        transitions = replay.sample(batch_size=replay_batch_size or len(transitions), rng=rng)

    states = np.stack([transition.state for transition in transitions])
    next_states = np.stack([transition.next_state for transition in transitions])
    actions = np.array([transition.action for transition in transitions], dtype=int)
    rewards = np.array([transition.reward for transition in transitions], dtype=np.float64)

    bootstrap_net = net if target_net is None else target_net
    targets = reward_scale * rewards + gamma * np.max(np.atleast_2d(forward(bootstrap_net, next_states)), axis=1)
    gradient, loss = td_loss_gradient_batch(net, states=states, actions=actions, targets=targets)
    params, adam = adam_step(params=net.flatten(), grad=gradient, state=adam)
    buffer.clear()
    return _restore_like(net, params), adam, loss


def _unpack_step(step: Union[Transition, Tuple]) -> Tuple[np.ndarray, int, float]:
    if isinstance(step, Transition):
        return step.state, step.action, step.reward
    state, action, step_reward = step[:3]
    return state, action, step_reward


def pg_trajectories_update(
    net: Mlp,
    adam: AdamState,
    trajectories: Sequence[Sequence[Union[Transition, Tuple]]],
    gamma: float,
    use_baseline: bool = True,
) -> Tuple[Mlp, AdamState, float]:
    """
    One Adam ascent step of REINFORCE averaged over trajectories.

    Each trajectory contributes sum_t grad log pi(a_t | s_t) * (R_t - b), where b is the mean of its returns-to-go
    when `use_baseline` is set and 0 otherwise.

    Returns
    -------
    net : Mlp
    adam : AdamState
    objective : float
        The surrogate objective sum_t log pi(a_t | s_t) * (R_t - b), averaged over trajectories.
    """
    if not trajectories or any(len(trajectory) == 0 for trajectory in trajectories):
        raise ValueError("Cannot update from an empty episode!")

    states, actions, advantages = [], [], []
    for trajectory in trajectories:
        steps = [_unpack_step(step) for step in trajectory]
        returns = discounted_returns([step[2] for step in steps], gamma=gamma)
        baseline = np.mean(returns) if use_baseline else 0.0
        states.extend(step[0] for step in steps)
        actions.extend(step[1] for step in steps)
        advantages.append(returns - baseline)
    advantages = np.concatenate(advantages)

    gradient, log_probabilities = weighted_log_policy_gradient(
        net, states=np.stack(states), actions=actions, weights=advantages
    )
    ascent_direction = gradient.values / len(trajectories)
    params, adam = adam_step(params=net.flatten(), grad=-ascent_direction, state=adam)
    objective = float(np.sum(log_probabilities * advantages) / len(trajectories))
    return _restore_like(net, params), adam, objective


def pg_episode_update(
    net: Mlp,
    adam: AdamState,
    episode: Sequence[Union[Transition, Tuple]],
    gamma: float,
    use_baseline: bool = True,
) -> Tuple[Mlp, AdamState, float]:
    """REINFORCE update from a single episode of (state, action, reward) steps."""
    return pg_trajectories_update(net, adam, trajectories=[episode], gamma=gamma, use_baseline=use_baseline)


class BaseLearner(ABC):
    """
    Abstract class defining the structure of all learners.

    A learner owns one network, its Adam state and the episode buffer. It is driven by one base station in the
    distributed and federated modes and by all of them in the centralized mode.
    """

    algorithm: str = ""

    def __init__(self, net: Mlp, config: AgentConfig, capacity_per_link: int):
        self.net = net.copy()
        self.config = config
        self.optimizer = AdamState.zeros(n_parameters=len(net.flatten()), lr=config.learning_rate)
        self.buffer = EpisodeBuffer(capacity=capacity_per_link)

    @abstractmethod
    def act(self, states: ArrayType, rng: np.random.Generator, episode: int) -> np.ndarray:
        raise NotImplementedError()

    @abstractmethod
    def update(self, episode: int) -> float:
        """Apply the end-of-episode update and return the loss (DQN) or objective (policy gradient)."""
        raise NotImplementedError()

    def exploration_rate(self, episode: int) -> float:
        return 0.0

    def act_greedy(self, states: ArrayType) -> np.ndarray:
        return greedy_actions(self.net, states)

    def record(
        self,
        states: np.ndarray,
        actions: np.ndarray,
        reward: float,
        next_states: np.ndarray,
        links: Optional[Sequence[Hashable]] = None,
    ):
        """Store one transition per user link; every link of a base station shares that station's reward."""
        links = range(len(actions)) if links is None else links
        for link, state, action, next_state in zip(links, states, actions, next_states):
            self.buffer.append(
                link=link,
                transition=Transition(state=state, action=int(action), reward=float(reward), next_state=next_state),
            )

    def get_weights(self) -> WeightVector:
        return self.net.flatten()

    def set_weights(self, vector: WeightVector):
        if vector.layer_dims != self.net.layer_dims:
            raise ValueError(f"Layout mismatch: {vector.layer_dims} versus {self.net.layer_dims}.")
        self.net = Mlp.restore(vector)


class DQNLearner(BaseLearner):
    """Epsilon-greedy deep Q-learning with one mean-gradient update per episode."""

    algorithm = "dqn"

    def __init__(
        self,
        net: Mlp,
        config: AgentConfig,
        capacity_per_link: int,
        schedule: ExplorationSchedule,
        rng: Optional[np.random.Generator] = None,
    ):
        if config.replay_capacity > 0 and rng is None:
            raise ValueError("A random generator is required when replay is enabled!")
        super().__init__(net=net, config=config, capacity_per_link=capacity_per_link)
        self.schedule = schedule
        self.rng = rng
        self.target_net = self.net.copy() if config.use_target_net else None
        self.replay = ReplayMemory(capacity=config.replay_capacity) if config.replay_capacity > 0 else None
        self._updates = 0

    def exploration_rate(self, episode: int) -> float:
        return epsilon(self.schedule, episode)

    def act(self, states: ArrayType, rng: np.random.Generator, episode: int) -> np.ndarray:
        return select_actions_dqn(self.net, states=states, eps=self.exploration_rate(episode), rng=rng)

    def update(self, episode: int) -> float:
        replay = None
        if self.replay is not None and self.replay.capacity > len(self.buffer):
            replay = self.replay
        self.net, self.optimizer, loss = dqn_episode_update(
            net=self.net,
            adam=self.optimizer,
            buffer=self.buffer,
            gamma=self.config.gamma,
            target_net=self.target_net,
            replay=replay,
            replay_batch_size=self.config.replay_batch_size,
            rng=self.rng,
            reward_scale=self.config.reward_scale,
        )
        self._updates += 1
        if self.target_net is not None and self._updates % self.config.target_sync_period == 0:
            self.target_net = self.net.copy()
        return loss


class PolicyGradientLearner(BaseLearner):
    """REINFORCE on a softmax policy over the power levels, one ascent step per episode."""

    algorithm = "pg"

    def act(self, states: ArrayType, rng: np.random.Generator, episode: int) -> np.ndarray:
        actions, _ = select_actions_pg(self.net, states=states, rng=rng)
        return actions

    def update(self, episode: int) -> float:
        self.net, self.optimizer, objective = pg_trajectories_update(
            net=self.net,
            adam=self.optimizer,
            trajectories=self.buffer.trajectories(),
            gamma=self.config.gamma,
            use_baseline=self.config.use_baseline,
        )
        self.buffer.clear()
        return objective


def make_learner(
    algorithm: str,
    net: Mlp,
    config: AgentConfig,
    capacity_per_link: int,
    n_episodes: int,
    rng: Optional[np.random.Generator] = None,
) -> BaseLearner:
    """Build the learner for `algorithm` ("dqn" or "pg"), starting from a copy of `net`."""
    if algorithm == "dqn":
        schedule = ExplorationSchedule(
            eps_start=config.eps_start,
            eps_end=config.eps_end,
            decay_horizon=int(round(config.eps_decay_frac * n_episodes)),
        )
        return DQNLearner(net=net, config=config, capacity_per_link=capacity_per_link, schedule=schedule, rng=rng)
    if algorithm == "pg":
        return PolicyGradientLearner(net=net, config=config, capacity_per_link=capacity_per_link)
    raise ValueError(f"Unknown learning algorithm '{algorithm}'! Expected 'dqn' or 'pg'.")
