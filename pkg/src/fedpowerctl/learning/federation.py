"""Model aggregation, the in-process aggregation server and the three training orchestrators."""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from .agents import BaseLearner
from .nn import WeightVector
from ..environment import PowerControlEnv, mean_rate_per_user
from ..utils import ArrayType, OptionalFolderPathType, check_probability_vector

logger = logging.getLogger(__name__)

TRAINING_MODES = ("federated", "distributed", "centralized")


@dataclass(frozen=True, eq=False)
class AggregationPlan:
    """
    How the per-cell models are combined during training.

    Parameters
    ----------
    mode : {"federated", "distributed", "centralized"}
    client_weights : array
        FedAvg weight of every cell, nonnegative and summing to one.
    aggregation_period : int, optional
        Episodes between FedAvg rounds in the federated mode. None never aggregates.
    """

    mode: str
    client_weights: np.ndarray
    aggregation_period: Optional[int] = None

    def __post_init__(self):
        if self.mode not in TRAINING_MODES:
            raise ValueError(f"Unknown training mode '{self.mode}'! Expected one of {TRAINING_MODES}.")
        object.__setattr__(self, "client_weights", np.asarray(self.client_weights, dtype=np.float64))
        check_probability_vector(self.client_weights)
        if self.mode == "federated" and self.aggregation_period is not None and self.aggregation_period < 1:
            raise ValueError(f"The aggregation period must be at least 1! Received {self.aggregation_period}.")

    @classmethod
    def from_users_per_cell(
        cls, mode: str, users_per_cell: ArrayType, aggregation_period: Optional[int] = None
    ) -> "AggregationPlan":
        """Weight each cell by its share of the users, w_i = k_i / sum_j k_j."""
        users_per_cell = np.asarray(users_per_cell, dtype=np.float64)
        return cls(
            mode=mode, client_weights=users_per_cell / users_per_cell.sum(), aggregation_period=aggregation_period
        )

    @property
    def n_clients(self) -> int:
        return self.client_weights.shape[0]

    def aggregates_after(self, episode: int) -> bool:
        if self.mode != "federated" or self.aggregation_period is None:
            return False
        return (episode + 1) % self.aggregation_period == 0


@dataclass
class RunMetrics:
    """Per-episode training series and the communication counters of one run."""

    mean_rate_per_user: List[float] = field(default_factory=list)
    losses: List[List[float]] = field(default_factory=list)
    epsilons: List[float] = field(default_factory=list)
    server_messages: int = 0
    agent_episodes: int = 0
    aggregation_rounds: int = 0
    decision_latency_s: float = 0.0

    @property
    def n_episodes(self) -> int:
        return len(self.mean_rate_per_user)

    @property
    def mean_loss(self) -> np.ndarray:
        """Loss (or policy objective) of every episode averaged over the learners."""
        return np.array([np.mean(episode_losses) for episode_losses in self.losses])


def fedavg(client_weights: Sequence[WeightVector], w: ArrayType) -> WeightVector:
    """
    Entrywise weighted average sum_i w_i * theta_i, accumulated in client order.

    Raises
    ------
    ValueError
        If the vectors do not share one layout, the number of weights differs from the number of clients, or the
        weights do not sum to one within 1e-9.
    """
    w = np.asarray(w, dtype=np.float64)
    if len(client_weights) == 0:
        raise ValueError("Cannot aggregate zero clients!")
    if w.shape != (len(client_weights),):
        raise ValueError(f"Expected {len(client_weights)} client weights! Received shape of {w.shape}.")
    layer_dims = client_weights[0].layer_dims
    if any(vector.layer_dims != layer_dims for vector in client_weights):
        raise ValueError("Every client vector must share the same parameter layout!")
    check_probability_vector(w, tolerance=1e-9)

    total = np.zeros_like(client_weights[0].values)
    for weight, vector in zip(w, client_weights):
        total += weight * vector.values
    return WeightVector(values=total, layer_dims=layer_dims)


class AggregationServer:
    """
    In-process stand-in for the aggregation server, exchanging serialized weight vectors.

    Parameters
    ----------
    layer_dims : sequence of ints
        Layout every upload must match.
    client_weights : array
        FedAvg weights indexed by client.
    checkpoint_folder : FolderPathType, optional
        When given, every aggregated model is written to `round_XXXXX.bin` in the transport byte format.
    """

    def __init__(
        self,
        layer_dims: Sequence[int],
        client_weights: ArrayType,
        checkpoint_folder: OptionalFolderPathType = None,
    ):
        self.layer_dims = tuple(layer_dims)
        self.client_weights = np.asarray(client_weights, dtype=np.float64)
        self.checkpoint_folder = None if checkpoint_folder is None else Path(checkpoint_folder)
        self.messages = 0
        self.rounds = 0
        self._uploads: Dict[int, WeightVector] = dict()
        self._global_payload: Optional[bytes] = None

    @property
    def n_clients(self) -> int:
        return self.client_weights.shape[0]

    def receive(self, client: int, payload: bytes):
        """Decode one upload; corrupted payloads raise ValueError and are not stored."""
        if not 0 <= client < self.n_clients:
            raise ValueError(f"Unknown client index {client}; the server has {self.n_clients} clients.")
        self._uploads[client] = WeightVector.from_bytes(payload, layer_dims=self.layer_dims)
        self.messages += 1

    def aggregate(self) -> WeightVector:
        missing = sorted(set(range(self.n_clients)) - set(self._uploads))
        if missing:
            raise ValueError(f"Cannot aggregate before every client uploaded! Missing clients {missing}.")
        global_vector = fedavg(
            client_weights=[self._uploads[client] for client in range(self.n_clients)], w=self.client_weights
        )
        self._uploads.clear()
        self._global_payload = global_vector.to_bytes()
        self.rounds += 1
        if self.checkpoint_folder is not None:
            self.checkpoint_folder.mkdir(parents=True, exist_ok=True)
            (self.checkpoint_folder / f"round_{self.rounds:05d}.bin").write_bytes(self._global_payload)
        logger.debug(f"Aggregation round {self.rounds} combined {self.n_clients} client models.")
        return global_vector

    def download(self, client: int) -> WeightVector:
        if self._global_payload is None:
            raise ValueError("No aggregated model is available yet!")
        self.messages += 1
        return WeightVector.from_bytes(self._global_payload, layer_dims=self.layer_dims)


def _episode(
    env: PowerControlEnv,
    learners: Sequence[BaseLearner],
    cells_of_learner: Sequence[Sequence[int]],
    rngs: Sequence[np.random.Generator],
    episode: int,
) -> float:
    """Play one episode, storing every transition; returns the mean per-user rate over its slots."""
    observations = env.reset()
    user_mask = env.user_mask
    slot_rates = []
    done = False
    while not done:
        actions = np.zeros(shape=user_mask.shape, dtype=int)
        for learner, rng, cells in zip(learners, rngs, cells_of_learner):
            states = np.concatenate([observations[cell][user_mask[cell]] for cell in cells])
            learner_actions = iter(learner.act(states, rng=rng, episode=episode))
            for cell in cells:
                for user in np.flatnonzero(user_mask[cell]):
                    actions[cell, user] = next(learner_actions)

        step = env.step(actions)
        for learner, cells in zip(learners, cells_of_learner):
            for cell in cells:
                users = np.flatnonzero(user_mask[cell])
                learner.record(
                    states=observations[cell][users],
                    actions=actions[cell][users],
                    reward=step.rewards[cell],
                    next_states=step.observations[cell][users],
                    links=[(cell, int(user)) for user in users],
                )
        slot_rates.append(mean_rate_per_user(step.rates, user_mask))
        observations = step.observations
        done = step.done
    return float(np.mean(slot_rates))


def _train(
    env: PowerControlEnv,
    learners: Sequence[BaseLearner],
    cells_of_learner: Sequence[Sequence[int]],
    rngs: Sequence[np.random.Generator],
    n_episodes: int,
    after_episode=None,
    verbose: bool = False,
    label: str = "",
) -> RunMetrics:
    metrics = RunMetrics()
    for episode in tqdm(range(n_episodes), desc=f"Training {label}", disable=not verbose):
        metrics.epsilons.append(learners[0].exploration_rate(episode))
        metrics.mean_rate_per_user.append(_episode(env, learners, cells_of_learner, rngs, episode))
        metrics.losses.append([learner.update(episode) for learner in learners])
        metrics.agent_episodes += len(learners)
        if after_episode is not None:
            after_episode(episode, metrics)
    if n_episodes > 0:
        logger.info(
            f"Trained {label} for {n_episodes} episodes: final mean rate per user "
            f"{metrics.mean_rate_per_user[-1]:.4f} bit/s/Hz, {metrics.server_messages} server messages."
        )
    return metrics


def _check_per_cell(env: PowerControlEnv, learners: Sequence[BaseLearner], rngs: Sequence[np.random.Generator]):
    if len(learners) != env.n_cells or len(rngs) != env.n_cells:
        raise ValueError(
            f"Expected one learner and one random stream per cell ({env.n_cells})! "
            f"Received {len(learners)} learners and {len(rngs)} streams."
        )


def run_federated(
    env: PowerControlEnv,
    learners: Sequence[BaseLearner],
    plan: AggregationPlan,
    n_episodes: int,
    rngs: Sequence[np.random.Generator],
    server: Optional[AggregationServer] = None,
    verbose: bool = False,
) -> RunMetrics:
    """
    Local training on every base station with a FedAvg round every `plan.aggregation_period` episodes.

    In a round every learner uploads its serialized parameters, the server averages them with the plan's client
    weights and every learner adopts the downloaded global model. Adam moments stay local.

    Parameters
    ----------
    env : PowerControlEnv
    learners : sequence of BaseLearner
        One learner per cell, all starting from the same initial parameters.
    plan : AggregationPlan
        Must be in the federated mode.
    n_episodes : int
    rngs : sequence of numpy.random.Generator
        One action-selection stream per learner.
    server : AggregationServer, optional
        Defaults to an in-process server without checkpoints.
    verbose : bool, default: False
        Show a progress bar.
    """
    if plan.mode != "federated":
        raise ValueError(f"run_federated requires a federated plan! Received mode '{plan.mode}'.")
    _check_per_cell(env, learners, rngs)
    if server is None:
        server = AggregationServer(layer_dims=learners[0].net.layer_dims, client_weights=plan.client_weights)

    def aggregate(episode: int, metrics: RunMetrics):
        if not plan.aggregates_after(episode):
            return
        for client, learner in enumerate(learners):
            server.receive(client=client, payload=learner.get_weights().to_bytes())
        server.aggregate()
        for client, learner in enumerate(learners):
            learner.set_weights(server.download(client=client))
        metrics.server_messages = server.messages
        metrics.aggregation_rounds = server.rounds

    cells_of_learner = [[cell] for cell in range(env.n_cells)]
    return _train(env, learners, cells_of_learner, rngs, n_episodes, aggregate, verbose, label="federated")


def run_distributed(
    env: PowerControlEnv,
    learners: Sequence[BaseLearner],
    n_episodes: int,
    rngs: Sequence[np.random.Generator],
    verbose: bool = False,
) -> RunMetrics:
    """Independent local training on every base station; the server is never contacted."""
    _check_per_cell(env, learners, rngs)
    cells_of_learner = [[cell] for cell in range(env.n_cells)]
    return _train(env, learners, cells_of_learner, rngs, n_episodes, verbose=verbose, label="distributed")


def run_centralized(
    env: PowerControlEnv,
    learner: BaseLearner,
    n_episodes: int,
    rng: np.random.Generator,
    verbose: bool = False,
) -> RunMetrics:
    """
    One shared model trained on the transitions of all base stations pooled at the server.

    Every base station reports its states once per episode, so the message counter grows by N per episode.
    """
    n_cells = env.n_cells

    def count_messages(episode: int, metrics: RunMetrics):
        metrics.server_messages += n_cells

    return _train(
        env, [learner], [list(range(n_cells))], [rng], n_episodes, count_messages, verbose, label="centralized"
    )


def comm_overhead(metrics: RunMetrics, plan: AggregationPlan, n_episodes: int) -> float:
    """
    Server round-trips per base station per training episode.

    Federated training costs 1/Ag, or 0 when no aggregation round took place (Ag = null or Ag > n_episodes).
    Distributed training costs 0 and centralized training 1.
    """
    if n_episodes <= 0:
        raise ValueError(f"The number of episodes must be positive! Received {n_episodes}.")
    if plan.mode == "federated":
        if plan.aggregation_period is None or metrics.aggregation_rounds == 0:
            return 0.0
        return 1.0 / plan.aggregation_period
    return metrics.server_messages / (plan.n_clients * n_episodes)


def split_rngs(seed_sequence: np.random.SeedSequence, n_streams: int) -> List[np.random.Generator]:
    """Independent child generators, one per agent."""
    return [np.random.default_rng(child) for child in seed_sequence.spawn(n_streams)]

