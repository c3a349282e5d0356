"""Multi-agent power control environment: SINR, rates, rewards and per-base-station observations."""
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .channel import (
    ChannelState,
    Topology,
    TopologyConfig,
    build_topology,
    dbm_to_watts,
    initial_channel_state,
    jakes_rho,
    step_fading,
)
from ..utils import ArrayType, SeedType


@dataclass(frozen=True)
class EnvConfig:
    """
    Radio and episode parameters of the power control environment.

    Parameters
    ----------
    n_power_levels : int, default: 10
        Number M of evenly spaced power levels from 0 to P_max, both included.
    p_max_dbm : float, default: 38.0
    noise_dbm : float, default: -114.0
        Thermal noise of -174 dBm/Hz over 10 MHz.
    beta : float, default: 1.0
        Weight of the neighbor-cell sum rate in each base station's reward.
    horizon : int, default: 10
        Number of slots T per episode.
    """

    n_power_levels: int = 10
    p_max_dbm: float = 38.0
    noise_dbm: float = -114.0
    beta: float = 1.0
    horizon: int = 10

    def __post_init__(self):
        if self.n_power_levels < 2:
            raise ValueError(f"At least two power levels are required! Received {self.n_power_levels}.")
        if self.beta < 0:
            raise ValueError(f"'beta' must be nonnegative! Received {self.beta}.")
        if self.horizon < 1:
            raise ValueError(f"'horizon' must be at least 1! Received {self.horizon}.")

    @property
    def p_max_w(self) -> float:
        return dbm_to_watts(self.p_max_dbm)

    @property
    def noise_w(self) -> float:
        return dbm_to_watts(self.noise_dbm)


@dataclass(frozen=True)
class NormalizationConstants:
    """Fixed offsets and scales applied to the observation features."""

    gain_db_mean: float = -100.0
    gain_db_scale: float = 20.0
    rate_scale: float = 5.0
    clip: float = 40.0
    gain_floor: float = 1e-20


@dataclass(frozen=True, eq=False)
class EnvStep:
    """Outcome of one slot: next observations, per-base-station rewards and the rates achieved in the slot."""

    observations: np.ndarray
    rewards: np.ndarray
    rates: np.ndarray
    powers: np.ndarray
    done: bool
    step_index: int


def action_to_power(level_index: int, M: int, P_max: float) -> float:
    """
    Map a discrete power level to watts, level_index * P_max / (M - 1).

    Parameters
    ----------
    level_index : int
        Index in [0, M - 1].
    M : int
        Number of power levels, at least 2.
    P_max : float
        Maximum transmit power in watts.
    """
    if M < 2:
        raise ValueError(f"At least two power levels are required! Received M={M}.")
    if int(level_index) != level_index or not 0 <= level_index <= M - 1:
        raise ValueError(f"The power level index must be an integer in [0, {M - 1}]! Received {level_index}.")
    return P_max * (int(level_index) / (M - 1))


def actions_to_powers(
    levels: ArrayType, M: int, P_max: float, user_mask: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    Vectorized `action_to_power` over a [n][k] array of level indices.

    Entries outside `user_mask` (padded user slots) are ignored and mapped to zero power.
    """
    levels = np.asarray(levels)
    if user_mask is None:
        user_mask = np.ones(shape=levels.shape, dtype=bool)
    active_levels = levels[user_mask]
    if not np.issubdtype(levels.dtype, np.integer) or np.any(active_levels < 0) or np.any(active_levels > M - 1):
        raise ValueError(f"All power level indices must be integers in [0, {M - 1}]!")
    return np.where(user_mask, P_max * (levels / (M - 1)), 0.0)


def _check_noise(noise: float):
    if not noise > 0:
        raise ValueError(f"The noise power must be positive! Received {noise}.")


def sinr(g: np.ndarray, p: np.ndarray, noise: float, n: int, k: int) -> float:
    """
    SINR of user k in cell n.

    The intra-cell interference uses the receiving user's own direct gain g[n][n][k] for every co-cell
    transmission; the inter-cell term sums the total transmit power of every other base station through
    the cross gain g[n'][n][k].
    """
    _check_noise(noise)
    g = np.asarray(g, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    direct = g[n, n, k]
    intra = direct * np.sum(np.delete(p[n], k))
    other_cells = np.delete(np.arange(g.shape[0]), n)
    inter = np.sum(g[other_cells, n, k] * p[other_cells].sum(axis=1))
    return float(p[n, k] * direct / (intra + inter + noise))


def sinr_matrix(g: np.ndarray, p: np.ndarray, noise: float) -> np.ndarray:
    """SINR of every user link at once, indexed [n][k]; same convention as `sinr`."""
    _check_noise(noise)
    g = np.asarray(g, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    n_cells, _, max_users = g.shape
    cells = np.arange(n_cells)

    direct = g[cells, cells, :]
    intra = direct * (p @ (1.0 - np.eye(max_users)))
    cross = g.copy()
    cross[cells, cells, :] = 0.0
    inter = np.einsum("mnk,m->nk", cross, p.sum(axis=1))
    return p * direct / (intra + inter + noise)


def rates(g: np.ndarray, p: np.ndarray, noise: float) -> np.ndarray:
    """Spectral efficiency log2(1 + SINR) of every user link in bit/s/Hz (bandwidth normalized to 1)."""
    return np.log2(1.0 + sinr_matrix(g=g, p=p, noise=noise))


def network_sum_rate(rates: ArrayType) -> float:
    """Sum of all link rates."""
    return float(np.sum(rates))


def reward(n: int, rates: np.ndarray, beta: float, neighbors: Sequence[int]) -> float:
    """Own-cell sum rate plus `beta` times the sum rate of the neighboring cells."""
    if beta < 0:
        raise ValueError(f"'beta' must be nonnegative! Received {beta}.")
    rates = np.asarray(rates, dtype=np.float64)
    neighbor_rates = rates[np.asarray(neighbors, dtype=int)]
    return float(np.sum(rates[n]) + beta * np.sum(neighbor_rates))


def gain_features(g: ArrayType, norm_stats: NormalizationConstants = NormalizationConstants()) -> np.ndarray:
    """Gains converted to dB, shifted and scaled by the normalization constants, then clipped."""
    gain_db = 10.0 * np.log10(np.maximum(np.asarray(g, dtype=np.float64), norm_stats.gain_floor))
    normalized = (gain_db - norm_stats.gain_db_mean) / norm_stats.gain_db_scale
    return np.clip(normalized, -norm_stats.clip, norm_stats.clip)


def build_observation(
    n: int,
    k: int,
    g: np.ndarray,
    prev_p: np.ndarray,
    prev_rates: np.ndarray,
    neighbors: Sequence[int],
    neighbor_count: int,
    p_max: float,
    norm_stats: NormalizationConstants = NormalizationConstants(),
) -> np.ndarray:
    """
    Feature vector of the link to user k of cell n.

    Layout: own direct gain, the gains from the base stations in `neighbors` to the user (zero-padded to
    `neighbor_count` entries), the previous power over `p_max` and the previous rate over the rate scale.
    """
    features = np.zeros(shape=3 + neighbor_count)
    features[0] = gain_features(g[n, n, k], norm_stats=norm_stats)
    for slot, neighbor in enumerate(list(neighbors)[:neighbor_count]):
        features[1 + slot] = gain_features(g[neighbor, n, k], norm_stats=norm_stats)
    features[1 + neighbor_count] = prev_p[n, k] / p_max
    features[2 + neighbor_count] = prev_rates[n, k] / norm_stats.rate_scale
    return features


def build_observations(
    topology: Topology,
    g: np.ndarray,
    prev_p: np.ndarray,
    prev_rates: np.ndarray,
    p_max: float,
    norm_stats: NormalizationConstants = NormalizationConstants(),
) -> np.ndarray:
    """Observations of every link, shaped (n_cells, max_users, 3 + neighbor_count); zero on padded slots."""
    neighbor_count = topology.neighbor_count
    cells = np.arange(topology.n_cells)
    observations = np.zeros(shape=(topology.n_cells, topology.max_users, 3 + neighbor_count))
    observations[:, :, 0] = gain_features(g[cells, cells, :], norm_stats=norm_stats)
    for cell, neighbors in enumerate(topology.neighbor_sets):
        if neighbors:
            interference = gain_features(g[list(neighbors), cell, :], norm_stats=norm_stats)
            observations[cell, :, 1 : 1 + len(neighbors)] = interference.T
    observations[:, :, 1 + neighbor_count] = prev_p / p_max
    observations[:, :, 2 + neighbor_count] = prev_rates / norm_stats.rate_scale
    observations[~topology.user_mask] = 0.0
    return observations


def link_gain_matrix(g: np.ndarray, user_mask: np.ndarray) -> np.ndarray:
    """
    Flatten the gain tensor to an L x L matrix over the active links, ordered cell-major.

    Entry [l, m] is the gain through which the transmission of link m reaches the receiver of link l, following
    the same convention as `sinr`: g[bs(m)][bs(l)][k(l)].
    """
    cells, users = np.nonzero(user_mask)
    return np.asarray(g)[cells[np.newaxis, :], cells[:, np.newaxis], users[:, np.newaxis]]


def allocation_from_links(link_powers: ArrayType, user_mask: np.ndarray) -> np.ndarray:
    """Scatter cell-major per-link powers back into a [n][k] allocation with zeros on padded slots."""
    allocation = np.zeros(shape=user_mask.shape)
    allocation[user_mask] = link_powers
    return allocation


def mean_rate_per_user(rates: np.ndarray, user_mask: np.ndarray) -> float:
    """Average rate of the real users of the network."""
    return float(np.sum(rates[user_mask]) / np.count_nonzero(user_mask))


class PowerControlEnv:
    """
    Episodic multi-cell downlink environment.

    Every `reset` draws a new user drop, new large-scale gains and fresh fading; within an episode the fading
    evolves with the Jakes correlation. One instance must be stepped by a single caller at a time.

    Parameters
    ----------
    topology_config : TopologyConfig
    env_config : EnvConfig
    seed : int, numpy.random.SeedSequence or numpy.random.Generator
        Seeds the environment's own random stream.
    norm_stats : NormalizationConstants, optional
    """

    def __init__(
        self,
        topology_config: TopologyConfig,
        env_config: EnvConfig,
        seed: Union[SeedType, np.random.Generator] = 0,
        norm_stats: NormalizationConstants = NormalizationConstants(),
    ):
        self.topology_config = topology_config
        self.env_config = env_config
        self.norm_stats = norm_stats
        self.rng = np.random.default_rng(seed)
        self.rho = jakes_rho(f_d=topology_config.doppler_hz, T_s=topology_config.slot_duration_s)

        self.topology: Optional[Topology] = None
        self.channel: Optional[ChannelState] = None
        self.step_index = 0
        self.done = True

    @property
    def n_cells(self) -> int:
        return self.topology_config.n_cells

    @property
    def users_per_cell(self) -> np.ndarray:
        return self.topology_config.get_users_per_cell()

    @property
    def observation_dim(self) -> int:
        return 3 + self.topology_config.neighbor_count

    @property
    def gains(self) -> np.ndarray:
        """Channel gains of the current slot."""
        return self.channel.gains

    @property
    def user_mask(self) -> np.ndarray:
        return self.topology.user_mask

    def reset(self) -> np.ndarray:
        """Start a new episode and return the initial observations, with previous powers and rates at zero."""
        self.topology = build_topology(config=self.topology_config, rng=self.rng)
        self.channel = initial_channel_state(
            topology=self.topology, config=self.topology_config, rng=self.rng, rho=self.rho
        )
        self.step_index = 0
        self.done = False

        zeros = np.zeros(shape=self.topology.user_mask.shape)
        return build_observations(
            topology=self.topology,
            g=self.channel.gains,
            prev_p=zeros,
            prev_rates=zeros,
            p_max=self.env_config.p_max_w,
            norm_stats=self.norm_stats,
        )

    def step(self, actions: ArrayType) -> EnvStep:
        """
        Apply one power level per user link, indexed [n][k].

        Rates and rewards are computed on the current channel, then the fading advances one slot and the next
        observations are built from the new channel together with this slot's powers and rates.
        """
        self._check_running()
        actions = np.asarray(actions)
        if actions.shape != self.topology.user_mask.shape:
            raise ValueError(
                f"Expected one action per user slot with shape {self.topology.user_mask.shape}! "
                f"Received shape of {actions.shape}."
            )
        powers = actions_to_powers(
            levels=actions,
            M=self.env_config.n_power_levels,
            P_max=self.env_config.p_max_w,
            user_mask=self.topology.user_mask,
        )
        return self.step_powers(powers=powers)

    def step_powers(self, powers: ArrayType) -> EnvStep:
        """Apply a continuous power allocation in watts, indexed [n][k]; padded slots are forced to zero."""
        self._check_running()
        user_mask = self.topology.user_mask
        powers = np.where(user_mask, np.asarray(powers, dtype=np.float64), 0.0)
        if np.any(powers < 0) or np.any(powers > self.env_config.p_max_w * (1 + 1e-12)):
            raise ValueError("Every transmit power must lie in [0, P_max]!")

        rate_matrix = rates(g=self.channel.gains, p=powers, noise=self.env_config.noise_w)
        rewards = np.array(
            [
                reward(n=cell, rates=rate_matrix, beta=self.env_config.beta, neighbors=neighbors)
                for cell, neighbors in enumerate(self.topology.neighbor_sets)
            ]
        )

        self.channel = step_fading(state=self.channel, rng=self.rng)
        self.step_index += 1
        self.done = self.step_index >= self.env_config.horizon

        observations = build_observations(
            topology=self.topology,
            g=self.channel.gains,
            prev_p=powers,
            prev_rates=rate_matrix,
            p_max=self.env_config.p_max_w,
            norm_stats=self.norm_stats,
        )
        return EnvStep(
            observations=observations,
            rewards=rewards,
            rates=rate_matrix,
            powers=powers,
            done=self.done,
            step_index=self.step_index,
        )

    def _check_running(self):
        if self.topology is None:
            raise RuntimeError("The environment must be reset before it is stepped!")
        if self.done:
            raise RuntimeError(
                f"The episode ended after {self.env_config.horizon} steps; call reset() to start a new one."
            )
