"""Cell topology, large-scale gains and temporally correlated Rayleigh fading."""
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import j0

from ..utils import ArrayType, UsersPerCellType, check_finite_scalar

PATH_LOSS_INTERCEPT_DB = 120.9
PATH_LOSS_SLOPE_DB = 37.6


def dbm_to_watts(power_dbm: float) -> float:
    """Convert a power in dBm to watts."""
    return 10.0 ** ((power_dbm - 30.0) / 10.0)


def watts_to_dbm(power_watts: float) -> float:
    """Convert a power in watts to dBm."""
    return 10.0 * math.log10(power_watts) + 30.0


@dataclass(frozen=True)
class TopologyConfig:
    """
    Geometry and propagation parameters of the square cell grid.

    Parameters
    ----------
    grid_side : int, default: 5
        Cells are laid on a `grid_side` x `grid_side` square grid, so there are `grid_side ** 2` cells.
    users_per_cell : int or list of ints, default: 4
        Either a single count shared by all cells or one count per cell.
    inter_site_distance_m : float, default: 500.0
        Side length of each square cell, which is also the distance between adjacent base stations.
    neighbor_count : int, default: 4
        Number of nearest cells each base station observes. Clamped to the number of other cells.
    d_min_m : float, default: 10.0
        Users are never dropped closer than this to their serving base station.
    shadowing_sigma_db : float, default: 8.0
        Standard deviation of the log-normal shadowing.
    doppler_hz : float, default: 10.0
    slot_duration_s : float, default: 0.02
    """

    grid_side: int = 5
    users_per_cell: UsersPerCellType = 4
    inter_site_distance_m: float = 500.0
    neighbor_count: int = 4
    d_min_m: float = 10.0
    shadowing_sigma_db: float = 8.0
    doppler_hz: float = 10.0
    slot_duration_s: float = 0.02

    def __post_init__(self):
        if not isinstance(self.users_per_cell, (int, np.integer)):
            object.__setattr__(self, "users_per_cell", tuple(int(count) for count in self.users_per_cell))
        if self.grid_side < 1:
            raise ValueError(f"'grid_side' must be at least 1! Received {self.grid_side}.")
        if self.neighbor_count < 0:
            raise ValueError(f"'neighbor_count' must be nonnegative! Received {self.neighbor_count}.")
        if self.inter_site_distance_m <= 0:
            raise ValueError(f"'inter_site_distance_m' must be positive! Received {self.inter_site_distance_m}.")
        if not 0 < self.d_min_m < self.inter_site_distance_m / 2:
            raise ValueError(
                f"'d_min_m' must lie in (0, inter_site_distance_m / 2)! Received {self.d_min_m} for an inter-site "
                f"distance of {self.inter_site_distance_m}."
            )
        if self.shadowing_sigma_db < 0:
            raise ValueError(f"'shadowing_sigma_db' must be nonnegative! Received {self.shadowing_sigma_db}.")
        counts = self.get_users_per_cell()
        if np.any(counts < 1):
            raise ValueError(f"Every cell must serve at least one user! Received {counts.tolist()}.")

    @property
    def n_cells(self) -> int:
        return self.grid_side**2

    def get_users_per_cell(self) -> np.ndarray:
        """Return the user count k_i of every cell as an integer array of length `n_cells`."""
        if isinstance(self.users_per_cell, (int, np.integer)):
            return np.full(shape=self.n_cells, fill_value=int(self.users_per_cell), dtype=int)
        counts = np.asarray(self.users_per_cell, dtype=int)
        if counts.shape != (self.n_cells,):
            raise ValueError(
                f"'users_per_cell' lists {counts.size} cells but the grid has {self.n_cells} cells!"
            )
        return counts


@dataclass(frozen=True, eq=False)
class Topology:
    """
    Base station and user placement of one episode.

    User slots are padded to the largest cell; `user_mask[j, k]` marks the slots that hold a real user.
    """

    n_cells: int
    users_per_cell: np.ndarray
    grid_side: int
    inter_site_distance: float
    bs_positions: np.ndarray
    user_positions: List[np.ndarray]
    neighbor_sets: Tuple[Tuple[int, ...], ...]
    neighbor_count: int = field(default=0)

    @property
    def max_users(self) -> int:
        return int(np.max(self.users_per_cell))

    @property
    def n_links(self) -> int:
        return int(np.sum(self.users_per_cell))

    @property
    def user_mask(self) -> np.ndarray:
        return np.arange(self.max_users)[np.newaxis, :] < self.users_per_cell[:, np.newaxis]

    def cell_bounds(self, cell: int) -> Tuple[np.ndarray, np.ndarray]:
        """Lower-left and upper-right corners of the square served by `cell`."""
        half_side = self.inter_site_distance / 2.0
        return self.bs_positions[cell] - half_side, self.bs_positions[cell] + half_side


@dataclass(frozen=True, eq=False)
class ChannelState:
    """Small-scale fading `h`, large-scale gains `alpha` (both indexed [n][j][k]) and the correlation `rho`."""

    h: np.ndarray
    alpha: np.ndarray
    rho: float

    def __post_init__(self):
        if abs(self.rho) > 1:
            raise ValueError(f"The temporal correlation must satisfy |rho| <= 1! Received {self.rho}.")
        if self.h.shape != self.alpha.shape:
            raise ValueError(f"Shape mismatch between h {self.h.shape} and alpha {self.alpha.shape}.")

    @property
    def gains(self) -> np.ndarray:
        """Channel gains g = |h|^2 * alpha."""
        return np.abs(self.h) ** 2 * self.alpha


def bessel_j0(x: float) -> float:
    """
    Zeroth-order Bessel function of the first kind.

    Parameters
    ----------
    x : float

    Returns
    -------
    float
        J0(x), accurate to double precision.
    """
    x = check_finite_scalar(x, name="x")
    return float(j0(x))


def jakes_rho(f_d: float, T_s: float) -> float:
    """
    Slot-to-slot correlation of the Jakes fading model, J0(2 pi f_d T_s).

    Parameters
    ----------
    f_d : float
        Maximum Doppler frequency in Hz.
    T_s : float
        Slot duration in seconds.
    """
    f_d = check_finite_scalar(f_d, name="f_d")
    T_s = check_finite_scalar(T_s, name="T_s")
    if f_d < 0:
        raise ValueError(f"The Doppler frequency must be nonnegative! Received {f_d}.")
    if T_s <= 0:
        raise ValueError(f"The slot duration must be positive! Received {T_s}.")
    return bessel_j0(2.0 * math.pi * f_d * T_s)


def compute_neighbor_sets(bs_positions: ArrayType, neighbor_count: int) -> Tuple[Tuple[int, ...], ...]:
    """
    Return, for every base station, the indices of its `neighbor_count` nearest other cells.

    Each set is ordered by ascending base-station distance with ties broken by ascending cell index,
    and holds min(neighbor_count, n_cells - 1) entries.
    """
    bs_positions = np.asarray(bs_positions, dtype=np.float64)
    n_cells = bs_positions.shape[0]
    count = min(neighbor_count, n_cells - 1)
    distances = np.linalg.norm(bs_positions[:, np.newaxis, :] - bs_positions[np.newaxis, :, :], axis=-1)
    distances = np.round(distances, decimals=6)  # grid coordinates are exact; this only guards the tie-break
    neighbor_sets = []
    for cell in range(n_cells):
        others = [other for other in range(n_cells) if other != cell]
        others.sort(key=lambda other: (distances[cell, other], other))
        neighbor_sets.append(tuple(others[:count]))
    return tuple(neighbor_sets)


def _drop_users(center: np.ndarray, n_users: int, side: float, d_min: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform user drop inside the square around `center`, rejecting the disc of radius `d_min`."""
    positions = np.empty(shape=(n_users, 2))
    filled = 0
    while filled < n_users:
        candidate = center + rng.uniform(low=-side / 2.0, high=side / 2.0, size=2)
        if np.linalg.norm(candidate - center) >= d_min:
            positions[filled] = candidate
            filled += 1
    return positions


def build_topology(config: TopologyConfig, rng: np.random.Generator) -> Topology:
    """
    Place base stations at the centers of an origin-centered square grid and drop users in their cells.

    Parameters
    ----------
    config : TopologyConfig
    rng : numpy.random.Generator
        Stream used for the user drop.

    Returns
    -------
    Topology
    """
    side = config.grid_side
    inter_site_distance = config.inter_site_distance_m
    n_cells = config.n_cells
    users_per_cell = config.get_users_per_cell()

    offsets = (np.arange(side) - (side - 1) / 2.0) * inter_site_distance
    rows, cols = np.divmod(np.arange(n_cells), side)
    bs_positions = np.stack([offsets[cols], offsets[rows]], axis=1)

    user_positions = [
        _drop_users(
            center=bs_positions[cell],
            n_users=users_per_cell[cell],
            side=inter_site_distance,
            d_min=config.d_min_m,
            rng=rng,
        )
        for cell in range(n_cells)
    ]

    return Topology(
        n_cells=n_cells,
        users_per_cell=users_per_cell,
        grid_side=side,
        inter_site_distance=inter_site_distance,
        bs_positions=bs_positions,
        user_positions=user_positions,
        neighbor_sets=compute_neighbor_sets(bs_positions=bs_positions, neighbor_count=config.neighbor_count),
        neighbor_count=config.neighbor_count,
    )


def path_loss_db(distance_m: ArrayType) -> np.ndarray:
    """Macro-cell path loss 120.9 + 37.6 log10(d / 1 km) in dB."""
    return PATH_LOSS_INTERCEPT_DB + PATH_LOSS_SLOPE_DB * np.log10(np.asarray(distance_m, dtype=np.float64) / 1000.0)


def link_distances(topology: Topology) -> np.ndarray:
    """Distances from every base station n to every user k of every cell j, indexed [n][j][k]; NaN for padding."""
    distances = np.full(shape=(topology.n_cells, topology.n_cells, topology.max_users), fill_value=np.nan)
    for cell, positions in enumerate(topology.user_positions):
        distances[:, cell, : positions.shape[0]] = np.linalg.norm(
            topology.bs_positions[:, np.newaxis, :] - positions[np.newaxis, :, :], axis=-1
        )
    return distances


def large_scale_gains(
    topology: Topology,
    rng: np.random.Generator,
    shadowing_sigma_db: float = 8.0,
    d_min_m: float = 10.0,
) -> np.ndarray:
    """
    Path loss and log-normal shadowing of every link, in linear scale.

    Parameters
    ----------
    topology : Topology
    rng : numpy.random.Generator
        Stream used for the shadowing draws; one draw per link slot, padding included.
    shadowing_sigma_db : float, default: 8.0
    d_min_m : float, default: 10.0
        Every real link must be at least this long.

    Returns
    -------
    alpha : numpy.ndarray
        Tensor indexed [n][j][k]; zero on padded user slots.
    """
    distances = link_distances(topology)
    real_links = ~np.isnan(distances)
    if np.any(distances[real_links] < d_min_m * (1 - 1e-12)):
        raise ValueError(f"All base station to user distances must be at least {d_min_m} m!")

    shadowing_db = rng.normal(loc=0.0, scale=shadowing_sigma_db, size=distances.shape)
    alpha = np.zeros(shape=distances.shape)
    alpha[real_links] = 10.0 ** ((-path_loss_db(distances[real_links]) + shadowing_db[real_links]) / 10.0)
    return alpha


def init_fading(topology: Topology, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance circularly symmetric complex Gaussian fading for every link slot, indexed [n][j][k]."""
    shape = (topology.n_cells, topology.n_cells, topology.max_users)
    return _complex_gaussian(shape=shape, rng=rng)


def _complex_gaussian(shape: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    real = rng.standard_normal(size=shape)
    imag = rng.standard_normal(size=shape)
    return (real + 1j * imag) / math.sqrt(2.0)


def step_fading(state: ChannelState, rng: np.random.Generator) -> ChannelState:
    """
    Advance the first-order Gauss-Markov fading process by one slot.

    h_t = rho * h_{t-1} + sqrt(1 - rho^2) * e_t with a fresh unit-variance innovation e_t per link.
    The large-scale gains are carried over unchanged.
    """
    innovation = _complex_gaussian(shape=state.h.shape, rng=rng)
    h = state.rho * state.h + math.sqrt(1.0 - state.rho**2) * innovation
    return replace(state, h=h)


def initial_channel_state(
    topology: Topology, config: TopologyConfig, rng: np.random.Generator, rho: Optional[float] = None
) -> ChannelState:
    """Draw the large-scale gains and the initial fading of a new episode."""
    alpha = large_scale_gains(
        topology=topology, rng=rng, shadowing_sigma_db=config.shadowing_sigma_db, d_min_m=config.d_min_m
    )
    h = init_fading(topology=topology, rng=rng)
    if rho is None:
        rho = jakes_rho(f_d=config.doppler_hz, T_s=config.slot_duration_s)
    return ChannelState(h=h, alpha=alpha, rho=rho)
