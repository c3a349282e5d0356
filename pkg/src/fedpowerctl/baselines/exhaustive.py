from itertools import islice, product
from typing import Optional, Tuple

import numpy as np

from ..environment import allocation_from_links, link_gain_matrix

MAX_EXHAUSTIVE_LINKS = 4
_CHUNK_SIZE = 65536


def brute_force_power(
    g: np.ndarray,
    noise: float,
    P_max: float,
    grid_points: int,
    user_mask: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, float]:
    """
    Exhaustive search of the best sum rate over a uniform power grid shared by every link.

    The grid runs from 0 to `P_max` inclusive. Combinations are visited in lexicographic order and only a strictly
    better sum rate replaces the incumbent, so ties resolve to the lexicographically smallest allocation.

    Parameters
    ----------
    g : numpy.ndarray
        Gain tensor indexed [transmitting cell][receiving cell][user].
    noise : float
    P_max : float
    grid_points : int
        Number of grid values per link, at least 2.
    user_mask : numpy.ndarray, optional

    Returns
    -------
    allocation : numpy.ndarray
        Powers indexed [n][k].
    sum_rate : float
    """
    g = np.asarray(g, dtype=np.float64)
    if user_mask is None:
        user_mask = np.ones(shape=(g.shape[0], g.shape[2]), dtype=bool)
    G = link_gain_matrix(g, user_mask)
    n_links = G.shape[0]
    if not 1 <= n_links <= MAX_EXHAUSTIVE_LINKS:
        raise ValueError(
            f"Exhaustive search supports 1 to {MAX_EXHAUSTIVE_LINKS} links! Received {n_links} links."
        )
    if grid_points < 2:
        raise ValueError(f"The grid needs at least two points! Received {grid_points}.")

    grid = np.linspace(0.0, P_max, grid_points)
    direct = np.diag(G)
    cross = G - np.diag(direct)
    best_rate, best_indices = -np.inf, None
    combinations = product(range(grid_points), repeat=n_links)
    while True:
        chunk = np.array(list(islice(combinations, _CHUNK_SIZE)), dtype=int).reshape(-1, n_links)
        if chunk.shape[0] == 0:
            break
        powers = grid[chunk]
        sinr = direct * powers / (noise + powers @ cross.T)
        sum_rates = np.sum(np.log2(1.0 + sinr), axis=1)
        index = int(np.argmax(sum_rates))
        if sum_rates[index] > best_rate:
            best_rate, best_indices = float(sum_rates[index]), chunk[index]

    return allocation_from_links(grid[best_indices], user_mask), best_rate
