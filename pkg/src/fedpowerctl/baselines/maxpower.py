import numpy as np

from ..environment import Topology


def max_power(topology: Topology, P_max: float) -> np.ndarray:
    """Every real user link transmits at `P_max`; padded user slots stay at zero."""
    if not P_max > 0:
        raise ValueError(f"'P_max' must be positive! Received {P_max}.")
    return np.where(topology.user_mask, float(P_max), 0.0)
