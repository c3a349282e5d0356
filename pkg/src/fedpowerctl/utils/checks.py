from numbers import Real

import numpy as np

from .types import ArrayType


def check_finite_scalar(value: Real, name: str) -> float:
    """Return `value` as a float, raising a ValueError if it is NaN or infinite."""
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"'{name}' must be finite! Received {value}.")
    return value


def check_probability_vector(probabilities: ArrayType, tolerance: float = 1e-9) -> np.ndarray:
    """Ensure a vector is a valid discrete distribution up to `tolerance` and return it as an array."""
    probabilities = np.asarray(probabilities, dtype=np.float64)
    if probabilities.ndim != 1:
        raise ValueError(f"This function expects a one-dimensional array! Received shape of {probabilities.shape}.")
    if np.any(probabilities < 0):
        raise ValueError("Weights must be nonnegative!")
    if abs(probabilities.sum() - 1.0) > tolerance:
        raise ValueError(f"Weights must sum to 1 within {tolerance}! Received a sum of {probabilities.sum()!r}.")
    return probabilities
