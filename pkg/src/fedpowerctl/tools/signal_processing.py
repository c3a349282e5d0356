from typing import Optional

import numpy as np

from ..utils import ArrayType


def smooth(series: ArrayType, window: int) -> np.ndarray:
    """
    Reduce a series to the means of consecutive non-overlapping blocks.

    Parameters
    ----------
    series : array
        A one-dimensional series, e.g. the per-episode mean rate of a training run.
    window : int
        Block length. A trailing partial block is averaged over its actual length.

    Returns
    -------
    smoothed : numpy.ndarray
        ceil(len(series) / window) block means.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1:
        raise ValueError(f"This function expects a one-dimensional array! Received shape of {series.shape}.")
    if int(window) != window or window < 1:
        raise ValueError(f"The smoothing window must be a positive integer! Received {window}.")

    block_starts = np.arange(0, series.shape[0], int(window))
    if block_starts.shape[0] == 0:
        return np.zeros(shape=0)
    block_lengths = np.diff(np.append(block_starts, series.shape[0]))
    return np.add.reduceat(series, block_starts) / block_lengths


def convergence_episode(
    series: ArrayType, window: int, fraction: float = 0.9, final_window: Optional[int] = None
) -> int:
    """
    First episode of the first block whose mean reaches `fraction` of the final level.

    Parameters
    ----------
    series : array
        Per-episode values of a learning curve.
    window : int
        Block length used to smooth the curve before the comparison.
    fraction : float, default: 0.9
    final_window : int, optional
        Number of trailing episodes whose mean defines the final level.
        Defaults to the last block of the smoothed curve.
    """
    smoothed = smooth(series, window=window)
    if smoothed.shape[0] == 0:
        raise ValueError("Cannot locate the convergence of an empty series!")
    if final_window is None:
        final_level = smoothed[-1]
    else:
        if int(final_window) != final_window or final_window < 1:
            raise ValueError(f"The final window must be a positive integer! Received {final_window}.")
        final_level = np.mean(np.asarray(series, dtype=np.float64)[-int(final_window) :])
    reached = np.flatnonzero(smoothed >= fraction * final_level)
    return int(reached[0] * window) if reached.shape[0] else len(smoothed) * int(window)
