"""Scalar weighted-MMSE power allocation with unit rate weights and full channel knowledge."""
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..environment import allocation_from_links, link_gain_matrix
from ..utils import ArrayType, OptionalArrayType

MSE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class WmmseState:
    """
    Iterate of the WMMSE block-coordinate ascent over the active links.

    Attributes
    ----------
    v : numpy.ndarray
        Transmit amplitudes in sqrt(watts), within [0, sqrt(P_max)].
    u : numpy.ndarray
        Receiver scalars.
    w : numpy.ndarray
        MSE weights, at least 1.
    iteration : int
    objective_trace : tuple of floats
        Sum rate of the initial point and of every iterate.
    converged : bool
    """

    v: np.ndarray
    u: np.ndarray
    w: np.ndarray
    iteration: int
    objective_trace: Tuple[float, ...]
    converged: bool

    @property
    def powers(self) -> np.ndarray:
        return self.v**2


def link_sum_rate(G: ArrayType, powers: ArrayType, noise: float) -> float:
    """Sum rate over flattened links, with G[l, m] the gain from the transmission of link m to receiver l."""
    G = np.asarray(G, dtype=np.float64)
    powers = np.asarray(powers, dtype=np.float64)
    direct = np.diag(G)
    interference = (G - np.diag(direct)) @ powers
    return float(np.sum(np.log2(1.0 + direct * powers / (noise + interference))))


def _receivers_and_weights(a: np.ndarray, v: np.ndarray, noise: float) -> Tuple[np.ndarray, np.ndarray]:
    direct = np.diag(a)
    received = (a**2) @ (v**2) + noise
    u = direct * v / received
    w = 1.0 / np.maximum(1.0 - u * direct * v, MSE_FLOOR)
    return u, w


def wmmse_iteration(
    G: ArrayType, v: ArrayType, P_max: float, noise: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    One WMMSE pass from amplitudes `v`: receivers u, weights w, then the clamped amplitude update.

    Returns
    -------
    v : numpy.ndarray
    u : numpy.ndarray
    w : numpy.ndarray
    """
    a = np.sqrt(np.asarray(G, dtype=np.float64))
    v = np.asarray(v, dtype=np.float64)
    u, w = _receivers_and_weights(a=a, v=v, noise=noise)

    numerator = w * u * np.diag(a)
    denominator = (a**2).T @ (w * u**2)
    unclamped = np.divide(numerator, denominator, out=np.zeros_like(numerator), where=denominator > 0)
    return np.clip(unclamped, 0.0, np.sqrt(P_max)), u, w


def wmmse_links(
    G: ArrayType,
    P_max: float,
    noise: float,
    tol: float = 1e-5,
    max_iter: int = 500,
    v_init: OptionalArrayType = None,
) -> WmmseState:
    """
    Run WMMSE on an L x L link gain matrix, starting from full power unless `v_init` is given.

    Stops when no amplitude moves by `tol` or more. When `max_iter` is reached first, a warning is emitted and the
    iterate with the best sum rate is returned with `converged=False`.
    """
    if not tol > 0:
        raise ValueError(f"'tol' must be positive! Received {tol}.")
    if not noise > 0:
        raise ValueError(f"The noise power must be positive! Received {noise}.")
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError(f"The link gain matrix must be square! Received shape of {G.shape}.")

    v = np.full(shape=G.shape[0], fill_value=np.sqrt(P_max)) if v_init is None else np.asarray(v_init, dtype=float)
    trace = [link_sum_rate(G, powers=v**2, noise=noise)]
    best_v, best_rate = v, trace[0]
    u, w = _receivers_and_weights(a=np.sqrt(G), v=v, noise=noise)
    for iteration in range(1, max_iter + 1):
        v_next, u, w = wmmse_iteration(G, v=v, P_max=P_max, noise=noise)
        trace.append(link_sum_rate(G, powers=v_next**2, noise=noise))
        if trace[-1] >= best_rate:
            best_v, best_rate = v_next, trace[-1]
        step = np.max(np.abs(v_next - v), initial=0.0)
        v = v_next
        if step < tol:
            return WmmseState(v=v, u=u, w=w, iteration=iteration, objective_trace=tuple(trace), converged=True)

    warnings.warn(f"WMMSE did not converge within {max_iter} iterations; returning the best iterate.")
    return WmmseState(v=best_v, u=u, w=w, iteration=max_iter, objective_trace=tuple(trace), converged=False)


def wmmse(
    g: np.ndarray,
    P_max: float,
    noise: float,
    tol: float = 1e-5,
    max_iter: int = 500,
    user_mask: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    WMMSE power allocation for the gain tensor of one slot.

    Parameters
    ----------
    g : numpy.ndarray
        Gain tensor indexed [transmitting cell][receiving cell][user].
    P_max : float
        Maximum transmit power in watts.
    noise : float
        Noise power in watts.
    tol : float, default: 1e-5
        Convergence threshold on the amplitude change.
    max_iter : int, default: 500
    user_mask : numpy.ndarray, optional
        Real user slots, indexed [n][k]. Defaults to every slot of `g`.

    Returns
    -------
    numpy.ndarray
        Powers in watts indexed [n][k], zero on padded slots.
    """
    g = np.asarray(g, dtype=np.float64)
    if user_mask is None:
        user_mask = np.ones(shape=(g.shape[0], g.shape[2]), dtype=bool)
    state = wmmse_links(link_gain_matrix(g, user_mask), P_max=P_max, noise=noise, tol=tol, max_iter=max_iter)
    return allocation_from_links(np.minimum(state.powers, P_max), user_mask)
