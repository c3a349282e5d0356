"""
Feed-forward rectifier networks with the two analytic gradients the learners need, and Adam.

Parameters are always float64. A network can be viewed as a flat `WeightVector`, which is what the learners
optimize, the server averages and the transport serializes.
"""
import hashlib
from dataclasses import dataclass, replace
from typing import List, Sequence, Tuple, Union

import numpy as np

from ..utils import ArrayType

_HASH_BYTES = 8


def parameter_count(layer_dims: Sequence[int]) -> int:
    """Number of weights and biases of a network with the given layer dimensions."""
    return int(sum((fan_in + 1) * fan_out for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:])))


def layout_hash(layer_dims: Sequence[int]) -> int:
    """Stable 64-bit fingerprint of a parameter layout."""
    descriptor = "mlp:" + ",".join(str(int(dim)) for dim in layer_dims)
    digest = hashlib.sha256(descriptor.encode("ascii")).digest()
    return int.from_bytes(digest[:_HASH_BYTES], byteorder="little")


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Flat view of all network parameters, bound to the layer layout it was taken from."""

    values: np.ndarray
    layer_dims: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "layer_dims", tuple(int(dim) for dim in self.layer_dims))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        expected = parameter_count(self.layer_dims)
        if self.values.shape != (expected,):
            raise ValueError(
                f"The layout {self.layer_dims} holds {expected} parameters! Received shape of {self.values.shape}."
            )

    @property
    def layout_hash(self) -> int:
        return layout_hash(self.layer_dims)

    def __len__(self) -> int:
        return self.values.shape[0]

    def to_bytes(self) -> bytes:
        """Layout hash as little-endian uint64 followed by the values as little-endian float64."""
        header = np.array([self.layout_hash], dtype="<u8").tobytes()
        return header + self.values.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, payload: bytes, layer_dims: Sequence[int]) -> "WeightVector":
        """
        Decode a payload produced by `to_bytes`, rejecting anything that does not match `layer_dims`.

        Raises
        ------
        ValueError
            If the layout hash or the length differs from the expected layout, or a value is not finite.
        """
        expected_length = _HASH_BYTES + 8 * parameter_count(layer_dims)
        if len(payload) != expected_length:
            raise ValueError(f"Corrupted payload: expected {expected_length} bytes, received {len(payload)}.")
        received_hash = int(np.frombuffer(payload[:_HASH_BYTES], dtype="<u8")[0])
        if received_hash != layout_hash(layer_dims):
            raise ValueError(
                f"Corrupted payload: layout hash {received_hash:#018x} does not match {tuple(layer_dims)}."
            )
        values = np.frombuffer(payload[_HASH_BYTES:], dtype="<f8").astype(np.float64)
        if not np.all(np.isfinite(values)):
            raise ValueError("Corrupted payload: non-finite parameter values.")
        return cls(values=values, layer_dims=tuple(layer_dims))


@dataclass(eq=False)
class Mlp:
    """
    Affine layers with rectifiers on the hidden layers and an identity output.

    `weights[i]` has shape (fan_in, fan_out) and `biases[i]` shape (fan_out,).
    """

    weights: List[np.ndarray]
    biases: List[np.ndarray]

    @property
    def layer_dims(self) -> Tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(weight.shape[1] for weight in self.weights)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[1]

    def flatten(self) -> WeightVector:
        pieces = []
        for weight, bias in zip(self.weights, self.biases):
            pieces.extend([weight.ravel(), bias.ravel()])
        return WeightVector(values=np.concatenate(pieces), layer_dims=self.layer_dims)

    @classmethod
    def restore(cls, vector: WeightVector) -> "Mlp":
        weights, biases = [], []
        offset = 0
        for fan_in, fan_out in zip(vector.layer_dims[:-1], vector.layer_dims[1:]):
            weights.append(vector.values[offset : offset + fan_in * fan_out].reshape(fan_in, fan_out).copy())
            offset += fan_in * fan_out
            biases.append(vector.values[offset : offset + fan_out].copy())
            offset += fan_out
        return cls(weights=weights, biases=biases)

    def copy(self) -> "Mlp":
        return Mlp(weights=[weight.copy() for weight in self.weights], biases=[bias.copy() for bias in self.biases])


@dataclass(frozen=True, eq=False)
class AdamState:
    """Moment estimates and hyperparameters of the Adam optimizer."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n_parameters: int, lr: float = 1e-3) -> "AdamState":
        return cls(m=np.zeros(shape=n_parameters), v=np.zeros(shape=n_parameters), lr=lr)


def network_dims(input_dim: int, hidden_layers: Sequence[int], output_dim: int) -> Tuple[int, ...]:
    return (int(input_dim),) + tuple(int(width) for width in hidden_layers) + (int(output_dim),)


def init_weights(layer_dims: Sequence[int], rng: np.random.Generator) -> Mlp:
    """He-uniform weights drawn from U(-sqrt(6 / fan_in), sqrt(6 / fan_in)) and zero biases."""
    if len(layer_dims) < 2 or any(dim < 1 for dim in layer_dims):
        raise ValueError(f"Invalid layer dimensions {tuple(layer_dims)}.")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(low=-bound, high=bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(shape=fan_out))
    return Mlp(weights=weights, biases=biases)


def _forward_pass(net: Mlp, batch: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Return the input of every layer and the pre-activation of every layer."""
    inputs, pre_activations = [], []
    activation = batch
    last_layer = len(net.weights) - 1
    for index, (weight, bias) in enumerate(zip(net.weights, net.biases)):
        inputs.append(activation)
        pre_activation = activation @ weight + bias
        pre_activations.append(pre_activation)
        activation = pre_activation if index == last_layer else np.maximum(pre_activation, 0.0)
    return inputs, pre_activations


def _as_batch(net: Mlp, x: ArrayType) -> np.ndarray:
    batch = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if batch.ndim != 2 or batch.shape[1] != net.input_dim:
        raise ValueError(
            f"The network expects {net.input_dim} input features! Received shape of {np.shape(x)}."
        )
    return batch


def _backward(net: Mlp, inputs: List[np.ndarray], pre_activations: List[np.ndarray], output_grad: np.ndarray):
    """Backpropagate d(objective)/d(logits), summed over the batch rows, into a flat gradient."""
    n_layers = len(net.weights)
    weight_grads, bias_grads = [None] * n_layers, [None] * n_layers
    delta = output_grad
    for index in reversed(range(n_layers)):
        weight_grads[index] = inputs[index].T @ delta
        bias_grads[index] = delta.sum(axis=0)
        if index > 0:
            delta = (delta @ net.weights[index].T) * (pre_activations[index - 1] > 0)
    pieces = []
    for weight_grad, bias_grad in zip(weight_grads, bias_grads):
        pieces.extend([weight_grad.ravel(), bias_grad.ravel()])
    return WeightVector(values=np.concatenate(pieces), layer_dims=net.layer_dims)


def forward(net: Mlp, x: ArrayType) -> np.ndarray:
    """
    Logits of the network for one feature vector, or for every row of a batch.

    Parameters
    ----------
    net : Mlp
    x : array
        Shape (input_dim,) or (batch, input_dim).

    Returns
    -------
    numpy.ndarray
        Shape (output_dim,) or (batch, output_dim).
    """
    batch = _as_batch(net, x)
    inputs, pre_activations = _forward_pass(net, batch)
    logits = pre_activations[-1]
    return logits[0] if np.ndim(x) == 1 else logits


def softmax(logits: ArrayType) -> np.ndarray:
    """Max-subtracted softmax along the last axis."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = np.exp(logits - np.max(logits, axis=-1, keepdims=True))
    return shifted / np.sum(shifted, axis=-1, keepdims=True)


def log_softmax(logits: ArrayType) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def td_loss_gradient_batch(
    net: Mlp, states: ArrayType, actions: ArrayType, targets: ArrayType
) -> Tuple[WeightVector, float]:
    """
    Mean squared TD error over the rows and its gradient.

    The targets are constants: no gradient flows through the bootstrap term.
    """
    batch = _as_batch(net, states)
    actions = np.asarray(actions, dtype=int).reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    rows = np.arange(batch.shape[0])

    inputs, pre_activations = _forward_pass(net, batch)
    q_taken = pre_activations[-1][rows, actions]
    errors = targets - q_taken
    output_grad = np.zeros_like(pre_activations[-1])
    output_grad[rows, actions] = -2.0 * errors / batch.shape[0]
    gradient = _backward(net, inputs, pre_activations, output_grad)
    return gradient, float(np.mean(errors**2))


def grad_td_loss(net: Mlp, s: ArrayType, a: int, target: float) -> Tuple[WeightVector, float]:
    """Gradient of (target - Q(s, a))^2 with respect to all parameters, and the loss value."""
    if not np.isfinite(target):
        raise ValueError(f"The TD target must be finite! Received {target}.")
    if not 0 <= a < net.output_dim:
        raise ValueError(f"The action must be an index in [0, {net.output_dim - 1}]! Received {a}.")
    return td_loss_gradient_batch(net, states=[s], actions=[a], targets=[target])


def weighted_log_policy_gradient(
    net: Mlp, states: ArrayType, actions: ArrayType, weights: ArrayType
) -> Tuple[WeightVector, np.ndarray]:
    """
    Sum over rows of weight_i * grad log pi(a_i | s_i), and the log-probabilities of the taken actions.

    At the logits the gradient of log pi(a | s) is onehot(a) - softmax(logits).
    """
    batch = _as_batch(net, states)
    actions = np.asarray(actions, dtype=int).reshape(-1)
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    rows = np.arange(batch.shape[0])

    inputs, pre_activations = _forward_pass(net, batch)
    logits = pre_activations[-1]
    output_grad = -softmax(logits)
    output_grad[rows, actions] += 1.0
    output_grad *= weights[:, np.newaxis]
    gradient = _backward(net, inputs, pre_activations, output_grad)
    return gradient, log_softmax(logits)[rows, actions]


def grad_log_policy(net: Mlp, s: ArrayType, a: int) -> Tuple[WeightVector, float]:
    """Gradient of log softmax(forward(s))[a] with respect to all parameters, and the log-probability."""
    if not 0 <= a < net.output_dim:
        raise ValueError(f"The action must be an index in [0, {net.output_dim - 1}]! Received {a}.")
    gradient, log_probabilities = weighted_log_policy_gradient(net, states=[s], actions=[a], weights=[1.0])
    return gradient, float(log_probabilities[0])


def _values(vector: Union[WeightVector, ArrayType]) -> np.ndarray:
    return vector.values if isinstance(vector, WeightVector) else np.asarray(vector, dtype=np.float64)


def adam_step(
    params: Union[WeightVector, ArrayType], grad: Union[WeightVector, ArrayType], state: AdamState
) -> Tuple[np.ndarray, AdamState]:
    """
    One bias-corrected Adam descent step.

    Callers maximizing an objective pass the negated gradient.

    Returns
    -------
    params : numpy.ndarray
        Updated parameter values.
    state : AdamState
        Updated moments with the step counter incremented.
    """
    params, grad = _values(params), _values(grad)
    if params.shape != grad.shape or state.m.shape != params.shape:
        raise ValueError(
            f"Length mismatch between parameters {params.shape}, gradient {grad.shape} and optimizer {state.m.shape}."
        )
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad**2
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    updated = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return updated, replace(state, m=m, v=v, t=t)
