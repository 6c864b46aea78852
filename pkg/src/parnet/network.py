"""Sequential feedforward network trained by backpropagation.

Batches are column-major: an input batch is ``features x batch`` and every
layer computes ``z = W x + b`` followed by ``x' = act(z)``. Gradients are
averaged over the batch columns, so the learning rate does not depend on
the batch size.
"""

import copy
import struct
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import linalg
from . import metrics as _metrics
from .activations import SOFTMAX, ActivationKind, activate, activate_derivative
from .exceptions import ContractError, ShapeError, ValidationError
from .losses import EPSILON, cost_cross_entropy

WEIGHT_INITS = ("scaled", "standard")


@dataclass
class NetworkConfig:
    """Structure and training hyperparameters of one network.

    ``weight_init="standard"`` draws every weight and bias from N(0, 1);
    ``"scaled"`` divides those draws by ``sqrt(fan_in)``. ``seed="time"``
    seeds from the clock (non-reproducible).
    """

    layer_sizes: tuple = (784, 256, 10)
    activations: tuple = ("relu", "softmax")
    learning_rate: float = 0.05
    batch_size: int = 50
    epochs: int = 20
    seed: object = 0
    leaky_slope: float = 0.01
    weight_init: str = "scaled"

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        self.activations = tuple(str(a) for a in self.activations)

    def violations(self, n_train=None):
        problems = []
        if len(self.layer_sizes) < 2:
            problems.append("layer_sizes needs at least an input and an output size")
        if any(s < 1 for s in self.layer_sizes):
            problems.append(f"layer sizes must be positive, got {list(self.layer_sizes)}")
        if len(self.activations) != len(self.layer_sizes) - 1:
            problems.append(
                f"expected {len(self.layer_sizes) - 1} activations, got {len(self.activations)}"
            )
        kinds = []
        for name in self.activations:
            try:
                kinds.append(ActivationKind(name, self.leaky_slope))
            except ValidationError as exc:
                problems.extend(exc.violations)
        if any(k.name == SOFTMAX for k in kinds[:-1]):
            problems.append("softmax is only allowed on the output layer")
        if not self.learning_rate > 0:
            problems.append(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            problems.append(f"batch_size must be positive, got {self.batch_size}")
        elif n_train is not None and self.batch_size > n_train:
            problems.append(f"batch_size {self.batch_size} exceeds training-set size {n_train}")
        if self.epochs < 1:
            problems.append(f"epochs must be positive, got {self.epochs}")
        if self.seed != "time" and not (isinstance(self.seed, (int, np.integer)) and self.seed >= 0):
            problems.append(f"seed must be a non-negative integer or 'time', got {self.seed!r}")
        if self.weight_init not in WEIGHT_INITS:
            problems.append(f"weight_init must be one of {WEIGHT_INITS}, got {self.weight_init!r}")
        return problems

    def validate(self, n_train=None):
        problems = self.violations(n_train)
        if problems:
            raise ValidationError(problems)
        return self

    def activation_kinds(self):
        return [ActivationKind(a, self.leaky_slope) for a in self.activations]

    def resolved_seed(self):
        return time.time_ns() if self.seed == "time" else int(self.seed)


@dataclass
class Layer:
    weights: np.ndarray
    biases: np.ndarray
    activation: ActivationKind

    def __post_init__(self):
        if self.weights.shape[0] != self.biases.shape[0] or self.biases.shape[1] != 1:
            raise ShapeError(
                f"layer weights {self.weights.shape} do not match biases {self.biases.shape}"
            )


@dataclass
class ForwardTrace:
    """Pre-activations ``z`` and activations ``x`` of every layer.

    ``activations[0]`` is the input batch; ``pre_activations[l]`` and
    ``activations[l + 1]`` belong to layer ``l``.
    """

    pre_activations: list
    activations: list

    @property
    def output(self):
        return self.activations[-1]


@dataclass
class Gradients:
    d_weights: list
    d_biases: list
    error_signals: list


@dataclass
class EpochStats:
    cost: float
    updates: int
    instances: int


class Network:
    """A sequential network; satisfies the trainable-network contract.

    Use :func:`init_network` to build one from a config.
    """

    def __init__(self, layers, config, rng=None):
        for prev, cur in zip(layers, layers[1:]):
            if cur.weights.shape[1] != prev.weights.shape[0]:
                raise ShapeError(
                    f"layer chain broken: {prev.weights.shape} followed by {cur.weights.shape}"
                )
        self.layers = list(layers)
        self.config = config
        self.rng = rng if rng is not None else np.random.default_rng()
        self.epochs_trained = 0

    def __repr__(self):
        sizes = [self.input_dim] + [l.weights.shape[0] for l in self.layers]
        acts = [l.activation.name for l in self.layers]
        return f"Network(sizes={sizes}, activations={acts})"

    @property
    def input_dim(self):
        return self.layers[0].weights.shape[1]

    @property
    def output_dim(self):
        return self.layers[-1].weights.shape[0]

    @property
    def output_activation(self):
        return self.layers[-1].activation

    def structure(self):
        return tuple((l.weights.shape, l.activation) for l in self.layers)

    def parameters(self):
        """Flat list ``[W0, b0, W1, b1, ...]`` of live arrays."""
        out = []
        for layer in self.layers:
            out.extend((layer.weights, layer.biases))
        return out

    def copy(self):
        return copy.deepcopy(self)

    def same_parameters(self, other):
        """Bit-for-bit equality of all weights and biases."""
        return self.structure() == other.structure() and all(
            np.array_equal(a, b) for a, b in zip(self.parameters(), other.parameters())
        )

    # trainable-network contract

    def output(self, X):
        return forward(self, X).output

    def predict(self, X):
        return predict(self, X)

    def train(self, data, epochs=None, on_epoch_end=None):
        """Mini-batch training for ``epochs`` (default ``config.epochs``).

        ``on_epoch_end(epoch, network, stats)`` is called after each epoch.
        """
        epochs = self.config.epochs if epochs is None else epochs
        for _ in range(epochs):
            stats = train_epoch(self, data)
            self.epochs_trained += 1
            if on_epoch_end is not None:
                on_epoch_end(self.epochs_trained, self, stats)
        return self

    def evaluate(self, data, label="snn"):
        return _metrics.evaluate(self, data, label=label, epoch=self.epochs_trained)


def init_network(config):
    """Build a network with freshly drawn parameters (deterministic per seed)."""
    config.validate()
    seq = np.random.SeedSequence(config.resolved_seed())
    init_seq, shuffle_seq = seq.spawn(2)
    init_rng = np.random.default_rng(init_seq)
    layers = []
    sizes = config.layer_sizes
    for fan_in, fan_out, kind in zip(sizes, sizes[1:], config.activation_kinds()):
        weights = init_rng.standard_normal((fan_out, fan_in))
        biases = init_rng.standard_normal((fan_out, 1))
        if config.weight_init == "scaled":
            weights /= np.sqrt(fan_in)
            biases /= np.sqrt(fan_in)
        layers.append(Layer(weights, biases, kind))
    return Network(layers, config, rng=np.random.default_rng(shuffle_seq))


def forward(net, X):
    X = linalg.as_matrix(X)
    if X.shape[0] != net.input_dim:
        raise ShapeError(f"input has {X.shape[0]} rows, network expects {net.input_dim}")
    if X.shape[1] < 1:
        raise ShapeError("input batch is empty")
    pre, acts = [], [X]
    x = X
    for layer in net.layers:
        z = linalg.add_column(linalg.matmul(layer.weights, x), layer.biases)
        x = activate(layer.activation, z)
        pre.append(z)
        acts.append(x)
    return ForwardTrace(pre, acts)


def backward(net, trace, expected):
    """Batch-averaged gradients of the mean cross-entropy cost."""
    if len(trace.pre_activations) != len(net.layers):
        raise ContractError(
            f"trace has {len(trace.pre_activations)} layers, network has {len(net.layers)}"
        )
    output = trace.output
    if expected.shape != output.shape:
        raise ShapeError(f"expected {expected.shape} does not match output {output.shape}")
    m = output.shape[1]
    last = net.layers[-1]
    if last.activation.name == SOFTMAX:
        delta = linalg.sub(output, expected)
    else:
        d_cost = -expected / np.maximum(output, EPSILON)
        delta = linalg.hadamard(d_cost, activate_derivative(last.activation, trace.pre_activations[-1]))

    n = len(net.layers)
    deltas = [None] * n
    d_weights = [None] * n
    d_biases = [None] * n
    for l in range(n - 1, -1, -1):
        if l < n - 1:
            back = linalg.transpose_matmul(net.layers[l + 1].weights, deltas[l + 1])
            delta = linalg.hadamard(
                back, activate_derivative(net.layers[l].activation, trace.pre_activations[l])
            )
        deltas[l] = delta
        d_weights[l] = linalg.matmul_transpose(delta, trace.activations[l]) / m
        d_biases[l] = delta.sum(axis=1, keepdims=True) / m
    return Gradients(d_weights, d_biases, deltas)


def apply_gradients(net, grads, eta):
    """In-place step ``param -= eta * grad`` on every layer."""
    if len(grads.d_weights) != len(net.layers):
        raise ShapeError(f"{len(grads.d_weights)} gradient layers for {len(net.layers)} layers")
    for layer, dw, db in zip(net.layers, grads.d_weights, grads.d_biases):
        if dw.shape != layer.weights.shape or db.shape != layer.biases.shape:
            raise ShapeError(
                f"gradient shapes {dw.shape}/{db.shape} do not match "
                f"{layer.weights.shape}/{layer.biases.shape}"
            )
        layer.weights -= eta * dw
        layer.biases -= eta * db


def _batch_size_for(mode, batch_size, n):
    if mode == "stochastic":
        return 1
    if mode == "batch":
        return n
    if mode == "minibatch":
        return batch_size
    raise ValueError(f"unknown gradient-descent mode {mode!r}")


def train_epoch(net, data, mode="minibatch", batch_size=None, eta=None):
    """One pass over ``data`` in shuffled order.

    ``mode`` is ``"stochastic"`` (batch of 1), ``"batch"`` (whole set) or
    ``"minibatch"`` (``batch_size``, default ``config.batch_size``). The
    last group may be short. Returns the mean pre-update cost over groups.
    """
    n = data.n
    if n == 0:
        raise ValidationError("cannot train on an empty dataset")
    size = _batch_size_for(mode, batch_size or net.config.batch_size, n)
    if not 1 <= size <= n:
        raise ValidationError(f"batch size {size} must lie in [1, {n}]")
    eta = net.config.learning_rate if eta is None else eta

    shuffled = data.take(net.rng.permutation(n))
    total = 0.0
    updates = 0
    for start in range(0, n, size):
        batch = shuffled.slice(start, min(start + size, n))
        trace = forward(net, batch.inputs)
        total += cost_cross_entropy(trace.output, batch.labels)
        apply_gradients(net, backward(net, trace, batch.labels), eta)
        updates += 1
    return EpochStats(cost=total / updates, updates=updates, instances=n)


def predict(net, X):
    """Argmax class per column; ties go to the lowest index."""
    return forward(net, X).output.argmax(axis=0)


# checkpoint format: little-endian float64 values
#   layer_count, then per layer: rows, cols, weights (row-major), biases


def save_checkpoint(net, path):
    parts = [struct.pack("<d", len(net.layers))]
    for layer in net.layers:
        rows, cols = layer.weights.shape
        parts.append(struct.pack("<dd", rows, cols))
        parts.append(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(layer.biases, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_checkpoint(path):
    """Return ``[(weights, biases), ...]`` from a checkpoint file."""
    raw = Path(path).read_bytes()
    values = np.frombuffer(raw, dtype="<f8")
    pos = 0

    def take(count):
        nonlocal pos
        if pos + count > len(values):
            raise ValueError(f"{path}: truncated checkpoint")
        chunk = values[pos:pos + count]
        pos += count
        return chunk

    n_layers = int(take(1)[0])
    params = []
    for _ in range(n_layers):
        rows, cols = (int(v) for v in take(2))
        weights = take(rows * cols).reshape(rows, cols).astype(np.float64)
        biases = take(rows).reshape(rows, 1).astype(np.float64)
        params.append((weights, biases))
    if pos != len(values):
        raise ValueError(f"{path}: {len(values) - pos} trailing values")
    return params


def load_checkpoint(path, config):
    """Rebuild a :class:`Network` for ``config`` from a checkpoint file."""
    params = read_checkpoint(path)
    kinds = config.activation_kinds()
    if len(params) != len(kinds):
        raise ShapeError(f"checkpoint has {len(params)} layers, config expects {len(kinds)}")
    layers = [Layer(w, b, k) for (w, b), k in zip(params, kinds)]
    return Network(layers, config)
