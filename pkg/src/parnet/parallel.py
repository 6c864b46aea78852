"""Data-parallel training: K child networks, one shard each, combined by averaging.

Each child trains only on its own contiguous shard of a (once shuffled)
training set. Epochs run on a bounded pool of ``workers`` execution slots;
children queue when there are fewer slots than children. At each epoch
boundary all children are joined, their parameters are averaged into the
combined network, and an optional observer is handed a snapshot. Children
then carry on from their own parameters, so the average after the last
epoch is the final model.

The arithmetic never depends on the pool: every child owns its RNG and
data, the combiner sums in a canonical order, and BLAS is pinned to a
single thread inside training, so the result is byte-identical for any
``workers``/``backend`` choice.
"""

import multiprocessing
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import metrics as _metrics
from .data import split_shards
from .exceptions import ContractError, ValidationError
from .network import Layer, Network, init_network, save_checkpoint, train_epoch

COMBINERS = ("average",)
BACKENDS = ("process", "thread")


def default_backend():
    return "process" if "fork" in multiprocessing.get_all_start_methods() else "thread"


@dataclass
class EpochSnapshot:
    """What the per-epoch observer sees at a barrier.

    ``children`` are the live child networks; treat them as read-only.
    """

    epoch: int
    combined: Network
    children: list
    child_stats: list
    child_epochs: list

    @property
    def train_cost(self):
        return float(np.mean([s.cost for s in self.child_stats]))


class ParallelNetwork:
    """Child networks plus the averaged output network.

    Satisfies the same contract as :class:`~parnet.network.Network`:
    ``train``, ``evaluate``, ``predict`` and ``output`` (the last three use
    the combined network).
    """

    def __init__(self, children, combined=None, combiner="average", workers=1, backend=None):
        if len(children) < 2:
            raise ValidationError(
                f"a parallel network needs at least 2 children, got {len(children)}"
            )
        if combiner not in COMBINERS:
            raise ValidationError(f"unknown combiner {combiner!r}; available: {COMBINERS}")
        backend = backend or default_backend()
        if backend not in BACKENDS:
            raise ValidationError(f"unknown backend {backend!r}; available: {BACKENDS}")
        if workers < 1:
            raise ValidationError(f"workers must be positive, got {workers}")
        _check_structure(children)
        self.children = list(children)
        self.combiner = combiner
        self.workers = int(workers)
        self.backend = backend
        self.combined = combined if combined is not None else combine(self)
        _check_structure([self.children[0], self.combined])
        self.epochs_trained = 0

    def __repr__(self):
        return (
            f"ParallelNetwork(children={len(self.children)}, workers={self.workers}, "
            f"backend={self.backend!r}, combined={self.combined!r})"
        )

    @property
    def config(self):
        return self.combined.config

    @property
    def output_activation(self):
        return self.combined.output_activation

    def output(self, X):
        return self.combined.output(X)

    def predict(self, X):
        return self.combined.predict(X)

    def train(self, data, epochs=None, on_epoch_end=None, seed=None):
        epochs = self.config.epochs if epochs is None else epochs
        return train_parallel(self, data, epochs, on_epoch_end=on_epoch_end, seed=seed)

    def evaluate(self, data, label="pnn"):
        return _metrics.evaluate(self.combined, data, label=label, epoch=self.epochs_trained)

    def save_checkpoints(self, directory, prefix="pnn"):
        """Write one checkpoint per child plus one for the combined network."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for i, child in enumerate(self.children):
            paths.append(directory / f"{prefix}-child{i:03d}.bin")
            save_checkpoint(child, paths[-1])
        paths.append(directory / f"{prefix}-combined.bin")
        save_checkpoint(self.combined, paths[-1])
        return paths


def _check_structure(nets):
    reference = nets[0].structure()
    for i, net in enumerate(nets[1:], start=1):
        if net.structure() != reference:
            raise ContractError(f"network {i} differs structurally from network 0")


def replicate(base, k, workers=1, backend=None):
    """``k`` deep copies of ``base``; the combined network starts as another copy."""
    if k < 2:
        raise ValidationError(f"replicate needs k >= 2 (k=1 is a plain network), got {k}")
    children = [base.copy() for _ in range(k)]
    return ParallelNetwork(children, combined=base.copy(), workers=workers, backend=backend)


def spawn_fresh(config, k, workers=1, backend=None):
    """``k`` independently initialised children seeded ``seed+1 .. seed+k``."""
    if k < 2:
        raise ValidationError(f"spawn_fresh needs k >= 2, got {k}")
    config.validate()
    master = config.resolved_seed()
    children = [init_network(replace(config, seed=master + i + 1)) for i in range(k)]
    return ParallelNetwork(children, workers=workers, backend=backend)


def average_arrays(arrays):
    """Element-wise arithmetic mean with an order-independent summation.

    Values are sorted across the inputs first, so permuting ``arrays``
    cannot change a single bit. The mean is formed as
    ``min + sum(x - min) / k``, which is exact for identical inputs.
    """
    k = len(arrays)
    shape = arrays[0].shape
    stacked = np.stack([np.ravel(a) for a in arrays], axis=1)
    stacked.sort(axis=1)
    base = stacked[:, 0]
    acc = np.zeros_like(base)
    for i in range(1, k):
        acc += stacked[:, i] - base
    return (base + acc / k).reshape(shape)


def combine(pnn):
    """Average every weight and bias over the children; children are untouched."""
    children = pnn.children
    if len(children) < 2:
        raise ContractError("combine needs at least two children")
    _check_structure(children)
    template = children[0]
    layers = []
    for l, layer in enumerate(template.layers):
        weights = average_arrays([c.layers[l].weights for c in children])
        biases = average_arrays([c.layers[l].biases for c in children])
        layers.append(Layer(weights, biases, layer.activation))
    combined = Network(layers, template.config)
    combined.epochs_trained = template.epochs_trained
    return combined


# worker-side state for the process backend; filled by the pool initializer
_WORKER_SHARDS = None
_WORKER_LIMITS = None


def _init_process_worker(shards):
    global _WORKER_SHARDS, _WORKER_LIMITS
    _WORKER_SHARDS = shards
    _WORKER_LIMITS = threadpool_limits(limits=1)


def _child_epoch_in_process(index, child):
    stats = train_epoch(child, _WORKER_SHARDS[index])
    child.epochs_trained += 1
    return child, stats


def _child_epoch_in_thread(child, shard):
    stats = train_epoch(child, shard)
    child.epochs_trained += 1
    return child, stats


def _make_executor(pnn, shards):
    if pnn.backend == "thread":
        return ThreadPoolExecutor(max_workers=pnn.workers)
    # fork hands the shards to the workers without pickling them
    return ProcessPoolExecutor(
        max_workers=pnn.workers,
        mp_context=multiprocessing.get_context("fork"),
        initializer=_init_process_worker,
        initargs=(shards,),
    )


def train_parallel(pnn, data, epochs, on_epoch_end=None, seed=None):
    """Train every child on its shard for ``epochs``; combine at each barrier.

    ``data`` is shuffled once (``seed``, default the combined config's seed)
    and split into ``len(children)`` contiguous shards that stay fixed
    across epochs. ``on_epoch_end(snapshot)`` receives an
    :class:`EpochSnapshot` after every epoch.
    """
    k = len(pnn.children)
    if data.n < k:
        raise ValidationError(f"{data.n} training instances cannot feed {k} children")
    if epochs < 1:
        raise ValidationError(f"epochs must be positive, got {epochs}")
    batch = max(c.config.batch_size for c in pnn.children)
    shard_ranges = split_shards(data, k)
    smallest = min(s.size for s in shard_ranges)
    if smallest < batch:
        raise ValidationError(
            f"shard of {smallest} instances is smaller than batch size {batch}; "
            f"use a batch size <= {smallest} or fewer children"
        )
    if seed is None:
        seed = pnn.config.resolved_seed()
    shuffled = data.take(np.random.default_rng(seed).permutation(data.n))
    shards = [s.take(shuffled) for s in shard_ranges]

    with threadpool_limits(limits=1), _make_executor(pnn, shards) as pool:
        for _ in range(epochs):
            if pnn.backend == "thread":
                futures = [
                    pool.submit(_child_epoch_in_thread, child, shards[i])
                    for i, child in enumerate(pnn.children)
                ]
            else:
                futures = [
                    pool.submit(_child_epoch_in_process, i, child)
                    for i, child in enumerate(pnn.children)
                ]
            # barrier: wait for every child, keep results in child order
            results = [f.result() for f in futures]
            pnn.children = [child for child, _ in results]
            pnn.epochs_trained += 1
            pnn.combined = combine(pnn)
            pnn.combined.epochs_trained = pnn.epochs_trained
            if on_epoch_end is not None:
                on_epoch_end(
                    EpochSnapshot(
                        epoch=pnn.epochs_trained,
                        combined=pnn.combined,
                        children=pnn.children,
                        child_stats=[s for _, s in results],
                        child_epochs=[c.epochs_trained for c in pnn.children],
                    )
                )
    return pnn


def children_metrics(pnn, test):
    """Per-child :class:`~parnet.metrics.Metrics` on ``test``."""
    return [_metrics.evaluate(c, test, epoch=c.epochs_trained) for c in pnn.children]


def evaluate_children_mean(pnn, test):
    """Arithmetic mean of the children's test accuracies."""
    return float(np.mean([_metrics.accuracy(c, test) for c in pnn.children]))
