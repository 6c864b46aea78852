"""Experiment presets: single runs, activation and child-count sweeps, and the
worker-count timing benchmark. Each returns a list of
:class:`~parnet.metrics.Metrics` rows sharing one CSV schema.
"""

import os
import time
from dataclasses import dataclass

import numpy as np
import psutil

from . import metrics
from .network import init_network
from .parallel import replicate, spawn_fresh


def build_model(cfg, children=None, network_config=None):
    """A :class:`Network` when ``children == 1``, else a :class:`ParallelNetwork`."""
    children = cfg.parallel.children if children is None else children
    net_cfg = network_config or cfg.network_config()
    if children == 1:
        return init_network(net_cfg)
    workers = min(cfg.parallel.workers, children)
    if cfg.parallel.child_init == "fresh":
        return spawn_fresh(net_cfg, children, workers=workers, backend=cfg.parallel.backend)
    return replicate(init_network(net_cfg), children, workers=workers, backend=cfg.parallel.backend)


def _mean_metrics(rows, label, epoch, wall_seconds):
    return metrics.Metrics(
        label=label,
        epoch=epoch,
        accuracy=float(np.mean([r.accuracy for r in rows])),
        confidence=float(np.mean([r.confidence for r in rows])),
        cost=float(np.mean([r.cost for r in rows])),
        wall_seconds=wall_seconds,
    )


def run_training(model, train, test, epochs, label, eval_every=1, children_mean=False, log=print):
    """Train ``model`` and evaluate it on ``test`` every ``eval_every`` epochs.

    ``wall_seconds`` is cumulative training time, evaluation excluded. For
    a parallel network the combined snapshot is evaluated; with
    ``children_mean`` an extra ``<label>-cn-mean`` row averages the
    children's metrics.
    """
    records = []
    clock = {"start": time.perf_counter(), "eval": 0.0}

    def record(epoch, network, train_cost, children=None):
        if epoch % eval_every and epoch != epochs:
            return
        elapsed = time.perf_counter() - clock["start"] - clock["eval"]
        t0 = time.perf_counter()
        row = metrics.evaluate(network, test, label=label, epoch=epoch, wall_seconds=elapsed)
        records.append(row)
        if children is not None:
            per_child = [metrics.evaluate(c, test) for c in children]
            records.append(_mean_metrics(per_child, f"{label}-cn-mean", epoch, elapsed))
        clock["eval"] += time.perf_counter() - t0
        log(
            f"[{label}] epoch {epoch:3d}  train_cost {train_cost:.4f}  "
            f"test_acc {row.accuracy:.4f}  conf {row.confidence:.4f}  "
            f"test_cost {row.cost:.4f}  {elapsed:8.2f}s"
        )

    if hasattr(model, "children"):
        def on_epoch(snapshot):
            record(
                snapshot.epoch,
                snapshot.combined,
                snapshot.train_cost,
                snapshot.children if children_mean else None,
            )

        model.train(train, epochs, on_epoch_end=on_epoch)
    else:
        model.train(train, epochs, on_epoch_end=lambda e, net, stats: record(e, net, stats.cost))
    return records


def sweep_activations(cfg, train, test, log=print):
    """Every hidden activation in ``cfg.sweep.activations`` on a sequential
    network and on a parallel network of ``cfg.sweep.activation_children``.
    The output layer stays softmax."""
    records = []
    k = cfg.sweep.activation_children
    sizes = cfg.network.layer_sizes
    for act in cfg.sweep.activations:
        net_cfg = cfg.network_config(activations=tuple([act] * (len(sizes) - 2) + ["softmax"]))
        for children, label in ((1, f"snn-{act}"), (k, f"pnn{k:02d}-{act}")):
            model = build_model(cfg, children=children, network_config=net_cfg)
            records += run_training(
                model, train, test, cfg.run.epochs, label, cfg.run.eval_every, log=log
            )
    return records


def children_learning_rate(cfg):
    if "network.learning_rate" in cfg.explicit:
        return cfg.network.learning_rate
    return cfg.sweep.children_learning_rate


def sweep_children(cfg, train, test, log=print):
    """Parallel networks for every size in ``cfg.sweep.children_set``,
    logging the combined network and the mean over its children."""
    records = []
    net_cfg = cfg.network_config(learning_rate=children_learning_rate(cfg))
    for k in cfg.sweep.children_set:
        model = build_model(cfg, children=k, network_config=net_cfg)
        records += run_training(
            model, train, test, cfg.run.epochs, f"pnn{k:02d}", cfg.run.eval_every,
            children_mean=True, log=log,
        )
    return records


def physical_cores():
    return psutil.cpu_count(logical=False) or os.cpu_count() or 1


@dataclass
class BenchRow:
    workers: int
    mean_seconds: float
    percent: float
    samples: list


def bench_workers(cfg, train, test, log=print):
    """Time a short fixed training job for every worker count.

    Returns ``(records, rows)``: CSV records plus :class:`BenchRow` entries
    carrying the mean time and percentage of the single-worker time.
    """
    children = cfg.bench.children
    worker_counts = sorted({w for w in cfg.bench.workers_set if 1 <= w <= children} | {1})
    if cfg.bench.subset is not None:
        train = train.slice(0, min(cfg.bench.subset, train.n))
    net_cfg = cfg.network_config()
    base = init_network(net_cfg)
    records, rows = [], []
    log(f"[bench] {children} children, {train.n} instances, {physical_cores()} physical cores")
    for w in worker_counts:
        samples = []
        model = None
        for _ in range(cfg.bench.repeats):
            model = replicate(base, children, workers=w, backend=cfg.parallel.backend)
            _, seconds = metrics.timed(model.train, train, cfg.bench.epochs)
            samples.append(seconds)
        mean = float(np.mean(samples))
        ref = rows[0].mean_seconds if rows else mean
        rows.append(BenchRow(w, mean, 100.0 * mean / ref, samples))
        records.append(
            metrics.evaluate(
                model.combined, test, label=f"workers{w:02d}", epoch=cfg.bench.epochs,
                wall_seconds=mean,
            )
        )
        log(f"[bench] workers {w:3d}  mean {mean:8.3f}s  {rows[-1].percent:6.1f}% of 1 worker")
    return records, rows

