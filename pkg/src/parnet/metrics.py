"""Evaluation metrics, wall-clock timing and the CSV record format.

Every function accepts any object satisfying the trainable-network
contract: ``output(X)`` returning class probabilities (one column per
instance) and ``predict(X)`` returning class indices.
"""

import csv
import time
from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError, ValidationError
from .losses import cost_cross_entropy

CSV_HEADER = ("label", "epoch", "accuracy", "confidence", "cost", "wall_seconds")

#: instances per forward pass during evaluation; bounds peak memory
EVAL_CHUNK = 10_000


@dataclass
class Metrics:
    """One evaluation point of one run."""

    label: str
    epoch: int
    accuracy: float
    confidence: float
    cost: float
    wall_seconds: float = 0.0

    def __post_init__(self):
        problems = []
        if not 0.0 <= self.accuracy <= 1.0:
            problems.append(f"accuracy {self.accuracy} outside [0, 1]")
        if not 0.0 <= self.confidence <= 1.0:
            problems.append(f"confidence {self.confidence} outside [0, 1]")
        if self.cost < 0:
            problems.append(f"cost {self.cost} is negative")
        if self.wall_seconds < 0:
            problems.append(f"wall_seconds {self.wall_seconds} is negative")
        if problems:
            raise ValidationError(problems)


def _require_nonempty(test):
    if test.n == 0:
        raise ValidationError("evaluation dataset is empty")


def _chunks(test):
    for start in range(0, test.n, EVAL_CHUNK):
        yield test.slice(start, min(start + EVAL_CHUNK, test.n))


def _require_softmax(net):
    kind = getattr(net, "output_activation", None)
    if kind is not None and str(kind) != "softmax":
        raise ContractError(f"confidence needs a softmax output layer, got {kind}")


def accuracy(net, test):
    """Fraction of instances whose predicted class matches the label."""
    _require_nonempty(test)
    hits = 0
    for chunk in _chunks(test):
        hits += int(np.count_nonzero(net.predict(chunk.inputs) == chunk.targets))
    return hits / test.n


def confidence(net, test, mode="max"):
    """Mean probability of the predicted class (``mode="max"``).

    ``mode="true_class"`` instead averages the probability given to the
    correct class.
    """
    _require_nonempty(test)
    _require_softmax(net)
    if mode not in ("max", "true_class"):
        raise ValueError(f"unknown confidence mode {mode!r}")
    total = 0.0
    for chunk in _chunks(test):
        out = net.output(chunk.inputs)
        if mode == "max":
            total += float(out.max(axis=0).sum())
        else:
            total += float((out * chunk.labels).sum())
    return min(total / test.n, 1.0)


def cost(net, test):
    """Mean cross-entropy over ``test``."""
    _require_nonempty(test)
    total = 0.0
    for chunk in _chunks(test):
        total += cost_cross_entropy(net.output(chunk.inputs), chunk.labels) * chunk.n
    return total / test.n


def evaluate(net, test, label="", epoch=0, wall_seconds=0.0):
    return Metrics(
        label=label,
        epoch=epoch,
        accuracy=accuracy(net, test),
        confidence=confidence(net, test),
        cost=cost(net, test),
        wall_seconds=wall_seconds,
    )


def timed(op, *args, **kwargs):
    """Run ``op(*args, **kwargs)``; return ``(result, wall_seconds)``."""
    start = time.perf_counter()
    result = op(*args, **kwargs)
    return result, time.perf_counter() - start


def _sorted(records):
    return sorted(records, key=lambda r: (r.label, r.epoch))


def emit_csv(records, path):
    """Write ``records`` sorted by (label, epoch) under the fixed header."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for r in _sorted(records):
                writer.writerow(
                    [r.label, r.epoch, repr(r.accuracy), repr(r.confidence), repr(r.cost),
                     repr(r.wall_seconds)]
                )
    except OSError as exc:
        raise OSError(f"cannot write metrics CSV {path}: {exc}") from exc


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValidationError(f"{path}: unexpected header {','.join(header)}")
        records = []
        for row in reader:
            label, epoch, *values = row
            records.append(Metrics(label, int(epoch), *(float(v) for v in values)))
    return records
