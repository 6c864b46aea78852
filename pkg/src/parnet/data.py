"""MNIST in IDX format: reading, writing, normalisation and sharding.

IDX layout (all integers big-endian)::

    images: 0x00000803 | count | rows | cols | count*rows*cols uint8 pixels
    labels: 0x00000801 | count | count uint8 labels

Files may be gzip-compressed; compression is detected from the 0x1f8b
prefix, not the file name.
"""

import gzip
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DataError, IDXFormatError, ValidationError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
N_CLASSES = 10

TRAIN_IMAGES = "train-images-idx3-ubyte"
TRAIN_LABELS = "train-labels-idx1-ubyte"
TEST_IMAGES = "t10k-images-idx3-ubyte"
TEST_LABELS = "t10k-labels-idx1-ubyte"

#: md5 of the uncompressed official files
MNIST_MD5 = {
    TRAIN_IMAGES: "6bbc9ace898e44ae57da46a324031adb",
    TRAIN_LABELS: "a25bea736e30d166cdddb491f175f624",
    TEST_IMAGES: "2646ac647ad5339dbf082846283269ea",
    TEST_LABELS: "27ae3e4e09519cfbb04c329615203637",
}

_GZIP_PREFIX = b"\x1f\x8b"


def _read_bytes(path):
    raw = Path(path).read_bytes()
    if raw[:2] == _GZIP_PREFIX:
        raw = gzip.decompress(raw)
    return raw


def _check_magic(path, raw, expected):
    if len(raw) < 4:
        raise IDXFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected:
        raise IDXFormatError(
            f"{path}: bad magic number, expected 0x{expected:08x}, got 0x{magic:08x}"
        )


def _check_length(path, raw, header, payload):
    if len(raw) != header + payload:
        kind = "truncated" if len(raw) < header + payload else "oversized"
        raise IDXFormatError(
            f"{path}: {kind} file, expected {header + payload} bytes, got {len(raw)}"
        )


def parse_idx_images(raw, path="<bytes>"):
    _check_magic(path, raw, IMAGE_MAGIC)
    if len(raw) < 16:
        raise IDXFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    count, rows, cols = struct.unpack(">III", raw[4:16])
    _check_length(path, raw, 16, count * rows * cols)
    return np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(count, rows, cols)


def parse_idx_labels(raw, path="<bytes>"):
    _check_magic(path, raw, LABEL_MAGIC)
    if len(raw) < 8:
        raise IDXFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    (count,) = struct.unpack(">I", raw[4:8])
    _check_length(path, raw, 8, count)
    return np.frombuffer(raw, dtype=np.uint8, offset=8)


def load_idx_images(path):
    """Read an IDX image file into a ``(count, rows, cols)`` uint8 array."""
    return parse_idx_images(_read_bytes(path), path)


def load_idx_labels(path):
    """Read an IDX label file into a ``(count,)`` uint8 array."""
    return parse_idx_labels(_read_bytes(path), path)


def load_idx_pair(images_path, labels_path):
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if len(images) != len(labels):
        raise IDXFormatError(
            f"image/label count mismatch: {images_path} has {len(images)}, "
            f"{labels_path} has {len(labels)}"
        )
    return images, labels


def idx_images_bytes(images):
    images = np.asarray(images)
    if images.ndim != 3:
        raise ValueError(f"images must be (count, rows, cols), got {images.shape}")
    header = struct.pack(">IIII", IMAGE_MAGIC, *images.shape)
    return header + images.astype(np.uint8).tobytes()


def idx_labels_bytes(labels):
    labels = np.asarray(labels).reshape(-1)
    return struct.pack(">II", LABEL_MAGIC, len(labels)) + labels.astype(np.uint8).tobytes()


def _write(path, payload, compress):
    if compress:
        payload = gzip.compress(payload, mtime=0)
    Path(path).write_bytes(payload)


def write_idx_images(path, images, compress=False):
    _write(path, idx_images_bytes(images), compress)


def write_idx_labels(path, labels, compress=False):
    _write(path, idx_labels_bytes(labels), compress)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Inputs paired with one-hot labels, one instance per column.

    ``inputs`` is ``features x n`` (Fortran order so batch slices stay
    contiguous) and ``labels`` is ``classes x n``.
    """

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.labels.ndim != 2:
            raise ValidationError("inputs and labels must both be 2-D")
        if self.inputs.shape[1] != self.labels.shape[1]:
            raise ValidationError(
                f"inputs have {self.inputs.shape[1]} columns, labels {self.labels.shape[1]}"
            )

    @classmethod
    def from_arrays(cls, X, y, n_classes=None):
        """Build from row-per-sample ``X`` and integer class labels ``y``."""
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y).reshape(-1)
        if X.ndim != 2:
            X = X.reshape(len(X), -1)
        if n_classes is None:
            n_classes = int(y.max()) + 1 if len(y) else 0
        return cls(np.asfortranarray(X.T), one_hot(y, n_classes))

    @property
    def n(self):
        return self.inputs.shape[1]

    @property
    def n_features(self):
        return self.inputs.shape[0]

    @property
    def n_classes(self):
        return self.labels.shape[0]

    @property
    def targets(self):
        """Integer class of every instance."""
        return self.labels.argmax(axis=0)

    def __len__(self):
        return self.n

    def take(self, indices):
        indices = np.asarray(indices)
        # row gather on the transpose is much faster than a column gather
        inputs = np.asfortranarray(self.inputs.T[indices].T)
        return Dataset(inputs, np.ascontiguousarray(self.labels[:, indices]))

    def slice(self, start, stop):
        return Dataset(self.inputs[:, start:stop], self.labels[:, start:stop])

    def shuffled(self, rng):
        return self.take(rng.permutation(self.n))

    def validate(self, unit_range=True):
        problems = []
        col_sums = self.labels.sum(axis=0)
        if not (np.all((self.labels == 0) | (self.labels == 1)) and np.all(col_sums == 1)):
            problems.append("every label column must be one-hot")
        if not np.all(np.isfinite(self.inputs)):
            problems.append("inputs contain non-finite values")
        elif unit_range and self.n and (self.inputs.min() < 0 or self.inputs.max() > 1):
            problems.append("inputs must lie in [0, 1]")
        if problems:
            raise ValidationError(problems)
        return self

    def to_idx(self, image_shape=(28, 28)):
        """Inverse of :func:`normalize`: ``(images uint8, labels uint8)``."""
        pixels = np.rint(self.inputs.T * 255.0).astype(np.uint8)
        return pixels.reshape(self.n, *image_shape), self.targets.astype(np.uint8)


def one_hot(labels, n_classes=N_CLASSES):
    labels = np.asarray(labels).reshape(-1)
    if len(labels) and (labels.min() < 0 or labels.max() >= n_classes):
        bad = labels[(labels < 0) | (labels >= n_classes)]
        raise ValidationError(f"labels must lie in 0..{n_classes - 1}, found {bad[0]}")
    out = np.zeros((n_classes, len(labels)), dtype=np.float64)
    out[labels.astype(np.intp), np.arange(len(labels))] = 1.0
    return out


def normalize(images, labels, n_classes=N_CLASSES):
    """Scale raw pixels to [0, 1] and one-hot encode the labels."""
    images = np.asarray(images)
    labels = np.asarray(labels)
    if len(images) != len(labels):
        raise ValidationError(f"{len(images)} images but {len(labels)} labels")
    pixels = images.reshape(len(images), -1).astype(np.float64) / 255.0
    return Dataset(np.asfortranarray(pixels.T), one_hot(labels, n_classes))


@dataclass(frozen=True)
class Shard:
    """Contiguous index range ``[start, stop)`` into a dataset."""

    start: int
    stop: int

    @property
    def size(self):
        return self.stop - self.start

    @property
    def indices(self):
        return np.arange(self.start, self.stop)

    def take(self, data):
        return data.slice(self.start, self.stop)


def split_shards(data, k):
    """Split ``data`` (a Dataset or an instance count) into ``k`` contiguous shards.

    Shard sizes differ by at most one; the first ``n % k`` shards get the
    extra instance.
    """
    n = data if isinstance(data, (int, np.integer)) else data.n
    if k < 1:
        raise ValidationError(f"number of shards must be positive, got {k}")
    if k > n:
        raise ValidationError(f"cannot split {n} instances into {k} shards")
    base, extra = divmod(n, k)
    shards = []
    start = 0
    for i in range(k):
        stop = start + base + (1 if i < extra else 0)
        shards.append(Shard(start, stop))
        start = stop
    return shards


def _locate(data_dir, stem):
    for name in (stem, stem + ".gz"):
        candidate = Path(data_dir) / name
        if candidate.is_file():
            return candidate
    return None


def missing_files_message(data_dir):
    lines = [f"MNIST files not found in {data_dir}. Expected (optionally .gz-compressed):"]
    for stem, digest in MNIST_MD5.items():
        lines.append(f"  {stem}  (md5 of uncompressed file: {digest})")
    lines.append("Pass --data-dir or set PARNET_DATA_DIR.")
    return "\n".join(lines)


def load_mnist(data_dir=None):
    """Load ``(train, test)`` Datasets from an MNIST directory."""
    if data_dir is None:
        data_dir = os.environ.get("PARNET_DATA_DIR")
    if data_dir is None:
        raise DataError("no MNIST directory given and PARNET_DATA_DIR is unset")
    paths = {stem: _locate(data_dir, stem) for stem in MNIST_MD5}
    if any(p is None for p in paths.values()):
        raise DataError(missing_files_message(data_dir))
    train = normalize(*load_idx_pair(paths[TRAIN_IMAGES], paths[TRAIN_LABELS]))
    test = normalize(*load_idx_pair(paths[TEST_IMAGES], paths[TEST_LABELS]))
    return train, test
