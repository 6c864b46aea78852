import os
from pathlib import Path

import numpy as np
import pytest

from parnet.data import Dataset, load_mnist, write_idx_images, write_idx_labels

REPO = Path(__file__).resolve().parents[1]
ACCEPTANCE_LINES = []


def mnist_dir():
    for candidate in (os.environ.get("PARNET_DATA_DIR"), REPO / "data" / "mnist"):
        if candidate and (Path(candidate) / "train-images-idx3-ubyte").exists():
            return Path(candidate)
        if candidate and (Path(candidate) / "train-images-idx3-ubyte.gz").exists():
            return Path(candidate)
    return None


@pytest.fixture(scope="session")
def mnist():
    directory = mnist_dir()
    if directory is None:
        pytest.skip("MNIST files not available (set PARNET_DATA_DIR)")
    return load_mnist(directory)


def synthetic_dataset(n=200, n_features=6, n_classes=3, seed=0):
    """Linearly separable-ish blobs with inputs in [0, 1]."""
    rng = np.random.default_rng(seed)
    centers = rng.random((n_classes, n_features))
    y = rng.integers(0, n_classes, n)
    X = np.clip(centers[y] + 0.1 * rng.standard_normal((n, n_features)), 0.0, 1.0)
    return Dataset.from_arrays(X, y, n_classes)


@pytest.fixture
def tiny_data():
    return synthetic_dataset()


@pytest.fixture
def fake_mnist_dir(tmp_path):
    """A miniature MNIST directory: 600 train / 100 test 28x28 images."""
    rng = np.random.default_rng(7)

    def make(n):
        labels = rng.integers(0, 10, n).astype(np.uint8)
        images = rng.integers(0, 40, (n, 28, 28)).astype(np.uint8)
        # stamp a class-dependent bright block so the task is learnable
        for i, lab in enumerate(labels):
            images[i, 2 * lab:2 * lab + 4, 4:24] = 255
        return images, labels

    train_images, train_labels = make(600)
    test_images, test_labels = make(100)
    write_idx_images(tmp_path / "train-images-idx3-ubyte", train_images)
    write_idx_labels(tmp_path / "train-labels-idx1-ubyte.gz", train_labels, compress=True)
    write_idx_images(tmp_path / "t10k-images-idx3-ubyte.gz", test_images, compress=True)
    write_idx_labels(tmp_path / "t10k-labels-idx1-ubyte", test_labels)
    return tmp_path


def report_acceptance(name, passed, detail=""):
    """Record one criterion; ``passed=None`` marks it not applicable on this host."""
    status = "N/A" if passed is None else ("PASS" if passed else "FAIL")
    line = f"[{status}] {name}" + (f" :: {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
