"""Sequential and data-parallel feedforward neural networks."""

from .activations import ActivationKind
from .data import Dataset, load_mnist, split_shards
from .estimator import FeedforwardClassifier, ParallelFeedforwardClassifier
from .exceptions import (
    ConfigError,
    ContractError,
    DataError,
    IDXFormatError,
    ParnetError,
    ShapeError,
    ValidationError,
)
from .metrics import Metrics
from .network import Network, NetworkConfig, init_network
from .parallel import ParallelNetwork, combine, replicate, spawn_fresh, train_parallel

__version__ = "0.1.0"

__all__ = [
    "ActivationKind",
    "ConfigError",
    "ContractError",
    "DataError",
    "Dataset",
    "FeedforwardClassifier",
    "IDXFormatError",
    "Metrics",
    "Network",
    "NetworkConfig",
    "ParallelFeedforwardClassifier",
    "ParallelNetwork",
    "ParnetError",
    "ShapeError",
    "ValidationError",
    "combine",
    "init_network",
    "load_mnist",
    "replicate",
    "spawn_fresh",
    "split_shards",
    "train_parallel",
]
