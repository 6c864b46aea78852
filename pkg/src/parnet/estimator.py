"""scikit-learn compatible classifiers wrapping the sequential and parallel networks.

Inputs follow the scikit-learn convention (one row per sample); internally
the networks work on one column per sample.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import Dataset
from .network import NetworkConfig, init_network
from .parallel import replicate, spawn_fresh


class FeedforwardClassifier(ClassifierMixin, BaseEstimator):
    """Feedforward network with softmax output trained by mini-batch SGD.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int, default=(256,)
    activation : {"relu", "leaky_relu", "tanh", "sigmoid"}, default="relu"
        Activation of every hidden layer.
    learning_rate : float, default=0.05
    batch_size : int, default=50
        Clipped to the number of samples.
    epochs : int, default=20
    leaky_slope : float, default=0.01
    weight_init : {"scaled", "standard"}, default="scaled"
    random_state : int or None, default=0
        ``None`` seeds from the clock.
    """

    def __init__(
        self,
        hidden_layer_sizes=(256,),
        activation="relu",
        learning_rate=0.05,
        batch_size=50,
        epochs=20,
        leaky_slope=0.01,
        weight_init="scaled",
        random_state=0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.activation = activation
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.leaky_slope = leaky_slope
        self.weight_init = weight_init
        self.random_state = random_state

    def _network_config(self, n_features, n_classes, n_samples):
        hidden = tuple(self.hidden_layer_sizes)
        return NetworkConfig(
            layer_sizes=(n_features, *hidden, n_classes),
            activations=(*([self.activation] * len(hidden)), "softmax"),
            learning_rate=self.learning_rate,
            batch_size=min(self.batch_size, n_samples),
            epochs=self.epochs,
            seed="time" if self.random_state is None else self.random_state,
            leaky_slope=self.leaky_slope,
            weight_init=self.weight_init,
        ).validate(n_train=n_samples)

    def _prepare(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        check_classification_targets(y)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        self.n_features_in_ = X.shape[1]
        # a single class still gets two outputs so softmax stays meaningful
        n_out = max(len(self.classes_), 2)
        return Dataset.from_arrays(X, encoded, n_out), n_out

    def fit(self, X, y):
        data, n_out = self._prepare(X, y)
        config = self._network_config(data.n_features, n_out, data.n)
        self.network_ = init_network(config)
        self.network_.train(data, self.epochs)
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "network_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but {type(self).__name__} "
                f"is expecting {self.n_features_in_} features as input"
            )
        proba = self.network_.output(X.T).T
        return proba[:, : len(self.classes_)]

    def predict(self, X):
        proba = self.predict_proba(X)
        return self.classes_[proba.argmax(axis=1)]


class ParallelFeedforwardClassifier(FeedforwardClassifier):
    """Data-parallel variant: ``n_children`` copies train on disjoint shards
    and their parameters are averaged.

    Extra parameters
    ----------------
    n_children : int, default=10
    workers : int, default=1
        Concurrent child-training slots.
    child_init : {"replicate", "fresh"}, default="replicate"
        Start every child from the same network, or seed each separately.
    backend : {"process", "thread"} or None
    """

    def __init__(
        self,
        hidden_layer_sizes=(256,),
        activation="relu",
        learning_rate=0.05,
        batch_size=50,
        epochs=20,
        leaky_slope=0.01,
        weight_init="scaled",
        random_state=0,
        n_children=10,
        workers=1,
        child_init="replicate",
        backend=None,
    ):
        super().__init__(
            hidden_layer_sizes=hidden_layer_sizes,
            activation=activation,
            learning_rate=learning_rate,
            batch_size=batch_size,
            epochs=epochs,
            leaky_slope=leaky_slope,
            weight_init=weight_init,
            random_state=random_state,
        )
        self.n_children = n_children
        self.workers = workers
        self.child_init = child_init
        self.backend = backend

    def fit(self, X, y):
        data, n_out = self._prepare(X, y)
        if data.n < self.n_children:
            raise ValueError(f"{data.n} samples cannot be split across {self.n_children} children")
        shard = data.n // self.n_children
        config = self._network_config(data.n_features, n_out, shard)
        workers = min(self.workers, self.n_children)
        if self.child_init == "fresh":
            self.network_ = spawn_fresh(config, self.n_children, workers=workers, backend=self.backend)
        elif self.child_init == "replicate":
            self.network_ = replicate(
                init_network(config), self.n_children, workers=workers, backend=self.backend
            )
        else:
            raise ValueError(f"child_init must be 'replicate' or 'fresh', got {self.child_init!r}")
        self.network_.train(data, self.epochs)
        return self

    def children_mean_score(self, X, y):
        """Mean accuracy of the individual children on ``(X, y)``."""
        check_is_fitted(self, "network_")
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y)
        scores = [np.mean(self.classes_[c.predict(X.T)] == y) for c in self.network_.children]
        return float(np.mean(scores))
