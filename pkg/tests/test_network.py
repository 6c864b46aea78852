import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import synthetic_dataset
from oracles import finite_difference_gradients, network_from, scalar_step
from parnet.data import Dataset
from parnet.exceptions import ContractError, ShapeError, ValidationError
from parnet.losses import cost_cross_entropy
from parnet.network import (
    NetworkConfig,
    backward,
    forward,
    init_network,
    load_checkpoint,
    read_checkpoint,
    save_checkpoint,
    train_epoch,
)

HIDDEN = ["sigmoid", "tanh", "relu", "leaky_relu"]


def small_config(**kw):
    base = dict(layer_sizes=(6, 5, 3), activations=("tanh", "softmax"), batch_size=10, seed=3)
    base.update(kw)
    return NetworkConfig(**base)


def test_init_is_deterministic_per_seed():
    a, b = init_network(small_config()), init_network(small_config())
    assert a.same_parameters(b)
    assert not a.same_parameters(init_network(small_config(seed=4)))


def test_standard_init_draws_unit_normal():
    net = init_network(NetworkConfig(layer_sizes=(400, 300, 10), weight_init="standard", seed=1))
    w = net.layers[0].weights
    assert abs(w.mean()) < 0.01
    assert abs(w.std() - 1.0) < 0.01


def test_scaled_init_divides_by_sqrt_fan_in():
    std = init_network(NetworkConfig(layer_sizes=(16, 4, 2), weight_init="standard", seed=9))
    scaled = init_network(NetworkConfig(layer_sizes=(16, 4, 2), weight_init="scaled", seed=9))
    np.testing.assert_allclose(scaled.layers[0].weights, std.layers[0].weights / 4.0, rtol=1e-15)
    np.testing.assert_allclose(scaled.layers[1].biases, std.layers[1].biases / 2.0, rtol=1e-15)


@pytest.mark.parametrize(
    "changes, fragment",
    [
        (dict(layer_sizes=(6,), activations=()), "at least"),
        (dict(activations=("tanh",)), "expected 2 activations"),
        (dict(activations=("softmax", "softmax")), "output layer"),
        (dict(learning_rate=0.0), "learning_rate"),
        (dict(seed=-1), "seed"),
        (dict(weight_init="xavier"), "weight_init"),
    ],
)
def test_config_violations(changes, fragment):
    with pytest.raises(ValidationError, match=fragment):
        small_config(**changes).validate()


def test_batch_larger_than_training_set_rejected():
    assert small_config(batch_size=500).violations(n_train=100)


def test_hand_computed_forward_pass():
    # 2-2-2 with identity-like weights: z1 = [1, -1], relu -> [1, 0]
    net = network_from(
        [([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0]), ([[1.0, 1.0], [0.0, 0.0]], [0.0, 0.0])],
        ["relu", "softmax"],
    )
    trace = forward(net, np.array([[1.0], [-1.0]]))
    np.testing.assert_array_equal(trace.activations[1], [[1.0], [0.0]])
    e = math.e
    np.testing.assert_allclose(trace.output, [[e / (e + 1)], [1 / (e + 1)]], rtol=1e-15)


def test_single_neuron_chain_rule():
    # 1-1-1 sigmoid chain with a sigmoid output and cross-entropy cost
    w1, b1, w2, b2, x, y = 0.7, -0.2, 1.3, 0.1, 0.5, 1.0
    net = network_from([([[w1]], [b1]), ([[w2]], [b2])], ["sigmoid", "sigmoid"])
    trace = forward(net, np.array([[x]]))
    grads = backward(net, trace, np.array([[y]]))

    sig = lambda v: 1 / (1 + math.exp(-v))
    z1 = w1 * x + b1
    a1 = sig(z1)
    z2 = w2 * a1 + b2
    a2 = sig(z2)
    d2 = -y / a2 * a2 * (1 - a2)
    d1 = w2 * d2 * a1 * (1 - a1)
    assert grads.d_weights[1][0, 0] == pytest.approx(d2 * a1, rel=1e-12)
    assert grads.d_biases[1][0, 0] == pytest.approx(d2, rel=1e-12)
    assert grads.d_weights[0][0, 0] == pytest.approx(d1 * x, rel=1e-12)
    assert grads.d_biases[0][0, 0] == pytest.approx(d1, rel=1e-12)


@pytest.mark.parametrize("hidden", HIDDEN)
def test_gradients_match_finite_differences(hidden):
    rng = np.random.default_rng(11)
    net = init_network(
        NetworkConfig(layer_sizes=(4, 5, 3, 3), activations=(hidden, hidden, "softmax"), seed=5)
    )
    X = rng.random((4, 7))
    E = np.eye(3)[:, rng.integers(0, 3, 7)]
    grads = backward(net, forward(net, X), E)
    numeric = finite_difference_gradients(net, X, E)
    for got, want in zip(grads.d_weights + grads.d_biases, numeric.d_weights + numeric.d_biases):
        np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-7)


@pytest.mark.parametrize("acts", [("relu", "sigmoid"), ("tanh", "sigmoid")])
def test_general_output_gradient(acts):
    # non-softmax output layers use the general cost derivative
    rng = np.random.default_rng(2)
    net = init_network(NetworkConfig(layer_sizes=(3, 4, 2), activations=acts, seed=8))
    X = rng.random((3, 5))
    E = np.eye(2)[:, rng.integers(0, 2, 5)]
    grads = backward(net, forward(net, X), E)
    numeric = finite_difference_gradients(net, X, E)
    for got, want in zip(grads.d_weights + grads.d_biases, numeric.d_weights + numeric.d_biases):
        np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-7)


def test_softmax_error_signal_is_output_minus_target():
    net = init_network(small_config(seed=1))
    X = np.random.default_rng(0).random((6, 4))
    E = np.eye(3)[:, [0, 2, 1, 1]]
    trace = forward(net, X)
    grads = backward(net, trace, E)
    np.testing.assert_allclose(grads.error_signals[-1], trace.output - E, rtol=0, atol=1e-10)


def test_uniform_output_cost_is_ln_classes():
    out = np.full((10, 3), 0.1)
    E = np.eye(10)[:, [0, 4, 9]]
    assert abs(cost_cross_entropy(out, E) - math.log(10)) <= 1e-12


def test_training_step_matches_scalar_oracle():
    params = [
        ([[0.1, -0.3], [0.4, 0.2], [-0.5, 0.6]], [0.05, -0.1, 0.2]),
        ([[0.3, -0.2, 0.1], [-0.4, 0.5, 0.2]], [0.0, 0.1]),
    ]
    acts = ["tanh", "softmax"]
    X = [[0.2, 0.9], [0.7, 0.1], [0.5, 0.5]]
    E = [[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]
    expected = scalar_step(params, acts, X, E, eta=0.5)
    net = network_from(params, acts, eta=0.5, batch_size=3)
    data = Dataset(np.array(X).T, np.array(E).T)
    train_epoch(net, data, mode="batch")
    for layer, (W, b) in zip(net.layers, expected):
        np.testing.assert_allclose(layer.weights, W, rtol=0, atol=1e-12)
        np.testing.assert_allclose(layer.biases.ravel(), b, rtol=0, atol=1e-12)


def test_full_batch_descent_is_monotone_at_small_rate():
    data = synthetic_dataset(n=120)
    net = init_network(small_config(learning_rate=0.05))
    costs = [train_epoch(net, data, mode="batch").cost for _ in range(30)]
    assert all(b < a for a, b in zip(costs, costs[1:]))


@pytest.mark.parametrize("mode, updates", [("stochastic", 45), ("batch", 1), ("minibatch", 5)])
def test_update_counts_per_mode(mode, updates):
    data = synthetic_dataset(n=45)
    net = init_network(small_config())
    assert train_epoch(net, data, mode=mode).updates == updates


def test_training_reaches_high_accuracy_on_separable_data(tiny_data):
    net = init_network(small_config(learning_rate=0.5))
    net.train(tiny_data, epochs=30)
    assert net.evaluate(tiny_data).accuracy > 0.95


def test_train_callback_and_epoch_counter(tiny_data):
    seen = []
    net = init_network(small_config())
    net.train(tiny_data, epochs=3, on_epoch_end=lambda e, n, s: seen.append((e, s.instances)))
    assert seen == [(1, 200), (2, 200), (3, 200)]
    assert net.epochs_trained == 3


def test_training_is_reproducible(tiny_data):
    a = init_network(small_config()).train(tiny_data, epochs=2)
    b = init_network(small_config()).train(tiny_data, epochs=2)
    assert a.same_parameters(b)


def test_empty_and_mismatched_inputs():
    net = init_network(small_config())
    with pytest.raises(ShapeError):
        forward(net, np.ones((5, 2)))
    with pytest.raises(ShapeError):
        forward(net, np.ones((6, 0)))
    trace = forward(net, np.ones((6, 2)))
    with pytest.raises(ShapeError):
        backward(net, trace, np.ones((2, 2)))
    trace.pre_activations.pop()
    with pytest.raises(ContractError):
        backward(net, trace, np.ones((3, 2)))


def test_predict_breaks_ties_toward_lowest_index():
    net = network_from([([[0.0], [0.0], [0.0]], [0.0, 0.0, 0.0])], ["softmax"])
    assert net.predict(np.ones((1, 4))).tolist() == [0, 0, 0, 0]


def test_checkpoint_round_trip(tmp_path):
    net = init_network(small_config())
    path = tmp_path / "net.bin"
    save_checkpoint(net, path)
    raw = path.read_bytes()
    # 1 count + 2 * (2 dims) + 6*5 + 5 + 5*3 + 3 values
    assert len(raw) == 8 * (1 + 4 + 30 + 5 + 15 + 3)
    assert np.frombuffer(raw[:24], dtype="<f8").tolist() == [2.0, 5.0, 6.0]
    assert load_checkpoint(path, small_config()).same_parameters(net)


def test_checkpoint_rejects_truncation_and_wrong_config(tmp_path):
    net = init_network(small_config())
    path = tmp_path / "net.bin"
    save_checkpoint(net, path)
    (tmp_path / "short.bin").write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError, match="truncated"):
        read_checkpoint(tmp_path / "short.bin")
    with pytest.raises(ShapeError):
        load_checkpoint(path, NetworkConfig(layer_sizes=(6, 3), activations=("softmax",)))


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.integers(2, 6), min_size=2, max_size=4),
    st.sampled_from(HIDDEN),
    st.integers(0, 10_000),
)
def test_output_is_a_distribution(sizes, hidden, seed):
    acts = (*([hidden] * (len(sizes) - 2)), "softmax")
    net = init_network(NetworkConfig(layer_sizes=sizes, activations=acts, batch_size=1, seed=seed))
    out = net.output(np.random.default_rng(seed).random((sizes[0], 3)))
    np.testing.assert_allclose(out.sum(axis=0), 1.0, atol=1e-9)
