import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import synthetic_dataset
from oracles import scalar_mean
from parnet.exceptions import ContractError, ValidationError
from parnet.network import NetworkConfig, init_network
from parnet.parallel import (
    ParallelNetwork,
    average_arrays,
    children_metrics,
    combine,
    evaluate_children_mean,
    replicate,
    spawn_fresh,
)

CONFIG = NetworkConfig(
    layer_sizes=(6, 5, 3), activations=("relu", "softmax"), batch_size=5, learning_rate=0.2, seed=2
)


def fresh(k, **kw):
    return spawn_fresh(CONFIG, k, **kw)


def test_average_matches_scalar_oracle():
    rng = np.random.default_rng(0)
    arrs = [rng.standard_normal((4, 3)) for _ in range(7)]
    np.testing.assert_allclose(average_arrays(arrs), scalar_mean(arrs), rtol=1e-15, atol=1e-15)


def test_identical_children_combine_to_themselves():
    pnn = replicate(init_network(CONFIG), 5)
    assert combine(pnn).same_parameters(pnn.children[0])


def test_opposite_children_average_to_zero():
    a = init_network(CONFIG)
    b = a.copy()
    for layer in b.layers:
        layer.weights *= -1
        layer.biases *= -1
    combined = combine(ParallelNetwork([a, b]))
    assert all(np.all(p == 0.0) for p in combined.parameters())


def test_combine_is_idempotent_on_its_own_output():
    pnn = fresh(4)
    once = combine(pnn)
    twice = combine(ParallelNetwork([once.copy() for _ in range(4)]))
    assert twice.same_parameters(once)


def test_combine_leaves_children_untouched():
    pnn = fresh(3)
    before = [c.copy() for c in pnn.children]
    combine(pnn)
    assert all(a.same_parameters(b) for a, b in zip(before, pnn.children))


@settings(max_examples=100, deadline=None)
@given(
    st.lists(
        arrays(np.float64, (3, 2), elements=st.floats(-1e6, 1e6)), min_size=2, max_size=8
    ),
    st.randoms(use_true_random=False),
)
def test_average_is_permutation_invariant(arrs, random):
    shuffled = list(arrs)
    random.shuffle(shuffled)
    assert np.array_equal(average_arrays(arrs), average_arrays(shuffled))
    lo = np.minimum.reduce(arrs)
    hi = np.maximum.reduce(arrs)
    mean = average_arrays(arrs)
    assert np.all((lo <= mean) & (mean <= hi))


def test_structural_mismatch_is_a_contract_error():
    other = init_network(NetworkConfig(layer_sizes=(6, 4, 3), activations=("relu", "softmax")))
    with pytest.raises(ContractError):
        ParallelNetwork([init_network(CONFIG), other])


@pytest.mark.parametrize("k", [0, 1])
def test_parallel_needs_two_children(k):
    with pytest.raises(ValidationError):
        replicate(init_network(CONFIG), k)


def test_fresh_children_are_distinct_and_seeded():
    pnn = fresh(3)
    assert not pnn.children[0].same_parameters(pnn.children[1])
    again = fresh(3)
    assert all(a.same_parameters(b) for a, b in zip(pnn.children, again.children))


def test_invalid_pool_settings_rejected():
    with pytest.raises(ValidationError, match="workers"):
        fresh(2, workers=0)
    with pytest.raises(ValidationError, match="backend"):
        fresh(2, backend="gpu")


@pytest.mark.parametrize("backend", ["thread", "process"])
def test_scheduling_does_not_change_results(backend, tiny_data):
    results = []
    for workers in (1, 2, 4):
        pnn = replicate(init_network(CONFIG), 4, workers=workers, backend=backend)
        pnn.train(tiny_data, epochs=2)
        results.append(pnn.combined)
    assert all(results[0].same_parameters(r) for r in results[1:])


def test_backends_agree(tiny_data):
    nets = []
    for backend in ("thread", "process"):
        pnn = fresh(3, workers=2, backend=backend)
        pnn.train(tiny_data, epochs=2)
        nets.append(pnn.combined)
    assert nets[0].same_parameters(nets[1])


def test_barrier_snapshots(tiny_data):
    seen = []
    pnn = fresh(4, workers=2, backend="thread")
    pnn.train(tiny_data, epochs=3, on_epoch_end=seen.append)
    assert [s.epoch for s in seen] == [1, 2, 3]
    # every child had finished the same epoch when the observer ran
    assert [s.child_epochs for s in seen] == [[1] * 4, [2] * 4, [3] * 4]
    assert all(sum(st.instances for st in s.child_stats) == tiny_data.n for s in seen)
    assert pnn.combined.epochs_trained == 3


def test_combined_is_average_after_training(tiny_data):
    pnn = fresh(3, backend="thread")
    pnn.train(tiny_data, epochs=1)
    assert combine(pnn).same_parameters(pnn.combined)


def test_shard_smaller_than_batch_suggests_fix():
    data = synthetic_dataset(n=40)
    pnn = replicate(init_network(CONFIG), 10, backend="thread")
    with pytest.raises(ValidationError, match="batch size <= 4"):
        pnn.train(data, epochs=1)


def test_parallel_network_learns(tiny_data):
    pnn = replicate(init_network(CONFIG), 2, backend="thread")
    pnn.train(tiny_data, epochs=20)
    assert pnn.evaluate(tiny_data).accuracy > 0.9
    assert len(children_metrics(pnn, tiny_data)) == 2
    assert 0.0 <= evaluate_children_mean(pnn, tiny_data) <= 1.0


def test_save_checkpoints(tmp_path, tiny_data):
    pnn = fresh(2, backend="thread")
    pnn.train(tiny_data, epochs=1)
    paths = pnn.save_checkpoints(tmp_path, prefix="run")
    assert len(paths) == 3
    assert all(p.exists() for p in paths)
