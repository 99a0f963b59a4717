import math

import numpy as np
import pytest

from ensood.core import InvalidInputError
from ensood.metrics import auroc
from ensood.scores import score_batch
from ensood.simgen import (
    PER_MEMBER,
    SCENARIOS,
    SHARED,
    SimConfig,
    make_scenario,
    simulate_batch,
    simulate_experiment,
)


def test_no_member_noise_means_zero_mi():
    b = simulate_batch(SimConfig(K=20, M=4, n_samples=200, signal_scale=10, member_noise=0, seed=3))
    np.testing.assert_array_equal(score_batch(b, "mi").values, 0.0)


def test_zero_signal_zero_noise_is_uniform():
    b = simulate_batch(SimConfig(K=7, M=3, n_samples=50, signal_scale=0, member_noise=0, seed=1))
    assert np.all(b.logits == 0.0)
    np.testing.assert_allclose(score_batch(b, "avg-entropy").values, math.log(7), rtol=0, atol=1e-15)
    np.testing.assert_array_equal(score_batch(b, "mi").values, 0.0)


def test_same_seed_bit_identical():
    cfg = SimConfig(K=10, M=3, n_samples=300, member_noise=1.0, class_mode=PER_MEMBER, seed=99)
    a, b = simulate_batch(cfg), simulate_batch(cfg)
    assert a.logits.tobytes() == b.logits.tobytes()
    assert np.array_equal(a.labels, b.labels)


def test_thread_count_does_not_change_output():
    cfg = SimConfig(K=10, M=3, n_samples=257, seed=5)
    ref = simulate_batch(cfg).logits.tobytes()
    for threads in (2, 3, 8):
        assert simulate_batch(cfg, threads=threads).logits.tobytes() == ref


def test_counter_based_prefix():
    small = simulate_batch(SimConfig(K=5, M=2, n_samples=10, seed=7))
    large = simulate_batch(SimConfig(K=5, M=2, n_samples=100, seed=7))
    np.testing.assert_array_equal(small.logits, large.logits[:10])


def test_different_seeds_differ():
    a = simulate_batch(SimConfig(K=5, M=2, n_samples=10, seed=1))
    b = simulate_batch(SimConfig(K=5, M=2, n_samples=10, seed=2))
    assert not np.array_equal(a.logits, b.logits)


def test_shared_mode_boosts_label_class():
    b = simulate_batch(SimConfig(K=30, M=4, n_samples=100, signal_scale=50, member_noise=1, seed=0))
    assert np.all(b.logits.argmax(axis=-1) == b.labels[:, None])


def test_per_member_mode_classes_vary():
    b = simulate_batch(SimConfig(K=200, M=5, n_samples=100, signal_scale=50, member_noise=1,
                                 class_mode=PER_MEMBER, seed=0))
    top = b.logits.argmax(axis=-1)
    assert np.mean([len(set(row)) > 1 for row in top]) > 0.9


def test_presets():
    assert make_scenario("ood-high-avh").signal_scale == 0.5
    assert make_scenario("id-confident").class_mode == SHARED
    assert make_scenario("ood-confident-disagreement").class_mode == PER_MEMBER
    for name in SCENARIOS:
        cfg = make_scenario(name)
        assert (cfg.K, cfg.M) == (200, 5)


def test_unknown_scenario():
    with pytest.raises(InvalidInputError):
        make_scenario("imagenet-o")


@pytest.mark.parametrize("bad", [
    dict(K=1), dict(M=0), dict(n_samples=0), dict(signal_scale=-1),
    dict(member_noise=-0.1), dict(class_mode="random"), dict(seed=-1), dict(seed=2**64),
])
def test_invalid_config(bad):
    with pytest.raises(InvalidInputError):
        SimConfig(**bad)


def test_config_round_trip():
    cfg = make_scenario("ood-confident-disagreement", n_samples=12, seed=2**63 + 5)
    assert SimConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(InvalidInputError):
        SimConfig.from_dict({"K": 3, "temperature": 2})


def test_avg_entropy_decreases_with_signal():
    means, ses = [], []
    for mu in (0, 2, 4, 8):
        b = simulate_batch(SimConfig(K=200, M=5, n_samples=10_000, signal_scale=mu, member_noise=1, seed=11))
        h = score_batch(b, "avg-entropy").values
        means.append(h.mean())
        ses.append(h.std(ddof=1) / math.sqrt(h.size))
    for i in range(3):
        assert means[i] - means[i + 1] > 3 * math.hypot(ses[i], ses[i + 1])


def test_experiment_streams_are_independent():
    cfg = SimConfig(K=10, M=2, n_samples=20, seed=0)
    out = simulate_experiment(cfg, {"a": cfg, "b": cfg}, seed=4)
    assert list(out) == ["id-confident", "a", "b"]
    assert not np.array_equal(out["a"].logits, out["b"].logits)
    again = simulate_experiment(cfg, {"a": cfg, "b": cfg}, seed=4)
    assert again["b"].logits.tobytes() == out["b"].logits.tobytes()


def test_experiment_rejects_mixed_shapes():
    with pytest.raises(InvalidInputError):
        simulate_experiment(SimConfig(K=10), {"x": SimConfig(K=11)}, seed=0)


def test_regime_directions_small():
    out = simulate_experiment(
        make_scenario("id-confident", 2000),
        {n: make_scenario(n, 2000) for n in ("ood-high-avh", "ood-confident-disagreement")},
        seed=3)
    idb = out["id-confident"]

    def au(name, s):
        return auroc(score_batch(idb, s).values, score_batch(out[name], s).values)

    assert au("ood-high-avh", "avg-entropy") > au("ood-high-avh", "mi")
    assert au("ood-confident-disagreement", "mi") > au("ood-confident-disagreement", "avg-entropy")
