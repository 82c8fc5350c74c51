import math

import numpy as np
import pytest

from roughcast.augment import (
    CganConfig,
    CganModel,
    diagnostics,
    generate_synthetic,
    ks_statistic,
    sample_conditions,
    stack_synthetic,
    train_cgan,
)
from roughcast.dataset import SplitIndices, fit_scaler, split_holdout
from roughcast.errors import ConfigError, LeakageError, ValidationError
from roughcast.neuralnet import init_mlp, loss_and_grads
from roughcast.schema import FEATURE_NAMES

from conftest import fast_config


# ---------------------------------------------------------------- config


def test_config_validation():
    with pytest.raises(ConfigError):
        CganConfig(noise_dim=0)
    with pytest.raises(ConfigError):
        CganConfig(epochs=0)
    with pytest.raises(ConfigError):
        CganConfig(gen_widths=())


# ---------------------------------------------------------------- training


def test_train_rejects_tiny_subset(oracle_ds):
    split = SplitIndices(
        train=list(range(10)), val=[], test=list(range(10, len(oracle_ds))), seed=0
    )
    with pytest.raises(ConfigError):
        train_cgan(oracle_ds, split, CganConfig(batch_size=64, epochs=1))


def test_train_rejects_poisoned_split(oracle_ds):
    split = split_holdout(oracle_ds, (0.70, 0.15, 0.15), seed=1)
    poisoned = SplitIndices.__new__(SplitIndices)
    poisoned.train = list(split.train) + list(split.test[:3])
    poisoned.val = list(split.val)
    poisoned.test = list(split.test)
    poisoned.seed = 1
    with pytest.raises((LeakageError, ValidationError)):
        train_cgan(oracle_ds, poisoned, CganConfig(epochs=1))


def test_single_epoch_update_bookkeeping(oracle_ds, split70):
    config = CganConfig(epochs=1, batch_size=64, seed=0)
    model = train_cgan(oracle_ds, split70, config)
    n = model.metadata["n_train"]
    assert model.metadata["updates_per_net"] == math.ceil(n / 64)
    assert len(model.metadata["gen_loss"]) == 1


def test_training_deterministic(oracle_ds, split70):
    config = CganConfig(epochs=2, batch_size=128, seed=5)
    a = train_cgan(oracle_ds, split70, config)
    b = train_cgan(oracle_ds, split70, config)
    for la, lb in zip(a.generator, b.generator):
        assert np.array_equal(la["W"], lb["W"])
        assert np.array_equal(la["b"], lb["b"])


def test_scaler_fitted_on_train_only(oracle_ds, split70, cgan_model):
    train_idx = np.asarray(sorted(split70.train))
    independent = fit_scaler(oracle_ds.X[train_idx], oracle_ds.y[train_idx])
    assert np.array_equal(cgan_model.scaler.feature_min, independent.feature_min)
    assert np.array_equal(cgan_model.scaler.feature_max, independent.feature_max)
    assert cgan_model.scaler.target_min == independent.target_min
    assert cgan_model.scaler.target_max == independent.target_max


# ---------------------------------------------------------------- sampling


def test_sigma_zero_is_exact_resample():
    rng = np.random.default_rng(0)
    train = rng.uniform(0, 1, size=(50, 8))
    rows = {tuple(r) for r in train}
    sampled = sample_conditions(train, 200, sigma=0.0, seed=1)
    for row in sampled:
        assert tuple(row) in rows


def test_perturbation_halfnormal_mean():
    rng = np.random.default_rng(2)
    train = rng.uniform(0.2, 0.8, size=(100, 8))
    sampled, detail = sample_conditions(train, 10_000, sigma=0.02, seed=3, return_detail=True)
    assert sampled.shape == (10_000, 8)
    assert sampled.min() >= 0.0 and sampled.max() <= 1.0
    perturbation = detail.pre_clip - train[detail.base_indices]
    mean_abs = np.mean(np.abs(perturbation))
    assert mean_abs == pytest.approx(0.02 * math.sqrt(2 / math.pi), abs=3e-4)


def test_sample_count_contract():
    train = np.full((10, 8), 0.5)
    out = sample_conditions(train, 30, sigma=0.0, seed=0)
    assert len(out) == 30
    with pytest.raises(ConfigError):
        sample_conditions(train, 0, sigma=0.0, seed=0)
    with pytest.raises(ConfigError):
        sample_conditions(train, 5, sigma=-0.1, seed=0)
    with pytest.raises(ValidationError):
        sample_conditions(np.zeros((0, 8)), 5, sigma=0.0, seed=0)


# ---------------------------------------------------------------- generation


def identity_on_condition_cgan(scaler) -> CganModel:
    """Generator stub emitting exactly the first condition component."""
    n_in = 4 + 8
    W = np.zeros((n_in, 1))
    W[4, 0] = 1.0  # first condition slot (after the 4 noise slots)
    return CganModel(
        generator=[{"W": W, "b": np.zeros(1)}],
        discriminator=[{"W": np.zeros((9, 1)), "b": np.zeros(1)}],
        scaler=scaler,
        noise_dim=4,
    )


def make_scaler():
    rng = np.random.default_rng(1)
    X = rng.uniform(0, 10, size=(20, 8))
    y = rng.uniform(5, 25, size=20)
    return fit_scaler(X, y, feature_names=FEATURE_NAMES)


def test_generate_empty_conditions():
    model = identity_on_condition_cgan(make_scaler())
    assert generate_synthetic(model, np.zeros((0, 8)), seed=0) == []


def test_generate_identity_stub_matches_inverse_scaling():
    scaler = make_scaler()
    model = identity_on_condition_cgan(scaler)
    conditions = np.random.default_rng(4).uniform(0, 1, size=(25, 8))
    records = generate_synthetic(model, conditions, weight=0.5, seed=0)
    for rec, cond in zip(records, conditions):
        expected = scaler.invert_target(np.array([cond[0]]))[0]
        assert rec.ra == pytest.approx(expected, abs=1e-12)
        assert not rec.pre_clip_out_of_range
        assert rec.weight == 0.5


def test_generate_clip_flag_semantics():
    scaler = make_scaler()
    model = identity_on_condition_cgan(scaler)
    # bias pushes output above 1 -> every record flags and clips to max Ra
    model.generator[0]["b"][...] = [2.0]
    records = generate_synthetic(model, np.full((5, 8), 0.5), seed=0)
    assert all(r.pre_clip_out_of_range for r in records)
    assert all(r.ra == pytest.approx(scaler.target_max) for r in records)


def test_generated_ra_within_training_range(cgan_model, oracle_ds, split70):
    train_idx = np.asarray(sorted(split70.train))
    scaled = cgan_model.scaler.apply(oracle_ds.X[train_idx])
    conditions = sample_conditions(scaled, 500, sigma=0.02, seed=9)
    records = generate_synthetic(cgan_model, conditions, weight=0.5, seed=10)
    for rec in records:
        assert cgan_model.scaler.target_min - 1e-9 <= rec.ra <= cgan_model.scaler.target_max + 1e-9


def test_weight_bounds_enforced():
    model = identity_on_condition_cgan(make_scaler())
    conds = np.full((2, 8), 0.5)
    with pytest.raises(ValidationError):
        generate_synthetic(model, conds, weight=1.5, seed=0)
    with pytest.raises(ValidationError):
        generate_synthetic(model, conds, weight=0.0, seed=0)


def test_unnormalized_conditions_rejected():
    model = identity_on_condition_cgan(make_scaler())
    with pytest.raises(ValidationError):
        generate_synthetic(model, np.full((2, 8), 1.5), seed=0)


def test_weighted_loss_copies_equivalence():
    # k synthetic copies at weight w == one copy at weight k*w
    config = fast_config(hidden_widths=(6,), dropout_rate=0.0)
    model = init_mlp(config, 8)
    rng = np.random.default_rng(12)
    X_real = rng.uniform(0, 1, size=(5, 8))
    y_real = rng.uniform(5, 20, size=5)
    x_syn = rng.uniform(0, 1, size=(1, 8))
    y_syn = np.array([12.0])

    k, w = 3, 0.25
    X_a = np.vstack([X_real] + [x_syn] * k)
    y_a = np.concatenate([y_real, np.repeat(y_syn, k)])
    w_a = np.concatenate([np.ones(5), np.full(k, w)])
    loss_a, _, _ = loss_and_grads(model, X_a, y_a, w_a, mode="eval")

    X_b = np.vstack([X_real, x_syn])
    y_b = np.concatenate([y_real, y_syn])
    w_b = np.concatenate([np.ones(5), [k * w]])
    loss_b, _, _ = loss_and_grads(model, X_b, y_b, w_b, mode="eval")
    assert loss_a == pytest.approx(loss_b, abs=1e-12)


def test_stack_synthetic_round_trip():
    model = identity_on_condition_cgan(make_scaler())
    conditions = np.random.default_rng(7).uniform(0, 1, size=(10, 8))
    records = generate_synthetic(model, conditions, weight=0.5, seed=0)
    C, ra, w, clipped = stack_synthetic(records)
    assert C.shape == (10, 8)
    assert np.array_equal(C, conditions)
    assert np.all(w == 0.5)
    assert stack_synthetic([])[0].shape == (0, 8)


# ---------------------------------------------------------------- KS and diagnostics


def brute_ks(a, b):
    """Independent oracle: scan every pooled point, count fractions."""
    a = sorted(a)
    b = sorted(b)
    best = 0.0
    for x in a + b:
        fa = sum(1 for v in a if v <= x) / len(a)
        fb = sum(1 for v in b if v <= x) / len(b)
        best = max(best, abs(fa - fb))
    return best


def test_ks_trivial_cases():
    assert ks_statistic([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0
    assert ks_statistic([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]) == 1.0


def test_ks_same_distribution_small():
    rng = np.random.default_rng(0)
    a = rng.normal(size=1000)
    b = rng.normal(size=1000)
    assert ks_statistic(a, b) < 0.1


def test_ks_matches_brute_force_oracle():
    rng = np.random.default_rng(3)
    for _ in range(25):
        a = rng.normal(size=int(rng.integers(3, 40)))
        b = rng.normal(loc=rng.uniform(-1, 1), size=int(rng.integers(3, 40)))
        assert ks_statistic(a, b) == pytest.approx(brute_ks(a, b), abs=1e-12)


def test_ks_matches_scipy():
    scipy_stats = pytest.importorskip("scipy.stats")
    rng = np.random.default_rng(8)
    a = rng.normal(size=300)
    b = rng.normal(0.3, 1.2, size=400)
    assert ks_statistic(a, b) == pytest.approx(scipy_stats.ks_2samp(a, b).statistic, abs=1e-12)


def test_diagnostics_fields(oracle_ds, split70, cgan_model):
    train_idx = np.asarray(sorted(split70.train))
    scaled = cgan_model.scaler.apply(oracle_ds.X[train_idx])
    conditions = sample_conditions(scaled, 1000, sigma=0.02, seed=5)
    records = generate_synthetic(cgan_model, conditions, weight=0.5, seed=6)
    C, ra, w, clipped = stack_synthetic(records)
    diag = diagnostics(oracle_ds.y[train_idx], ra, clipped_flags=clipped, conditions=C)
    assert 0.0 <= diag.ks_statistic <= 1.0
    assert 0.0 <= diag.clip_fraction <= 1.0
    assert len(diag.histogram["bin_edges"]) == 21
    assert len(diag.histogram["real_counts"]) == 20
    assert diag.condition_coverage is not None
    assert diag.to_dict()["ks_statistic"] == diag.ks_statistic


def test_diagnostics_rejects_empty():
    with pytest.raises(ValidationError):
        diagnostics([], [1.0])


# ---------------------------------------------------------------- persistence


def test_cgan_json_round_trip(tmp_path, cgan_model):
    path = tmp_path / "cgan.json"
    cgan_model.save(path)
    loaded = CganModel.load(path)
    conditions = np.full((6, 8), 0.5)
    rng_a = np.random.default_rng(3)
    rng_b = np.random.default_rng(3)
    assert np.array_equal(
        cgan_model.generate_normalized(conditions, rng_a),
        loaded.generate_normalized(conditions, rng_b),
    )
    assert loaded.noise_dim == cgan_model.noise_dim
    assert loaded.feature_order == cgan_model.feature_order
    payload = cgan_model.to_dict()
    assert payload["generator"]["role"] == "generator"
    assert payload["discriminator"]["role"] == "discriminator"
