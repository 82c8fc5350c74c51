"""Evaluation protocols: k-fold CV with per-fold scaling, hyperparameter
search with fold-level median pruning, final retraining with a single
hold-out evaluation, and the augmentation-ratio sweep.

Every stage boundary carries an index audit so hold-out rows can never
reach scaler fitting, generator training, search objectives, or sweep
selection; violations raise LeakageError.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .augment import CganModel, generate_synthetic, sample_conditions, stack_synthetic
from .dataset import Dataset, ScalerParams, SplitIndices, fit_scaler
from .errors import ConfigError, ContractError, DivergenceError, LeakageError, SearchFailedError
from .neuralnet import MetricsReport, MlpConfig, MlpModel, compute_metrics, init_mlp, train_mlp


def assert_disjoint(name_a: str, indices_a, name_b: str, indices_b) -> None:
    """Fail hard when two index sets overlap."""
    overlap = set(int(i) for i in indices_a) & set(int(i) for i in indices_b)
    if overlap:
        raise LeakageError(
            f"{name_a} and {name_b} share {len(overlap)} indices, e.g. {sorted(overlap)[:5]}"
        )


def fold_partition(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Seeded partition of 0..n-1 into folds balanced within +/-1."""
    if folds < 2:
        raise ConfigError(f"need at least 2 folds, got {folds}")
    if n < folds:
        raise ConfigError(f"pool of {n} rows cannot form {folds} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


@dataclass
class CvResult:
    """Per-fold validation outcomes for one configuration."""

    fold_val_mae: list[float]
    fold_metrics: list[MetricsReport]
    mean_val_mae: float
    folds: int
    seed: int
    fold_val_indices: list[np.ndarray] = field(default_factory=list)
    fold_scalers: list[ScalerParams] = field(default_factory=list)


def run_cv(dataset: Dataset, pool_indices, config: MlpConfig, folds: int = 5, seed: int = 0) -> CvResult:
    """Cross-validate a configuration on the training+validation pool.

    Scaling is fitted inside each fold on the fold-train subset only; the
    fold-validation subset is transformed with that same scaler.
    """
    pool = np.asarray(sorted(int(i) for i in pool_indices), dtype=int)
    X = dataset.X[pool]
    y = dataset.y[pool]
    parts = fold_partition(len(pool), folds, seed)
    if any(len(p) < 2 for p in parts):
        raise ConfigError("every fold needs at least 2 samples")

    fold_mae: list[float] = []
    fold_metrics: list[MetricsReport] = []
    fold_scalers: list[ScalerParams] = []
    for val_local in parts:
        mask = np.zeros(len(pool), dtype=bool)
        mask[val_local] = True
        X_tr, y_tr = X[~mask], y[~mask]
        X_va, y_va = X[mask], y[mask]
        scaler = fit_scaler(X_tr)
        model = init_mlp(config, X.shape[1])
        best, report = train_mlp(model, scaler.apply(X_tr), y_tr, scaler.apply(X_va), y_va, config)
        pred = best.predict(scaler.apply(X_va))
        fold_mae.append(float(np.mean(np.abs(pred - y_va))))
        fold_metrics.append(compute_metrics(y_va, pred, allow_degenerate=True))
        fold_scalers.append(scaler)
    return CvResult(
        fold_val_mae=fold_mae,
        fold_metrics=fold_metrics,
        mean_val_mae=float(np.mean(fold_mae)),
        folds=folds,
        seed=seed,
        fold_val_indices=[pool[p] for p in parts],
        fold_scalers=fold_scalers,
    )


@dataclass
class SearchSpace:
    """Random-search space over MLP hyperparameters."""

    n_layers: tuple[int, int] = (1, 4)
    widths: tuple[int, ...] = (32, 64, 128, 256)
    dropout: tuple[float, float] = (0.0, 0.5)
    learning_rate: tuple[float, float] = (1e-4, 1e-2)  # log-uniform
    l2_strength: tuple[float, float] = (1e-7, 1e-3)  # log-uniform
    batch_sizes: tuple[int, ...] = (16, 32, 64)
    activations: tuple[str, ...] = ("relu", "tanh", "elu")
    max_epochs: int = 500
    early_stop_patience: int = 30
    grad_clip_norm: float = 1.0

    def sample(self, rng: np.random.Generator) -> MlpConfig:
        n_layers = int(rng.integers(self.n_layers[0], self.n_layers[1] + 1))
        widths = tuple(int(rng.choice(self.widths)) for _ in range(n_layers))
        lo, hi = np.log(self.learning_rate[0]), np.log(self.learning_rate[1])
        lr = float(np.exp(rng.uniform(lo, hi)))
        lo, hi = np.log(self.l2_strength[0]), np.log(self.l2_strength[1])
        l2 = float(np.exp(rng.uniform(lo, hi)))
        return MlpConfig(
            hidden_widths=widths,
            activation=str(rng.choice(self.activations)),
            dropout_rate=float(rng.uniform(*self.dropout)),
            learning_rate=lr,
            l2_strength=l2,
            batch_size=int(rng.choice(self.batch_sizes)),
            max_epochs=self.max_epochs,
            early_stop_patience=self.early_stop_patience,
            grad_clip_norm=self.grad_clip_norm,
            seed=int(rng.integers(0, 2**31 - 1)),
        )

    def to_dict(self) -> dict:
        return {
            "n_layers": list(self.n_layers),
            "widths": list(self.widths),
            "dropout": list(self.dropout),
            "learning_rate": list(self.learning_rate),
            "l2_strength": list(self.l2_strength),
            "batch_sizes": list(self.batch_sizes),
            "activations": list(self.activations),
            "max_epochs": self.max_epochs,
            "early_stop_patience": self.early_stop_patience,
            "grad_clip_norm": self.grad_clip_norm,
        }


@dataclass
class HpoTrial:
    """One sampled configuration and its fold-by-fold fate."""

    trial_id: int
    config: MlpConfig
    fold_maes: list[float] = field(default_factory=list)
    running_means: list[float] = field(default_factory=list)
    status: str = "running"  # complete | pruned | failed
    objective: float | None = None
    pruned_at_fold: int | None = None
    pruned_median: float | None = None
    failure: str | None = None

    def to_dict(self) -> dict:
        return {
            "trial_id": self.trial_id,
            "config": self.config.to_dict(),
            "fold_maes": self.fold_maes,
            "running_means": self.running_means,
            "status": self.status,
            "objective": self.objective,
            "pruned_at_fold": self.pruned_at_fold,
            "pruned_median": self.pruned_median,
            "failure": self.failure,
        }


PRUNING_MIN_COMPLETE = 5


def hpo_search(dataset: Dataset, pool_indices, space: SearchSpace, n_trials: int,
               seed: int, folds: int = 5, pruning: bool = True,
               sampler: str = "random"):
    """Seeded random search minimizing the mean fold-validation MAE.

    After each fold a trial is pruned when its running mean exceeds the
    median of completed trials' running means at the same fold index;
    pruning activates once PRUNING_MIN_COMPLETE trials have completed.
    Returns (best MlpConfig, list of HpoTrial). Raises SearchFailedError
    when no trial completes.
    """
    if n_trials < 1:
        raise ConfigError(f"n_trials must be >= 1, got {n_trials}")
    if sampler != "random":
        raise ConfigError(f"unknown sampler {sampler!r}; available: 'random'")
    pool = np.asarray(sorted(int(i) for i in pool_indices), dtype=int)
    X = dataset.X[pool]
    y = dataset.y[pool]
    parts = fold_partition(len(pool), folds, seed)
    rng = np.random.default_rng(seed)

    trials: list[HpoTrial] = []
    for trial_id in range(n_trials):
        trial = HpoTrial(trial_id=trial_id, config=space.sample(rng))
        trials.append(trial)
        try:
            for fold_idx, val_local in enumerate(parts):
                mask = np.zeros(len(pool), dtype=bool)
                mask[val_local] = True
                scaler = fit_scaler(X[~mask])
                model = init_mlp(trial.config, X.shape[1])
                best, _ = train_mlp(
                    model, scaler.apply(X[~mask]), y[~mask],
                    scaler.apply(X[mask]), y[mask], trial.config,
                )
                mae = float(np.mean(np.abs(best.predict(scaler.apply(X[mask])) - y[mask])))
                trial.fold_maes.append(mae)
                trial.running_means.append(float(np.mean(trial.fold_maes)))
                if pruning and fold_idx < folds - 1:
                    peers = [
                        t.running_means[fold_idx]
                        for t in trials
                        if t.status == "complete" and len(t.running_means) > fold_idx
                    ]
                    if len(peers) >= PRUNING_MIN_COMPLETE:
                        median = float(np.median(peers))
                        if trial.running_means[-1] > median:
                            trial.status = "pruned"
                            trial.pruned_at_fold = fold_idx
                            trial.pruned_median = median
                            break
        except DivergenceError as exc:
            trial.status = "failed"
            trial.failure = str(exc)
            continue
        if trial.status == "running":
            trial.status = "complete"
            trial.objective = trial.running_means[-1]

    complete = [t for t in trials if t.status == "complete"]
    if not complete:
        raise SearchFailedError("no trial completed", trials=trials)
    best_trial = min(complete, key=lambda t: (t.objective, t.trial_id))
    return best_trial.config, trials


def finalize_and_test(dataset: Dataset, pool_indices, test_indices, config: MlpConfig):
    """Retrain on the full pool, then evaluate exactly once on the hold-out.

    The pool/test index sets are audited for overlap first (LeakageError
    on violation). Early stopping during the final refit monitors the
    in-sample MAE of the pool itself: selection already happened upstream
    and the refit must see every pool row. Returns (MlpModel, MetricsReport);
    the model embeds the pool-fitted scaler and the hold-out report.
    """
    assert_disjoint("pool", pool_indices, "test", test_indices)
    pool = np.asarray(sorted(int(i) for i in pool_indices), dtype=int)
    test = np.asarray(sorted(int(i) for i in test_indices), dtype=int)
    X_pool, y_pool = dataset.X[pool], dataset.y[pool]
    X_test, y_test = dataset.X[test], dataset.y[test]

    scaler = fit_scaler(X_pool, y_pool)
    model = init_mlp(config, X_pool.shape[1])
    Xs = scaler.apply(X_pool)
    best, report = train_mlp(model, Xs, y_pool, Xs, y_pool, config)
    best.scaler = scaler
    metrics = compute_metrics(y_test, best.predict(scaler.apply(X_test)))
    best.metadata.update(
        metrics=metrics.to_dict(),
        n_pool=len(pool),
        n_test=len(test),
        epochs_run=report.stopped_epoch,
    )
    return best, metrics


@dataclass
class RatioOutcome:
    ratio: float
    n_synthetic: int
    val_mae: float
    test_metrics: MetricsReport | None = None
    clip_fraction: float = 0.0

    def to_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "n_synthetic": self.n_synthetic,
            "val_mae": self.val_mae,
            "test_metrics": self.test_metrics.to_dict() if self.test_metrics else None,
            "clip_fraction": self.clip_fraction,
        }


@dataclass
class SweepResult:
    """Augmentation-ratio sweep: selection on validation MAE only.

    Hold-out metrics are reported for the selected ratio and for the
    real-only baseline (each evaluated once) so the augmentation effect is
    visible; the selection rule never sees them.
    """

    outcomes: list[RatioOutcome]
    selected_ratio: float
    selected_val_mae: float
    baseline_val_mae: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "outcomes": [o.to_dict() for o in self.outcomes],
            "selected_ratio": self.selected_ratio,
            "selected_val_mae": self.selected_val_mae,
            "baseline_val_mae": self.baseline_val_mae,
            "seed": self.seed,
        }


def _ratio_seed(master: int, ratio: float, stream: int) -> np.random.Generator:
    # Seed derived from the ratio value itself so results do not depend on
    # the ordering of the ratio list.
    return np.random.default_rng(np.random.SeedSequence([max(master, 0), int(round(ratio * 1000)), stream]))


def ratio_sweep(dataset: Dataset, split: SplitIndices, cgan: CganModel, ratios,
                synthetic_weight: float = 0.5, config: MlpConfig | None = None,
                sigma: float = 0.02, seed: int = 0):
    """Train one model per augmentation ratio and pick the validation argmin.

    For ratio r, round(r * |train|) synthetic records are generated from the
    conditional generator with down-weighted loss contributions; ratio 0 is
    always included as the real-only baseline. Returns (SweepResult,
    selected MlpModel).
    """
    split.validate()
    assert_disjoint("train", split.train, "val", split.val)
    assert_disjoint("train", split.train, "test", split.test)
    assert_disjoint("val", split.val, "test", split.test)
    ratios = [float(r) for r in ratios]
    if not ratios:
        raise ConfigError("ratio list must be non-empty")
    if any(r < 0 for r in ratios):
        raise ConfigError(f"ratios must be >= 0: {ratios}")
    if 0.0 not in ratios:
        ratios = [0.0] + ratios
    if not (0 < synthetic_weight <= 1.0):
        raise ConfigError(f"synthetic weight must be in (0, 1], got {synthetic_weight}")
    config = config or MlpConfig()

    train = np.asarray(sorted(split.train), dtype=int)
    val = np.asarray(sorted(split.val), dtype=int)
    test = np.asarray(sorted(split.test), dtype=int)
    if len(val) == 0:
        raise ConfigError("ratio sweep needs a non-empty validation subset")
    X_tr, y_tr = dataset.X[train], dataset.y[train]
    X_va, y_va = dataset.X[val], dataset.y[val]
    X_te, y_te = dataset.X[test], dataset.y[test]

    scaler = fit_scaler(X_tr, y_tr)
    _check_cgan_contract(cgan, scaler)
    Xs_tr = scaler.apply(X_tr)
    Xs_va = scaler.apply(X_va)
    Xs_te = scaler.apply(X_te)

    outcomes: list[RatioOutcome] = []
    models: dict[float, MlpModel] = {}
    for ratio in sorted(set(ratios)):
        if ratio == 0.0:
            X_aug, y_aug, w_aug = Xs_tr, y_tr, np.ones(len(y_tr))
            n_synth = 0
            clip_fraction = 0.0
        else:
            n_synth = int(round(ratio * len(train)))
            conditions = sample_conditions(
                Xs_tr, n_synth, sigma=sigma, rng=_ratio_seed(seed, ratio, 1)
            )
            records = generate_synthetic(
                cgan, conditions, weight=synthetic_weight, rng=_ratio_seed(seed, ratio, 2)
            )
            C, ra, w, clipped = stack_synthetic(records)
            X_aug = np.vstack([Xs_tr, C])
            y_aug = np.concatenate([y_tr, ra])
            w_aug = np.concatenate([np.ones(len(y_tr)), w])
            clip_fraction = float(np.mean(clipped)) if len(clipped) else 0.0
        model = init_mlp(config, X_aug.shape[1])
        best, _ = train_mlp(model, X_aug, y_aug, Xs_va, y_va, config, sample_weights=w_aug)
        best.scaler = scaler
        val_mae = float(np.mean(np.abs(best.predict(Xs_va) - y_va)))
        outcomes.append(RatioOutcome(ratio=ratio, n_synthetic=n_synth, val_mae=val_mae,
                                     clip_fraction=clip_fraction))
        models[ratio] = best

    by_val = min(outcomes, key=lambda o: (o.val_mae, o.ratio))
    selected = by_val.ratio
    baseline = next(o for o in outcomes if o.ratio == 0.0)

    # Single hold-out evaluation for the selected ratio; the real-only
    # baseline is also evaluated once for reporting. Selection never reads
    # these numbers.
    for outcome in outcomes:
        if outcome.ratio == selected or outcome.ratio == 0.0:
            model = models[outcome.ratio]
            outcome.test_metrics = compute_metrics(y_te, model.predict(Xs_te))

    result = SweepResult(
        outcomes=outcomes,
        selected_ratio=selected,
        selected_val_mae=by_val.val_mae,
        baseline_val_mae=baseline.val_mae,
        seed=seed,
    )
    selected_model = models[selected]
    selected_model.metadata.update(
        selected_ratio=selected,
        metrics=by_val.test_metrics.to_dict() if by_val.test_metrics else None,
    )
    return result, selected_model


def _check_cgan_contract(cgan: CganModel, scaler: ScalerParams) -> None:
    if tuple(cgan.feature_order) != tuple(scaler.feature_names):
        raise ContractError(
            f"generator feature order {cgan.feature_order} != predictor order {scaler.feature_names}"
        )
    same_min = np.allclose(cgan.scaler.feature_min, scaler.feature_min, atol=1e-12)
    same_max = np.allclose(cgan.scaler.feature_max, scaler.feature_max, atol=1e-12)
    if not (same_min and same_max):
        raise ContractError(
            "generator was fitted with a different training scaler than this sweep's "
            "train subset; retrain it on the same split"
        )
