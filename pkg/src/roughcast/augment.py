"""Conditional GAN for tabular roughness synthesis.

The generator maps (noise, 8 normalized condition features) to one
normalized Ra value; the discriminator scores (Ra, condition) pairs.
Both are small leaky-ReLU MLPs trained with the non-saturating binary
cross-entropy objective, alternating one discriminator and one generator
update per batch. Everything is seeded and reproducible.

Synthetic records never carry full sample weight: the sweep trains with
reduced weights on generated rows so measured data stays authoritative.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, ScalerParams, SplitIndices, fit_scaler
from .errors import ConfigError, ContractError, SchemaError, ValidationError
from .schema import FEATURE_NAMES

LEAKY_SLOPE = 0.2
ADAM_BETA1 = 0.5  # classic GAN choice; the predictor's optimizer keeps 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
COLLAPSE_THRESHOLD = 1e-3
COLLAPSE_EPOCHS = 50


@dataclass
class CganConfig:
    noise_dim: int = 16
    gen_widths: tuple[int, ...] = (64, 64, 64)
    disc_widths: tuple[int, ...] = (64, 64, 64)
    lr_gen: float = 1e-3
    lr_disc: float = 1e-3
    epochs: int = 300
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self):
        self.gen_widths = tuple(int(w) for w in self.gen_widths)
        self.disc_widths = tuple(int(w) for w in self.disc_widths)
        if self.noise_dim < 1:
            raise ConfigError("noise_dim must be >= 1")
        if not self.gen_widths or not self.disc_widths:
            raise ConfigError("generator and discriminator need at least one hidden layer")
        if any(w < 1 for w in self.gen_widths + self.disc_widths):
            raise ConfigError("network widths must be positive")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.lr_gen <= 0 or self.lr_disc <= 0:
            raise ConfigError("learning rates must be > 0")

    def to_dict(self) -> dict:
        return {
            "noise_dim": self.noise_dim,
            "gen_widths": list(self.gen_widths),
            "disc_widths": list(self.disc_widths),
            "lr_gen": self.lr_gen,
            "lr_disc": self.lr_disc,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CganConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: (tuple(v) if k.endswith("widths") else v) for k, v in data.items() if k in known})


# -- minimal plain MLP (no batch norm) used by both adversaries ------------


def _net_init(dims: list[int], rng: np.random.Generator) -> list[dict]:
    layers = []
    for i in range(len(dims) - 1):
        bound = 1.0 / np.sqrt(dims[i])
        layers.append({
            "W": rng.uniform(-bound, bound, size=(dims[i], dims[i + 1])),
            "b": np.zeros(dims[i + 1]),
        })
    return layers


def _net_forward(layers: list[dict], x: np.ndarray):
    caches = []
    a = x
    for i, layer in enumerate(layers):
        z = a @ layer["W"] + layer["b"]
        last = i == len(layers) - 1
        out = z if last else np.where(z > 0, z, LEAKY_SLOPE * z)
        caches.append({"x": a, "z": z})
        a = out
    return a, caches


def _net_backward(layers: list[dict], caches: list[dict], dout: np.ndarray):
    """Gradients for every layer plus the gradient w.r.t. the net input."""
    grads = [None] * len(layers)
    grad = dout
    for i in range(len(layers) - 1, -1, -1):
        if i != len(layers) - 1:
            grad = grad * np.where(caches[i]["z"] > 0, 1.0, LEAKY_SLOPE)
        grads[i] = {
            "W": caches[i]["x"].T @ grad,
            "b": grad.sum(axis=0),
        }
        grad = grad @ layers[i]["W"].T
    return grads, grad


class _Adam:
    def __init__(self, layers: list[dict], lr: float):
        self.layers = layers
        self.lr = lr
        self.m = [{k: np.zeros_like(v) for k, v in l.items()} for l in layers]
        self.v = [{k: np.zeros_like(v) for k, v in l.items()} for l in layers]
        self.t = 0

    def step(self, grads: list[dict]) -> None:
        self.t += 1
        bc1 = 1 - ADAM_BETA1**self.t
        bc2 = 1 - ADAM_BETA2**self.t
        for layer, g, m, v in zip(self.layers, grads, self.m, self.v):
            for key in layer:
                m[key][...] = ADAM_BETA1 * m[key] + (1 - ADAM_BETA1) * g[key]
                v[key][...] = ADAM_BETA2 * v[key] + (1 - ADAM_BETA2) * g[key] ** 2
                layer[key] -= self.lr * (m[key] / bc1) / (np.sqrt(v[key] / bc2) + ADAM_EPS)


def _bce_with_logits(logits: np.ndarray, target: float):
    """Mean binary cross-entropy and d(loss)/d(logits)."""
    n = logits.size
    loss = float(np.mean(np.logaddexp(0.0, logits) - target * logits))
    sig = 1.0 / (1.0 + np.exp(-logits))
    return loss, (sig - target) / n


@dataclass
class CganModel:
    """Trained generator/discriminator pair plus the conditioning contract.

    ``scaler`` is the min-max scaler fitted on the real training subset:
    its feature part normalizes condition vectors, its target part maps Ra
    between micrometers and the generator's [0, 1] output space.
    """

    generator: list[dict]
    discriminator: list[dict]
    scaler: ScalerParams
    noise_dim: int
    feature_order: tuple[str, ...] = FEATURE_NAMES
    config: CganConfig | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def n_conditions(self) -> int:
        return len(self.feature_order)

    def generate_normalized(self, conditions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Raw generator output (normalized Ra, pre-clip) per condition row."""
        conditions = np.atleast_2d(np.asarray(conditions, dtype=float))
        if conditions.shape[1] != self.n_conditions:
            raise ContractError(
                f"condition width {conditions.shape[1]} != expected {self.n_conditions}"
            )
        z = rng.standard_normal((len(conditions), self.noise_dim))
        out, _ = _net_forward(self.generator, np.hstack([z, conditions]))
        return out.ravel()

    def discriminate(self, ra_normalized: np.ndarray, conditions: np.ndarray) -> np.ndarray:
        pair = np.hstack([np.asarray(ra_normalized, dtype=float).reshape(-1, 1),
                          np.atleast_2d(conditions)])
        out, _ = _net_forward(self.discriminator, pair)
        return out.ravel()

    def to_dict(self) -> dict:
        def dump(layers, role):
            return {
                "role": role,
                "noise_dim": self.noise_dim,
                "layers": [{"w": l["W"].tolist(), "b": l["b"].tolist(), "bn": None} for l in layers],
            }

        return {
            "format_version": 1,
            "feature_order": list(self.feature_order),
            "scaler": self.scaler.to_dict(),
            "noise_dim": self.noise_dim,
            "generator": dump(self.generator, "generator"),
            "discriminator": dump(self.discriminator, "discriminator"),
            "metadata": {
                "config": self.config.to_dict() if self.config else None,
                **self.metadata,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CganModel":
        if data.get("format_version") != 1:
            raise SchemaError(f"unsupported cgan format_version {data.get('format_version')!r}")

        def parse(net):
            return [
                {"W": np.array(l["w"], dtype=float), "b": np.array(l["b"], dtype=float)}
                for l in net["layers"]
            ]

        metadata = dict(data.get("metadata", {}))
        config = metadata.pop("config", None)
        return cls(
            generator=parse(data["generator"]),
            discriminator=parse(data["discriminator"]),
            scaler=ScalerParams.from_dict(data["scaler"]),
            noise_dim=int(data["noise_dim"]),
            feature_order=tuple(data.get("feature_order", FEATURE_NAMES)),
            config=CganConfig.from_dict(config) if config else None,
            metadata=metadata,
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "CganModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def train_cgan(dataset: Dataset, split: SplitIndices, config: CganConfig | None = None) -> CganModel:
    """Train the conditional pair on the real training subset only.

    The split is validated first so validation/test rows can never reach
    the generator. Needs at least 2 x batch_size training rows. A
    discriminator loss pinned below COLLAPSE_THRESHOLD for
    COLLAPSE_EPOCHS consecutive epochs sets a mode-collapse warning in the
    returned metadata (not fatal).
    """
    config = config or CganConfig()
    split.validate()
    train_idx = np.asarray(sorted(split.train), dtype=int)
    if len(train_idx) < 2 * config.batch_size:
        raise ConfigError(
            f"training subset of {len(train_idx)} rows is smaller than 2 x batch_size "
            f"({2 * config.batch_size})"
        )
    X_tr = dataset.X[train_idx]
    y_tr = dataset.y[train_idx]
    scaler = fit_scaler(X_tr, y_tr)
    C = scaler.apply(X_tr)
    t = scaler.apply_target(y_tr)

    rng = np.random.default_rng(config.seed)
    n_cond = C.shape[1]
    gen = _net_init([config.noise_dim + n_cond] + list(config.gen_widths) + [1], rng)
    disc = _net_init([1 + n_cond] + list(config.disc_widths) + [1], rng)
    opt_g = _Adam(gen, config.lr_gen)
    opt_d = _Adam(disc, config.lr_disc)

    n = len(C)
    gen_losses: list[float] = []
    disc_losses: list[float] = []
    collapse_run = 0
    collapsed = False
    for _epoch in range(config.epochs):
        perm = rng.permutation(n)
        ep_g, ep_d, n_batches = 0.0, 0.0, 0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            cond = C[idx]
            real = t[idx].reshape(-1, 1)

            # Discriminator: real pairs toward 1, generated pairs toward 0.
            z = rng.standard_normal((len(idx), config.noise_dim))
            fake, _ = _net_forward(gen, np.hstack([z, cond]))
            real_logit, real_cache = _net_forward(disc, np.hstack([real, cond]))
            fake_logit, fake_cache = _net_forward(disc, np.hstack([fake, cond]))
            loss_real, dreal = _bce_with_logits(real_logit, 1.0)
            loss_fake, dfake = _bce_with_logits(fake_logit, 0.0)
            grads_real, _ = _net_backward(disc, real_cache, dreal)
            grads_fake, _ = _net_backward(disc, fake_cache, dfake)
            grads_d = [
                {k: gr[k] + gf[k] for k in gr} for gr, gf in zip(grads_real, grads_fake)
            ]
            opt_d.step(grads_d)

            # Generator: non-saturating objective, push fakes toward 1.
            z = rng.standard_normal((len(idx), config.noise_dim))
            gen_in = np.hstack([z, cond])
            fake, gen_cache = _net_forward(gen, gen_in)
            fake_logit, fake_cache = _net_forward(disc, np.hstack([fake, cond]))
            loss_g, dlogit = _bce_with_logits(fake_logit, 1.0)
            _, dinput = _net_backward(disc, fake_cache, dlogit)
            grads_g, _ = _net_backward(gen, gen_cache, dinput[:, :1])
            opt_g.step(grads_g)

            ep_d += loss_real + loss_fake
            ep_g += loss_g
            n_batches += 1
        gen_losses.append(ep_g / n_batches)
        disc_losses.append(ep_d / n_batches)
        if disc_losses[-1] < COLLAPSE_THRESHOLD:
            collapse_run += 1
            if collapse_run >= COLLAPSE_EPOCHS:
                collapsed = True
        else:
            collapse_run = 0

    return CganModel(
        generator=gen,
        discriminator=disc,
        scaler=scaler,
        noise_dim=config.noise_dim,
        feature_order=tuple(scaler.feature_names),
        config=config,
        metadata={
            "n_train": int(n),
            "updates_per_net": int(config.epochs * int(np.ceil(n / config.batch_size))),
            "gen_loss": gen_losses,
            "disc_loss": disc_losses,
            "mode_collapse_warning": collapsed,
        },
    )


@dataclass
class SampleDetail:
    """Pre-clip bookkeeping for condition sampling."""

    base_indices: np.ndarray
    pre_clip: np.ndarray


def sample_conditions(train_scaled, n: int, sigma: float, seed: int | None = None,
                      rng: np.random.Generator | None = None, return_detail: bool = False):
    """Draw condition vectors from the empirical training distribution.

    Each vector is a uniformly drawn normalized training row plus isotropic
    Gaussian noise of standard deviation ``sigma``, clipped componentwise
    to [0, 1]. Pass either ``seed`` or an existing generator.
    """
    train_scaled = np.atleast_2d(np.asarray(train_scaled, dtype=float))
    if len(train_scaled) == 0:
        raise ValidationError("cannot sample conditions from an empty training subset")
    if n < 1:
        raise ConfigError(f"need n >= 1 condition vectors, got {n}")
    if sigma < 0:
        raise ConfigError(f"sigma must be >= 0, got {sigma}")
    if rng is None:
        rng = np.random.default_rng(seed)
    base_idx = rng.integers(0, len(train_scaled), size=n)
    pre_clip = train_scaled[base_idx] + sigma * rng.standard_normal((n, train_scaled.shape[1]))
    clipped = np.clip(pre_clip, 0.0, 1.0)
    if return_detail:
        return clipped, SampleDetail(base_indices=base_idx, pre_clip=pre_clip)
    return clipped


@dataclass(frozen=True)
class SyntheticRecord:
    """One generated observation in normalized condition space."""

    condition: np.ndarray  # 8 entries in [0, 1]
    ra: float  # micrometers, inverse-scaled
    weight: float
    pre_clip_out_of_range: bool


def generate_synthetic(model: CganModel, conditions, weight: float = 0.5,
                       seed: int | None = None,
                       rng: np.random.Generator | None = None) -> list[SyntheticRecord]:
    """Run the generator on prepared condition vectors.

    Outputs are clipped to [0, 1] in normalized space (clip events are
    flagged per record) and inverse-scaled to micrometers. ``weight`` is
    attached to every record and must not exceed the real-sample weight 1.
    """
    if not (0 < weight <= 1.0):
        raise ValidationError(f"synthetic weight must be in (0, 1], got {weight}")
    conditions = np.atleast_2d(np.asarray(conditions, dtype=float))
    if conditions.size == 0:
        return []
    if np.any(conditions < 0) or np.any(conditions > 1):
        raise ValidationError("conditions must be normalized to [0, 1]")
    if rng is None:
        rng = np.random.default_rng(seed)
    raw = model.generate_normalized(conditions, rng)
    clipped = np.clip(raw, 0.0, 1.0)
    out_of_range = raw != clipped
    ra = model.scaler.invert_target(clipped)
    return [
        SyntheticRecord(
            condition=conditions[i].copy(),
            ra=float(ra[i]),
            weight=float(weight),
            pre_clip_out_of_range=bool(out_of_range[i]),
        )
        for i in range(len(conditions))
    ]


def stack_synthetic(records: list[SyntheticRecord]):
    """Pack synthetic records into arrays: (conditions, ra, weights, clip flags)."""
    if not records:
        n_cond = len(FEATURE_NAMES)
        return (np.zeros((0, n_cond)), np.zeros(0), np.zeros(0), np.zeros(0, dtype=bool))
    C = np.vstack([r.condition for r in records])
    ra = np.array([r.ra for r in records])
    w = np.array([r.weight for r in records])
    clipped = np.array([r.pre_clip_out_of_range for r in records])
    return C, ra, w, clipped


@dataclass
class AugmentationDiagnostics:
    """Distribution comparison between real and synthetic Ra."""

    ks_statistic: float
    mean_delta: float  # synthetic mean - real mean
    std_delta: float
    clip_fraction: float
    condition_coverage: dict | None
    histogram: dict

    def to_dict(self) -> dict:
        return {
            "ks_statistic": self.ks_statistic,
            "mean_delta": self.mean_delta,
            "std_delta": self.std_delta,
            "clip_fraction": self.clip_fraction,
            "condition_coverage": self.condition_coverage,
            "histogram": self.histogram,
        }


def ks_statistic(a, b) -> float:
    """Exact two-sample Kolmogorov-Smirnov distance.

    Supremum of |F_a - F_b| over the pooled sample points.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if len(a) == 0 or len(b) == 0:
        raise ValidationError("KS statistic needs two non-empty samples")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / len(a)
    cdf_b = np.searchsorted(b, pooled, side="right") / len(b)
    return float(np.max(np.abs(cdf_a - cdf_b)))


def diagnostics(real_ra, synthetic_ra, clipped_flags=None, conditions=None,
                bins: int = 20) -> AugmentationDiagnostics:
    """Compare real and synthetic Ra marginals; export histogram plot data."""
    real = np.asarray(real_ra, dtype=float).ravel()
    synth = np.asarray(synthetic_ra, dtype=float).ravel()
    if len(real) == 0 or len(synth) == 0:
        raise ValidationError("diagnostics need non-empty real and synthetic samples")
    lo = min(real.min(), synth.min())
    hi = max(real.max(), synth.max())
    if lo == hi:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    coverage = None
    if conditions is not None:
        cond = np.atleast_2d(np.asarray(conditions, dtype=float))
        coverage = {
            "min": cond.min(axis=0).tolist(),
            "max": cond.max(axis=0).tolist(),
            "mean": cond.mean(axis=0).tolist(),
        }
    return AugmentationDiagnostics(
        ks_statistic=ks_statistic(real, synth),
        mean_delta=float(synth.mean() - real.mean()),
        std_delta=float(synth.std(ddof=1) - real.std(ddof=1)) if len(real) > 1 and len(synth) > 1 else 0.0,
        clip_fraction=float(np.mean(clipped_flags)) if clipped_flags is not None and len(clipped_flags) else 0.0,
        condition_coverage=coverage,
        histogram={
            "bin_edges": edges.tolist(),
            "real_counts": np.histogram(real, bins=edges)[0].tolist(),
            "synthetic_counts": np.histogram(synth, bins=edges)[0].tolist(),
        },
    )
