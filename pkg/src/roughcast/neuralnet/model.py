"""MLP regressor core: fully connected layers, batch normalization,
dropout, and a linear output head, with manual forward/backward passes.

Everything runs in float64. Train-mode forward uses batch statistics and
inverted dropout; eval-mode forward uses running statistics with dropout
disabled and is a pure function of (model, input).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dataset import ScalerParams
from ..errors import BatchTooSmallError, ConfigError, SchemaError
from ..schema import FEATURE_NAMES

BN_EPS = 1e-5
BN_MOMENTUM = 0.1

ACTIVATIONS = ("relu", "tanh", "elu")


def _act_forward(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "elu":
        return np.where(z > 0, z, np.expm1(z))
    raise ConfigError(f"unknown activation {name!r}")


def _act_backward(name: str, act_out: np.ndarray, grad: np.ndarray) -> np.ndarray:
    # Derivatives recovered from the activation output alone.
    if name == "relu":
        return grad * (act_out > 0)
    if name == "tanh":
        return grad * (1.0 - act_out**2)
    if name == "elu":
        return grad * np.where(act_out > 0, 1.0, act_out + 1.0)
    raise ConfigError(f"unknown activation {name!r}")


@dataclass
class MlpConfig:
    """Training configuration for the MLP regressor."""

    hidden_widths: tuple[int, ...] = (64, 32)
    activation: str = "relu"
    dropout_rate: float = 0.1
    learning_rate: float = 1e-3
    l2_strength: float = 0.0
    batch_size: int = 32
    max_epochs: int = 500
    early_stop_patience: int = 30
    grad_clip_norm: float = 1.0
    seed: int = 0

    def __post_init__(self):
        self.hidden_widths = tuple(int(w) for w in self.hidden_widths)
        if len(self.hidden_widths) == 0:
            raise ConfigError("at least one hidden layer is required")
        if any(w < 1 for w in self.hidden_widths):
            raise ConfigError(f"hidden widths must be positive: {self.hidden_widths}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if not (0.0 <= self.dropout_rate <= 0.9):
            raise ConfigError(f"dropout_rate must be in [0, 0.9], got {self.dropout_rate}")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.l2_strength < 0:
            raise ConfigError("l2_strength must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if self.early_stop_patience < 1:
            raise ConfigError("early_stop_patience must be >= 1")
        if self.grad_clip_norm <= 0:
            raise ConfigError("grad_clip_norm must be > 0")

    def to_dict(self) -> dict:
        return {
            "hidden_widths": list(self.hidden_widths),
            "activation": self.activation,
            "dropout_rate": self.dropout_rate,
            "learning_rate": self.learning_rate,
            "l2_strength": self.l2_strength,
            "batch_size": self.batch_size,
            "max_epochs": self.max_epochs,
            "early_stop_patience": self.early_stop_patience,
            "grad_clip_norm": self.grad_clip_norm,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MlpConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: (tuple(v) if k == "hidden_widths" else v) for k, v in data.items() if k in known})


@dataclass
class Layer:
    """One linear layer; hidden layers carry batch-norm state, the output
    layer does not (bn arrays are None)."""

    W: np.ndarray
    b: np.ndarray
    gamma: np.ndarray | None = None
    beta: np.ndarray | None = None
    running_mean: np.ndarray | None = None
    running_var: np.ndarray | None = None

    @property
    def has_bn(self) -> bool:
        return self.gamma is not None

    def copy(self) -> "Layer":
        return Layer(
            W=self.W.copy(),
            b=self.b.copy(),
            gamma=None if self.gamma is None else self.gamma.copy(),
            beta=None if self.beta is None else self.beta.copy(),
            running_mean=None if self.running_mean is None else self.running_mean.copy(),
            running_var=None if self.running_var is None else self.running_var.copy(),
        )


class MlpModel:
    """A trained (or trainable) MLP with its scaler and metadata.

    ``layers[:-1]`` are hidden layers (linear -> batch norm -> activation
    -> dropout), ``layers[-1]`` is the linear output head producing Ra in
    micrometers. Inputs are expected in the scaler's normalized space.
    """

    def __init__(self, config: MlpConfig, input_dim: int, layers: list[Layer],
                 scaler: ScalerParams | None = None,
                 feature_order: tuple[str, ...] = FEATURE_NAMES,
                 metadata: dict | None = None):
        self.config = config
        self.input_dim = int(input_dim)
        self.layers = layers
        self.scaler = scaler
        self.feature_order = tuple(feature_order)
        self.metadata = dict(metadata or {})
        self._check_shapes()

    def _check_shapes(self) -> None:
        dims = [self.input_dim] + list(self.config.hidden_widths) + [1]
        if len(self.layers) != len(dims) - 1:
            raise SchemaError(f"expected {len(dims) - 1} layers, got {len(self.layers)}")
        for i, layer in enumerate(self.layers):
            if layer.W.shape != (dims[i], dims[i + 1]):
                raise SchemaError(
                    f"layer {i}: weight shape {layer.W.shape} != ({dims[i]}, {dims[i + 1]})"
                )
            is_output = i == len(self.layers) - 1
            if is_output and layer.has_bn:
                raise SchemaError("output layer must not carry batch-norm state")
            if not is_output:
                if not layer.has_bn:
                    raise SchemaError(f"hidden layer {i} is missing batch-norm state")
                if np.any(layer.running_var <= 0):
                    raise SchemaError(f"layer {i}: running variance must be > 0")

    # -- parameter access -------------------------------------------------

    def parameters(self) -> list[np.ndarray]:
        """Trainable arrays in a fixed order (running stats excluded)."""
        params: list[np.ndarray] = []
        for layer in self.layers:
            params.append(layer.W)
            params.append(layer.b)
            if layer.has_bn:
                params.append(layer.gamma)
                params.append(layer.beta)
        return params

    def weight_matrices(self) -> list[np.ndarray]:
        return [layer.W for layer in self.layers]

    def copy(self) -> "MlpModel":
        return MlpModel(
            config=self.config,
            input_dim=self.input_dim,
            layers=[layer.copy() for layer in self.layers],
            scaler=self.scaler,
            feature_order=self.feature_order,
            metadata=dict(self.metadata),
        )

    def load_parameters_from(self, other: "MlpModel") -> None:
        for mine, theirs in zip(self.layers, other.layers):
            mine.W[...] = theirs.W
            mine.b[...] = theirs.b
            if mine.has_bn:
                mine.gamma[...] = theirs.gamma
                mine.beta[...] = theirs.beta
                mine.running_mean[...] = theirs.running_mean
                mine.running_var[...] = theirs.running_var

    # -- forward ----------------------------------------------------------

    def predict(self, X) -> np.ndarray:
        """Eval-mode forward pass; pure function of (model, X)."""
        return forward(self, X, mode="eval")

    def to_dict(self) -> dict:
        layers = []
        for layer in self.layers:
            entry = {
                "w": layer.W.tolist(),
                "b": layer.b.tolist(),
                "bn": None,
            }
            if layer.has_bn:
                entry["bn"] = {
                    "gamma": layer.gamma.tolist(),
                    "beta": layer.beta.tolist(),
                    "mean": layer.running_mean.tolist(),
                    "var": layer.running_var.tolist(),
                }
            layers.append(entry)
        return {
            "format_version": 1,
            "feature_order": list(self.feature_order),
            "scaler": self.scaler.to_dict() if self.scaler is not None else None,
            "layers": layers,
            "metadata": {"config": self.config.to_dict(), **self.metadata},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MlpModel":
        if data.get("format_version") != 1:
            raise SchemaError(f"unsupported model format_version {data.get('format_version')!r}")
        metadata = dict(data.get("metadata", {}))
        config = MlpConfig.from_dict(metadata.pop("config"))
        layers = []
        for entry in data["layers"]:
            bn = entry.get("bn")
            layers.append(
                Layer(
                    W=np.array(entry["w"], dtype=float),
                    b=np.array(entry["b"], dtype=float),
                    gamma=None if bn is None else np.array(bn["gamma"], dtype=float),
                    beta=None if bn is None else np.array(bn["beta"], dtype=float),
                    running_mean=None if bn is None else np.array(bn["mean"], dtype=float),
                    running_var=None if bn is None else np.array(bn["var"], dtype=float),
                )
            )
        scaler = None
        if data.get("scaler") is not None:
            scaler = ScalerParams.from_dict(data["scaler"])
        return cls(
            config=config,
            input_dim=layers[0].W.shape[0],
            layers=layers,
            scaler=scaler,
            feature_order=tuple(data.get("feature_order", FEATURE_NAMES)),
            metadata=metadata,
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "MlpModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def init_mlp(config: MlpConfig, input_dim: int) -> MlpModel:
    """Fresh model with seeded scaled-uniform fan-in weights.

    Biases, batch-norm shifts and running means start at zero; batch-norm
    scales and running variances at one. Same seed, same weights, bit for
    bit.
    """
    if input_dim < 1:
        raise ConfigError(f"input_dim must be >= 1, got {input_dim}")
    rng = np.random.default_rng(config.seed)
    dims = [input_dim] + list(config.hidden_widths) + [1]
    layers: list[Layer] = []
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        bound = 1.0 / np.sqrt(fan_in)
        W = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        b = np.zeros(fan_out)
        if i < len(dims) - 2:
            layers.append(
                Layer(
                    W=W,
                    b=b,
                    gamma=np.ones(fan_out),
                    beta=np.zeros(fan_out),
                    running_mean=np.zeros(fan_out),
                    running_var=np.ones(fan_out),
                )
            )
        else:
            layers.append(Layer(W=W, b=b))
    return MlpModel(config=config, input_dim=input_dim, layers=layers)


def forward(model: MlpModel, X, mode: str = "eval",
            dropout_rng: np.random.Generator | None = None,
            update_running: bool = False) -> np.ndarray:
    """Run the network on a batch of normalized feature rows.

    ``mode="train"`` normalizes with batch statistics (needs >= 2 rows) and
    applies inverted dropout when a generator is supplied; ``mode="eval"``
    uses running statistics and no dropout.
    """
    yhat, _ = _forward_cached(model, X, mode, dropout_rng, update_running)
    return yhat


def _forward_cached(model: MlpModel, X, mode: str,
                    dropout_rng: np.random.Generator | None,
                    update_running: bool):
    if mode not in ("train", "eval"):
        raise ConfigError(f"mode must be 'train' or 'eval', got {mode!r}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.input_dim:
        raise SchemaError(f"batch width {X.shape[1]} != input_dim {model.input_dim}")
    if mode == "train" and len(X) < 2:
        raise BatchTooSmallError(
            f"train-mode forward needs a batch of >= 2 rows for batch statistics, got {len(X)}"
        )
    dropout = model.config.dropout_rate if mode == "train" and dropout_rng is not None else 0.0

    caches = []
    a = X
    for layer in model.layers[:-1]:
        z = a @ layer.W + layer.b
        if mode == "train":
            mu = z.mean(axis=0)
            var = z.var(axis=0)
            if update_running:
                layer.running_mean[...] = (1 - BN_MOMENTUM) * layer.running_mean + BN_MOMENTUM * mu
                layer.running_var[...] = (1 - BN_MOMENTUM) * layer.running_var + BN_MOMENTUM * var
        else:
            mu = layer.running_mean
            var = layer.running_var
        inv_std = 1.0 / np.sqrt(var + BN_EPS)
        zhat = (z - mu) * inv_std
        bn_out = layer.gamma * zhat + layer.beta
        act_out = _act_forward(model.config.activation, bn_out)
        if dropout > 0.0:
            mask = (dropout_rng.random(act_out.shape) >= dropout) / (1.0 - dropout)
            out = act_out * mask
        else:
            mask = None
            out = act_out
        caches.append({
            "x": a, "zhat": zhat, "inv_std": inv_std,
            "act_out": act_out, "mask": mask, "batch_mode": mode == "train",
        })
        a = out
    head = model.layers[-1]
    yhat = (a @ head.W + head.b).ravel()
    caches.append({"x": a})
    return yhat, caches


def loss_and_grads(model: MlpModel, X, y, sample_weights=None, mode: str = "train",
                   dropout_rng: np.random.Generator | None = None,
                   update_running: bool = False, return_relu_states: bool = False):
    """Weighted-MSE + L2 objective and its gradients.

    Returns ``(loss, yhat, grads)`` with ``grads`` aligned with
    ``model.parameters()``. The data term is sum(w_i e_i^2) / sum(w), so
    duplicating a sample is exactly equivalent to doubling its weight; an
    all-zero weight vector yields a zero data gradient. The L2 penalty
    applies to weight matrices only.

    ``return_relu_states=True`` appends a hashable signature of every relu
    unit's active/inactive state, which finite-difference checks use to
    recognize kink crossings (where central differences are invalid).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n = len(X)
    if len(y) != n:
        raise SchemaError(f"targets length {len(y)} != batch size {n}")
    if sample_weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(sample_weights, dtype=float).ravel()
        if len(w) != n:
            raise SchemaError(f"weights length {len(w)} != batch size {n}")

    yhat, caches = _forward_cached(model, X, mode, dropout_rng, update_running)
    e = yhat - y
    w_sum = w.sum()
    l2 = model.config.l2_strength
    if w_sum > 0:
        data_loss = float((w * e**2).sum() / w_sum)
        dyhat = (2.0 * w * e / w_sum)[:, None]
    else:
        data_loss = 0.0
        dyhat = np.zeros((n, 1))
    loss = data_loss + l2 * sum(float((W**2).sum()) for W in model.weight_matrices())

    grads: list[np.ndarray] = []
    head = model.layers[-1]
    head_cache = caches[-1]
    dW = head_cache["x"].T @ dyhat + 2.0 * l2 * head.W
    db = dyhat.sum(axis=0)
    grad_in = dyhat @ head.W.T
    head_grads = [dW, db]

    hidden_grads: list[list[np.ndarray]] = []
    for layer, cache in zip(reversed(model.layers[:-1]), reversed(caches[:-1])):
        if cache["mask"] is not None:
            grad_in = grad_in * cache["mask"]
        grad_act = _act_backward(model.config.activation, cache["act_out"], grad_in)
        dgamma = (grad_act * cache["zhat"]).sum(axis=0)
        dbeta = grad_act.sum(axis=0)
        dzhat = grad_act * layer.gamma
        if cache["batch_mode"]:
            m = len(X)
            dz = (cache["inv_std"] / m) * (
                m * dzhat
                - dzhat.sum(axis=0)
                - cache["zhat"] * (dzhat * cache["zhat"]).sum(axis=0)
            )
        else:
            dz = dzhat * cache["inv_std"]
        dW = cache["x"].T @ dz + 2.0 * l2 * layer.W
        db = dz.sum(axis=0)
        grad_in = dz @ layer.W.T
        hidden_grads.append([dW, db, dgamma, dbeta])

    for layer_grads in reversed(hidden_grads):
        grads.extend(layer_grads)
    grads.extend(head_grads)
    if return_relu_states:
        if model.config.activation == "relu":
            states = tuple((c["act_out"] > 0).tobytes() for c in caches[:-1])
        else:
            states = ()  # tanh and elu are smooth, no kinks to track
        return loss, yhat, grads, states
    return loss, yhat, grads
