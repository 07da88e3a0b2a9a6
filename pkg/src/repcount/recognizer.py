"""Exercise recognition: a small feedforward softmax network with a reject
option, plus the 10-frame majority-vote label window.

The network maps the 50-value normalized skeleton feature to class
probabilities. Frames whose top probability falls below the calibrated
per-class confidence bound are labeled unknown instead of forcing a class.
"""
from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np


UNKNOWN = "unknown"
WARMUP = "warmup"

LABEL_WINDOW_SIZE = 10
MODEL_FORMAT_VERSION = 1

# z-score of the 90% two-sided normal confidence interval
CI_Z = 1.645


class TrainingError(ValueError):
    pass


class CalibrationError(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


@dataclass
class MlpModel:
    layer_dims: list[int]  # first = feature dim, last = number of classes
    weights: list[np.ndarray]  # weights[i] has shape (layer_dims[i], layer_dims[i+1])
    biases: list[np.ndarray]
    class_names: list[str]

    def __post_init__(self):
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(self.weights):
            raise ModelFormatError("layer count mismatch")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            want = (self.layer_dims[i], self.layer_dims[i + 1])
            if w.shape != want or b.shape != (want[1],):
                raise ModelFormatError(f"layer {i}: shape {w.shape} does not chain {want}")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ModelFormatError(f"layer {i}: non-finite parameters")
        if len(self.class_names) != self.layer_dims[-1]:
            raise ModelFormatError("class_names length must equal the output dimension")


@dataclass
class RejectThresholds:
    """Per-class 90% confidence interval of the mean accepted softmax
    probability, estimated on held-out data."""

    bounds: dict[str, tuple[float, float]]  # class -> (ci_low, ci_high)

    def __post_init__(self):
        for name, (lo, hi) in self.bounds.items():
            if not 0.0 <= lo <= hi <= 1.0:
                raise CalibrationError(f"{name}: need 0 <= ci_low <= ci_high <= 1")


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax along the last axis."""
    if logits.ndim == 1:
        exps = np.exp(logits - logits.max())
        return exps / exps.sum()
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    exps = np.exp(shifted)
    return exps / np.sum(exps, axis=-1, keepdims=True)


def forward(model: MlpModel, features: np.ndarray) -> np.ndarray:
    """Class probability vector(s) for one feature vector or a batch."""
    x = np.asarray(features, dtype=np.float64)
    if x.shape[-1] != model.layer_dims[0]:
        raise ValueError(f"feature length {x.shape[-1]} != input dim {model.layer_dims[0]}")
    h = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        h = h @ w + b
        if i != last:
            h = np.maximum(h, 0.0)  # ReLU hidden activations
    return softmax(h)


@dataclass
class TrainConfig:
    hidden_dims: tuple[int, ...] = (64, 64)
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 50
    seed: int = 0


def _one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((len(labels), n_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def loss_and_grads(model: MlpModel, x: np.ndarray, y_onehot: np.ndarray):
    """Mean cross-entropy over the batch and its analytic gradients.

    Returns (loss, grad_weights, grad_biases) with gradients in layer order.
    """
    activations = [x]
    pre_relu = []
    h = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        if i != last:
            pre_relu.append(z)
            h = np.maximum(z, 0.0)
            activations.append(h)
        else:
            h = z
    probs = softmax(h)
    n = x.shape[0]
    eps = 1e-12
    loss = float(-np.sum(y_onehot * np.log(probs + eps)) / n)

    grad_w = [None] * len(model.weights)
    grad_b = [None] * len(model.biases)
    delta = (probs - y_onehot) / n
    for i in range(last, -1, -1):
        grad_w[i] = activations[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * (pre_relu[i - 1] > 0)
    return loss, grad_w, grad_b


def init_model(feature_dim: int, class_names: list[str], config: TrainConfig) -> MlpModel:
    """He-initialized network, deterministic per seed."""
    rng = np.random.default_rng(config.seed)
    dims = [feature_dim, *config.hidden_dims, len(class_names)]
    weights, biases = [], []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / d_in), size=(d_in, d_out)))
        biases.append(np.zeros(d_out))
    return MlpModel(layer_dims=dims, weights=weights, biases=biases, class_names=list(class_names))


def train(features: np.ndarray, labels: np.ndarray, class_names: list[str],
          config: TrainConfig = TrainConfig()):
    """Train the recognition network with momentum SGD.

    labels are integer class indices into class_names. Returns
    (model, history) where history is a list of (epoch, loss, accuracy)
    rows measured on the training set after each epoch.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or len(x) == 0:
        raise TrainingError("dataset must be a non-empty 2D feature array")
    if len(np.unique(y)) < 2:
        raise TrainingError("dataset must contain at least 2 classes")
    model = init_model(x.shape[1], class_names, config)
    y_onehot = _one_hot(y, len(class_names))
    rng = np.random.default_rng(config.seed + 1)
    vel_w = [np.zeros_like(w) for w in model.weights]
    vel_b = [np.zeros_like(b) for b in model.biases]
    history = []
    n = len(x)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            _, gw, gb = loss_and_grads(model, x[idx], y_onehot[idx])
            for i in range(len(model.weights)):
                vel_w[i] = config.momentum * vel_w[i] - config.learning_rate * gw[i]
                vel_b[i] = config.momentum * vel_b[i] - config.learning_rate * gb[i]
                model.weights[i] += vel_w[i]
                model.biases[i] += vel_b[i]
        probs = forward(model, x)
        loss = float(-np.mean(np.log(probs[np.arange(n), y] + 1e-12)))
        acc = float(np.mean(np.argmax(probs, axis=1) == y))
        history.append((epoch, loss, acc))
    return model, history


def calibrate_reject(model: MlpModel, heldout_features: np.ndarray) -> RejectThresholds:
    """Estimate per-class reject bounds from held-out data.

    For each class c, over held-out samples the model predicts as c, the
    mean softmax probability of c and its 90% confidence interval
    (mean +/- 1.645 * std / sqrt(n)) are computed and clamped to [0, 1].
    """
    probs = forward(model, np.asarray(heldout_features, dtype=np.float64))
    preds = np.argmax(probs, axis=1)
    bounds = {}
    for ci, name in enumerate(model.class_names):
        mask = preds == ci
        if not mask.any():
            raise CalibrationError(f"no held-out samples predicted as class {name!r}")
        p = probs[mask, ci]
        mean = float(np.mean(p))
        stderr = float(np.std(p)) / np.sqrt(len(p))
        lo = max(0.0, mean - CI_Z * stderr)
        hi = min(1.0, mean + CI_Z * stderr)
        bounds[name] = (lo, hi)
    return RejectThresholds(bounds=bounds)


def classify_with_reject(model: MlpModel, thresholds: Optional[RejectThresholds],
                         features: np.ndarray, mode: str = "one-sided") -> str:
    """Classify one feature vector, or return UNKNOWN when confidence falls
    outside the calibrated bounds.

    mode: "one-sided" (accept iff p >= ci_low, the default), "two-sided"
    (also require p <= ci_high), or "off" (never reject).
    """
    probs = forward(model, features)
    ci = int(np.argmax(probs))
    name = model.class_names[ci]
    if mode == "off" or thresholds is None:
        return name
    lo, hi = thresholds.bounds[name]
    p = float(probs[ci])
    if p < lo:
        return UNKNOWN
    if mode == "two-sided" and p > hi:
        return UNKNOWN
    return name


class LabelWindow:
    """Ring buffer of the last 10 per-frame labels with majority voting."""

    def __init__(self, size: int = LABEL_WINDOW_SIZE):
        self.size = size
        self._labels: deque[str] = deque(maxlen=size)

    def push(self, label: str) -> None:
        self._labels.append(label)

    def current(self) -> str:
        """Most frequent label in the window; WARMUP until the window is
        full; ties break toward the most recent label among the tied."""
        if len(self._labels) < self.size:
            return WARMUP
        counts = Counter(self._labels)
        best = max(counts.values())
        tied = {label for label, c in counts.items() if c == best}
        for label in reversed(self._labels):
            if label in tied:
                return label
        raise AssertionError("unreachable")


def save_model(path: str | Path, model: MlpModel,
               thresholds: Optional[RejectThresholds] = None) -> None:
    """Write the versioned model container (deterministic JSON)."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "layer_dims": model.layer_dims,
        "class_names": model.class_names,
        "weights": [w.tolist() for w in model.weights],  # row-major
        "biases": [b.tolist() for b in model.biases],
        "reject_thresholds": (
            {name: list(bounds) for name, bounds in sorted(thresholds.bounds.items())}
            if thresholds is not None else None
        ),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")), encoding="utf-8")


def load_model(path: str | Path):
    """Read a model container; returns (model, thresholds-or-None)."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"unreadable model file {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format in {path}")
    try:
        model = MlpModel(
            layer_dims=list(doc["layer_dims"]),
            weights=[np.asarray(w, dtype=np.float64) for w in doc["weights"]],
            biases=[np.asarray(b, dtype=np.float64) for b in doc["biases"]],
            class_names=list(doc["class_names"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupt model file {path}: {exc}") from exc
    raw = doc.get("reject_thresholds")
    thresholds = None
    if raw is not None:
        thresholds = RejectThresholds(bounds={name: (float(lo), float(hi)) for name, (lo, hi) in raw.items()})
    return model, thresholds
