"""Speed classes, softmax cross-entropy and a logistic-regression baseline.

Speeds are binned into 79 one-mph classes representing 1..79 mph. The
baseline head is multinomial logistic regression on pooled structural
features, trained by full-batch gradient descent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (EmptyDataset, FormatError, InvalidClass, InvalidSpeed,
                     NonFiniteFeature, ShapeMismatch)

N_CLASSES = 79
MIN_MPH = 1
N_POOLED = 30
WITHIN_MPH = 5.0


def bin_speed(speed_mph: float) -> int:
    """Class index of a speed: round half up, clamp to 1..79 mph, shift to 0."""
    if not speed_mph > 0:
        raise InvalidSpeed(f"speed must be positive, got {speed_mph}")
    mph = min(max(math.floor(speed_mph + 0.5), MIN_MPH), MIN_MPH + N_CLASSES - 1)
    return int(mph) - MIN_MPH


def bin_center(cls: int) -> float:
    if not 0 <= cls < N_CLASSES or int(cls) != cls:
        raise InvalidClass(f"class {cls} outside [0, {N_CLASSES - 1}]")
    return float(cls + MIN_MPH)


def _check_labels(labels, k: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise InvalidClass(f"labels must lie in [0, {k - 1}]")
    return labels


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def cross_entropy(logits, labels) -> float:
    """Mean negative log-likelihood of the true classes, in nats."""
    z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    y = _check_labels(labels, z.shape[1])
    if len(y) != len(z):
        raise ShapeMismatch(f"{len(z)} logit rows but {len(y)} labels")
    return float(-log_softmax(z)[np.arange(len(y)), y].mean())


def cross_entropy_grad(logits, labels) -> np.ndarray:
    z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    y = _check_labels(labels, z.shape[1])
    if len(y) != len(z):
        raise ShapeMismatch(f"{len(z)} logit rows but {len(y)} labels")
    g = softmax(z)
    g[np.arange(len(y)), y] -= 1.0
    return g / len(y)


@dataclass
class TrainConfig:
    lr: float = 0.1
    epochs: int = 500
    # Full-batch descent from zero weights draws no random numbers; the seed
    # is carried so every run records the value it was launched with.
    seed: int = 0


@dataclass
class LogisticModel:
    weights: np.ndarray  # (K, F + 1), bias in the last column
    mean: np.ndarray
    std: np.ndarray
    config: TrainConfig = field(default_factory=TrainConfig)
    losses: list = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.weights.shape[1] - 1

    def design(self, features) -> np.ndarray:
        x = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if x.shape[1] != self.n_features:
            raise ShapeMismatch(f"expected {self.n_features} features, got {x.shape[1]}")
        x = (x - self.mean) / self.std
        return np.hstack([x, np.ones((len(x), 1))])

    def logits(self, features) -> np.ndarray:
        return self.design(features) @ self.weights.T

    def to_json(self) -> dict:
        return {
            "k": int(self.weights.shape[0]),
            "f": int(self.weights.shape[1]),
            "mean": [float(v) for v in self.mean],
            "std": [float(v) for v in self.std],
            "weights": [float(v) for v in self.weights.ravel()],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LogisticModel":
        try:
            k, f = int(obj["k"]), int(obj["f"])
            w = np.asarray(obj["weights"], dtype=np.float64)
            mean = np.asarray(obj["mean"], dtype=np.float64)
            std = np.asarray(obj["std"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad model JSON: {exc}") from exc
        if w.size != k * f or mean.size != f - 1 or std.size != f - 1:
            raise FormatError(f"model arrays inconsistent with k={k}, f={f}")
        return cls(w.reshape(k, f), mean, std)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n")

    @classmethod
    def load(cls, path) -> "LogisticModel":
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from exc
        return cls.from_json(obj)


def train_logistic(features, labels, cfg: Optional[TrainConfig] = None,
                   n_classes: int = N_CLASSES) -> LogisticModel:
    """Fit softmax regression on z-scored features by full-batch descent.

    Standardization statistics come from the training set and are stored in
    the model; constant features get unit scale. ``model.losses`` records the
    loss before each update plus the final loss.
    """
    cfg = cfg or TrainConfig()
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if x.shape[0] == 0:
        raise EmptyDataset("no training samples")
    if not np.all(np.isfinite(x)):
        raise NonFiniteFeature("training features contain NaN or Inf")
    y = _check_labels(labels, n_classes)
    if len(y) != len(x):
        raise ShapeMismatch(f"{len(x)} feature rows but {len(y)} labels")

    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std > 0.0, std, 1.0)
    model = LogisticModel(np.zeros((n_classes, x.shape[1] + 1)), mean, std, cfg)
    design = model.design(x)
    w = model.weights
    for _ in range(cfg.epochs):
        logits = design @ w.T
        model.losses.append(cross_entropy(logits, y))
        w -= cfg.lr * (cross_entropy_grad(logits, y).T @ design)
    model.losses.append(cross_entropy(design @ w.T, y))
    if not np.all(np.isfinite(w)):
        raise NonFiniteFeature("training diverged; lower the learning rate")
    return model


def predict(model: LogisticModel, features) -> tuple[int, float]:
    x = np.asarray(features, dtype=np.float64).reshape(-1)
    if x.size != model.n_features:
        raise ShapeMismatch(f"expected {model.n_features} features, got {x.size}")
    cls = int(np.argmax(model.logits(x)[0]))  # argmax keeps the first maximum
    return cls, bin_center(cls)


def predict_many(model: LogisticModel, features) -> np.ndarray:
    return np.argmax(model.logits(features), axis=1)


@dataclass
class EvalReport:
    n: int
    within5_accuracy: float
    mean_abs_error: float
    mean_cross_entropy: Optional[float]
    per_class: dict

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "within5_accuracy": self.within5_accuracy,
            "mean_abs_error": self.mean_abs_error,
            "mean_cross_entropy": self.mean_cross_entropy,
            "per_class": self.per_class,
        }


def evaluate(preds: Sequence[float], trues: Sequence[float],
             logits=None) -> EvalReport:
    """Within-5-mph accuracy (inclusive) with a per-true-class breakdown.

    ``logits`` (rows aligned with ``trues``) adds mean cross-entropy against
    the binned true speeds.
    """
    p = np.asarray(preds, dtype=np.float64).reshape(-1)
    t = np.asarray(trues, dtype=np.float64).reshape(-1)
    if len(p) != len(t):
        raise ShapeMismatch(f"{len(p)} predictions but {len(t)} true speeds")
    if len(p) == 0:
        raise EmptyDataset("nothing to evaluate")
    err = np.abs(p - t)
    hit = err <= WITHIN_MPH
    ce = None
    if logits is not None:
        ce = cross_entropy(logits, [bin_speed(v) for v in t])
    per_class = {}
    for cls in sorted({bin_speed(v) for v in t}):
        sel = np.array([bin_speed(v) == cls for v in t])
        per_class[str(int(bin_center(cls)))] = {
            "n": int(sel.sum()),
            "within5": int(hit[sel].sum()),
            "exact": int((np.abs(p[sel] - bin_center(cls)) < 0.5).sum()),
            "mean_abs_error": float(err[sel].mean()),
        }
    return EvalReport(len(p), float(hit.mean()), float(err.mean()), ce, per_class)
