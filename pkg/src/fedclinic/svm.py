"""Primal linear soft-margin SVM trained by hinge-loss subgradient descent."""

import logging
from typing import Iterable, NamedTuple, Sequence, Tuple, Union

import numpy as np

from fedclinic.constants import (
    DEFAULT_LEARNING_RATE,
    DEFAULT_LOCAL_EPOCHS,
    DEFAULT_REGULARIZATION,
    LABEL_BENIGN,
    LABEL_MALIGNANT,
    N_FEATURES,
)
from fedclinic.dataset import ClientShard, FeatureRecord, to_arrays
from fedclinic.util import ConfigError, NumericError

logger = logging.getLogger(__name__)

BATCH_MODES = ("full", "single-pass-shuffled")


class ModelVector:
    """Linear SVM parameters; also carries update deltas and noise.

    Weights and bias together form the vector that is clipped and perturbed.
    Instances are immutable.
    """

    __slots__ = ("weights", "bias")
    __hash__ = None  # type: ignore[assignment]

    weights: np.ndarray
    bias: float

    def __init__(self, weights: Iterable[float], bias: float = 0.0) -> None:
        if not isinstance(weights, np.ndarray):
            weights = list(weights)
        w = np.array(weights, dtype=np.float64)
        if w.ndim != 1:
            raise ValueError(f"weights must be one-dimensional, got shape {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(bias))

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("ModelVector is immutable")

    @classmethod
    def zeros(cls, dim: int = N_FEATURES) -> "ModelVector":
        return cls(np.zeros(dim), 0.0)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "ModelVector":
        return cls(values[:-1], values[-1])

    def to_array(self) -> np.ndarray:
        return np.append(self.weights, self.bias)

    @property
    def dim(self) -> int:
        return len(self.weights)

    def norm(self) -> float:
        return float(np.linalg.norm(self.to_array()))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.weights)) and np.isfinite(self.bias))

    def scaled(self, factor: float) -> "ModelVector":
        return ModelVector(self.weights * factor, self.bias * factor)

    def _check_dim(self, other: "ModelVector") -> None:
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} != {other.dim}")

    def __add__(self, other: "ModelVector") -> "ModelVector":
        self._check_dim(other)
        return ModelVector(self.weights + other.weights, self.bias + other.bias)

    def __sub__(self, other: "ModelVector") -> "ModelVector":
        self._check_dim(other)
        return ModelVector(self.weights - other.weights, self.bias - other.bias)

    def __neg__(self) -> "ModelVector":
        return self.scaled(-1.0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModelVector):
            return NotImplemented
        return bool(np.array_equal(self.weights, other.weights)) and self.bias == other.bias

    def __repr__(self) -> str:
        return f"ModelVector(weights={self.weights.tolist()}, bias={self.bias})"


class TrainSpec(NamedTuple):
    learning_rate: float = DEFAULT_LEARNING_RATE
    regularization: float = DEFAULT_REGULARIZATION
    local_epochs: int = DEFAULT_LOCAL_EPOCHS
    batch_mode: str = "single-pass-shuffled"

    def validate(self) -> "TrainSpec":
        if not self.learning_rate >= 0:
            raise ConfigError(f"learning_rate must be non-negative, got {self.learning_rate}")
        if not self.regularization >= 0:
            raise ConfigError(f"regularization must be non-negative, got {self.regularization}")
        if self.local_epochs < 1:
            raise ConfigError(f"local_epochs must be at least 1, got {self.local_epochs}")
        if self.batch_mode not in BATCH_MODES:
            raise ConfigError(f"unknown batch_mode {self.batch_mode!r}")
        return self


Data = Union[Sequence[FeatureRecord], ClientShard]


def _arrays(data: Data) -> Tuple[np.ndarray, np.ndarray]:
    records = data.records if isinstance(data, ClientShard) else data
    if not records:
        raise ValueError("data must not be empty")
    return to_arrays(records)


def decision_scores(model: ModelVector, X: np.ndarray) -> np.ndarray:
    return X @ model.weights + model.bias


def predict(model: ModelVector, x: Sequence[float]) -> int:
    if len(x) != model.dim:
        raise ValueError(f"expected {model.dim} features, got {len(x)}")
    score = float(np.dot(model.weights, x) + model.bias)
    # a zero score flags malignant
    return LABEL_MALIGNANT if score >= 0 else LABEL_BENIGN


def predict_all(model: ModelVector, X: np.ndarray) -> np.ndarray:
    return np.where(decision_scores(model, X) >= 0, LABEL_MALIGNANT, LABEL_BENIGN)


def hinge_loss_arrays(
    model: ModelVector, X: np.ndarray, y: np.ndarray, regularization: float
) -> float:
    margins = y * decision_scores(model, X)
    data_term = np.maximum(0.0, 1.0 - margins).mean()
    return float(data_term + 0.5 * regularization * np.dot(model.weights, model.weights))


def hinge_loss(model: ModelVector, data: Data, regularization: float) -> float:
    """Mean hinge loss plus (λ/2)·‖w‖²; the bias is not regularized"""
    X, y = _arrays(data)
    return hinge_loss_arrays(model, X, y, regularization)


def _subgradient_arrays(
    weights: np.ndarray, bias: float, X: np.ndarray, y: np.ndarray, regularization: float
) -> Tuple[np.ndarray, float]:
    active = y * (X @ weights + bias) < 1.0
    m = len(y)
    grad_w = regularization * weights - (y[active] @ X[active]) / m
    grad_b = -float(y[active].sum()) / m
    return grad_w, grad_b


def hinge_subgradient(model: ModelVector, data: Data, regularization: float) -> ModelVector:
    X, y = _arrays(data)
    grad_w, grad_b = _subgradient_arrays(model.weights, model.bias, X, y, regularization)
    return ModelVector(grad_w, grad_b)


def local_train(
    start: ModelVector, shard: ClientShard, spec: TrainSpec, seed: int
) -> ModelVector:
    """Run `spec.local_epochs` passes of subgradient descent and return the delta.

    In single-pass-shuffled mode every epoch visits each sample once in a
    seeded random order; in full mode every epoch is one full-batch step.
    """
    X, y = _arrays(shard)
    rng = np.random.default_rng(seed)
    lr = spec.learning_rate
    lam = spec.regularization
    w = start.weights.copy()
    b = start.bias

    for epoch in range(1, spec.local_epochs + 1):
        if spec.batch_mode == "full":
            grad_w, grad_b = _subgradient_arrays(w, b, X, y, lam)
            w = w - lr * grad_w
            b = b - lr * grad_b
        else:
            for i in rng.permutation(len(y)):
                x_i = X[i]
                y_i = y[i]
                if y_i * (np.dot(w, x_i) + b) < 1.0:
                    w = w - lr * (lam * w - y_i * x_i)
                    b = b + lr * y_i
                else:
                    w = w - lr * lam * w

        if not (np.all(np.isfinite(w)) and np.isfinite(b)):
            raise NumericError(
                f"non-finite model parameters after local epoch {epoch} on client "
                f"{shard.client_id}; learning rate {lr} diverges"
            )

    return ModelVector(w - start.weights, b - start.bias)


def train_centralized(
    train: Sequence[FeatureRecord], spec: TrainSpec, seed: int
) -> ModelVector:
    """Reference fit with a single clinic holding every training record"""
    start = ModelVector.zeros()
    delta = local_train(start, ClientShard(0, tuple(train)), spec, seed)
    return start + delta


def accuracy(model: ModelVector, data: Data) -> float:
    X, y = _arrays(data)
    return float(np.mean(predict_all(model, X) == y))
