"""Shared domain types and validation.

Everything here is plain data: frozen dataclasses around numpy arrays, plus
pure validation functions. No I/O, no model execution. Arrays handed to these
types are copied and marked read-only, so instances are safe to share across
threads.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadProbabilityRow,
    LabelOutOfRange,
    MismatchedParamCount,
    NonPositiveCount,
)

#: Default tolerance for |row_sum - 1| on probability rows. Bundles produced
#: by float32 softmax stacks may declare a looser tolerance (up to
#: PROB_ROW_TOL_MAX) in their manifest; rows are never renormalized.
PROB_ROW_TOL = 1e-6
PROB_ROW_TOL_MAX = 1e-4

ACC_SOURCES = ("train", "validation")
SIZE_MODES = ("proportional", "inverse")

_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.\-]*$")


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def param_count_from_shapes(layer_shapes) -> int:
    """Total trainable parameters: sum over layers of the product of each
    layer's weight-tensor dimensions.

    A scalar weight (empty dimension tuple) counts as one parameter.
    """
    total = 0
    for dims in layer_shapes:
        total += math.prod(int(d) for d in dims)
    return total


@dataclass(frozen=True)
class ModelProfile:
    """Identity and size of one base classifier.

    ``param_count`` is authoritative; when ``layer_shapes`` is also given the
    two must agree (sum over layers of the product of dimensions).
    ``latency_ms`` is an optional recorded single-input forward time.
    """

    name: str
    param_count: int
    layer_shapes: tuple[tuple[int, ...], ...] | None = None
    latency_ms: float | None = None

    def __post_init__(self):
        if self.layer_shapes is not None:
            shapes = tuple(tuple(int(d) for d in dims) for dims in self.layer_shapes)
            object.__setattr__(self, "layer_shapes", shapes)


def validate_profile(profile: ModelProfile) -> None:
    """Raise unless every ModelProfile invariant holds.

    Raises
    ------
    NonPositiveCount
        param_count < 1, a non-positive layer dimension, or latency_ms <= 0.
    MismatchedParamCount
        layer_shapes sum-of-products differs from param_count.
    ValueError
        name is not a usable identifier (it becomes a directory name).
    """
    if not _NAME_RE.match(profile.name or ""):
        raise ValueError(
            f"model name {profile.name!r} is not a valid identifier "
            "(letters, digits, '_', '.', '-'; must not start with a separator)"
        )
    if int(profile.param_count) < 1:
        raise NonPositiveCount(
            f"model {profile.name!r}: param_count must be >= 1, got {profile.param_count}"
        )
    if profile.latency_ms is not None and not profile.latency_ms > 0:
        raise NonPositiveCount(
            f"model {profile.name!r}: latency_ms must be positive, got {profile.latency_ms}"
        )
    if profile.layer_shapes is not None:
        for dims in profile.layer_shapes:
            if any(d < 1 for d in dims):
                raise NonPositiveCount(
                    f"model {profile.name!r}: layer dimensions must be >= 1, got {dims}"
                )
        derived = param_count_from_shapes(profile.layer_shapes)
        if derived != int(profile.param_count):
            raise MismatchedParamCount(
                f"model {profile.name!r}: layer_shapes imply {derived} parameters, "
                f"manifest declares {profile.param_count}"
            )


def validate_profiles(profiles) -> None:
    """Validate each profile and reject duplicate names."""
    seen = set()
    for p in profiles:
        validate_profile(p)
        if p.name in seen:
            raise ValueError(f"duplicate model name {p.name!r}")
        seen.add(p.name)


@dataclass(frozen=True)
class PredictionMatrix:
    """Per-class probability rows for one model on one split (N x K)."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.probs, dtype=np.float64)
        if arr.ndim != 2:
            raise BadProbabilityRow(f"prediction matrix must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 2:
            raise BadProbabilityRow(
                f"prediction matrix needs >= 1 row and >= 2 classes, got shape {arr.shape}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @property
    def num_samples(self) -> int:
        return self.probs.shape[0]

    @property
    def num_classes(self) -> int:
        return self.probs.shape[1]


def validate_probability_matrix(
    probs, tol: float = PROB_ROW_TOL, where: str = "", line_offset: int | None = None
) -> None:
    """Reject rows outside [0, 1] or not summing to 1 within ``tol``.

    Violations are hard errors; rows are never silently repaired. ``where``
    prefixes the error message (typically a file name) so loaders can point
    at the offending row; with ``line_offset`` the row is reported as a file
    line number (row_index + line_offset) instead of a 0-based row.
    """
    arr = probs.probs if isinstance(probs, PredictionMatrix) else np.asarray(probs, dtype=np.float64)
    prefix = f"{where}: " if where else ""

    def _loc(row: int) -> str:
        if line_offset is None:
            return f"row {row}"
        return f"line {row + line_offset}"

    if np.any(arr < 0.0) or np.any(arr > 1.0):
        row = int(np.argwhere((arr < 0.0) | (arr > 1.0))[0][0])
        raise BadProbabilityRow(f"{prefix}{_loc(row)}: probability outside [0, 1]")
    sums = arr.sum(axis=1)
    bad = np.abs(sums - 1.0) > tol
    if np.any(bad):
        row = int(np.argmax(bad))
        raise BadProbabilityRow(
            f"{prefix}{_loc(row)}: probabilities sum to {sums[row]!r}, "
            f"expected 1 within {tol:g}"
        )


@dataclass(frozen=True)
class AccuracyTrace:
    """Per-epoch accuracy series for one model; at least one of train/val."""

    epochs: int
    train_acc: np.ndarray | None = None
    val_acc: np.ndarray | None = None

    def __post_init__(self):
        if self.train_acc is None and self.val_acc is None:
            raise ValueError("AccuracyTrace needs train_acc or val_acc")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        for label, series in (("train_acc", self.train_acc), ("val_acc", self.val_acc)):
            if series is None:
                continue
            arr = _frozen_array(series, np.float64)
            if arr.shape != (self.epochs,):
                raise ValueError(f"{label} has length {arr.shape}, expected ({self.epochs},)")
            if np.any(arr < 0.0) or np.any(arr > 1.0):
                raise ValueError(f"{label} entries must lie in [0, 1]")
            object.__setattr__(self, label, arr)

    def accuracy(self, source: str) -> np.ndarray | None:
        """The series for ``source`` ('train' or 'validation'), or None."""
        if source == "train":
            return self.train_acc
        if source == "validation":
            return self.val_acc
        raise ValueError(f"unknown accuracy source {source!r}")


def validate_labels(labels, num_classes: int) -> np.ndarray:
    """Coerce to an int64 vector and check every entry is in [0, num_classes)."""
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise LabelOutOfRange(f"labels must be a 1-D vector, got shape {arr.shape}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.floor(arr)):
            raise LabelOutOfRange("labels must be integers")
    arr = arr.astype(np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= num_classes):
        bad = int(arr[(arr < 0) | (arr >= num_classes)][0])
        raise LabelOutOfRange(f"label {bad} outside [0, {num_classes})")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class WeightingConfig:
    """Knobs of the adaptive weighting engine.

    Defaults are the reference configuration: lambda starts at 0.5, moves in
    steps scaled by delta=0.1, and is clipped to [0.3, 0.9]. ``acc_source``
    selects which accuracy series drives the proportions and improvements.
    ``size_mode`` 'proportional' gives larger models larger size proportions;
    'inverse' favors smaller models. Weights are left unnormalized unless
    ``normalize_weights`` is set.
    """

    lambda_init: float = 0.5
    delta: float = 0.1
    lambda_min: float = 0.3
    lambda_max: float = 0.9
    acc_source: str = "validation"
    size_mode: str = "proportional"
    normalize_weights: bool = False

    def __post_init__(self):
        if not (0.0 <= self.lambda_min <= self.lambda_init <= self.lambda_max <= 1.0):
            raise ValueError(
                "need 0 <= lambda_min <= lambda_init <= lambda_max <= 1, got "
                f"min={self.lambda_min} init={self.lambda_init} max={self.lambda_max}"
            )
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if self.acc_source not in ACC_SOURCES:
            raise ValueError(f"acc_source must be one of {ACC_SOURCES}, got {self.acc_source!r}")
        if self.size_mode not in SIZE_MODES:
            raise ValueError(f"size_mode must be one of {SIZE_MODES}, got {self.size_mode!r}")

    def to_dict(self) -> dict:
        return {
            "lambda_init": self.lambda_init,
            "delta": self.delta,
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "acc_source": self.acc_source,
            "size_mode": self.size_mode,
            "normalize_weights": self.normalize_weights,
        }


@dataclass(frozen=True)
class EpochSnapshot:
    """State of the weighting engine after one epoch."""

    epoch: int
    lambdas: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    weights: np.ndarray
    applied: bool

    def __post_init__(self):
        for name in ("lambdas", "alpha", "beta", "weights"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name), np.float64))


@dataclass(frozen=True)
class EnsembleState:
    """Final weighting state plus the full per-epoch history."""

    n_models: int
    lambdas: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    weights: np.ndarray
    history: tuple[EpochSnapshot, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.n_models < 2:
            raise ValueError(f"an ensemble needs >= 2 models, got {self.n_models}")
        for name in ("lambdas", "alpha", "beta", "weights"):
            arr = _frozen_array(getattr(self, name), np.float64)
            if arr.shape != (self.n_models,):
                raise ValueError(f"{name} must have shape ({self.n_models},), got {arr.shape}")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "history", tuple(self.history))

    @property
    def completed_epochs(self) -> int:
        return len(self.history)
