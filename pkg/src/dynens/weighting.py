"""Epoch-wise adaptive ensemble weighting.

Each model i carries a balancing parameter lambda_i mixing two normalized
proportions: alpha_i (its accuracy relative to the ensemble's total accuracy)
and beta_i (its parameter count relative to the ensemble's total). Per epoch,
lambda_i moves by delta times model i's share of the total positive accuracy
improvement, clipped to [lambda_min, lambda_max], and the ensemble weight is
recomputed as

    w_i = lambda_i * alpha_i + (1 - lambda_i) * beta_i.

The whole recurrence is deterministic: identical traces, profiles, and config
produce bit-identical histories.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    AccuracyTrace,
    EnsembleState,
    EpochSnapshot,
    ModelProfile,
    WeightingConfig,
    validate_profiles,
)
from .errors import (
    AllZeroAccuracies,
    MissingAccuracySource,
    UnequalEpochCounts,
)

#: Total positive improvement at or below this is treated as "no improvement";
#: the lambda update is skipped for the epoch.
ZERO_IMPROVEMENT_EPS = 1e-12

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class EpochUpdate:
    """What happened to lambda at one epoch.

    ``delta_acc`` is None at epoch 1, where no previous accuracy exists and
    no update is applied.
    """

    epoch: int
    acc: np.ndarray
    delta_acc: np.ndarray | None
    applied: bool


def accuracy_proportion(acc) -> np.ndarray:
    """Normalize per-model accuracies to a unit-sum vector alpha.

    alpha_i = acc_i / sum_j acc_j. Requires n >= 2 nonnegative accuracies
    with at least one positive; raises AllZeroAccuracies otherwise.
    """
    a = np.asarray(acc, dtype=np.float64)
    if a.ndim != 1 or a.size < 2:
        raise ValueError(f"need a vector of >= 2 accuracies, got shape {a.shape}")
    if np.any(a < 0):
        raise ValueError("accuracies must be nonnegative")
    total = a.sum()
    if total <= 0.0:
        raise AllZeroAccuracies("cannot normalize: every accuracy is zero")
    return a / total


def size_proportion(profiles, mode: str = "proportional") -> np.ndarray:
    """Normalize model sizes to a unit-sum vector beta.

    mode='proportional' is the literal size share S_i / sum_j S_j (larger
    models get larger beta); mode='inverse' uses (1/S_i) / sum_j (1/S_j),
    favoring smaller models.
    """
    profiles = list(profiles)
    if len(profiles) < 2:
        raise ValueError(f"need >= 2 profiles, got {len(profiles)}")
    validate_profiles(profiles)
    sizes = np.array([float(p.param_count) for p in profiles])
    if mode == "proportional":
        return sizes / sizes.sum()
    if mode == "inverse":
        inv = 1.0 / sizes
        return inv / inv.sum()
    raise ValueError(f"unknown size mode {mode!r}")


def update_lambdas(lambdas, delta_acc, config: WeightingConfig) -> tuple[np.ndarray, bool]:
    """One lambda update step from per-model accuracy improvements.

    Only positive improvements participate: with D = sum_j max(delta_acc_j, 0),

        lambda_i <- clip(lambda_i + delta * max(delta_acc_i, 0) / D,
                         lambda_min, lambda_max)

    for models with delta_acc_i > 0, all others unchanged. When D is zero (no
    model improved) the vector is returned untouched and ``applied`` is False.
    """
    lam = np.asarray(lambdas, dtype=np.float64)
    d = np.asarray(delta_acc, dtype=np.float64)
    if lam.shape != d.shape:
        raise ValueError(f"lambda shape {lam.shape} != delta_acc shape {d.shape}")
    gains = np.maximum(d, 0.0)
    total = gains.sum()
    if total <= ZERO_IMPROVEMENT_EPS:
        return lam.copy(), False
    stepped = np.clip(lam + config.delta * gains / total, config.lambda_min, config.lambda_max)
    return np.where(gains > 0.0, stepped, lam), True


def final_weights(lambdas, alpha, beta, normalize: bool = False) -> np.ndarray:
    """w_i = lambda_i * alpha_i + (1 - lambda_i) * beta_i.

    alpha and beta must each sum to 1 (within 1e-12). The result is
    nonnegative; it is divided by its sum only when ``normalize`` is set.
    """
    lam = np.asarray(lambdas, dtype=np.float64)
    a = np.asarray(alpha, dtype=np.float64)
    b = np.asarray(beta, dtype=np.float64)
    if not (lam.shape == a.shape == b.shape):
        raise ValueError(
            f"shape mismatch: lambda {lam.shape}, alpha {a.shape}, beta {b.shape}"
        )
    for name, vec in (("alpha", a), ("beta", b)):
        if abs(vec.sum() - 1.0) > _SUM_TOL:
            raise ValueError(f"{name} must sum to 1 within {_SUM_TOL:g}, got {vec.sum()!r}")
    w = lam * a + (1.0 - lam) * b
    if normalize:
        w = w / w.sum()
    return w


def _acc_matrix(traces, source: str) -> np.ndarray:
    """Stack per-model accuracy series into a (T, n) matrix."""
    epoch_counts = {t.epochs for t in traces}
    if len(epoch_counts) != 1:
        raise UnequalEpochCounts(f"traces disagree on epoch count: {sorted(epoch_counts)}")
    cols = []
    for i, trace in enumerate(traces):
        series = trace.accuracy(source)
        if series is None:
            raise MissingAccuracySource(f"trace {i} has no {source!r} accuracy series")
        cols.append(series)
    return np.stack(cols, axis=1)


def run_training(
    traces: list[AccuracyTrace],
    profiles: list[ModelProfile],
    config: WeightingConfig = WeightingConfig(),
) -> EnsembleState:
    """Run the full epoch loop over recorded accuracy traces.

    Epoch 1 records the initial lambdas (no improvement is defined yet);
    every later epoch applies the lambda update from that epoch's accuracy
    improvements, then recomputes alpha from the epoch's accuracies and the
    weights from (lambda, alpha, beta). beta is fixed by the model sizes.
    Both the improvements and alpha are read from ``config.acc_source``.

    Returns the final EnsembleState whose history holds one snapshot per
    epoch.
    """
    traces = list(traces)
    profiles = list(profiles)
    if len(traces) != len(profiles):
        raise ValueError(f"{len(traces)} traces but {len(profiles)} profiles")
    n = len(profiles)
    if n < 2:
        raise ValueError(f"an ensemble needs >= 2 models, got {n}")

    source = config.acc_source
    acc = _acc_matrix(traces, source)  # (T, n)
    beta = size_proportion(profiles, config.size_mode)

    lambdas = np.full(n, config.lambda_init, dtype=np.float64)
    history = []
    alpha = weights = None
    for t in range(1, acc.shape[0] + 1):
        if t == 1:
            applied = False
        else:
            delta_acc = acc[t - 1] - acc[t - 2]
            lambdas, applied = update_lambdas(lambdas, delta_acc, config)
        alpha = accuracy_proportion(acc[t - 1])
        weights = final_weights(lambdas, alpha, beta, config.normalize_weights)
        history.append(
            EpochSnapshot(
                epoch=t, lambdas=lambdas, alpha=alpha, beta=beta,
                weights=weights, applied=applied,
            )
        )

    return EnsembleState(
        n_models=n,
        lambdas=lambdas,
        alpha=alpha,
        beta=beta,
        weights=weights,
        history=tuple(history),
    )


def static_weights(n: int) -> np.ndarray:
    """Uniform 1/n weights: the static ensemble baseline."""
    if n < 1:
        raise ValueError(f"need >= 1 model, got {n}")
    return np.full(n, 1.0 / n)
