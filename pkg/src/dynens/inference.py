"""Weighted-softmax fusion over frozen ensemble weights.

A pure function: stacks per-model probability matrices, forms the weighted
sum per class, and takes the argmax. Only the argmax is contractually
meaningful; fused scores are not renormalized into probabilities.
"""
from __future__ import annotations

import numpy as np

from .core import PredictionMatrix
from .errors import AllZeroWeights, ShapeMismatch


def _as_prob_array(p) -> np.ndarray:
    arr = p.probs if isinstance(p, PredictionMatrix) else np.asarray(p, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatch(f"prediction matrix must be 2-D, got shape {arr.shape}")
    return arr


def ensemble_predict(preds, weights) -> tuple[np.ndarray, np.ndarray]:
    """Fuse per-model probabilities with fixed weights and pick classes.

    Parameters
    ----------
    preds : sequence of (N, K) arrays or PredictionMatrix
        One probability matrix per model, all the same shape.
    weights : length-n vector of nonnegative reals, at least one positive.

    Returns
    -------
    (labels, fused) : fused[x, c] = sum_i weights[i] * preds[i][x, c] and
        labels[x] = argmax_c fused[x, c], ties broken toward the smallest
        class index. Positive rescaling of ``weights`` never changes labels.
    """
    mats = [_as_prob_array(p) for p in preds]
    if not mats:
        raise ShapeMismatch("need at least one prediction matrix")
    shape = mats[0].shape
    for i, m in enumerate(mats[1:], start=1):
        if m.shape != shape:
            raise ShapeMismatch(f"matrix 0 has shape {shape} but matrix {i} has {m.shape}")

    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (len(mats),):
        raise ShapeMismatch(f"{len(mats)} matrices but weight vector of shape {w.shape}")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if not np.any(w > 0):
        raise AllZeroWeights("all ensemble weights are zero")

    fused = np.tensordot(w, np.stack(mats), axes=1)
    labels = fused.argmax(axis=1)  # np.argmax returns the first (smallest) index on ties
    return labels, fused
