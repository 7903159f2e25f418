"""Seeded synthetic classifiers, datasets, and the stratified split.

Synthetic models follow exponential-saturation learning curves

    a(t) = a_inf - (a_inf - a0) * exp(-(t - 1) / tau)

and emit peaked probability rows (gamma at the predicted class, the rest
spread uniformly, optionally jittered). Cross-model error correlation is
controlled by rho: per sample, a shared gate decides whether all models use
one common correctness draw or independent ones.

Randomness is numpy PCG64, keyed through SeedSequence(entropy=seed,
spawn_key=(purpose, split, epoch, model)). Each sample consumes a fixed
number of draws from its stream, so any (seed, model, epoch, sample) cell is
reproducible in isolation, generation can be parallelized across
(model, epoch) pairs, and changing one model's spec leaves every other
model's matrices bit-identical. Cross-model draws live in a reserved stream
slot that no real model uses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ModelProfile, PredictionMatrix, _NAME_RE
from .errors import BadFractions, SmallClass

SPLITS = ("train", "val", "test")
_SPLIT_CODES = {"train": 0, "val": 1, "test": 2}

_PURPOSE_LABELS = 0
_PURPOSE_PREDS = 1
_PURPOSE_SPLIT = 2
_SHARED_SLOT = 0xFFFF  # model slot reserved for cross-model (correlation) draws

#: Default synthetic per-model latency when a spec does not record one:
#: a stand-in milliseconds figure that grows with model size, so
#: recorded-latency benchmarking works out of the box on synthetic worlds.
def default_latency_ms(param_count: int) -> float:
    return 1.0 + param_count / 1e5


def _stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class SynthModelSpec:
    """One synthetic base classifier.

    a0/a_inf/tau shape the learning curve; gamma is the probability mass on
    the predicted class; kappa in [0, 2) scales symmetric jitter on the
    off-peak entries (the peak itself is preserved); confusion_bias maps a
    true class to a preferred wrong answer. name/param_count/latency_ms feed
    the bundle's model profile.
    """

    name: str
    param_count: int
    a0: float
    a_inf: float
    tau: float
    gamma: float
    kappa: float = 0.0
    confusion_bias: dict[int, int] | None = None
    latency_ms: float | None = None

    def accuracy_at(self, epoch: int) -> float:
        """Target accuracy at a 1-based epoch; a(1) = a0, a(inf) = a_inf."""
        if epoch < 1:
            raise ValueError(f"epoch must be >= 1, got {epoch}")
        return self.a_inf - (self.a_inf - self.a0) * math.exp(-(epoch - 1) / self.tau)

    def profile(self) -> ModelProfile:
        latency = self.latency_ms if self.latency_ms is not None else default_latency_ms(self.param_count)
        return ModelProfile(name=self.name, param_count=self.param_count, latency_ms=latency)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "param_count": self.param_count,
            "a0": self.a0,
            "a_inf": self.a_inf,
            "tau": self.tau,
            "gamma": self.gamma,
            "kappa": self.kappa,
        }
        if self.confusion_bias:
            d["confusion_bias"] = {str(k): v for k, v in self.confusion_bias.items()}
        if self.latency_ms is not None:
            d["latency_ms"] = self.latency_ms
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthModelSpec":
        bias = d.get("confusion_bias")
        if bias is not None:
            bias = {int(k): int(v) for k, v in bias.items()}
        return cls(
            name=d["name"],
            param_count=int(d["param_count"]),
            a0=float(d["a0"]),
            a_inf=float(d["a_inf"]),
            tau=float(d["tau"]),
            gamma=float(d["gamma"]),
            kappa=float(d.get("kappa", 0.0)),
            confusion_bias=bias,
            latency_ms=float(d["latency_ms"]) if d.get("latency_ms") is not None else None,
        )


@dataclass(frozen=True)
class SynthWorldSpec:
    """A synthetic classification world: classes, split sizes, correlation, seed."""

    num_classes: int
    n_train: int
    n_val: int
    n_test: int
    class_priors: tuple[float, ...]
    rho: float = 0.0
    seed: int = 0

    def n_samples(self, split: str) -> int:
        return {"train": self.n_train, "val": self.n_val, "test": self.n_test}[split]

    def to_dict(self) -> dict:
        return {
            "num_classes": self.num_classes,
            "n_train": self.n_train,
            "n_val": self.n_val,
            "n_test": self.n_test,
            "class_priors": list(self.class_priors),
            "rho": self.rho,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthWorldSpec":
        return cls(
            num_classes=int(d["num_classes"]),
            n_train=int(d["n_train"]),
            n_val=int(d["n_val"]),
            n_test=int(d["n_test"]),
            class_priors=tuple(float(x) for x in d["class_priors"]),
            rho=float(d.get("rho", 0.0)),
            seed=int(d.get("seed", 0)),
        )


def validate_world(world: SynthWorldSpec) -> None:
    if world.num_classes < 2:
        raise ValueError(f"num_classes must be >= 2, got {world.num_classes}")
    for split in SPLITS:
        if world.n_samples(split) < 1:
            raise ValueError(f"{split} split must have >= 1 sample")
    priors = np.asarray(world.class_priors, dtype=np.float64)
    if priors.shape != (world.num_classes,) or np.any(priors < 0):
        raise ValueError("class_priors must be a nonnegative vector of length num_classes")
    if abs(priors.sum() - 1.0) > 1e-9:
        raise ValueError(f"class_priors must sum to 1 within 1e-9, got {priors.sum()!r}")
    if not 0.0 <= world.rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {world.rho}")
    if world.seed < 0:
        raise ValueError(f"seed must be nonnegative, got {world.seed}")


def validate_model_spec(spec: SynthModelSpec, num_classes: int) -> None:
    if not _NAME_RE.match(spec.name or ""):
        raise ValueError(f"model name {spec.name!r} is not a valid identifier")
    if spec.param_count < 1:
        raise ValueError(f"{spec.name}: param_count must be >= 1")
    if not 0.0 < spec.a0 < 1.0:
        raise ValueError(f"{spec.name}: a0 must lie in (0, 1), got {spec.a0}")
    if not spec.a0 < spec.a_inf <= 1.0:
        raise ValueError(f"{spec.name}: a_inf must lie in (a0, 1], got {spec.a_inf}")
    if not spec.tau > 0:
        raise ValueError(f"{spec.name}: tau must be positive, got {spec.tau}")
    if not 1.0 / num_classes < spec.gamma <= 1.0:
        raise ValueError(
            f"{spec.name}: gamma must lie in (1/{num_classes}, 1], got {spec.gamma}"
        )
    if not 0.0 <= spec.kappa < 2.0:
        raise ValueError(f"{spec.name}: kappa must lie in [0, 2), got {spec.kappa}")
    if spec.confusion_bias:
        for src, dst in spec.confusion_bias.items():
            if not (0 <= src < num_classes and 0 <= dst < num_classes and src != dst):
                raise ValueError(f"{spec.name}: bad confusion_bias entry {src} -> {dst}")


def generate_labels(world: SynthWorldSpec, split: str) -> np.ndarray:
    """Draw the split's true labels i.i.d. from the class priors."""
    validate_world(world)
    rng = _stream(world.seed, _PURPOSE_LABELS, _SPLIT_CODES[split])
    priors = np.asarray(world.class_priors, dtype=np.float64)
    priors = priors / priors.sum()
    return rng.choice(world.num_classes, size=world.n_samples(split), p=priors)


def generate_epoch_predictions(
    world: SynthWorldSpec,
    models: list[SynthModelSpec],
    epoch: int,
    split: str,
) -> tuple[list[PredictionMatrix], np.ndarray]:
    """Probability matrices for every model at one epoch, plus realized accuracies.

    Per sample: a gate draw from the shared stream selects (with probability
    rho) a common correctness uniform for all models, otherwise each model
    uses its own; the model is correct when the uniform falls below its
    a(epoch). Correct rows peak at the true label, incorrect rows at the
    confusion-bias target or a uniformly chosen wrong class. Realized
    accuracy is the argmax agreement rate against the true labels.
    """
    validate_world(world)
    for spec in models:
        validate_model_spec(spec, world.num_classes)

    labels = generate_labels(world, split)
    n, k = labels.size, world.num_classes
    idx = np.arange(n)

    shared = _stream(world.seed, _PURPOSE_PREDS, _SPLIT_CODES[split], epoch, _SHARED_SLOT)
    gate = shared.random(n)
    v_shared = shared.random(n)

    matrices: list[PredictionMatrix] = []
    accs = np.empty(len(models))
    for m_idx, spec in enumerate(models):
        rng = _stream(world.seed, _PURPOSE_PREDS, _SPLIT_CODES[split], epoch, m_idx)
        # fixed per-sample draw layout: correctness, wrong-class pick, K jitter values
        v_own = rng.random(n)
        wrong_u = rng.random(n)
        jitter = rng.random((n, k))

        target = spec.accuracy_at(epoch)
        v = np.where(gate < world.rho, v_shared, v_own)
        correct = v < target

        wrong = np.minimum(np.floor(wrong_u * (k - 1)).astype(np.int64), k - 2)
        wrong += wrong >= labels  # skip the true class
        if spec.confusion_bias:
            bias = np.full(k, -1, dtype=np.int64)
            for src, dst in spec.confusion_bias.items():
                bias[src] = dst
            preferred = bias[labels]
            wrong = np.where(preferred >= 0, preferred, wrong)
        peak = np.where(correct, labels, wrong)

        rows = np.full((n, k), (1.0 - spec.gamma) / (k - 1))
        rows[idx, peak] = spec.gamma
        if spec.kappa > 0.0 and spec.gamma < 1.0:
            off = rows * (1.0 + spec.kappa * (jitter - 0.5))
            off[idx, peak] = 0.0
            rows = off * ((1.0 - spec.gamma) / off.sum(axis=1))[:, None]
            rows[idx, peak] = spec.gamma

        matrices.append(PredictionMatrix(rows))
        accs[m_idx] = float((rows.argmax(axis=1) == labels).mean())
    return matrices, accs


def _largest_remainder(n: int, fractions: np.ndarray) -> np.ndarray:
    exact = n * fractions
    counts = np.floor(exact).astype(np.int64)
    leftovers = n - counts.sum()
    order = np.argsort(-(exact - counts), kind="stable")  # ties -> earliest split
    counts[order[:leftovers]] += 1
    return counts


def stratified_split(labels, fractions=(0.8, 0.1, 0.1), seed: int = 0):
    """Split sample indices per class, preserving class proportions.

    Each class's allocation to each split is within one sample of the exact
    fraction (largest-remainder rounding of a seeded per-class shuffle).
    Returns one sorted index array per fraction; the arrays are disjoint and
    cover every index. Deterministic for a fixed seed.
    """
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise BadFractions(f"labels must be a 1-D vector, got shape {labels.shape}")
    fr = np.asarray(fractions, dtype=np.float64)
    if fr.ndim != 1 or fr.size < 2 or np.any(fr < 0):
        raise BadFractions(f"fractions must be a nonnegative vector, got {fractions!r}")
    if abs(fr.sum() - 1.0) > 1e-9:
        raise BadFractions(f"fractions must sum to 1, got {fr.sum()!r}")

    parts: list[list[np.ndarray]] = [[] for _ in fr]
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if members.size < 3:
            raise SmallClass(f"class {c} has only {members.size} samples (need >= 3)")
        perm = _stream(seed, _PURPOSE_SPLIT, int(c)).permutation(members)
        counts = _largest_remainder(members.size, fr)
        start = 0
        for j, cnt in enumerate(counts):
            parts[j].append(perm[start : start + cnt])
            start += cnt
    return tuple(
        np.sort(np.concatenate(p)) if p else np.empty(0, dtype=np.int64) for p in parts
    )


def generate_bundle(
    world: SynthWorldSpec,
    models: list[SynthModelSpec],
    epochs: int,
    include_epoch_preds: bool = False,
):
    """Simulate a full multi-model experiment into an in-memory trace bundle.

    Per epoch, train and val predictions are generated for every model and
    their realized accuracies become the accuracy traces; the test
    predictions are the final epoch's. With ``include_epoch_preds`` the
    per-epoch train/val matrices are kept in the bundle (and written to disk
    by the bundle writer), which lets loaders re-derive the traces.
    """
    from .dataio import TraceBundle, profile_to_dict

    validate_world(world)
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    names = [m.name for m in models]
    if len(set(names)) != len(names):
        raise ValueError("duplicate synthetic model names")
    for spec in models:
        validate_model_spec(spec, world.num_classes)

    profiles = [spec.profile() for spec in models]
    labels = {split: generate_labels(world, split) for split in SPLITS}

    train_acc = np.empty((epochs, len(models)))
    val_acc = np.empty((epochs, len(models)))
    epoch_preds: dict[tuple[str, int, str], PredictionMatrix] = {}
    for t in range(1, epochs + 1):
        train_mats, train_acc[t - 1] = generate_epoch_predictions(world, models, t, "train")
        val_mats, val_acc[t - 1] = generate_epoch_predictions(world, models, t, "val")
        if include_epoch_preds:
            for name, tm, vm in zip(names, train_mats, val_mats):
                epoch_preds[(name, t, "train")] = tm
                epoch_preds[(name, t, "val")] = vm

    test_mats, _ = generate_epoch_predictions(world, models, epochs, "test")

    from .core import AccuracyTrace

    traces = {
        name: AccuracyTrace(epochs, train_acc=train_acc[:, i], val_acc=val_acc[:, i])
        for i, name in enumerate(names)
    }
    manifest = {
        "schema_version": 1,
        "num_classes": world.num_classes,
        "class_names": [f"class_{i}" for i in range(world.num_classes)],
        "epochs": epochs,
        "seed": world.seed,
        "splits": list(SPLITS),
        "models": [profile_to_dict(p) for p in profiles],
        "synth": {
            "world": world.to_dict(),
            "models": [m.to_dict() for m in models],
            "epochs": epochs,
        },
    }
    return TraceBundle(
        manifest=manifest,
        profiles=profiles,
        labels=labels,
        traces=traces,
        test_preds={name: test_mats[i] for i, name in enumerate(names)},
        epoch_preds=epoch_preds,
    )
