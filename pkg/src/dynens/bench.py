"""Latency measurement, ablation grid, and Pareto-frontier extraction.

Latency numbers are whatever this platform produces; they are reported, never
matched against any external figure. The interesting decomposition is
``overhead_fraction``: the share of total ensemble time spent in weighting +
fusion rather than in per-model prediction work, measured stage-by-stage
inside each repetition so the ratio is always well-defined.
"""
from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

import numpy as np

from .core import WeightingConfig
from .dataio import TraceBundle
from .errors import AllPairsEqual, TooFewModels
from .inference import ensemble_predict
from .metrics import wilcoxon_signed_rank
from .weighting import run_training, static_weights
from . import synth as _synth
from .dataio import derive_accuracy


@dataclass(frozen=True)
class LatencyStats:
    """Aggregate wall-clock stats over repetitions, in milliseconds."""

    p50_ms: float
    mean_ms: float
    std_ms: float
    reps: int
    overhead_fraction: float | None = None

    def __post_init__(self):
        if self.p50_ms < 0 or self.mean_ms < 0 or self.std_ms < 0:
            raise ValueError("latency stats must be nonnegative")
        if self.p50_ms > self.mean_ms + 3.0 * self.std_ms + 1e-9:
            raise ValueError(
                f"implausible latency sample: p50 {self.p50_ms} > mean {self.mean_ms} "
                f"+ 3*std {self.std_ms}"
            )
        if self.overhead_fraction is not None and not 0.0 <= self.overhead_fraction < 1.0:
            raise ValueError(f"overhead_fraction must lie in [0, 1), got {self.overhead_fraction}")

    def to_dict(self) -> dict:
        return {
            "p50_ms": self.p50_ms,
            "mean_ms": self.mean_ms,
            "std_ms": self.std_ms,
            "reps": self.reps,
            "overhead_fraction": self.overhead_fraction,
        }


def _aggregate(times_ms: list[float], reps: int, overhead: float | None = None) -> LatencyStats:
    return LatencyStats(
        p50_ms=statistics.median(times_ms),
        mean_ms=statistics.fmean(times_ms),
        std_ms=statistics.stdev(times_ms),
        reps=reps,
        overhead_fraction=overhead,
    )


def measure_latency(work, warmup: int = 3, reps: int = 30) -> LatencyStats:
    """Time an opaque closure: ``warmup`` discarded runs, then ``reps`` timed ones.

    Uses the monotonic performance counter; runs strictly sequentially.
    Requires reps >= 5.
    """
    if reps < 5:
        raise ValueError(f"need reps >= 5, got {reps}")
    for _ in range(warmup):
        work()
    times = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        work()
        times.append((time.perf_counter_ns() - t0) / 1e6)
    return _aggregate(times, reps)


def measure_decomposed(model_work, fusion_work, warmup: int = 3, reps: int = 30) -> LatencyStats:
    """Time per-model work and fusion work within each repetition.

    ``model_work`` is a sequence of closures (one per base model) and
    ``fusion_work`` the weighting+fusion step. The reported latency is the
    total per rep; overhead_fraction is the median per-rep share of fusion
    time in the total.
    """
    if reps < 5:
        raise ValueError(f"need reps >= 5, got {reps}")
    model_work = list(model_work)
    for _ in range(warmup):
        for w in model_work:
            w()
        fusion_work()
    totals, fractions = [], []
    for _ in range(reps):
        t_models = 0
        for w in model_work:
            t0 = time.perf_counter_ns()
            w()
            t_models += time.perf_counter_ns() - t0
        t0 = time.perf_counter_ns()
        fusion_work()
        t_fusion = time.perf_counter_ns() - t0
        totals.append((t_models + t_fusion) / 1e6)
        fractions.append(t_fusion / (t_models + t_fusion))
    return _aggregate(totals, reps, overhead=statistics.median(fractions))


def pareto_points(points) -> list:
    """Filter (name, accuracy, latency) points to the non-dominated subset.

    A point is dominated when some other point has accuracy >= and latency <=
    with at least one strict; exact duplicates are all retained. Output
    preserves input order and is idempotent.
    """
    pts = list(points)
    if not pts:
        raise ValueError("need at least one point")
    keep = []
    for i, (_, acc_i, lat_i) in enumerate(pts):
        dominated = any(
            j != i
            and acc_j >= acc_i
            and lat_j <= lat_i
            and (acc_j > acc_i or lat_j < lat_i)
            for j, (_, acc_j, lat_j) in enumerate(pts)
        )
        if not dominated:
            keep.append(pts[i])
    return keep


def pareto_csv(points) -> str:
    """CSV table `name,accuracy,latency_ms,on_frontier` for plot scripts."""
    frontier = {p[0] for p in pareto_points(points)}
    lines = ["name,accuracy,latency_ms,on_frontier"]
    for name, acc, lat in points:
        lines.append(f"{name},{acc!r},{lat!r},{str(name in frontier).lower()}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class AblationResult:
    """One ensemble variant's per-seed accuracies and its test vs the reference."""

    name: str
    per_seed_accuracy: tuple[float, ...]
    mean_accuracy: float
    p_value: float
    reference: bool = False

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "per_seed_accuracy": list(self.per_seed_accuracy),
            "mean_accuracy": self.mean_accuracy,
            "p_value": self.p_value,
            "reference": self.reference,
        }


def ablation_csv(results: list[AblationResult]) -> str:
    lines = ["name,mean_accuracy,p_value,reference"]
    for r in results:
        lines.append(f"{r.name},{r.mean_accuracy!r},{r.p_value!r},{str(r.reference).lower()}")
    return "\n".join(lines) + "\n"


def _variant_names(model_names: list[str]) -> list[tuple[str, list[str], str]]:
    """(variant name, member models, mode) for the ablation grid."""
    variants: list[tuple[str, list[str], str]] = [("full-dynamic", model_names, "dynamic")]
    if len(model_names) >= 3:
        for i in range(len(model_names)):
            for j in range(i + 1, len(model_names)):
                pair = [model_names[i], model_names[j]]
                variants.append(("+".join(pair), pair, "dynamic"))
    variants.append(("static-uniform", model_names, "static"))
    return variants


def _bundle_accuracy(bundle: TraceBundle, members: list[str], mode: str,
                     config: WeightingConfig, sample_idx=None) -> float:
    sub = bundle.subset(members)
    if mode == "static":
        weights = static_weights(len(members))
    else:
        state = run_training(
            [sub.traces[n] for n in members], list(sub.profiles), config
        )
        weights = state.weights
    preds, _ = ensemble_predict([sub.test_preds[n] for n in members], weights)
    truth = sub.labels["test"]
    if sample_idx is not None:
        preds, truth = preds[sample_idx], truth[sample_idx]
    return float((preds == truth).mean())


def run_ablation(bundle: TraceBundle, config: WeightingConfig, seeds) -> list[AblationResult]:
    """Compare the full dynamic ensemble against pairwise subsets and the
    static-uniform baseline, over multiple seeds.

    Synthetic bundles (manifest carries a `synth` section) are regenerated per
    seed. Recorded bundles hold a single trace, so seeds instead vary a
    bootstrap resample of the test set, shared across variants so the
    per-seed accuracies stay paired. Each variant's per-seed accuracies are
    tested against full-dynamic with the Wilcoxon signed-rank test; the
    reference row and variants indistinguishable from it report p = 1.0.
    """
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("need at least one seed")
    names = bundle.model_names
    if len(names) < 2:
        raise TooFewModels(f"ablation needs >= 2 models, bundle has {len(names)}")

    variants = _variant_names(names)
    synth_section = bundle.manifest.get("synth")

    acc: dict[str, list[float]] = {v[0]: [] for v in variants}
    if synth_section is not None:
        world = _synth.SynthWorldSpec.from_dict(synth_section["world"])
        specs = [_synth.SynthModelSpec.from_dict(d) for d in synth_section["models"]]
        epochs = int(synth_section["epochs"])
        for seed in seeds:
            regen = _synth.generate_bundle(
                _replace_seed(world, seed), specs, epochs
            )
            for vname, members, mode in variants:
                acc[vname].append(_bundle_accuracy(regen, members, mode, config))
    else:
        n_test = bundle.labels["test"].size
        for seed in seeds:
            idx = _synth._stream(seed, 3).integers(0, n_test, size=n_test)
            for vname, members, mode in variants:
                acc[vname].append(_bundle_accuracy(bundle, members, mode, config, sample_idx=idx))

    reference = acc["full-dynamic"]
    results = []
    for vname, _, _ in variants:
        values = acc[vname]
        if vname == "full-dynamic":
            p = 1.0
        else:
            try:
                p = wilcoxon_signed_rank(reference, values).p_value
            except AllPairsEqual:
                p = 1.0  # identical accuracies on every seed: no evidence of difference
        results.append(
            AblationResult(
                name=vname,
                per_seed_accuracy=tuple(values),
                mean_accuracy=float(np.mean(values)),
                p_value=p,
                reference=vname == "full-dynamic",
            )
        )
    return results


def _replace_seed(world: "_synth.SynthWorldSpec", seed: int) -> "_synth.SynthWorldSpec":
    d = world.to_dict()
    d["seed"] = seed
    return _synth.SynthWorldSpec.from_dict(d)


def recorded_pareto_points(bundle: TraceBundle, config: WeightingConfig) -> list:
    """Deterministic (name, accuracy, latency_ms) points from recorded latencies.

    Singles use each profile's recorded latency_ms; ensemble variants
    (static-uniform and full-dynamic) use the sum of member latencies, a
    documented lower bound that excludes fusion overhead. Raises if any
    profile lacks a recorded latency.
    """
    missing = [p.name for p in bundle.profiles if p.latency_ms is None]
    if missing:
        raise ValueError(
            f"models {missing} have no recorded latency_ms in the manifest; "
            "recorded-latency benchmarking needs them (or measure live)"
        )
    names = bundle.model_names
    points = []
    truth = bundle.labels["test"]
    for p in bundle.profiles:
        points.append(
            (p.name, derive_accuracy(bundle.test_preds[p.name], truth), float(p.latency_ms))
        )
    total_latency = float(sum(p.latency_ms for p in bundle.profiles))
    if len(names) >= 2:
        points.append(
            ("static-uniform", _bundle_accuracy(bundle, names, "static", config), total_latency)
        )
        points.append(
            ("full-dynamic", _bundle_accuracy(bundle, names, "dynamic", config), total_latency)
        )
    return points


def measure_bundle_latency(bundle: TraceBundle, config: WeightingConfig,
                           warmup: int = 3, reps: int = 30) -> LatencyStats:
    """Live-measure trace-replay ensemble inference on this platform.

    Per-model work is each model's standalone argmax readout over its test
    matrix; the fusion stage is the weighted sum + argmax. Wall-clock, not
    reproducible, and never compared against recorded figures.
    """
    names = bundle.model_names
    if len(names) < 2:
        raise TooFewModels(f"ensemble latency needs >= 2 models, bundle has {len(names)}")
    state = run_training([bundle.traces[n] for n in names], list(bundle.profiles), config)
    mats = [bundle.test_preds[n].probs for n in names]
    weights = state.weights

    def _model_closure(m):
        return lambda: m.argmax(axis=1)

    return measure_decomposed(
        [_model_closure(m) for m in mats],
        lambda: ensemble_predict(mats, weights),
        warmup=warmup,
        reps=reps,
    )
