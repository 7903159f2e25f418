import time

import numpy as np
import pytest

from dynens import (
    WeightingConfig,
    measure_decomposed,
    measure_latency,
    pareto_points,
    run_ablation,
)
from dynens.bench import (
    LatencyStats,
    ablation_csv,
    measure_bundle_latency,
    pareto_csv,
    recorded_pareto_points,
)
from dynens.dataio import TraceBundle
from dynens.errors import TooFewModels

import oracles


class TestMeasureLatency:
    def test_sleep_stub_p50(self):
        stats = measure_latency(lambda: time.sleep(0.05), warmup=1, reps=10)
        assert 50.0 <= stats.p50_ms <= 60.0

    def test_noop_smoke(self):
        stats = measure_latency(lambda: None, warmup=0, reps=5)
        assert stats.p50_ms >= 0 and stats.mean_ms >= 0
        assert np.isfinite(stats.std_ms)

    def test_consistency_between_identical_closures(self):
        work = lambda: sum(range(20_000))  # noqa: E731
        a = measure_latency(work, warmup=2, reps=15)
        b = measure_latency(work, warmup=2, reps=15)
        spread = max(a.std_ms, b.std_ms, 1e-3)
        assert abs(a.p50_ms - b.p50_ms) <= 3 * spread + 0.5

    def test_reps_floor(self):
        with pytest.raises(ValueError):
            measure_latency(lambda: None, reps=4)

    def test_stats_validation(self):
        with pytest.raises(ValueError):
            LatencyStats(p50_ms=100.0, mean_ms=1.0, std_ms=0.1, reps=5)
        with pytest.raises(ValueError):
            LatencyStats(p50_ms=1.0, mean_ms=1.0, std_ms=0.1, reps=5, overhead_fraction=1.0)


class TestDecomposition:
    def test_overhead_fraction_of_sleep_stages(self):
        stats = measure_decomposed(
            [lambda: time.sleep(0.004), lambda: time.sleep(0.004)],
            lambda: time.sleep(0.002),
            warmup=1,
            reps=6,
        )
        assert 0.0 <= stats.overhead_fraction < 1.0
        assert 0.1 <= stats.overhead_fraction <= 0.4  # ~2ms of ~10ms total
        assert stats.p50_ms >= 8.0


class TestPareto:
    def test_single_point(self):
        pts = [("only", 0.9, 10.0)]
        assert pareto_points(pts) == pts

    def test_hand_dominance(self):
        pts = [("A", 0.96, 70.0), ("B", 0.95, 10.0), ("C", 0.94, 50.0)]
        assert [p[0] for p in pareto_points(pts)] == ["A", "B"]

    def test_identical_points_both_retained(self):
        pts = [("A", 0.9, 5.0), ("B", 0.9, 5.0)]
        assert pareto_points(pts) == pts

    def test_idempotent_and_order_independent(self):
        rng = np.random.default_rng(21)
        for _ in range(30):
            pts = [
                (f"p{i}", float(rng.uniform(0.5, 1.0)), float(rng.uniform(1, 100)))
                for i in range(12)
            ]
            front = pareto_points(pts)
            assert pareto_points(front) == front
            assert sorted(p[0] for p in front) == sorted(oracles.pareto_names(pts))
            shuffled = [pts[i] for i in rng.permutation(len(pts))]
            assert sorted(p[0] for p in pareto_points(shuffled)) == sorted(
                p[0] for p in front
            )

    def test_csv_marks_frontier(self):
        text = pareto_csv([("A", 0.96, 70.0), ("B", 0.95, 10.0), ("C", 0.94, 50.0)])
        lines = text.splitlines()
        assert lines[0] == "name,accuracy,latency_ms,on_frontier"
        assert lines[1].endswith("true") and lines[3].endswith("false")


class TestAblation:
    def test_grid_shape_and_reference(self, small_bundle):
        results = run_ablation(small_bundle, WeightingConfig(), seeds=range(3))
        names = [r.name for r in results]
        assert names[0] == "full-dynamic"
        assert names[-1] == "static-uniform"
        assert len([n for n in names if "+" in n]) == 3  # all pairs of 3 models
        assert results[0].reference and results[0].p_value == 1.0
        for r in results:
            assert len(r.per_seed_accuracy) == 3

    def test_reproducible_under_seeds(self, small_bundle):
        a = run_ablation(small_bundle, WeightingConfig(), seeds=[4, 5])
        b = run_ablation(small_bundle, WeightingConfig(), seeds=[4, 5])
        assert a == b

    def test_full_dynamic_beats_every_pair_on_average(self, small_world, small_models):
        from dynens import generate_bundle

        bundle = generate_bundle(small_world, small_models, epochs=8)
        results = run_ablation(bundle, WeightingConfig(), seeds=range(6))
        by_name = {r.name: r for r in results}
        for name, r in by_name.items():
            if "+" in name:
                assert by_name["full-dynamic"].mean_accuracy >= r.mean_accuracy

    def test_static_row_equals_mean_softmax(self, small_bundle):
        from dynens.dataio import derive_accuracy

        results = run_ablation(small_bundle, WeightingConfig(), seeds=[0])
        static = next(r for r in results if r.name == "static-uniform")
        # regenerate the seed-0 bundle the ablation evaluated and fuse by plain mean
        from dynens.synth import SynthWorldSpec, SynthModelSpec
        from dynens import generate_bundle

        section = small_bundle.manifest["synth"]
        world = SynthWorldSpec.from_dict({**section["world"], "seed": 0})
        models = [SynthModelSpec.from_dict(d) for d in section["models"]]
        regen = generate_bundle(world, models, int(section["epochs"]))
        stack = np.stack([regen.test_preds[n].probs for n in regen.model_names])
        mean_labels = stack.mean(axis=0).argmax(axis=1)
        mean_acc = float((mean_labels == regen.labels["test"]).mean())
        assert static.per_seed_accuracy[0] == mean_acc

    def test_bootstrap_mode_for_recorded_bundles(self, small_bundle):
        manifest = dict(small_bundle.manifest)
        manifest.pop("synth")
        recorded = TraceBundle(
            manifest=manifest,
            profiles=small_bundle.profiles,
            labels=small_bundle.labels,
            traces=small_bundle.traces,
            test_preds=small_bundle.test_preds,
        )
        results = run_ablation(recorded, WeightingConfig(), seeds=range(4))
        assert all(len(r.per_seed_accuracy) == 4 for r in results)
        again = run_ablation(recorded, WeightingConfig(), seeds=range(4))
        assert results == again

    def test_too_few_models(self, small_bundle):
        solo = TraceBundle(
            manifest={**small_bundle.manifest,
                      "models": small_bundle.manifest["models"][:1]},
            profiles=small_bundle.profiles[:1],
            labels=small_bundle.labels,
            traces={"mobile": small_bundle.traces["mobile"]},
            test_preds={"mobile": small_bundle.test_preds["mobile"]},
        )
        with pytest.raises(TooFewModels):
            run_ablation(solo, WeightingConfig(), seeds=[0])

    def test_csv_format(self, small_bundle):
        results = run_ablation(small_bundle, WeightingConfig(), seeds=[0, 1])
        text = ablation_csv(results)
        assert text.splitlines()[0] == "name,mean_accuracy,p_value,reference"
        assert len(text.splitlines()) == len(results) + 1


class TestRecordedPareto:
    def test_points_and_ensemble_latency(self, small_bundle):
        points = recorded_pareto_points(small_bundle, WeightingConfig())
        names = [p[0] for p in points]
        assert names[:3] == small_bundle.model_names
        assert names[3:] == ["static-uniform", "full-dynamic"]
        singles_latency = [p.latency_ms for p in small_bundle.profiles]
        for ensemble_point in points[3:]:
            assert ensemble_point[2] == pytest.approx(sum(singles_latency))

    def test_missing_latency_is_an_error(self, small_bundle):
        from dynens.core import ModelProfile

        profiles = [
            ModelProfile(p.name, p.param_count) for p in small_bundle.profiles
        ]
        manifest = dict(small_bundle.manifest)
        manifest["models"] = [
            {"name": p.name, "param_count": p.param_count} for p in profiles
        ]
        stripped = TraceBundle(
            manifest=manifest,
            profiles=profiles,
            labels=small_bundle.labels,
            traces=small_bundle.traces,
            test_preds=small_bundle.test_preds,
        )
        with pytest.raises(ValueError, match="latency_ms"):
            recorded_pareto_points(stripped, WeightingConfig())


def test_measured_bundle_latency_has_valid_overhead(small_bundle):
    stats = measure_bundle_latency(small_bundle, WeightingConfig(), warmup=2, reps=8)
    assert stats.overhead_fraction is not None
    assert 0.0 <= stats.overhead_fraction < 1.0
    assert stats.p50_ms > 0
