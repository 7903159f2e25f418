"""Ablation grid with significance tests, then the accuracy/latency frontier.

Every pairwise subset and the static 1/n baseline run against the full
dynamic ensemble over ten regenerated worlds; the Wilcoxon signed-rank test
pairs their per-seed accuracies. The Pareto table uses the recorded
per-model latencies from the bundle manifest.

Run: python demos/ablation_and_pareto.py
"""
from dynens import SynthModelSpec, SynthWorldSpec, WeightingConfig, generate_bundle
from dynens.bench import pareto_points, recorded_pareto_points, run_ablation

world = SynthWorldSpec(
    num_classes=4,
    n_train=500,
    n_val=400,
    n_test=1200,
    class_priors=(0.25, 0.25, 0.25, 0.25),
    rho=0.2,
    seed=3,
)
models = [
    SynthModelSpec("m_hi", 417_284, a0=0.55, a_inf=0.92, tau=4.0, gamma=0.7, kappa=0.3,
                   latency_ms=10.2),
    SynthModelSpec("m_md", 174_420, a0=0.50, a_inf=0.90, tau=4.0, gamma=0.7, kappa=0.3,
                   latency_ms=3.4),
    SynthModelSpec("m_lo", 402_308, a0=0.45, a_inf=0.86, tau=5.0, gamma=0.7, kappa=0.3,
                   latency_ms=8.9),
]
bundle = generate_bundle(world, models, epochs=16)
cfg = WeightingConfig()

print("=== ablation (10 seeds, Wilcoxon vs full-dynamic) ===")
print(f"{'variant':>16} | {'mean acc':>8} | {'p-value':>8}")
for result in run_ablation(bundle, cfg, seeds=range(10)):
    tag = " (reference)" if result.reference else ""
    print(f"{result.name:>16} | {result.mean_accuracy:>8.4f} | {result.p_value:>8.4f}{tag}")

print()
print("=== accuracy vs recorded latency ===")
points = recorded_pareto_points(bundle, cfg)
frontier = {p[0] for p in pareto_points(points)}
print(f"{'config':>16} | {'accuracy':>8} | {'latency ms':>10} | frontier")
for name, acc, lat in points:
    print(f"{name:>16} | {acc:>8.4f} | {lat:>10.2f} | {'yes' if name in frontier else 'no'}")
