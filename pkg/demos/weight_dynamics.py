"""Watch the adaptive weights move epoch by epoch.

Three synthetic models with different learning curves share one world. The
fast improver earns lambda (and weight) early; once every curve saturates,
the improvements vanish and the weights freeze.

Run: python demos/weight_dynamics.py
"""
import numpy as np

from dynens import (
    SynthModelSpec,
    SynthWorldSpec,
    generate_bundle,
    run_training,
)

world = SynthWorldSpec(
    num_classes=4,
    n_train=600,
    n_val=400,
    n_test=800,
    class_priors=(0.25, 0.25, 0.25, 0.25),
    rho=0.2,
    seed=42,
)
models = [
    SynthModelSpec("sprinter", 417_284, a0=0.45, a_inf=0.93, tau=2.5, gamma=0.7, kappa=0.3),
    SynthModelSpec("steady", 174_420, a0=0.55, a_inf=0.90, tau=6.0, gamma=0.7, kappa=0.3),
    SynthModelSpec("plateau", 402_308, a0=0.62, a_inf=0.66, tau=1.5, gamma=0.7, kappa=0.3),
]

bundle = generate_bundle(world, models, epochs=15)
names = bundle.model_names
state = run_training([bundle.traces[n] for n in names], bundle.profiles)

print(f"{'epoch':>5} | " + " | ".join(f"{n:>22}" for n in names))
print(f"{'':>5} | " + " | ".join(f"{'lam    alpha  weight':>22}" for _ in names))
for snap in state.history:
    cells = [
        f"{snap.lambdas[i]:.3f}  {snap.alpha[i]:.3f}  {snap.weights[i]:.4f}"
        for i in range(len(names))
    ]
    marker = "" if snap.applied or snap.epoch == 1 else "   (no improvement)"
    print(f"{snap.epoch:>5} | " + " | ".join(f"{c:>22}" for c in cells) + marker)

print()
print("final weights:", {n: round(float(w), 4) for n, w in zip(names, state.weights)})
print("weight sum   :", round(float(np.sum(state.weights)), 6),
      "(unnormalized mix of accuracy and size shares)")
