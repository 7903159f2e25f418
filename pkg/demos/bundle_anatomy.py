"""The trace-bundle wire format, inspected file by file.

Writes a tiny bundle, prints its layout and a few raw lines, then shows the
fail-fast validation by corrupting one probability row.

Run: python demos/bundle_anatomy.py
"""
import tempfile
from pathlib import Path

from dynens import SynthModelSpec, SynthWorldSpec, generate_bundle, load_bundle, write_bundle
from dynens.errors import BadProbabilityRow

world = SynthWorldSpec(
    num_classes=3,
    n_train=24,
    n_val=18,
    n_test=12,
    class_priors=(0.4, 0.3, 0.3),
    seed=1,
)
models = [
    SynthModelSpec("tiny", 9_000, a0=0.5, a_inf=0.9, tau=2.0, gamma=0.8),
    SynthModelSpec("wide", 21_000, a0=0.4, a_inf=0.85, tau=3.0, gamma=0.6, kappa=0.4),
]

root = Path(tempfile.mkdtemp()) / "bundle"
write_bundle(generate_bundle(world, models, epochs=3), root)

print(f"bundle at {root}:")
for path in sorted(root.rglob("*")):
    if path.is_file():
        print(f"  {path.relative_to(root)}")

print("\nmanifest.json (first lines):")
for line in (root / "manifest.json").read_text().splitlines()[:12]:
    print("  " + line)

print("\nmodels/tiny/accuracy_trace.csv:")
print("  " + (root / "models/tiny/accuracy_trace.csv").read_text().replace("\n", "\n  ").rstrip())

print("\nmodels/tiny/preds_test.csv (first rows):")
for line in (root / "models/tiny/preds_test.csv").read_text().splitlines()[:4]:
    print("  " + line)

bundle = load_bundle(root)
print(f"\nloaded: {bundle.model_names}, {bundle.epochs} epochs, "
      f"{bundle.labels['test'].size} test samples")

# corrupt one row: validation rejects the bundle instead of repairing it
preds = root / "models/wide/preds_test.csv"
lines = preds.read_text().splitlines()
lines[5] = "0.5,0.3,0.1"
preds.write_text("\n".join(lines) + "\n")
try:
    load_bundle(root)
except BadProbabilityRow as err:
    print(f"\ntampered row rejected as expected:\n  {err}")
