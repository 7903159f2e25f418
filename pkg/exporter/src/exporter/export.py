"""Fine-tune the backbones and record their traces as an engine bundle.

The bundle directory is the only coupling to the ensemble engine:
manifest.json (profiles with true trainable-parameter counts and shapes,
float32 probability tolerance 1e-4), labels_{split}.csv, and per model an
accuracy_trace.csv plus preds_test.csv. Reruns with the same seed are
best-effort deterministic: seeds are pinned and deterministic ops requested,
but the training framework owns the final word.
"""
from __future__ import annotations

import csv
import json
import statistics
import time
from pathlib import Path

import numpy as np

from .models import build_classifier, trainable_layer_shapes, trainable_param_count
from .spec import ExportSpec, discover_dataset, stratified_file_split

PROB_SUM_TOLERANCE = 1e-4  # float32 softmax rows


def _pipeline(paths, labels, spec: ExportSpec, shuffle: bool):
    import tensorflow as tf

    def decode(path, label):
        raw = tf.io.read_file(path)
        img = tf.image.decode_image(raw, channels=3, expand_animations=False)
        img = tf.image.resize(img, (spec.image_size, spec.image_size))
        img = tf.ensure_shape(img, (spec.image_size, spec.image_size, 3))
        return tf.cast(img, tf.float32) / 255.0, label

    ds = tf.data.Dataset.from_tensor_slices(([str(p) for p in paths], list(labels)))
    ds = ds.map(decode, num_parallel_calls=tf.data.AUTOTUNE)
    if shuffle:
        ds = ds.shuffle(len(paths), seed=spec.seed, reshuffle_each_iteration=True)
    return ds.batch(spec.batch_size).prefetch(tf.data.AUTOTUNE).cache()


def _fmt(x) -> str:
    return repr(float(x))


def _write_labels(path: Path, labels) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"])
        for v in labels:
            writer.writerow([int(v)])


def _write_trace(path: Path, train_acc, val_acc) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_acc", "val_acc"])
        for t, (tr, va) in enumerate(zip(train_acc, val_acc), start=1):
            writer.writerow([t, _fmt(tr), _fmt(va)])


def _write_preds(path: Path, probs: np.ndarray) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"c{i}" for i in range(probs.shape[1])])
        for row in probs:
            writer.writerow([_fmt(v) for v in row])


def _forward_latency_ms(model, image_size: int, reps: int = 15) -> float:
    x = np.zeros((1, image_size, image_size, 3), dtype=np.float32)
    model.predict(x, verbose=0)  # warm the graph
    times = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        model.predict(x, verbose=0)
        times.append((time.perf_counter_ns() - t0) / 1e6)
    return statistics.median(times)


def export(spec: ExportSpec) -> Path:
    """Run the full export: split, fine-tune each backbone, write the bundle."""
    import tensorflow as tf

    tf.keras.utils.set_random_seed(spec.seed)
    try:
        tf.config.experimental.enable_op_determinism()
    except Exception:  # older runtimes; determinism stays best-effort
        pass

    class_names, paths, labels = discover_dataset(spec)
    labels = np.asarray(labels)
    train_idx, val_idx, test_idx = stratified_file_split(labels, spec.fractions, spec.seed)

    split_paths = {
        "train": [paths[i] for i in train_idx],
        "val": [paths[i] for i in val_idx],
        "test": [paths[i] for i in test_idx],
    }
    split_labels = {name: labels[idx] for name, idx in
                    (("train", train_idx), ("val", val_idx), ("test", test_idx))}

    train_ds = _pipeline(split_paths["train"], split_labels["train"], spec, shuffle=True)
    val_ds = _pipeline(split_paths["val"], split_labels["val"], spec, shuffle=False)
    test_ds = _pipeline(split_paths["test"], split_labels["test"], spec, shuffle=False)

    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    for split in ("train", "val", "test"):
        _write_labels(out / f"labels_{split}.csv", split_labels[split])

    profiles = []
    for name in spec.models:
        model = build_classifier(name, len(class_names), spec)
        history = model.fit(
            train_ds, validation_data=val_ds, epochs=spec.epochs, verbose=0
        )
        probs = model.predict(test_ds, verbose=0)

        mdir = out / "models" / name
        mdir.mkdir(parents=True, exist_ok=True)
        _write_trace(
            mdir / "accuracy_trace.csv",
            history.history["accuracy"],
            history.history["val_accuracy"],
        )
        _write_preds(mdir / "preds_test.csv", np.asarray(probs, dtype=np.float64))

        profile = {
            "name": name,
            "param_count": trainable_param_count(model),
            "layer_shapes": [list(s) for s in trainable_layer_shapes(model)],
        }
        if spec.measure_latency:
            profile["latency_ms"] = _forward_latency_ms(model, spec.image_size)
        profiles.append(profile)

    manifest = {
        "schema_version": 1,
        "num_classes": len(class_names),
        "class_names": class_names,
        "epochs": spec.epochs,
        "seed": spec.seed,
        "splits": ["train", "val", "test"],
        "models": profiles,
        "prob_sum_tolerance": PROB_SUM_TOLERANCE,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    )
    return out
