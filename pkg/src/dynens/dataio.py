"""The trace-bundle on-disk format and report serialization.

A bundle is a directory:

    manifest.json                      schema_version, classes, epochs, seed,
                                       model profiles, declared splits
    labels_{split}.csv                 header `label`, one class index per row
    models/{name}/accuracy_trace.csv   header `epoch,train_acc,val_acc`
                                       (an empty cell means the series is absent)
    models/{name}/preds_test.csv       header `c0,...,c{K-1}`, one probability
                                       row per test sample, row order matching
                                       labels_test.csv
    models/{name}/epoch_{t}/preds_{split}.csv   optional per-epoch matrices;
                                       when present, the accuracy trace may be
                                       derived from them instead of read

CSV and JSON are deliberate: human-inspectable, diffable, trivial to produce
from any training stack. Floats are written in shortest exact round-trip
decimal form (Python repr), so load(write(x)) == x bit-for-bit. Sample
identity is row order; there are no per-sample IDs.

Validation is fail-fast: a bundle the engine could not process is rejected at
load time, and probability rows violating the sum tolerance are hard errors,
never renormalized. The manifest may declare `prob_sum_tolerance` (default
1e-6, at most 1e-4) for float32-softmax producers.
"""
from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    PROB_ROW_TOL,
    PROB_ROW_TOL_MAX,
    AccuracyTrace,
    EnsembleState,
    ModelProfile,
    PredictionMatrix,
    validate_labels,
    validate_probability_matrix,
    validate_profiles,
)
from .errors import (
    MissingFile,
    MissingManifest,
    RowCountMismatch,
    SchemaVersionUnsupported,
)

SCHEMA_VERSION = 1

_EPOCH_DIR_RE = re.compile(r"^epoch_(\d+)$")
_PREDS_FILE_RE = re.compile(r"^preds_(train|val|test)\.csv$")


def canonical_json_dumps(obj) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline.

    Floats round-trip through repr, so parse -> dump is byte-identical.
    """
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _fmt(x) -> str:
    """Shortest exact decimal for a float (or plain str for ints)."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def profile_to_dict(p: ModelProfile) -> dict:
    d: dict = {"name": p.name, "param_count": int(p.param_count)}
    if p.layer_shapes is not None:
        d["layer_shapes"] = [list(dims) for dims in p.layer_shapes]
    if p.latency_ms is not None:
        d["latency_ms"] = float(p.latency_ms)
    return d


def profile_from_dict(d: dict) -> ModelProfile:
    shapes = d.get("layer_shapes")
    if shapes is not None:
        shapes = tuple(tuple(int(x) for x in dims) for dims in shapes)
    latency = d.get("latency_ms")
    return ModelProfile(
        name=d["name"],
        param_count=int(d["param_count"]),
        layer_shapes=shapes,
        latency_ms=float(latency) if latency is not None else None,
    )


@dataclass
class TraceBundle:
    """A validated in-memory bundle; immutable by convention after load."""

    manifest: dict
    profiles: list[ModelProfile]
    labels: dict[str, np.ndarray]
    traces: dict[str, AccuracyTrace]
    test_preds: dict[str, PredictionMatrix]
    epoch_preds: dict[tuple[str, int, str], PredictionMatrix] = field(default_factory=dict)

    @property
    def num_classes(self) -> int:
        return int(self.manifest["num_classes"])

    @property
    def epochs(self) -> int:
        return int(self.manifest["epochs"])

    @property
    def seed(self):
        return self.manifest.get("seed")

    @property
    def class_names(self) -> list[str]:
        return list(self.manifest.get("class_names") or
                    [f"class_{i}" for i in range(self.num_classes)])

    @property
    def splits(self) -> list[str]:
        return list(self.manifest["splits"])

    @property
    def model_names(self) -> list[str]:
        return [p.name for p in self.profiles]

    @property
    def prob_tolerance(self) -> float:
        return float(self.manifest.get("prob_sum_tolerance", PROB_ROW_TOL))

    def subset(self, names) -> "TraceBundle":
        """Restrict to the given models (order preserved), e.g. for ablations."""
        names = list(names)
        known = set(self.model_names)
        for name in names:
            if name not in known:
                raise KeyError(f"bundle has no model named {name!r}")
        manifest = dict(self.manifest)
        manifest["models"] = [m for m in self.manifest["models"] if m["name"] in names]
        return TraceBundle(
            manifest=manifest,
            profiles=[p for p in self.profiles if p.name in names],
            labels=self.labels,
            traces={n: self.traces[n] for n in names},
            test_preds={n: self.test_preds[n] for n in names},
            epoch_preds={k: v for k, v in self.epoch_preds.items() if k[0] in names},
        )


def derive_accuracy(preds, labels) -> float:
    """Fraction of rows whose argmax (smallest index wins ties) equals the label."""
    from .errors import ShapeMismatch

    arr = preds.probs if isinstance(preds, PredictionMatrix) else np.asarray(preds, dtype=np.float64)
    y = np.asarray(labels)
    if arr.ndim != 2 or y.ndim != 1 or arr.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"predictions {arr.shape} do not match labels {y.shape}")
    if arr.shape[0] == 0:
        raise ShapeMismatch("cannot derive accuracy from zero samples")
    return float((arr.argmax(axis=1) == y).mean())


# --- writing -----------------------------------------------------------------


def _write_labels(path: Path, labels: np.ndarray) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"])
        for v in labels:
            writer.writerow([int(v)])


def _write_preds(path: Path, matrix: PredictionMatrix) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"c{i}" for i in range(matrix.num_classes)])
        for row in matrix.probs:
            writer.writerow([_fmt(v) for v in row])


def _write_trace(path: Path, trace: AccuracyTrace) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_acc", "val_acc"])
        for t in range(trace.epochs):
            train = _fmt(trace.train_acc[t]) if trace.train_acc is not None else ""
            val = _fmt(trace.val_acc[t]) if trace.val_acc is not None else ""
            writer.writerow([t + 1, train, val])


def write_bundle(bundle: TraceBundle, path) -> Path:
    """Write a bundle directory (overwriting files that already exist)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    (root / "manifest.json").write_text(canonical_json_dumps(bundle.manifest))
    for split, labels in bundle.labels.items():
        _write_labels(root / f"labels_{split}.csv", labels)
    for name in bundle.model_names:
        mdir = root / "models" / name
        mdir.mkdir(parents=True, exist_ok=True)
        _write_trace(mdir / "accuracy_trace.csv", bundle.traces[name])
        _write_preds(mdir / "preds_test.csv", bundle.test_preds[name])
    for (name, epoch, split), matrix in bundle.epoch_preds.items():
        edir = root / "models" / name / f"epoch_{epoch}"
        edir.mkdir(parents=True, exist_ok=True)
        _write_preds(edir / f"preds_{split}.csv", matrix)
    return root


# --- loading -----------------------------------------------------------------


def _read_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise RowCountMismatch(f"{path}: file is empty") from None
        return header, list(reader)


def _load_labels(path: Path, num_classes: int) -> np.ndarray:
    header, rows = _read_rows(path)
    if header != ["label"]:
        raise ValueError(f"{path}: expected header 'label', got {header!r}")
    values = np.array([int(r[0]) for r in rows], dtype=np.int64)
    return validate_labels(values, num_classes)


def _load_preds(path: Path, num_classes: int, tol: float) -> PredictionMatrix:
    header, rows = _read_rows(path)
    expected = [f"c{i}" for i in range(num_classes)]
    if header != expected:
        raise ValueError(f"{path}: expected header {','.join(expected)}, got {header!r}")
    if not rows:
        raise RowCountMismatch(f"{path}: no prediction rows")
    arr = np.array([[float(v) for v in r] for r in rows], dtype=np.float64)
    # line_offset=2: header is line 1, first data row is line 2
    validate_probability_matrix(arr, tol=tol, where=str(path), line_offset=2)
    return PredictionMatrix(arr)


def _load_trace(path: Path, epochs: int) -> AccuracyTrace:
    header, rows = _read_rows(path)
    if header != ["epoch", "train_acc", "val_acc"]:
        raise ValueError(f"{path}: expected header epoch,train_acc,val_acc, got {header!r}")
    if len(rows) != epochs:
        raise RowCountMismatch(f"{path}: {len(rows)} rows, manifest declares {epochs} epochs")
    for t, row in enumerate(rows, start=1):
        if int(row[0]) != t:
            raise ValueError(f"{path}: epochs must run 1..{epochs} in order, row {t} says {row[0]}")
    cols = {"train_acc": [r[1] for r in rows], "val_acc": [r[2] for r in rows]}
    series = {}
    for label, values in cols.items():
        filled = [v != "" for v in values]
        if not any(filled):
            series[label] = None
        elif all(filled):
            series[label] = np.array([float(v) for v in values])
        else:
            raise ValueError(f"{path}: {label} is partially filled; a series is all-or-nothing")
    return AccuracyTrace(epochs, train_acc=series["train_acc"], val_acc=series["val_acc"])


def _model_epoch_preds(mdir: Path) -> list[tuple[int, str, Path]]:
    found = []
    for sub in sorted(mdir.iterdir()) if mdir.exists() else []:
        m = _EPOCH_DIR_RE.match(sub.name)
        if not m or not sub.is_dir():
            continue
        for f in sorted(sub.iterdir()):
            fm = _PREDS_FILE_RE.match(f.name)
            if fm:
                found.append((int(m.group(1)), fm.group(1), f))
    return found


def load_bundle(path) -> TraceBundle:
    """Load and fully validate a bundle directory.

    Every invariant is checked before returning: schema version, profile
    consistency, label ranges, probability rows (at the manifest's declared
    tolerance), and row counts against the labels files. Accuracy traces are
    derived from per-epoch val (and train) predictions when the trace file is
    absent.
    """
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise MissingManifest(f"no manifest.json under {root}")
    manifest = json.loads(manifest_path.read_text())

    version = manifest.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionUnsupported(f"schema_version {version!r}, supported: {SCHEMA_VERSION}")
    for key in ("num_classes", "epochs", "models", "splits"):
        if key not in manifest:
            raise ValueError(f"manifest.json lacks required key {key!r}")

    num_classes = int(manifest["num_classes"])
    epochs = int(manifest["epochs"])
    if num_classes < 2 or epochs < 1:
        raise ValueError(f"bad manifest: num_classes={num_classes}, epochs={epochs}")
    names = manifest.get("class_names")
    if names is not None and len(names) != num_classes:
        raise ValueError(f"{len(names)} class_names but num_classes={num_classes}")

    tol = float(manifest.get("prob_sum_tolerance", PROB_ROW_TOL))
    if not 0.0 < tol <= PROB_ROW_TOL_MAX:
        raise ValueError(f"prob_sum_tolerance must lie in (0, {PROB_ROW_TOL_MAX:g}], got {tol!r}")

    profiles = [profile_from_dict(d) for d in manifest["models"]]
    if not profiles:
        raise ValueError("manifest declares no models")
    validate_profiles(profiles)

    splits = list(manifest["splits"])
    if "test" not in splits:
        raise ValueError("manifest must declare a test split")
    labels = {}
    for split in splits:
        fpath = root / f"labels_{split}.csv"
        if not fpath.is_file():
            raise MissingFile(f"manifest declares split {split!r} but {fpath} is missing")
        labels[split] = _load_labels(fpath, num_classes)

    traces: dict[str, AccuracyTrace] = {}
    test_preds: dict[str, PredictionMatrix] = {}
    epoch_preds: dict[tuple[str, int, str], PredictionMatrix] = {}
    for profile in profiles:
        mdir = root / "models" / profile.name

        preds_path = mdir / "preds_test.csv"
        if not preds_path.is_file():
            raise MissingFile(f"{preds_path} is missing")
        matrix = _load_preds(preds_path, num_classes, tol)
        if matrix.num_samples != labels["test"].size:
            raise RowCountMismatch(
                f"{preds_path}: {matrix.num_samples} rows but "
                f"labels_test.csv has {labels['test'].size}"
            )
        test_preds[profile.name] = matrix

        for epoch, split, fpath in _model_epoch_preds(mdir):
            if not 1 <= epoch <= epochs:
                raise ValueError(f"{fpath}: epoch {epoch} outside 1..{epochs}")
            if split not in splits:
                raise ValueError(f"{fpath}: split {split!r} not declared in manifest")
            m = _load_preds(fpath, num_classes, tol)
            if m.num_samples != labels[split].size:
                raise RowCountMismatch(
                    f"{fpath}: {m.num_samples} rows but labels_{split}.csv "
                    f"has {labels[split].size}"
                )
            epoch_preds[(profile.name, epoch, split)] = m

        trace_path = mdir / "accuracy_trace.csv"
        if trace_path.is_file():
            traces[profile.name] = _load_trace(trace_path, epochs)
        else:
            traces[profile.name] = _derive_trace(profile.name, epoch_preds, labels, epochs)

    return TraceBundle(
        manifest=manifest,
        profiles=profiles,
        labels=labels,
        traces=traces,
        test_preds=test_preds,
        epoch_preds=epoch_preds,
    )


def _derive_trace(name, epoch_preds, labels, epochs) -> AccuracyTrace:
    """Reconstruct a trace from per-epoch prediction matrices (val required)."""
    series: dict[str, np.ndarray | None] = {}
    for split, key in (("train", "train_acc"), ("val", "val_acc")):
        have = [t for t in range(1, epochs + 1) if (name, t, split) in epoch_preds]
        if not have:
            series[key] = None
            continue
        if len(have) != epochs:
            raise MissingFile(
                f"model {name!r}: per-epoch {split} predictions cover epochs {have}, "
                f"need all of 1..{epochs} to derive the accuracy trace"
            )
        series[key] = np.array(
            [derive_accuracy(epoch_preds[(name, t, split)], labels[split]) for t in range(1, epochs + 1)]
        )
    if series["val_acc"] is None and series["train_acc"] is None:
        raise MissingFile(
            f"model {name!r} has no accuracy_trace.csv and no per-epoch predictions to derive one"
        )
    return AccuracyTrace(epochs, train_acc=series["train_acc"], val_acc=series["val_acc"])


# --- report serialization ------------------------------------------------------


def state_to_trajectory(state: EnsembleState, model_names) -> list[dict]:
    """Flatten a training history into JSON-ready per-epoch records."""
    names = list(model_names)
    records = []
    for snap in state.history:
        records.append(
            {
                "epoch": snap.epoch,
                "applied": snap.applied,
                "lambda": {n: float(v) for n, v in zip(names, snap.lambdas)},
                "alpha": {n: float(v) for n, v in zip(names, snap.alpha)},
                "beta": {n: float(v) for n, v in zip(names, snap.beta)},
                "weights": {n: float(v) for n, v in zip(names, snap.weights)},
            }
        )
    return records
