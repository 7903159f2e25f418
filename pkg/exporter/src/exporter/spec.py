"""Export configuration and dataset discovery."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

IMAGE_EXTENSIONS = {".jpg", ".jpeg", ".png", ".bmp", ".gif"}

#: How many trailing backbone layers to unfreeze during fine-tuning.
UNFREEZE_DEPTHS = {"mobilenetv2": 3, "nasnetmobile": 20, "inceptionv3": 13}

DEFAULT_MODELS = ("mobilenetv2", "nasnetmobile", "inceptionv3")


class DatasetNotFound(Exception):
    pass


class ClassCountMismatch(Exception):
    pass


@dataclass(frozen=True)
class AugmentationSpec:
    """Train-only augmentation: flips plus 0.2-strength rotation/zoom/contrast."""

    flip: bool = True
    rotation: bool = True
    zoom: bool = True
    contrast: bool = True

    def enabled(self) -> bool:
        return self.flip or self.rotation or self.zoom or self.contrast


@dataclass(frozen=True)
class ExportSpec:
    dataset: str
    out: str
    epochs: int = 20
    seed: int = 0
    image_size: int = 128
    batch_size: int = 32
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    models: tuple[str, ...] = DEFAULT_MODELS
    pretrained: bool = True
    augmentation: AugmentationSpec = field(default_factory=AugmentationSpec)
    expected_classes: int | None = None
    measure_latency: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.image_size < 32:
            raise ValueError(f"image_size must be >= 32, got {self.image_size}")
        if abs(sum(self.fractions) - 1.0) > 1e-9 or len(self.fractions) != 3:
            raise ValueError(f"fractions must be three values summing to 1, got {self.fractions}")
        unknown = [m for m in self.models if m not in UNFREEZE_DEPTHS]
        if unknown:
            raise ValueError(f"unknown models {unknown}; supported: {sorted(UNFREEZE_DEPTHS)}")


def discover_dataset(spec: ExportSpec) -> tuple[list[str], list[Path], list[int]]:
    """Scan a class-per-folder image tree.

    Returns (class names in sorted order, file paths, integer labels).
    """
    root = Path(spec.dataset)
    if not root.is_dir():
        raise DatasetNotFound(f"dataset directory {root} does not exist")
    class_dirs = sorted(d for d in root.iterdir() if d.is_dir())
    if not class_dirs:
        raise DatasetNotFound(f"{root} has no class subdirectories")
    if spec.expected_classes is not None and len(class_dirs) != spec.expected_classes:
        raise ClassCountMismatch(
            f"expected {spec.expected_classes} classes, found {len(class_dirs)} under {root}"
        )
    if len(class_dirs) < 2:
        raise ClassCountMismatch(f"need >= 2 classes, found {len(class_dirs)} under {root}")

    paths: list[Path] = []
    labels: list[int] = []
    for idx, class_dir in enumerate(class_dirs):
        files = sorted(
            f for f in class_dir.iterdir()
            if f.is_file() and f.suffix.lower() in IMAGE_EXTENSIONS
        )
        if len(files) < 3:
            raise ValueError(
                f"class {class_dir.name!r} has {len(files)} images; the stratified "
                "split needs at least 3 per class"
            )
        paths.extend(files)
        labels.extend([idx] * len(files))
    return [d.name for d in class_dirs], paths, labels


def stratified_file_split(labels, fractions, seed: int):
    """Seeded per-class shuffle + largest-remainder allocation.

    Returns three sorted index lists (train, val, test); each class's
    allocation is within one sample of the exact fraction.
    """
    import numpy as np

    labels = np.asarray(labels)
    parts: list[list[np.ndarray]] = [[], [], []]
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=int(seed), spawn_key=(2, int(cls)))
        )
        perm = rng.permutation(members)
        exact = members.size * np.asarray(fractions, dtype=float)
        counts = np.floor(exact).astype(int)
        order = np.argsort(-(exact - counts), kind="stable")
        counts[order[: members.size - counts.sum()]] += 1
        start = 0
        for j, count in enumerate(counts):
            parts[j].append(perm[start : start + count])
            start += count
    return tuple(np.sort(np.concatenate(p)) for p in parts)
