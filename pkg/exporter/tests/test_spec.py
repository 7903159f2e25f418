import numpy as np
import pytest

from exporter import (
    ClassCountMismatch,
    DatasetNotFound,
    ExportSpec,
    discover_dataset,
    stratified_file_split,
)


def make_spec(tiny_dataset, **overrides):
    base = dict(dataset=str(tiny_dataset), out="/tmp/unused", epochs=1, pretrained=False)
    base.update(overrides)
    return ExportSpec(**base)


class TestDiscovery:
    def test_finds_sorted_classes(self, tiny_dataset):
        names, paths, labels = discover_dataset(make_spec(tiny_dataset))
        assert names == ["blight", "healthy", "rust"]
        assert len(paths) == 90
        assert np.bincount(labels).tolist() == [30, 30, 30]

    def test_missing_directory(self, tmp_path):
        with pytest.raises(DatasetNotFound):
            discover_dataset(make_spec(tmp_path / "nope"))

    def test_no_class_folders(self, tmp_path):
        with pytest.raises(DatasetNotFound):
            discover_dataset(make_spec(tmp_path))

    def test_class_count_mismatch(self, tiny_dataset):
        with pytest.raises(ClassCountMismatch):
            discover_dataset(make_spec(tiny_dataset, expected_classes=4))

    def test_tiny_class_rejected(self, tmp_path):
        for name, count in (("a", 5), ("b", 2)):
            d = tmp_path / name
            d.mkdir()
            for i in range(count):
                (d / f"{i}.png").write_bytes(b"")
        with pytest.raises(ValueError, match="at least 3"):
            discover_dataset(make_spec(tmp_path))


class TestSpecValidation:
    def test_unknown_model(self, tiny_dataset):
        with pytest.raises(ValueError, match="unknown models"):
            make_spec(tiny_dataset, models=("resnet50",))

    def test_bad_fractions(self, tiny_dataset):
        with pytest.raises(ValueError):
            make_spec(tiny_dataset, fractions=(0.7, 0.2, 0.2))


class TestFileSplit:
    def test_per_class_counts_within_one(self):
        labels = np.repeat([0, 1, 2], [30, 30, 30])
        train, val, test = stratified_file_split(labels, (0.8, 0.1, 0.1), seed=3)
        assert len(train) + len(val) + len(test) == 90
        for part, frac in ((train, 0.8), (val, 0.1), (test, 0.1)):
            counts = np.bincount(labels[part], minlength=3)
            assert all(abs(c - 30 * frac) <= 1 for c in counts)

    def test_disjoint_and_deterministic(self):
        labels = np.repeat([0, 1], [40, 25])
        a = stratified_file_split(labels, (0.8, 0.1, 0.1), seed=11)
        b = stratified_file_split(labels, (0.8, 0.1, 0.1), seed=11)
        merged = np.concatenate(a)
        assert len(np.unique(merged)) == labels.size
        for pa, pb in zip(a, b):
            np.testing.assert_array_equal(pa, pb)
