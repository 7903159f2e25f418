"""Bridge from real CNN fine-tuning to engine trace bundles."""

from .spec import (
    AugmentationSpec,
    ClassCountMismatch,
    DatasetNotFound,
    ExportSpec,
    discover_dataset,
    stratified_file_split,
)
from .export import export

__all__ = [
    "AugmentationSpec",
    "ClassCountMismatch",
    "DatasetNotFound",
    "ExportSpec",
    "discover_dataset",
    "export",
    "stratified_file_split",
]
