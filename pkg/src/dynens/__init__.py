"""Adaptive accuracy/size-weighted ensemble engine and benchmark harness.

The engine consumes recorded per-epoch accuracy traces and per-class
probability matrices (or generates synthetic ones), runs the epoch-wise
adaptive weighting, fuses predictions by weighted softmax sum, and evaluates
the result: classification reports, confusion matrices, subset/static
ablations with significance tests, and accuracy-latency Pareto analysis.
"""

from .core import (
    AccuracyTrace,
    EnsembleState,
    EpochSnapshot,
    ModelProfile,
    PredictionMatrix,
    WeightingConfig,
    param_count_from_shapes,
    validate_labels,
    validate_probability_matrix,
    validate_profile,
)
from .weighting import (
    EpochUpdate,
    accuracy_proportion,
    final_weights,
    run_training,
    size_proportion,
    static_weights,
    update_lambdas,
)
from .inference import ensemble_predict
from .metrics import (
    ClassificationReport,
    WilcoxonResult,
    confusion,
    report,
    wilcoxon_signed_rank,
)
from .synth import (
    SynthModelSpec,
    SynthWorldSpec,
    generate_bundle,
    generate_epoch_predictions,
    generate_labels,
    stratified_split,
)
from .dataio import (
    TraceBundle,
    canonical_json_dumps,
    derive_accuracy,
    load_bundle,
    write_bundle,
)
from .bench import (
    AblationResult,
    LatencyStats,
    measure_decomposed,
    measure_latency,
    pareto_points,
    run_ablation,
)
from . import errors

__version__ = "0.1.0"

__all__ = [
    "AccuracyTrace",
    "AblationResult",
    "ClassificationReport",
    "EnsembleState",
    "EpochSnapshot",
    "EpochUpdate",
    "LatencyStats",
    "ModelProfile",
    "PredictionMatrix",
    "SynthModelSpec",
    "SynthWorldSpec",
    "TraceBundle",
    "WeightingConfig",
    "WilcoxonResult",
    "accuracy_proportion",
    "canonical_json_dumps",
    "confusion",
    "derive_accuracy",
    "ensemble_predict",
    "errors",
    "final_weights",
    "generate_bundle",
    "generate_epoch_predictions",
    "generate_labels",
    "load_bundle",
    "measure_decomposed",
    "measure_latency",
    "param_count_from_shapes",
    "pareto_points",
    "report",
    "run_ablation",
    "run_training",
    "size_proportion",
    "static_weights",
    "stratified_split",
    "update_lambdas",
    "validate_labels",
    "validate_probability_matrix",
    "validate_profile",
    "wilcoxon_signed_rank",
    "write_bundle",
]
