"""Exception hierarchy for the engine.

Every failure mode the library can report has a dedicated class whose name is
stable API: the CLI prints it verbatim and tests key on it.
"""


class EngineError(Exception):
    """Base class for all errors raised by this package."""

    @property
    def name(self) -> str:
        return type(self).__name__


# --- model profiles -------------------------------------------------------

class NonPositiveCount(EngineError):
    """A parameter count (or other required-positive quantity) is < 1."""


class MismatchedParamCount(EngineError):
    """layer_shapes sum-of-products disagrees with the declared param_count."""


# --- probability matrices and labels --------------------------------------

class BadProbabilityRow(EngineError):
    """A prediction row is out of [0, 1] or does not sum to 1 within tolerance."""


class LabelOutOfRange(EngineError):
    pass


# --- weighting -------------------------------------------------------------

class AllZeroAccuracies(EngineError):
    """Accuracy proportions are undefined when every accuracy is zero."""


class UnequalEpochCounts(EngineError):
    pass


class MissingAccuracySource(EngineError):
    """A trace lacks the accuracy series the config selects (train/validation)."""


# --- inference --------------------------------------------------------------

class ShapeMismatch(EngineError):
    pass


class AllZeroWeights(EngineError):
    pass


# --- metrics ----------------------------------------------------------------

class LengthMismatch(EngineError):
    pass


class EmptyMatrix(EngineError):
    pass


class AllPairsEqual(EngineError):
    """Wilcoxon signed-rank with zero effective pairs: no test possible."""


# --- synthetic data ---------------------------------------------------------

class SmallClass(EngineError):
    """Stratified splitting needs at least 3 samples in every class."""


class BadFractions(EngineError):
    pass


# --- bundle I/O ---------------------------------------------------------------

class MissingManifest(EngineError):
    pass


class SchemaVersionUnsupported(EngineError):
    pass


class MissingFile(EngineError):
    pass


class RowCountMismatch(EngineError):
    pass


# --- benchmarking -------------------------------------------------------------

class TooFewModels(EngineError):
    pass
