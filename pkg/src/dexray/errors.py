"""Exception types shared across the package."""


class DexrayError(Exception):
    """Base class for all dexray errors."""


class EmptyMaskError(DexrayError):
    """A geometry operation needed at least one nonzero mask cell."""


class CropBoundsError(DexrayError):
    """Crop window exceeds the image extent."""


class SceneSpecError(DexrayError):
    """Synthetic scene specification is internally inconsistent."""


class ManifestParseError(DexrayError):
    """Manifest file is malformed; message carries the offending line."""


class ManifestValidationError(DexrayError):
    """Manifest content violates an invariant (duplicate id, mixed-class group, ...)."""


class NoContributorsError(DexrayError):
    """Mean response window requested but every image had an empty mask."""


class MissingClassError(DexrayError):
    """Baseline training data lacks at least one example of some class."""


class SizeMismatchError(DexrayError):
    """Image dimensions do not match the classifier's input contract."""


class PredictionParseError(DexrayError):
    """Predictions CSV is malformed; message carries the offending row."""


class UnknownImageError(DexrayError):
    """A prediction references an image id absent from the manifest."""


class ScoreInvariantError(DexrayError):
    """Prediction scores are not a probability vector consistent with the label."""


class MissingTruthError(DexrayError):
    """A prediction has no matching ground-truth label."""


class DegenerateMetricsError(DexrayError):
    """One-vs-all side is empty; sensitivity or specificity undefined."""


class NonFiniteLossError(DexrayError):
    """Early-stopping monitor received a NaN or infinite loss."""
