class ImproperlyConfigured(Exception):
    """Raise for incorrect configuration."""

    pass


class ValidationError(Exception):
    """Raise for validations"""

    pass


class InputError(Exception):
    """Raise when an input file cannot be used"""

    pass


class DatasetParseError(InputError):
    """Raise for a malformed interaction line"""

    def __init__(self, path, line_number, line):
        self.path = path
        self.line_number = line_number
        self.line = line
        super().__init__(f"{path}:{line_number}: cannot parse interaction line {line!r}")


class EmptyDatasetError(InputError):
    """Raise when a dataset holds no interactions"""

    pass


class MissingPathError(InputError):
    """Raise when a required file or directory does not exist"""

    def __init__(self, path):
        self.path = path
        super().__init__(f"No such file or directory: {path}")


class TrainingAbortedError(Exception):
    """Raise when training hits a non-finite loss or gradient"""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class ArtifactMismatchError(Exception):
    """Raise when artifacts disagree with each other"""

    pass


class CheckpointFormatError(ArtifactMismatchError):
    """Raise for a checkpoint with the wrong magic or version"""

    pass


class CheckpointCorruptError(ArtifactMismatchError):
    """Raise when a checkpoint payload does not match its header"""

    pass


class ShapeError(ValidationError):
    """Raise for mismatched matrix shapes"""

    pass


class DimensionError(ValidationError):
    """Raise when a diagnostic needs a different dimension"""

    pass


class GraphConstructionError(ValidationError):
    """Raise when the interaction graph has isolated nodes"""

    pass


class DegenerateBandwidthError(ValidationError):
    """Raise when the median heuristic has no positive distance"""

    pass


class SamplingError(ValidationError):
    """Raise when a group sample is empty"""

    pass


class InsufficientPairsError(ValidationError):
    """Raise when fewer than two points are given"""

    pass


class UnsampleableUserError(ValidationError):
    """Raise when a user has interacted with every item"""

    pass


class NonFiniteLossError(ValidationError):
    """Raise when a loss evaluates to nan or inf"""

    pass


class UndefinedCorrelationError(ValidationError):
    """Raise when a rank correlation has zero variance"""

    pass


class MetricUndefinedError(ValidationError):
    """Raise when no user can be evaluated for a metric"""

    pass


class DistributionDomainError(ValidationError):
    """Raise for invalid probability vectors"""

    pass
