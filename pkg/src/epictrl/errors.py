"""Exception hierarchy shared by all epictrl modules."""


class EpictrlError(Exception):
    """Base class for all library errors."""


class ConfigurationError(EpictrlError):
    """Invalid or inconsistent configuration values."""


class ActionDomainError(EpictrlError):
    """An action component lies outside its declared domain."""


class ProtocolError(EpictrlError):
    """An operation was called outside its valid calling sequence."""


class ShapeError(EpictrlError):
    """Mismatched array lengths or shapes."""


class TrainingError(EpictrlError):
    """Non-finite losses or otherwise unrecoverable training state."""


class AlignmentError(EpictrlError):
    """Time series that cannot be date-aligned for comparison."""


class ScheduleParseError(EpictrlError):
    """Malformed schedule or observed-data file."""


class SearchError(EpictrlError):
    """Calibration search could not produce any successful trial."""
