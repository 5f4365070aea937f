"""Exception types raised across the package."""


class LowDistError(Exception):
    """Base class for all package errors."""


class DisconnectedGraph(LowDistError):
    pass


class CouldNotConnect(LowDistError):
    pass


class GenerationFailure(LowDistError):
    pass


class MissingCoordinates(LowDistError):
    pass


class EmptyCenterSet(LowDistError):
    pass


class NotACycle(LowDistError):
    pass


class InvalidClustering(LowDistError):
    pass


class EnumerationTooLarge(LowDistError):
    """Raised when an exact conditional expectation would enumerate too many joint shifts."""


class BandwidthExceeded(LowDistError):
    pass


class MultiSendInRadio(LowDistError):
    pass


class InconsistentTreeView(LowDistError):
    pass


class InsufficientView(LowDistError):
    """A vertex needed a record that its gathered view does not contain."""


class RulingViolation(LowDistError):
    pass


class InstanceTooLarge(LowDistError):
    def __init__(self, message, cluster=None):
        super().__init__(message)
        self.cluster = cluster
