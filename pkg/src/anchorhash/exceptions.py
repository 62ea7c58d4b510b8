"""Exception hierarchy shared by every mapper, the snapshot codec and the CLI."""


class AnchorHashError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolation(AnchorHashError, ValueError):
    """A caller broke a documented precondition (bad range, empty set...)."""


class InvalidRemovalError(ContractViolation):
    """The bucket passed to a removal is not currently working."""


class LastBucketError(ContractViolation):
    """Removing the only remaining working bucket (or resource)."""


class CapacityExhaustedError(AnchorHashError):
    """No removed bucket is left to add back."""


class CapacityError(ContractViolation):
    """More resources than the anchor can hold."""


class DuplicateResourceError(ContractViolation):
    pass


class UnknownResourceError(ContractViolation, KeyError):
    pass


class ConfigurationError(ContractViolation):
    """Invalid construction parameters (e.g. non-prime Maglev table size)."""


class IntegrityError(AnchorHashError):
    """A snapshot failed to parse or its checksum does not match."""


class TierMismatchError(AnchorHashError):
    """A snapshot was written by a different implementation tier."""


class ScriptParseError(AnchorHashError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ScriptExecutionError(AnchorHashError):
    def __init__(self, message, event_index=None):
        self.event_index = event_index
        if event_index is not None:
            message = f"event {event_index}: {message}"
        super().__init__(message)
