"""AnchorHash consistent hashing with HRW, Ring and Maglev baselines."""
from .baselines import HRWMapper, MaglevMapper, RingMapper, maglev_build
from .core import AnchorHash, LookupTrace
from .exceptions import (
    AnchorHashError,
    CapacityError,
    CapacityExhaustedError,
    ConfigurationError,
    ContractViolation,
    DuplicateResourceError,
    IntegrityError,
    InvalidRemovalError,
    LastBucketError,
    ScriptExecutionError,
    ScriptParseError,
    TierMismatchError,
    UnknownResourceError,
)
from .hashing import hash_to_range, mix64
from .reference import NaiveAnchor, ReducedAnchor
from .wrapper import AnchorHashMapper
from . import snapshot

__version__ = "0.1.0"

__all__ = [
    "AnchorHash", "NaiveAnchor", "ReducedAnchor", "LookupTrace",
    "AnchorHashMapper", "HRWMapper", "RingMapper", "MaglevMapper", "maglev_build",
    "mix64", "hash_to_range",
    "AnchorHashError", "CapacityError", "CapacityExhaustedError", "ConfigurationError",
    "ContractViolation", "DuplicateResourceError", "IntegrityError", "InvalidRemovalError",
    "LastBucketError", "ScriptExecutionError", "ScriptParseError", "TierMismatchError",
    "UnknownResourceError",
]
