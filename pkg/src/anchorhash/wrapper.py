"""Key -> resource mapping on top of AnchorHash via a bucket/resource bijection."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_is_fitted

from .base import ConsistentHashMapper, check_resource, check_seed
from .core import AnchorHash
from .exceptions import (
    CapacityError,
    CapacityExhaustedError,
    ContractViolation,
    DuplicateResourceError,
    LastBucketError,
    UnknownResourceError,
)
from .reference import NaiveAnchor, ReducedAnchor

TIERS = {"minimal": AnchorHash, "naive": NaiveAnchor, "reduced": ReducedAnchor}


class AnchorHashMapper(ConsistentHashMapper):
    """Consistent key -> resource mapping backed by AnchorHash.

    Parameters
    ----------
    capacity : int or None
        Anchor size ``a``, the most resources ever live at once.  ``None``
        sizes it to twice the number of resources passed to ``fit``.
    seed : int
        64-bit instance seed; different seeds give independent mappings.
    tier : {"minimal", "reduced", "naive"}
        Which implementation holds the recorded working sets.

    Attributes
    ----------
    anchor_ : AnchorHash, ReducedAnchor or NaiveAnchor
    bucket_to_resource_ : list
        Forward map, indexed by bucket (``None`` for non-working buckets).
    resource_to_bucket_ : dict
        Backward map.

    Examples
    --------
    >>> m = AnchorHashMapper(capacity=7).fit(["s0", "s1", "s2", "s3", "s4"])
    >>> m.resource_to_bucket_["s3"]
    3
    >>> m.remove_resource("s3")
    3
    >>> m.add_resource("s9")
    3
    """

    algorithm = "anchor"

    def __init__(self, capacity=None, seed=0, tier="minimal"):
        self.capacity = capacity
        self.seed = seed
        self.tier = tier

    def _fit(self, resources):
        if self.tier not in TIERS:
            raise ContractViolation(f"tier must be one of {sorted(TIERS)}")
        seed = check_seed(self.seed)
        a = 2 * len(resources) if self.capacity is None else int(self.capacity)
        if len(resources) > a:
            raise CapacityError(f"{len(resources)} resources exceed capacity {a}")
        self.anchor_ = TIERS[self.tier](a, len(resources), seed=seed)
        self.bucket_to_resource_ = list(resources) + [None] * (a - len(resources))
        self.resource_to_bucket_ = {r: i for i, r in enumerate(resources)}

    def _codes(self, keys):
        return self.anchor_.get_buckets(keys)

    def code_table(self):
        check_is_fitted(self)
        return self.bucket_to_resource_

    def get_resource(self, key: int):
        check_is_fitted(self)
        return self.bucket_to_resource_[self.anchor_.get_bucket(int(key))]

    @property
    def resources(self):
        check_is_fitted(self)
        return list(self.resource_to_bucket_)

    def __len__(self):
        return len(self.resource_to_bucket_)

    def __contains__(self, resource):
        return resource in self.resource_to_bucket_

    @property
    def update_ops(self):
        return self.anchor_.update_ops if hasattr(self, "anchor_") else 0

    @update_ops.setter
    def update_ops(self, value):
        if hasattr(self, "anchor_"):
            self.anchor_.update_ops = value

    def add_resource(self, resource) -> int:
        """Attach ``resource`` to the most recently removed bucket."""
        check_is_fitted(self)
        resource = check_resource(resource)
        if resource in self.resource_to_bucket_:
            raise DuplicateResourceError(f"resource {resource!r} is already live")
        if self.anchor_.N == self.anchor_.capacity:
            raise CapacityExhaustedError("anchor is full")
        b = self.anchor_.add_bucket()
        self.bucket_to_resource_[b] = resource
        self.resource_to_bucket_[resource] = b
        return b

    def remove_resource(self, resource) -> int:
        check_is_fitted(self)
        try:
            b = self.resource_to_bucket_[resource]
        except (KeyError, TypeError):
            raise UnknownResourceError(f"resource {resource!r} is not live") from None
        if len(self.resource_to_bucket_) == 1:
            raise LastBucketError("cannot remove the last resource")
        self.anchor_.remove_bucket(b)
        del self.resource_to_bucket_[resource]
        self.bucket_to_resource_[b] = None
        return b

    def validate(self):
        """Check the bijection and the anchor invariants."""
        self.anchor_.validate()
        ws = self.anchor_.working_set()
        if set(self.resource_to_bucket_.values()) != ws:
            raise ContractViolation("forward map domain differs from the working set")
        for r, b in self.resource_to_bucket_.items():
            if self.bucket_to_resource_[b] != r:
                raise ContractViolation(f"forward/backward disagree on {r!r}")
        live = sum(r is not None for r in self.bucket_to_resource_)
        if live != len(self.resource_to_bucket_):
            raise ContractViolation("stale forward entries")

    def trace(self, keys):
        """Return ``(buckets, hash_ops[, memory_accesses])`` for a batch."""
        check_is_fitted(self)
        return self.anchor_.trace_buckets(np.asarray(keys, dtype=np.uint64))
