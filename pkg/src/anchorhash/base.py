"""Estimator-style base class and input validation shared by all mappers.

A mapper is "fitted" on an ordered list of resources and then ``predict``s a
resource for each key.  Every mapper also exposes integer *codes*: a cheap
per-key slot number plus ``code_table()`` translating codes back to resources,
which is what the evaluation code works with at scale.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import ContractViolation, DuplicateResourceError
from .hashing import MASK64, as_keys

MAX_RESOURCE_BYTES = 255


def check_resource(resource):
    """Validate one resource id; returns it unchanged."""
    if isinstance(resource, str):
        raw = resource.encode("utf-8")
    elif isinstance(resource, (bytes, bytearray)):
        raw = bytes(resource)
        resource = raw
    else:
        raise ContractViolation(f"resource ids must be str or bytes, got {type(resource).__name__}")
    if not raw:
        raise ContractViolation("resource ids must be nonempty")
    if len(raw) > MAX_RESOURCE_BYTES:
        raise ContractViolation(f"resource id longer than {MAX_RESOURCE_BYTES} bytes")
    return resource


def check_resources(resources) -> list:
    if isinstance(resources, (str, bytes)):
        raise ContractViolation("resources must be a sequence of ids, not a single id")
    out = [check_resource(r) for r in resources]
    if not out:
        raise ContractViolation("at least one resource is required")
    seen = set()
    for r in out:
        if r in seen:
            raise DuplicateResourceError(f"duplicate resource {r!r}")
        seen.add(r)
    return out


def check_seed(seed) -> int:
    if not isinstance(seed, (int, np.integer)) or seed < 0 or seed > MASK64:
        raise ContractViolation("seed must be an integer in [0, 2**64)")
    return int(seed)


def sort_key(resource):
    return resource.encode("utf-8") if isinstance(resource, str) else resource


class ConsistentHashMapper(BaseEstimator):
    """Common surface: ``fit`` / ``predict`` / ``add_resource`` / ``remove_resource``."""

    algorithm = "abstract"

    def fit(self, resources, y=None):
        self._fit(check_resources(resources))
        self.update_ops = 0
        return self

    def _fit(self, resources):
        raise NotImplementedError

    # lookups
    def predict_codes(self, keys) -> np.ndarray:
        check_is_fitted(self)
        return self._codes(as_keys(keys))

    def code_table(self) -> list:
        """``table[code]`` is the resource for a code (``None`` if unused)."""
        raise NotImplementedError

    def predict(self, keys) -> np.ndarray:
        codes = self.predict_codes(keys)
        table = np.empty(len(self.code_table()), dtype=object)
        table[:] = self.code_table()
        return table[codes]

    def get_resource(self, key: int):
        return self.predict(np.array([key], dtype=np.uint64))[0]

    @property
    def resources(self) -> list:
        check_is_fitted(self)
        return [r for r in self.code_table() if r is not None]

    def __len__(self):
        return len(self.resources)

    def __contains__(self, resource):
        return resource in set(self.resources)

    # updates
    def add_resource(self, resource):
        raise NotImplementedError

    def remove_resource(self, resource):
        raise NotImplementedError
