"""Baseline consistent-hashing algorithms: HRW, Ring and Maglev.

All three share the mapper surface of ``AnchorHashMapper`` and draw every
hash from ``mix64`` so comparisons isolate the algorithms themselves.
"""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_is_fitted
from sympy import isprime, nextprime

from . import _kernels
from .base import ConsistentHashMapper, check_resource, check_seed, sort_key
from .exceptions import (
    ConfigurationError,
    ContractViolation,
    DuplicateResourceError,
    LastBucketError,
    UnknownResourceError,
)
from .hashing import (
    MAGLEV_KEY_SALT,
    MAGLEV_OFFSET_SALT,
    MAGLEV_SKIP_SALT,
    RING_KEY_SALT,
    mix64,
    mix64_array,
    resource_digest,
)


class _SlotMapper(ConsistentHashMapper):
    """Resources occupy slots; a removed resource frees its slot for reuse."""

    def _init_slots(self, resources):
        self.slots_ = list(resources)
        self.slot_of_ = {r: i for i, r in enumerate(resources)}

    def code_table(self):
        check_is_fitted(self)
        return self.slots_

    @property
    def resources(self):
        check_is_fitted(self)
        return list(self.slot_of_)

    def __len__(self):
        return len(self.slot_of_)

    def __contains__(self, resource):
        return resource in self.slot_of_

    def _claim(self, resource):
        resource = check_resource(resource)
        if resource in self.slot_of_:
            raise DuplicateResourceError(f"resource {resource!r} is already live")
        try:
            i = self.slots_.index(None)
            self.slots_[i] = resource
        except ValueError:
            i = len(self.slots_)
            self.slots_.append(resource)
        self.slot_of_[resource] = i
        return i

    def _release(self, resource):
        try:
            i = self.slot_of_[resource]
        except (KeyError, TypeError):
            raise UnknownResourceError(f"resource {resource!r} is not live") from None
        if len(self.slot_of_) == 1:
            raise LastBucketError("cannot remove the last resource")
        del self.slot_of_[resource]
        self.slots_[i] = None
        return i


class HRWMapper(_SlotMapper):
    """Highest random weight: each key picks the resource with the largest
    ``mix64(key, digest(resource) ^ seed)``; ties go to the smaller id."""

    algorithm = "hrw"

    def __init__(self, seed=0):
        self.seed = seed

    def _fit(self, resources):
        check_seed(self.seed)
        self._init_slots(resources)
        self._refresh()

    def _refresh(self):
        live = [(i, r) for i, r in enumerate(self.slots_) if r is not None]
        self._live_slots = np.array([i for i, _ in live], dtype=np.int64)
        self._salts = np.array(
            [resource_digest(r) ^ self.seed for _, r in live], dtype=np.uint64
        )
        ranks = sorted(range(len(live)), key=lambda j: sort_key(live[j][1]))
        order = np.empty(len(live), dtype=np.int64)
        order[ranks] = np.arange(len(live))
        self._order = order

    def weight(self, key: int, resource) -> int:
        return mix64(key, resource_digest(resource) ^ self.seed)

    def get_resource(self, key: int):
        check_is_fitted(self)
        best = None
        for r in self.slot_of_:
            w = self.weight(key, r)
            if best is None or w > best[0] or (w == best[0] and sort_key(r) < sort_key(best[1])):
                best = (w, r)
        return best[1]

    def _codes(self, keys):
        return self._live_slots[_kernels.hrw_lookup(keys, self._salts, self._order)]

    def add_resource(self, resource):
        check_is_fitted(self)
        i = self._claim(resource)
        self._refresh()
        self.update_ops += 1
        return i

    def remove_resource(self, resource):
        check_is_fitted(self)
        i = self._release(resource)
        self._refresh()
        self.update_ops += 1
        return i


class RingMapper(_SlotMapper):
    """Karger ring with ``copies`` virtual nodes per resource.

    A key goes to the first point at or after ``mix64(key, ...)``, wrapping
    past the largest point back to the smallest.
    """

    algorithm = "ring"

    def __init__(self, copies=100, seed=0):
        self.copies = copies
        self.seed = seed

    def _fit(self, resources):
        check_seed(self.seed)
        if int(self.copies) < 1:
            raise ConfigurationError("copies must be >= 1")
        self._init_slots(resources)
        pts, owners = [], []
        for i, r in enumerate(resources):
            p = self._points(r)
            pts.append(p)
            owners.append(np.full(len(p), i, dtype=np.int64))
        points = np.concatenate(pts)
        owners = np.concatenate(owners)
        order = np.lexsort((owners, points))
        self.points_ = points[order]
        self.owners_ = owners[order]
        self._reindex()

    def _reindex(self):
        # one bin per point (rounded up to a power of two), keyed by top bits
        bits = max(1, int(len(self.points_) - 1).bit_length())
        self._shift = np.uint64(64 - bits)
        starts = np.arange(1 << bits, dtype=np.uint64) << self._shift
        self._index = np.searchsorted(self.points_, starts, side="left").astype(np.int64)

    def _points(self, resource):
        d = np.uint64(resource_digest(resource))
        salts = np.arange(int(self.copies), dtype=np.uint64) ^ np.uint64(self.seed)
        return mix64_array(np.full(int(self.copies), d, dtype=np.uint64), salts)

    def key_position(self, keys):
        return mix64_array(keys, self.seed ^ RING_KEY_SALT)

    def _codes(self, keys):
        idx = _kernels.ring_lookup(self.key_position(keys), self.points_, self._index,
                                   self._shift)
        return self.owners_[idx]

    def add_resource(self, resource):
        check_is_fitted(self)
        i = self._claim(resource)
        p = np.sort(self._points(resource))
        at = np.searchsorted(self.points_, p, side="right")
        self.points_ = np.insert(self.points_, at, p)
        self.owners_ = np.insert(self.owners_, at, i)
        self._reindex()
        self.update_ops += len(self.points_)
        return i

    def remove_resource(self, resource):
        check_is_fitted(self)
        i = self._release(resource)
        keep = self.owners_ != i
        self.points_ = self.points_[keep]
        self.owners_ = self.owners_[keep]
        self._reindex()
        self.update_ops += len(keep)
        return i


def smallest_prime_at_least(n: int) -> int:
    return int(n) if isprime(int(n)) else int(nextprime(int(n)))


class MaglevMapper(_SlotMapper):
    """Maglev lookup table of prime size ``table_size``.

    ``table_size=None`` picks the smallest prime >= 100 * |resources| at fit
    time; the size then stays fixed.  Every add or remove repopulates the
    whole table.
    """

    algorithm = "maglev"

    def __init__(self, table_size=None, seed=0):
        self.table_size = table_size
        self.seed = seed

    def _fit(self, resources):
        check_seed(self.seed)
        m = self.table_size
        if m is None:
            m = smallest_prime_at_least(100 * len(resources))
        m = int(m)
        if not isprime(m):
            raise ConfigurationError(f"table size {m} is not prime")
        self.m_ = m
        self._init_slots(resources)
        self._rebuild()

    def permutation(self, resource):
        """Return ``(offset, skip)`` for a resource."""
        d = resource_digest(resource)
        offset = mix64(d, self.seed ^ MAGLEV_OFFSET_SALT) % self.m_
        skip = mix64(d, self.seed ^ MAGLEV_SKIP_SALT) % (self.m_ - 1) + 1
        return offset, skip

    def _rebuild(self):
        live = [(i, r) for i, r in enumerate(self.slots_) if r is not None]
        if self.m_ < 100 * len(live):
            raise ConfigurationError(
                f"table size {self.m_} is below 100 entries per resource ({len(live)} live)"
            )
        perms = [self.permutation(r) for _, r in live]
        offsets = np.array([p[0] for p in perms], dtype=np.int64)
        skips = np.array([p[1] for p in perms], dtype=np.int64)
        table, probes = _kernels.maglev_populate(offsets, skips, self.m_)
        slots = np.array([i for i, _ in live], dtype=np.int64)
        self.table_ = slots[table]
        self.last_rebuild_ops_ = int(probes) + self.m_
        return self.last_rebuild_ops_

    def _codes(self, keys):
        return self.table_[mix64_array(keys, self.seed ^ MAGLEV_KEY_SALT) % np.uint64(self.m_)]

    def add_resource(self, resource):
        check_is_fitted(self)
        i = self._claim(resource)
        try:
            self.update_ops += self._rebuild()
        except ConfigurationError:
            self.slots_[i] = None
            del self.slot_of_[resource]
            raise
        return i

    def remove_resource(self, resource):
        check_is_fitted(self)
        i = self._release(resource)
        self.update_ops += self._rebuild()
        return i


def maglev_build(resources, table_size=None, seed=0) -> MaglevMapper:
    return MaglevMapper(table_size=table_size, seed=seed).fit(resources)


ALGORITHMS = {"hrw": HRWMapper, "ring": RingMapper, "maglev": MaglevMapper}
