"""Minimal-memory AnchorHash: four ``uint32`` arrays and a removal stack.

State layout (``a`` = capacity):

* ``A[b]`` is 0 while ``b`` works, else the size of the working set right
  after ``b`` was removed.
* ``K[b]`` is the successor of a removed ``b``: the bucket that took its slot
  in ``W``.  ``K[b] == b`` for working buckets.
* ``W[:N]`` holds the working buckets in maintained order and ``L[b]`` is the
  most recent position of ``b`` in ``W``.
* ``R`` is a fixed-size stack of removed buckets (bottom first).

Concurrency: lookups never write; ``add_bucket``/``remove_bucket`` need
exclusive access.  Nothing here takes a lock.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .exceptions import (
    AnchorHashError,
    CapacityExhaustedError,
    ContractViolation,
    InvalidRemovalError,
    LastBucketError,
)
from .hashing import MASK64, TOP_SALT, as_keys, mix64

MAX_CAPACITY = (1 << 32) - 1


@dataclass(frozen=True)
class LookupTrace:
    """Per-lookup counters: hash evaluations and A/K element reads."""

    hash_ops: int
    memory_accesses: int


class _AnchorBase:
    """Bookkeeping shared by the three tiers: ``A``, ``W``, ``L``, ``R``, ``N``.

    Subclasses decide how the recorded working set of a removed bucket is
    represented and resolved.
    """

    tier = "base"

    def __init__(self, capacity: int, working: int | None = None, seed: int = 0):
        if working is None:
            working = capacity
        if not 1 <= capacity <= MAX_CAPACITY:
            raise ContractViolation(f"capacity must be in [1, 2**32), got {capacity}")
        if not 1 <= working <= capacity:
            raise ContractViolation(
                f"initial working count must be in [1, {capacity}], got {working}"
            )
        self.capacity = int(capacity)
        self.seed = int(seed) & MASK64
        a = self.capacity
        self.A = np.zeros(a, dtype=np.uint32)
        self.W = np.arange(a, dtype=np.uint32)
        self.L = np.arange(a, dtype=np.uint32)
        self._R = np.zeros(a, dtype=np.uint32)
        self._top = 0
        self.N = int(working)
        self.update_ops = 0
        self._setup_tier()
        # Initially unused buckets go on the stack from a-1 down to w.
        for b in range(a - 1, self.N - 1, -1):
            self._R[self._top] = b
            self._top += 1
            self.A[b] = b
            self._record_initial(b)
        self.update_ops = 0

    # tier hooks
    def _setup_tier(self):
        pass

    def _record_initial(self, b):
        pass

    def _after_remove(self, b, moved):
        return 0

    def _before_add(self, b):
        return 0

    def _after_add(self, b):
        pass

    def _resolve(self, b: int, h: int) -> tuple[int, int]:
        """Return (bucket at index ``h`` of the working set recorded for
        removed ``b``, memory reads spent)."""
        raise NotImplementedError

    # salts
    @property
    def top_salt(self) -> int:
        return self.seed ^ TOP_SALT

    def bucket_salt(self, b: int) -> int:
        return self.seed ^ b

    # queries
    @property
    def removed(self) -> list[int]:
        """Removed buckets, bottom of the stack first."""
        return [int(x) for x in self._R[: self._top]]

    def working_set(self) -> set[int]:
        return {int(x) for x in self.W[: self.N]}

    def is_working(self, b: int) -> bool:
        return 0 <= b < self.capacity and self.A[b] == 0

    def get_bucket(self, key: int) -> int:
        return self.get_bucket_traced(key)[0]

    def get_bucket_traced(self, key: int) -> tuple[int, LookupTrace]:
        if self.N < 1:
            raise ContractViolation("empty working set")
        A = self.A
        b = mix64(key, self.top_salt) % self.capacity
        hashes, reads = 1, 1
        ab = int(A[b])
        while ab > 0:
            h = mix64(key, self.bucket_salt(b)) % ab
            hashes += 1
            b, spent = self._resolve(b, h)
            reads += spent
            ab = int(A[b])
        return b, LookupTrace(hashes, reads)

    def get_buckets(self, keys) -> np.ndarray:
        """Vectorised ``get_bucket`` over an array of keys."""
        return self.trace_buckets(as_keys(keys))[0]

    def trace_buckets(self, keys):
        """Return ``(buckets, hash_ops)`` (and memory reads where tracked)."""
        raise NotImplementedError

    # updates
    def remove_bucket(self, b: int) -> None:
        b = int(b)
        if not 0 <= b < self.capacity or self.A[b] != 0:
            raise InvalidRemovalError(f"bucket {b} is not working")
        if self.N == 1:
            raise LastBucketError("cannot remove the last working bucket")
        self._R[self._top] = b
        self._top += 1
        self.N -= 1
        n = self.N
        self.A[b] = n
        moved = int(self.W[n])
        lb = int(self.L[b])
        self.W[lb] = moved
        self.L[moved] = lb
        self.update_ops += 4 + self._after_remove(b, moved)

    def add_bucket(self) -> int:
        if self._top == 0:
            raise CapacityExhaustedError("no removed bucket left to add")
        self._top -= 1
        b = int(self._R[self._top])
        extra = self._before_add(b)
        self.A[b] = 0
        n = self.N
        self.L[self.W[n]] = n
        self.W[self.L[b]] = b
        self.N = n + 1
        self._after_add(b)
        self.update_ops += 3 + extra
        return b

    # invariants
    def validate(self) -> None:
        """Raise ``AnchorHashError`` if any structural invariant is broken."""
        a, N = self.capacity, self.N
        if N + self._top != a:
            raise AnchorHashError(f"N + |R| = {N + self._top} != {a}")
        R = self.removed
        if len(set(R)) != len(R):
            raise AnchorHashError("duplicate bucket on the removal stack")
        on_stack = set(R)
        for b in range(a):
            if (self.A[b] > 0) != (b in on_stack):
                raise AnchorHashError(f"A[{b}]={self.A[b]} disagrees with stack")
        vals = [int(self.A[b]) for b in R]
        if any(x <= y for x, y in zip(vals, vals[1:])):
            raise AnchorHashError("A along the stack is not strictly decreasing")
        head = self.W[:N]
        if set(int(x) for x in head) != {b for b in range(a) if self.A[b] == 0}:
            raise AnchorHashError("W[:N] is not the working set")
        for i in range(N):
            if self.L[self.W[i]] != i:
                raise AnchorHashError(f"L[W[{i}]] != {i}")
        self._validate_tier()

    def _validate_tier(self):
        pass

    # snapshots
    def to_state(self) -> dict:
        state = {
            "tier": self.tier,
            "capacity_a": self.capacity,
            "seed": self.seed,
            "N": self.N,
            "A": self.A.tolist(),
            "W": self.W.tolist(),
            "L": self.L.tolist(),
            "R": self.removed,
        }
        state.update(self._tier_state())
        return state

    def _tier_state(self) -> dict:
        return {}

    @classmethod
    def from_state(cls, state: dict):
        obj = cls.__new__(cls)
        a = int(state["capacity_a"])
        obj.capacity = a
        obj.seed = int(state["seed"]) & MASK64
        obj.N = int(state["N"])
        obj.A = np.array(state["A"], dtype=np.uint32)
        obj.W = np.array(state["W"], dtype=np.uint32)
        obj.L = np.array(state["L"], dtype=np.uint32)
        R = state["R"]
        obj._R = np.zeros(a, dtype=np.uint32)
        obj._R[: len(R)] = R
        obj._top = len(R)
        obj.update_ops = 0
        if not (len(obj.A) == len(obj.W) == len(obj.L) == a):
            raise ContractViolation("state arrays do not match capacity")
        obj._setup_tier()
        obj._load_tier_state(state)
        return obj

    def _load_tier_state(self, state):
        pass

    def __repr__(self):
        return f"{type(self).__name__}(capacity={self.capacity}, working={self.N}, seed={self.seed})"


class AnchorHash(_AnchorBase):
    """Minimal-memory tier: O(1) updates, successor-chain lookups.

    >>> ah = AnchorHash(7, 7)
    >>> for b in (6, 5, 1):
    ...     ah.remove_bucket(b)
    >>> ah.A.tolist()
    [0, 4, 0, 0, 0, 5, 6]
    >>> ah.add_bucket()
    1
    """

    tier = "minimal"

    def _setup_tier(self):
        if not hasattr(self, "K"):
            self.K = np.arange(self.capacity, dtype=np.uint32)

    def _after_remove(self, b, moved):
        self.K[b] = moved
        return 1

    def _after_add(self, b):
        self.K[b] = b

    def _before_add(self, b):
        return 1  # the K[b] reset in _after_add

    def _resolve(self, b, h):
        A, K = self.A, self.K
        ab = A[b]
        reads = 1
        while A[h] >= ab:
            h = int(K[h])
            reads += 2
        return h, reads

    def trace_buckets(self, keys):
        keys = as_keys(keys)
        if self.N < 1:
            raise ContractViolation("empty working set")
        return _kernels.anchor_lookup_traced(
            keys, self.A, self.K, np.uint64(self.seed), np.uint64(self.top_salt)
        )

    def get_buckets(self, keys) -> np.ndarray:
        keys = as_keys(keys)
        return _kernels.anchor_lookup(
            keys, self.A, self.K, np.uint64(self.seed), np.uint64(self.top_salt)
        )

    def _validate_tier(self):
        for b in range(self.capacity):
            if self.A[b] == 0 and self.K[b] != b:
                raise AnchorHashError(f"working bucket {b} has K[{b}]={self.K[b]}")

    def _tier_state(self):
        return {"K": self.K.tolist()}

    def _load_tier_state(self, state):
        self.K = np.array(state["K"], dtype=np.uint32)

    def memory_cells(self) -> int:
        """Integer cells held: A, K, W, L and the stack."""
        return 5 * self.capacity


def expected_hash_ops(a: int, w: int) -> float:
    """Exact mean of hash operations per lookup, 1 + sum 1/(w+j)."""
    return 1.0 + sum(1.0 / (w + j) for j in range(1, a - w + 1))


def hash_ops_bound(a: int, w: int) -> float:
    return 1.0 + math.log(a / w)
