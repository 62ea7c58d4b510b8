"""Naive and reduced-memory tiers.

Both share the ``A``/``W``/``L``/``R`` bookkeeping of the minimal tier and
differ only in how the working set recorded at each removal is stored:

* ``NaiveAnchor`` keeps the whole ordered working set per removed bucket.
  Blocks are pushed and popped in stack order, so they live back to back in
  one flat buffer (optionally a memory-mapped file).
* ``ReducedAnchor`` keeps only the non-fixed points ``(b, h) -> W_b[h]`` with
  ``W_b[h] != h`` in a dict keyed by ``b * 2**32 + h``.

They exist as differential oracles for ``AnchorHash`` and to make the memory
and update-cost trade-offs measurable, not for speed.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernels
from .core import _AnchorBase
from .exceptions import AnchorHashError, ContractViolation
from .hashing import as_keys

ORDERINGS = ("successor", "sorted")


class NaiveAnchor(_AnchorBase):
    """Stores each recorded working set in full.

    ``ordering="successor"`` records ``W[:N]`` exactly as the minimal tier
    orders it, so per-key results match the other tiers.  ``"sorted"`` records
    the same sets in ascending order instead; it produces a different (still
    balanced and minimally disruptive) mapping.

    ``storage`` may name a file; the block buffer is then memory-mapped there
    so footprints larger than RAM can still be built.
    """

    tier = "naive"

    def __init__(self, capacity, working=None, seed=0, ordering="successor", storage=None):
        if ordering not in ORDERINGS:
            raise ContractViolation(f"ordering must be one of {ORDERINGS}")
        self.ordering = ordering
        self.storage = None if storage is None else os.fspath(storage)
        super().__init__(capacity, working, seed)

    def _setup_tier(self):
        if not hasattr(self, "storage"):
            self.storage = None
        self.offsets = np.zeros(self.capacity, dtype=np.int64)
        self._flat_len = 0
        self._alloc(max(16, self.capacity))

    def _alloc(self, size):
        old = getattr(self, "flat", None)
        if self.storage is None:
            new = np.empty(size, dtype=np.uint32)
            if old is not None:
                new[: self._flat_len] = old[: self._flat_len]
        else:
            if old is not None:
                old.flush()
                del self.flat
            mode = "r+" if old is not None else "w+"
            new = np.memmap(self.storage, dtype=np.uint32, mode=mode, shape=(size,))
        self.flat = new

    def _push_block(self, b, block):
        n = len(block)
        need = self._flat_len + n
        if need > len(self.flat):
            self._alloc(max(need, 2 * len(self.flat)))
        self.offsets[b] = self._flat_len
        self.flat[self._flat_len:need] = block
        self._flat_len = need
        return n

    def _record_initial(self, b):
        # working set right after removing b during init is {0..b-1}, in order
        self._push_block(b, np.arange(b, dtype=np.uint32))

    def _after_remove(self, b, moved):
        block = self.W[: self.N]
        if self.ordering == "sorted":
            block = np.sort(block)
        return self._push_block(b, block)

    def _before_add(self, b):
        n = int(self.A[b])
        self._flat_len -= n
        self.offsets[b] = 0
        return n

    def _resolve(self, b, h):
        return int(self.flat[self.offsets[b] + h]), 1

    def recorded(self, b: int) -> list[int]:
        """The stored working set of removed bucket ``b``."""
        n = int(self.A[b])
        if n == 0:
            raise ContractViolation(f"bucket {b} is working")
        off = int(self.offsets[b])
        return self.flat[off : off + n].tolist()

    def trace_buckets(self, keys):
        keys = as_keys(keys)
        return _kernels.naive_lookup(
            keys, self.A, self.offsets, self.flat,
            np.uint64(self.seed), np.uint64(self.top_salt),
        )

    def memory_cells(self) -> int:
        """Anchor array plus every stored block."""
        return self.capacity + self._flat_len

    def _validate_tier(self):
        total = sum(int(self.A[b]) for b in self.removed)
        if total != self._flat_len:
            raise AnchorHashError("stored blocks do not sum to the recorded sizes")
        for b in self.removed:
            if len(set(self.recorded(b))) != int(self.A[b]):
                raise AnchorHashError(f"recorded set of {b} has repeats")

    def _tier_state(self):
        return {
            "ordering": self.ordering,
            "blocks": [self.recorded(b) for b in self.removed],
        }

    def _load_tier_state(self, state):
        self.ordering = state.get("ordering", "successor")
        self.storage = None
        self._setup_tier()
        for b, block in zip(self.removed, state["blocks"]):
            self._push_block(b, np.array(block, dtype=np.uint32))


class ReducedAnchor(_AnchorBase):
    """Stores only non-fixed points of each recorded working set.

    >>> r = ReducedAnchor(7, 7)
    >>> for b in (6, 5, 1):
    ...     r.remove_bucket(b)
    >>> r.kv
    {4294967297: 4}
    """

    tier = "reduced"

    def _setup_tier(self):
        self.kv: dict[int, int] = {}
        self._arrays = None

    @staticmethod
    def kv_key(b: int, h: int) -> int:
        return (b << 32) | h

    def _after_remove(self, b, moved):
        W = self.W
        n = self.N
        ops = 0
        for h in range(n):
            ops += 1
            if W[h] != h:
                self.kv[(b << 32) | h] = int(W[h])
                ops += 1
        self._arrays = None
        return ops

    def _before_add(self, b):
        W = self.W
        n = int(self.A[b])
        ops = 0
        for h in range(n):
            ops += 1
            if W[h] != h:
                del self.kv[(b << 32) | h]
                ops += 1
        self._arrays = None
        return ops

    def _resolve(self, b, h):
        return self.kv.get((b << 32) | h, h), 1

    def entries(self) -> dict[tuple[int, int], int]:
        """Stored entries as ``{(b, h): bucket}``."""
        return {(k >> 32, k & 0xFFFFFFFF): v for k, v in self.kv.items()}

    def trace_buckets(self, keys):
        keys = as_keys(keys)
        if self._arrays is None:
            ks = np.array(sorted(self.kv), dtype=np.uint64)
            vs = np.array([self.kv[int(k)] for k in ks], dtype=np.uint32)
            self._arrays = (ks, vs)
        ks, vs = self._arrays
        return _kernels.reduced_lookup(
            keys, self.A, ks, vs, np.uint64(self.seed), np.uint64(self.top_salt)
        )

    def memory_cells(self) -> int:
        """A, W, L arrays plus stored entries."""
        return 3 * self.capacity + len(self.kv)

    def _validate_tier(self):
        r = self._top
        if len(self.kv) > r * (r + 1) // 2:
            raise AnchorHashError("more entries than |R|(|R|+1)/2")
        for (b, h), v in self.entries().items():
            if v == h or self.A[b] == 0 or h >= self.A[b]:
                raise AnchorHashError(f"bad entry ({b}, {h}) -> {v}")

    def _tier_state(self):
        return {"kv": sorted([k, v] for k, v in self.kv.items())}

    def _load_tier_state(self, state):
        self.kv = {int(k): int(v) for k, v in state["kv"]}
