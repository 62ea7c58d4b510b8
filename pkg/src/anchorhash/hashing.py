"""Salted 64-bit mixing used by every algorithm in the package.

``mix64(key, salt)`` folds a rotated salt into the key and runs the SplitMix64
finalizer.  The function is pure and bit-exact across platforms, so the
scalar path, the numpy path and the compiled kernels agree on every input.
"""
from __future__ import annotations

import hashlib

import numpy as np

from .exceptions import ContractViolation

MASK64 = (1 << 64) - 1

MIX_C1 = 0xBF58476D1CE4E5B9
MIX_C2 = 0x94D049BB133111EB

# Reserved salts.  Bucket ids live in [0, 2**32) so anything with bit 63 set
# cannot collide with a per-bucket salt.
TOP_SALT = 1 << 63
RING_KEY_SALT = TOP_SALT | 0x52494E47  # "RING"
MAGLEV_KEY_SALT = TOP_SALT | 0x4D4B4559  # "MKEY"
MAGLEV_OFFSET_SALT = TOP_SALT | 0x4D4F4646  # "MOFF"
MAGLEV_SKIP_SALT = TOP_SALT | 0x4D534B50  # "MSKP"


def rotl64(x: int, r: int) -> int:
    x &= MASK64
    return ((x << r) | (x >> (64 - r))) & MASK64


def mix64(key: int, salt: int) -> int:
    """Return the 64-bit mix of ``key`` under ``salt``.

    >>> mix64(0, 0)
    0
    >>> mix64(1, 0) == mix64(1, 0)
    True
    """
    x = (key ^ rotl64(salt, 31)) & MASK64
    x = ((x ^ (x >> 30)) * MIX_C1) & MASK64
    x = ((x ^ (x >> 27)) * MIX_C2) & MASK64
    return x ^ (x >> 31)


def hash_to_range(key: int, salt: int, range_: int) -> int:
    """Map ``key`` to ``[0, range_)`` with plain modulo reduction."""
    if range_ < 1:
        raise ContractViolation(f"range must be >= 1, got {range_}")
    return mix64(key, salt) % range_


def instance_salt(seed: int, salt: int) -> int:
    """Fold a per-instance seed into an algorithm-level salt."""
    return (seed ^ salt) & MASK64


_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U33 = np.uint64(33)
_C1 = np.uint64(MIX_C1)
_C2 = np.uint64(MIX_C2)


def as_keys(keys) -> np.ndarray:
    """Coerce ``keys`` to a contiguous 1-D ``uint64`` array.

    Python ints above 2**63 are accepted; negative values and floats are not.
    """
    if isinstance(keys, np.ndarray):
        arr = keys
    else:
        vals = [keys] if isinstance(keys, (int, np.integer)) else list(keys)
        for v in vals:
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or not 0 <= v <= MASK64:
                raise ContractViolation("keys must be integers in [0, 2**64)")
        arr = np.array([int(v) for v in vals], dtype=np.uint64)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.dtype.kind == "u":
        return np.ascontiguousarray(arr, dtype=np.uint64)
    if arr.dtype.kind == "i":
        if arr.size and arr.min() < 0:
            raise ContractViolation("keys must be non-negative")
        return np.ascontiguousarray(arr, dtype=np.uint64)
    if arr.dtype.kind == "b" or arr.size == 0:
        return np.ascontiguousarray(arr, dtype=np.uint64)
    raise ContractViolation(f"keys must be unsigned integers, got dtype {arr.dtype}")


def mix64_array(keys, salt) -> np.ndarray:
    """Vectorised ``mix64``; ``salt`` may be a scalar or an array of salts."""
    x = as_keys(keys)
    if np.isscalar(salt) or isinstance(salt, int):
        rot = np.uint64(rotl64(int(salt), 31))
    else:
        s = np.asarray(salt, dtype=np.uint64)
        rot = (s << _U31) | (s >> _U33)
    with np.errstate(over="ignore"):
        x = x ^ rot
        x = (x ^ (x >> _U30)) * _C1
        x = (x ^ (x >> _U27)) * _C2
        x ^= x >> _U31
    return x


def hash_to_range_array(keys, salt, range_) -> np.ndarray:
    if np.isscalar(range_):
        if range_ < 1:
            raise ContractViolation(f"range must be >= 1, got {range_}")
        return mix64_array(keys, salt) % np.uint64(range_)
    r = np.asarray(range_, dtype=np.uint64)
    if r.size and r.min() < 1:
        raise ContractViolation("range must be >= 1")
    return mix64_array(keys, salt) % r


def resource_digest(resource) -> int:
    """64-bit identity hash for a resource id (``str`` or ``bytes``)."""
    if isinstance(resource, str):
        resource = resource.encode("utf-8")
    return int.from_bytes(hashlib.blake2b(resource, digest_size=8).digest(), "little")


def random_keys(n: int, seed: int = 0) -> np.ndarray:
    """Uniform 64-bit key stream from a PRNG independent of ``mix64``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.integers(0, MASK64, size=n, dtype=np.uint64, endpoint=True)
