"""Compiled batch kernels.

Each kernel mirrors a scalar method elsewhere in the package line for line;
the scalar versions remain the readable reference and the tests check that
both paths agree.  All arithmetic is explicit ``uint64`` so numba never
promotes to float.
"""
import numpy as np
from numba import njit

_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S33 = np.uint64(33)


@njit(cache=True, inline="always")
def mix(key, salt):
    x = key ^ ((salt << _S31) | (salt >> _S33))
    x = (x ^ (x >> _S30)) * _C1
    x = (x ^ (x >> _S27)) * _C2
    return x ^ (x >> _S31)


@njit(cache=True)
def mix_batch(keys, salt):
    out = np.empty(keys.shape[0], dtype=np.uint64)
    for i in range(keys.shape[0]):
        out[i] = mix(keys[i], salt)
    return out


@njit(cache=True)
def anchor_lookup(keys, A, K, seed, top_salt):
    """Minimal-memory lookup for a batch of keys."""
    n = keys.shape[0]
    a = np.uint64(A.shape[0])
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        k = keys[i]
        b = np.int64(mix(k, top_salt) % a)
        ab = A[b]
        while ab > 0:
            h = np.int64(mix(k, seed ^ np.uint64(b)) % np.uint64(ab))
            while A[h] >= ab:
                h = np.int64(K[h])
            b = h
            ab = A[b]
        out[i] = b
    return out


@njit(cache=True)
def anchor_lookup_traced(keys, A, K, seed, top_salt):
    """Same walk as ``anchor_lookup`` plus hash-op and memory-access counts.

    A[b] is read once per visited bucket and kept in a register; every read
    of A[h] or K[h] during successor resolution counts as one access.
    """
    n = keys.shape[0]
    a = np.uint64(A.shape[0])
    out = np.empty(n, dtype=np.int64)
    tau = np.empty(n, dtype=np.int32)
    xi = np.empty(n, dtype=np.int32)
    for i in range(n):
        k = keys[i]
        b = np.int64(mix(k, top_salt) % a)
        hashes = 1
        reads = 1
        ab = A[b]
        while ab > 0:
            h = np.int64(mix(k, seed ^ np.uint64(b)) % np.uint64(ab))
            hashes += 1
            ah = A[h]
            reads += 1
            while ah >= ab:
                h = np.int64(K[h])
                ah = A[h]
                reads += 2
            b = h
            ab = ah
        out[i] = b
        tau[i] = hashes
        xi[i] = reads
    return out, tau, xi


@njit(cache=True)
def naive_lookup(keys, A, offsets, flat, seed, top_salt):
    """Naive tier: the working set recorded for removed bucket b is the
    block ``flat[offsets[b] : offsets[b] + A[b]]``."""
    n = keys.shape[0]
    a = np.uint64(A.shape[0])
    out = np.empty(n, dtype=np.int64)
    tau = np.empty(n, dtype=np.int32)
    for i in range(n):
        k = keys[i]
        b = np.int64(mix(k, top_salt) % a)
        hashes = 1
        ab = A[b]
        while ab > 0:
            h = np.int64(mix(k, seed ^ np.uint64(b)) % np.uint64(ab))
            hashes += 1
            b = np.int64(flat[offsets[b] + h])
            ab = A[b]
        out[i] = b
        tau[i] = hashes
    return out, tau


@njit(cache=True)
def reduced_lookup(keys, A, kv_keys, kv_vals, seed, top_salt):
    """Reduced tier: sparse non-fixed points in a sorted composite-key array."""
    n = keys.shape[0]
    a = np.uint64(A.shape[0])
    out = np.empty(n, dtype=np.int64)
    tau = np.empty(n, dtype=np.int32)
    m = kv_keys.shape[0]
    for i in range(n):
        k = keys[i]
        b = np.int64(mix(k, top_salt) % a)
        hashes = 1
        ab = A[b]
        while ab > 0:
            h = np.int64(mix(k, seed ^ np.uint64(b)) % np.uint64(ab))
            hashes += 1
            ck = (np.uint64(b) << np.uint64(32)) | np.uint64(h)
            j = np.searchsorted(kv_keys, ck)
            if j < m and kv_keys[j] == ck:
                b = np.int64(kv_vals[j])
            else:
                b = h
            ab = A[b]
        out[i] = b
        tau[i] = hashes
    return out, tau


@njit(cache=True)
def hrw_lookup(keys, salts, order):
    """Argmax of mix(key, salt_j); ``order`` ranks resources for tie-breaks
    (lower rank wins)."""
    n = keys.shape[0]
    r = salts.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        k = keys[i]
        best = 0
        bw = mix(k, salts[0])
        for j in range(1, r):
            wj = mix(k, salts[j])
            if wj > bw or (wj == bw and order[j] < order[best]):
                best = j
                bw = wj
        out[i] = best
    return out


@njit(cache=True)
def ring_lookup(positions, points, index, shift):
    """Index of the first point >= each position, wrapping to 0 past the end.

    ``index[t]`` is the first point whose top bits are >= ``t``, so the scan
    starts in the right bin and usually stops after a step or two.  Same
    result as ``np.searchsorted(points, positions, side="left")`` plus wrap.
    """
    n = positions.shape[0]
    p = points.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        x = positions[i]
        lo = index[np.int64(x >> shift)]
        while lo < p and points[lo] < x:
            lo += 1
        out[i] = 0 if lo == p else lo
    return out


@njit(cache=True)
def maglev_populate(offsets, skips, m):
    """Classic Maglev round-robin fill.  Returns (table, probes)."""
    n = offsets.shape[0]
    table = np.full(m, -1, dtype=np.int64)
    nxt = np.zeros(n, dtype=np.int64)
    filled = 0
    probes = 0
    while True:
        for i in range(n):
            c = (offsets[i] + nxt[i] * skips[i]) % m
            probes += 1
            while table[c] >= 0:
                nxt[i] += 1
                c = (offsets[i] + nxt[i] * skips[i]) % m
                probes += 1
            table[c] = i
            nxt[i] += 1
            filled += 1
            if filled == m:
                return table, probes
    return table, probes
