"""JSON snapshots of anchors and AnchorHash mappers.

A snapshot is canonical JSON (sorted keys, no whitespace) holding the full
state plus a SHA-256 of that payload, so ``save -> load -> save`` reproduces
the same bytes and any edit or truncation is caught on load.
"""
from __future__ import annotations

import hashlib
import json
import os

from .core import AnchorHash
from .exceptions import AnchorHashError, IntegrityError, TierMismatchError
from .reference import NaiveAnchor, ReducedAnchor
from .wrapper import AnchorHashMapper

FORMAT = "anchorhash-snapshot"
VERSION = 1
TIER_CLASSES = {"minimal": AnchorHash, "naive": NaiveAnchor, "reduced": ReducedAnchor}


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _encode_resource(r):
    return {"hex": r.hex()} if isinstance(r, bytes) else {"str": r}


def _decode_resource(d):
    return bytes.fromhex(d["hex"]) if "hex" in d else d["str"]


def dumps(obj) -> str:
    """Serialise an anchor tier object or a fitted ``AnchorHashMapper``."""
    if isinstance(obj, AnchorHashMapper):
        anchor = obj.anchor_
        payload = {
            "kind": "mapper",
            "state": anchor.to_state(),
            "resources": [[b, _encode_resource(r)] for r, b in
                          sorted(obj.resource_to_bucket_.items(), key=lambda x: x[1])],
        }
    else:
        payload = {"kind": "anchor", "state": obj.to_state()}
    payload.update(format=FORMAT, version=VERSION)
    digest = hashlib.sha256(_canonical(payload).encode()).hexdigest()
    return _canonical({**payload, "checksum": digest}) + "\n"


def loads(text: str, tier: str | None = None):
    """Inverse of ``dumps``.

    ``tier`` optionally names the tier the caller expects; a snapshot of a
    different tier raises ``TierMismatchError``.
    """
    try:
        doc = json.loads(text)
        checksum = doc.pop("checksum")
        if doc.get("format") != FORMAT or doc.get("version") != VERSION:
            raise IntegrityError("not an anchorhash snapshot")
    except (ValueError, KeyError, AttributeError, TypeError) as exc:
        raise IntegrityError(f"unreadable snapshot: {exc}") from None
    if hashlib.sha256(_canonical(doc).encode()).hexdigest() != checksum:
        raise IntegrityError("checksum mismatch")
    state = doc["state"]
    found = state.get("tier")
    if found not in TIER_CLASSES:
        raise IntegrityError(f"unknown tier {found!r}")
    if tier is not None and tier != found:
        raise TierMismatchError(f"snapshot holds a {found} tier, expected {tier}")
    try:
        anchor = TIER_CLASSES[found].from_state(state)
        anchor.validate()
    except (AnchorHashError, KeyError, ValueError, TypeError, IndexError) as exc:
        raise IntegrityError(f"inconsistent snapshot state: {exc}") from None
    if doc["kind"] == "anchor":
        return anchor
    mapper = AnchorHashMapper(capacity=anchor.capacity, seed=anchor.seed, tier=found)
    mapper.anchor_ = anchor
    mapper.bucket_to_resource_ = [None] * anchor.capacity
    mapper.resource_to_bucket_ = {}
    for b, r in doc["resources"]:
        r = _decode_resource(r)
        mapper.bucket_to_resource_[b] = r
        mapper.resource_to_bucket_[r] = b
    try:
        mapper.validate()
    except AnchorHashError as exc:
        raise IntegrityError(f"inconsistent resource map: {exc}") from None
    return mapper


def save(obj, path) -> None:
    text = dumps(obj)
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        fh.write(text)


def load(path, tier: str | None = None):
    with open(os.fspath(path), encoding="utf-8") as fh:
        return loads(fh.read(), tier=tier)
