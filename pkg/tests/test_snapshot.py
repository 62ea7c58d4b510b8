import numpy as np
import pytest

from anchorhash import AnchorHash, AnchorHashMapper, NaiveAnchor, ReducedAnchor, snapshot
from anchorhash.evaluation import build_anchor
from anchorhash.exceptions import IntegrityError, TierMismatchError
from anchorhash.hashing import random_keys

PROBE = random_keys(10**4, 77)


@pytest.mark.parametrize("tier", ["minimal", "reduced", "naive"])
def test_round_trip_preserves_lookups(tmp_path, tier):
    anchor = build_anchor(300, 120, "random", seed=5, tier=tier)
    path = tmp_path / "s.json"
    snapshot.save(anchor, path)
    loaded = snapshot.load(path, tier=tier)
    assert type(loaded) is type(anchor)
    assert (loaded.get_buckets(PROBE) == anchor.get_buckets(PROBE)).all()
    path2 = tmp_path / "s2.json"
    snapshot.save(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()
    # state stays usable for updates
    b = loaded.add_bucket()
    assert b == anchor.add_bucket()


def test_mapper_round_trip(tmp_path):
    m = AnchorHashMapper(capacity=12, seed=3).fit([f"r{i}" for i in range(8)] + [b"\xffraw"])
    m.remove_resource("r2")
    path = tmp_path / "m.json"
    snapshot.save(m, path)
    back = snapshot.load(path)
    assert back.resource_to_bucket_ == m.resource_to_bucket_
    assert (back.predict(PROBE) == m.predict(PROBE)).all()
    assert back.add_resource("z") == m.add_resource("z")


def test_truncated_file(tmp_path):
    path = tmp_path / "s.json"
    snapshot.save(AnchorHash(20, 10), path)
    path.write_bytes(path.read_bytes()[:-20])
    with pytest.raises(IntegrityError):
        snapshot.load(path)


def test_tampered_payload(tmp_path):
    path = tmp_path / "s.json"
    snapshot.save(AnchorHash(7, 7), path)
    text = path.read_text().replace('"N":7', '"N":6')
    path.write_text(text)
    with pytest.raises(IntegrityError, match="checksum"):
        snapshot.load(path)


def test_not_json():
    with pytest.raises(IntegrityError):
        snapshot.loads("garbage")
    with pytest.raises(IntegrityError):
        snapshot.loads('{"format": "other"}')


def test_tier_mismatch(tmp_path):
    path = tmp_path / "n.json"
    snapshot.save(NaiveAnchor(10, 6), path)
    with pytest.raises(TierMismatchError):
        snapshot.load(path, tier="minimal")
    assert isinstance(snapshot.load(path), NaiveAnchor)


def test_checksum_valid_but_state_inconsistent():
    import hashlib
    import json

    text = snapshot.dumps(ReducedAnchor(7, 7))
    doc = json.loads(text)
    doc.pop("checksum")
    doc["state"]["A"][3] = 2  # claims a removal the stack does not hold
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    doc["checksum"] = hashlib.sha256(canon.encode()).hexdigest()
    with pytest.raises(IntegrityError, match="inconsistent"):
        snapshot.loads(json.dumps(doc))


def test_snapshot_fields():
    import json

    doc = json.loads(snapshot.dumps(build_anchor(7, 4, "ascending")))
    st = doc["state"]
    assert set(st) >= {"capacity_a", "seed", "N", "A", "K", "W", "L", "R"}
    assert st["R"] == [0, 1, 2]
    assert np.array(st["A"]).tolist() == [6, 5, 4, 0, 0, 0, 0]
