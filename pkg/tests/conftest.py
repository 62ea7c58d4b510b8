import numpy as np
import pytest

from anchorhash.hashing import random_keys


@pytest.fixture(scope="session")
def keys_10k():
    return random_keys(10_000, 1234)


def random_ops(rng, anchor, steps):
    """Yield a random interleaving of removals and LIFO additions."""
    for _ in range(steps):
        can_add = bool(anchor.removed)
        can_remove = anchor.N > 1
        if can_add and (not can_remove or rng.random() < 0.45):
            yield "add", None
        else:
            ws = sorted(anchor.working_set())
            yield "remove", int(ws[rng.integers(len(ws))])


def apply(anchor, op, b):
    if op == "add":
        return anchor.add_bucket()
    anchor.remove_bucket(b)
    return b


def state_digest(anchor):
    parts = [anchor.A.tobytes(), anchor.W.tobytes(), anchor.L.tobytes(),
             anchor.removed, anchor.N]
    if hasattr(anchor, "K"):
        parts.append(anchor.K.tobytes())
    if hasattr(anchor, "kv"):
        parts.append(sorted(anchor.kv.items()))
    return repr(parts)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(line)
