"""The acceptance gate: every shipped numerical claim, one test each.

Each criterion draws from its own fixed seed substream (see
gwwindow.verify), so this suite is deterministic and order-independent.
"""
import pytest

from gwwindow.laws import DEFAULT_SEED, RngStream
from gwwindow.verify import CRITERIA


@pytest.mark.parametrize("name,suite,fn", CRITERIA,
                         ids=[f"{s}-{n}" for n, s, _ in CRITERIA])
def test_criterion(name, suite, fn):
    index = [c[0] for c in CRITERIA].index(name)
    stream = RngStream(seed=DEFAULT_SEED, stream_id=1000 + index)
    passed, details = fn(stream, 1)
    assert passed, f"{name} [{suite}]: {details}"
