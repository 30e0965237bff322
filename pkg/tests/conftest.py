from __future__ import annotations

import pytest

from helpers import make_store


@pytest.fixture
def store():
    s = make_store()
    yield s
    s.close()
