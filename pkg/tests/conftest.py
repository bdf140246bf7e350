from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from locallim.exhaustive import trees_by_size


@pytest.fixture(scope="session")
def trees_le4():
    """All iso-classes with at most 4 vertices, two edge and two vertex marks."""
    by_size = trees_by_size(4, 2, 2)
    return [t for size in range(1, 5) for t in by_size[size]]


@pytest.fixture(scope="session")
def trees_le5():
    by_size = trees_by_size(5, 2, 2)
    return [t for size in range(1, 6) for t in by_size[size]]
