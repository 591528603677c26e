from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fairrank.core import Instance  # noqa: E402


def random_instance(rng: np.random.Generator, m: int, n: int, p: int = 2) -> Instance:
    """Random DCG instance with a disjoint probability matrix."""
    w = rng.random(m)
    P = rng.dirichlet(np.ones(p), size=m)
    return Instance.from_values(w, n, P, structure="disjoint")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
