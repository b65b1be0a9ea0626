from __future__ import annotations

from functools import lru_cache

import numpy as np
import pytest

from ahgeom import zoo
from ahgeom.connections import compute_tables


@lru_cache(maxsize=None)
def entry(name: str, **params) -> zoo.ZooEntry:
    return zoo.build(name, **params)


@lru_cache(maxsize=None)
def _tables(name: str, count: int, seed: int, derivative: bool, params: tuple):
    e = entry(name, **dict(params))
    pts = e.sample_points(count, seed)
    return tuple(compute_tables(e.structure, p, curvature_derivative=derivative) for p in pts)


def tables(name: str, count: int = 2, seed: int = 0, derivative: bool = False, **params):
    """Cached geometry tables at seeded sample points of a zoo entry."""
    return _tables(name, count, seed, derivative, tuple(sorted(params.items())))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
