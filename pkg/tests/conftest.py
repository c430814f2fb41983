"""Shared, session-cached geometry builders for the test suite."""

import functools

from hemisystems.gf import field_make
from hemisystems.linform import StandardModel, standard_model
from hemisystems.quadric import QuadricModel


@functools.lru_cache(maxsize=None)
def model(p: int, k: int, d: int) -> StandardModel:
    return standard_model(field_make(p, k), d)


@functools.lru_cache(maxsize=None)
def qmodel(p: int, k: int, d: int) -> QuadricModel:
    return QuadricModel(model(p, k, d))
