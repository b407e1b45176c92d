"""Shared random-instance generators for the test suite."""

import numpy as np
import pytest

from sdwtc.prob import Auxiliary, CondKernel, FinitePmf, SdWtc


def random_wtc(rng, s=2, x=2, y=2, z=2):
    return SdWtc(
        state_law=FinitePmf(rng.dirichlet(np.ones(s))),
        kernel=CondKernel((s, x), y * z, rng.dirichlet(np.ones(y * z), size=s * x)),
        card_Y=y,
        card_Z=z,
    )


def random_aux(rng, s=2, u=2, v=2, x=2):
    return Auxiliary(
        card_U=u,
        card_V=v,
        kernel=CondKernel((s,), u * v * x, rng.dirichlet(np.ones(u * v * x), size=s)),
    )


def random_independent_aux(rng, s=2, u=2, v=2, x=2):
    """Auxiliary with the inner letter independent of the state by construction."""
    pu = rng.dirichlet(np.ones(u))
    cond = rng.dirichlet(np.ones(v * x), size=u * s).reshape(u, s, v, x)
    table = np.einsum("u,usvx->suvx", pu, cond)
    return Auxiliary(
        card_U=u, card_V=v, kernel=CondKernel((s,), u * v * x, table.reshape(s, -1))
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260811)
