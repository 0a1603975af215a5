"""Shared fixtures: the two-player reference game and its derived objects.

The reference game has scalar players with unit curvature, opposite linear
costs and symmetric coupling, boxed to |x_i| <= 2.  Its equilibrium set is
the segment of the line x2 = x1 + 1 inside the box, every point of which
shares the invariants c = (-2, 2) and d = 1.
"""

from __future__ import annotations

import numpy as np
import pytest

from scenario_gne import (
    HalfspaceSystem,
    SamplerSpec,
    VIProblem,
    compute_invariants,
    game_from_document,
    solve_vi,
)

REFERENCE_GAME_DOC = {
    "players": [
        {"Q": [[1.0]], "C": {"1": [[-2.0]]}, "q": [1.0], "box": [[-2.0, 2.0]]},
        {"Q": [[1.0]], "C": {"0": [[-2.0]]}, "q": [-1.0], "box": [[-2.0, 2.0]]},
    ]
}

SAMPLER_BOX = [[-4.0, 4.0], [-4.0, 4.0], [4.0, 10.0]]


def make_reference_game():
    return game_from_document(REFERENCE_GAME_DOC)


def make_invariants(game):
    local = HalfspaceSystem(game.local_a, game.local_b)
    witness = solve_vi(VIProblem(game.mapping_matrix, game.mapping_offset, local))
    return compute_invariants(game, witness)


@pytest.fixture(scope="session")
def ref_game():
    return make_reference_game()


@pytest.fixture(scope="session")
def local_sys(ref_game):
    return HalfspaceSystem(ref_game.local_a, ref_game.local_b)


@pytest.fixture(scope="session")
def ref_inv(ref_game):
    return make_invariants(ref_game)


@pytest.fixture(scope="session")
def ref_sampler():
    return SamplerSpec.uniform_halfspace(SAMPLER_BOX)


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)
