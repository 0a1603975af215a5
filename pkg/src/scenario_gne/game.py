"""Quadratic aggregative game model.

Each player i carries a positive-definite cost curvature block, pairwise
interaction blocks, a linear cost term and a bounded local polytope.  The
stacked pseudo-gradient of the player costs is affine, x -> M x + q, with
M holding the curvature blocks on the diagonal and the interaction blocks,
scaled by 1/N, off the diagonal.  This module assembles that mapping and
the stacked local-constraint system, and classifies its monotonicity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DimensionError, InfeasibleSystemError, UnboundedSystemError
from .lp import LinearProgram, LpStatus, solve_lp
from .util import freeze

_PD_TOL = 1e-9


class Monotonicity(Enum):
    STRICTLY_MONOTONE = "strictly_monotone"
    MONOTONE = "monotone"
    NOT_MONOTONE = "not_monotone"


def box_rows(box: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inequality rows for a box: 2*n rows, [I; -I] x <= [hi; -lo]."""
    box = np.asarray(box, dtype=float)
    if box.ndim != 2 or box.shape[1] != 2:
        raise DimensionError(f"box must be (n, 2), got {box.shape}")
    if np.any(box[:, 0] > box[:, 1]):
        raise ConfigError("box with lo > hi")
    n = box.shape[0]
    a = np.vstack([np.eye(n), -np.eye(n)])
    b = np.concatenate([box[:, 1], -box[:, 0]])
    return a, b


def _check_bounded_nonempty(a: np.ndarray, b: np.ndarray, what: str) -> None:
    """Bounded iff support values in all +-axis directions are finite."""
    n = a.shape[1]
    for j in range(n):
        for sign in (1.0, -1.0):
            c = np.zeros(n)
            c[j] = -sign  # maximize sign * x_j
            out = solve_lp(LinearProgram(c, a_ub=a, b_ub=b))
            if out.status is LpStatus.INFEASIBLE:
                raise InfeasibleSystemError(f"{what}: local constraint rows are infeasible")
            if out.status is LpStatus.UNBOUNDED:
                raise UnboundedSystemError(f"{what}: local set unbounded along axis {j}")
            if out.status is not LpStatus.OPTIMAL:
                raise UnboundedSystemError(f"{what}: could not verify boundedness")


@dataclass(frozen=True)
class PlayerSpec:
    """One player's cost data and local polytope.

    interactions maps the 0-based index of another player j to the block
    coupling j's action into this player's marginal cost; missing entries
    are zero blocks.
    """

    q_block: np.ndarray
    interactions: Mapping[int, np.ndarray]
    linear_cost: np.ndarray
    local_a: np.ndarray
    local_b: np.ndarray

    def __init__(self, q_block, interactions, linear_cost, local_a, local_b):
        q_mat = np.atleast_2d(np.asarray(q_block, dtype=float))
        n_i = q_mat.shape[0]
        if q_mat.shape != (n_i, n_i):
            raise DimensionError(f"q_block must be square, got {q_mat.shape}")
        if not np.allclose(q_mat, q_mat.T, atol=1e-12, rtol=0.0):
            raise ConfigError("q_block must be symmetric")
        if np.linalg.eigvalsh(q_mat).min() <= _PD_TOL:
            raise ConfigError("q_block must be positive definite")
        lin = np.atleast_1d(np.asarray(linear_cost, dtype=float))
        if lin.shape != (n_i,):
            raise DimensionError(f"linear_cost must have length {n_i}, got {lin.shape}")
        a = np.atleast_2d(np.asarray(local_a, dtype=float))
        b = np.atleast_1d(np.asarray(local_b, dtype=float))
        if a.shape[1] != n_i or b.shape != (a.shape[0],):
            raise DimensionError("local rows inconsistent with player dimension")
        _check_bounded_nonempty(a, b, "player")
        inter = {int(j): freeze(np.atleast_2d(np.asarray(c, dtype=float)))
                 for j, c in interactions.items()}
        for j, c in inter.items():
            if c.shape[0] != n_i:
                raise DimensionError(f"interaction block for player {j} has {c.shape[0]} rows, "
                                     f"expected {n_i}")
        object.__setattr__(self, "q_block", freeze(q_mat))
        object.__setattr__(self, "interactions", inter)
        object.__setattr__(self, "linear_cost", freeze(lin))
        object.__setattr__(self, "local_a", freeze(a))
        object.__setattr__(self, "local_b", freeze(b))

    @classmethod
    def with_box(cls, q_block, interactions, linear_cost, box) -> "PlayerSpec":
        a, b = box_rows(box)
        return cls(q_block, interactions, linear_cost, a, b)

    @property
    def dim(self) -> int:
        return self.q_block.shape[0]


@dataclass(frozen=True)
class AggregativeGame:
    """Assembled game: affine mapping data (M, q) and stacked local rows (H, h)."""

    n_players: int
    dims: tuple[int, ...]
    mapping_matrix: np.ndarray
    mapping_offset: np.ndarray
    local_a: np.ndarray
    local_b: np.ndarray

    @property
    def n(self) -> int:
        return self.mapping_offset.shape[0]

    def mapping(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the game mapping F(x) = M x + q."""
        return self.mapping_matrix @ np.asarray(x, dtype=float) + self.mapping_offset

    def block(self, i: int, j: int) -> np.ndarray:
        """The (i, j) block of M in player coordinates."""
        starts = np.concatenate([[0], np.cumsum(self.dims)])
        return self.mapping_matrix[starts[i]:starts[i + 1], starts[j]:starts[j + 1]]


def assemble_game(players: Sequence[PlayerSpec]) -> AggregativeGame:
    """Stack player blocks into (M, q) and the local polytope rows.

    Block (i, i) of M is the curvature block of player i; block (i, j),
    i != j, is the interaction block scaled by 1/N.
    """
    if len(players) == 0:
        raise ConfigError("empty player list")
    n_players = len(players)
    dims = tuple(p.dim for p in players)
    starts = np.concatenate([[0], np.cumsum(dims)])
    n = int(starts[-1])

    m_mat = np.zeros((n, n))
    q = np.zeros(n)
    for i, p in enumerate(players):
        si, ei = starts[i], starts[i + 1]
        m_mat[si:ei, si:ei] = p.q_block
        q[si:ei] = p.linear_cost
        for j, c in p.interactions.items():
            if j < 0 or j >= n_players:
                raise DimensionError(f"player {i} couples to unknown player {j}")
            if j == i:
                raise ConfigError(f"player {i} declares a self-interaction block")
            sj, ej = starts[j], starts[j + 1]
            if c.shape != (dims[i], dims[j]):
                raise DimensionError(
                    f"interaction block ({i},{j}) has shape {c.shape}, "
                    f"expected {(dims[i], dims[j])}")
            m_mat[si:ei, sj:ej] = c / n_players

    rows = sum(p.local_a.shape[0] for p in players)
    local_a = np.zeros((rows, n))
    local_b = np.zeros(rows)
    r = 0
    for i, p in enumerate(players):
        k = p.local_a.shape[0]
        local_a[r:r + k, starts[i]:starts[i + 1]] = p.local_a
        local_b[r:r + k] = p.local_b
        r += k

    return AggregativeGame(
        n_players=n_players,
        dims=dims,
        mapping_matrix=freeze(m_mat),
        mapping_offset=freeze(q),
        local_a=freeze(local_a),
        local_b=freeze(local_b),
    )


def check_monotone(game: AggregativeGame, tol: float = 1e-9) -> tuple[Monotonicity, float]:
    """Classify the mapping by the smallest eigenvalue of (M + M^T)/2."""
    if tol < 0:
        raise ConfigError("tolerance must be nonnegative")
    m_mat = game.mapping_matrix
    sym = 0.5 * (m_mat + m_mat.T)
    smallest = float(np.linalg.eigvalsh(sym)[0])
    if smallest > tol:
        return Monotonicity.STRICTLY_MONOTONE, smallest
    if smallest >= -tol:
        return Monotonicity.MONOTONE, smallest
    return Monotonicity.NOT_MONOTONE, smallest


_PLAYER_KEYS = {"Q", "C", "q", "box", "H", "h"}


def game_from_document(doc: dict) -> AggregativeGame:
    """Build a game from its JSON document form.

    Schema: {"players": [{"Q": [[..]], "C": {"j": [[..]]}, "q": [..],
    "box": [[lo, hi], ..]} , ...]}.  "C" keys are 0-based player indices
    as strings.  Instead of "box", explicit rows may be given as "H"/"h".
    Unknown keys are rejected.
    """
    if not isinstance(doc, dict) or set(doc) != {"players"}:
        raise ConfigError('game document must have exactly one key: "players"')
    raw_players = doc["players"]
    if not isinstance(raw_players, list) or not raw_players:
        raise ConfigError('"players" must be a nonempty list')
    players = []
    for idx, entry in enumerate(raw_players):
        if not isinstance(entry, dict):
            raise ConfigError(f"player {idx} must be an object")
        unknown = set(entry) - _PLAYER_KEYS
        if unknown:
            raise ConfigError(f"player {idx} has unknown keys: {sorted(unknown)}")
        for key in ("Q", "q"):
            if key not in entry:
                raise ConfigError(f'player {idx} is missing "{key}"')
        try:
            interactions = {int(j): np.asarray(c, dtype=float)
                            for j, c in entry.get("C", {}).items()}
        except ValueError as exc:
            raise ConfigError(f'player {idx}: "C" keys must be integer indices') from exc
        if "box" in entry:
            if "H" in entry or "h" in entry:
                raise ConfigError(f'player {idx}: give either "box" or "H"/"h", not both')
            players.append(PlayerSpec.with_box(entry["Q"], interactions, entry["q"],
                                               np.asarray(entry["box"], dtype=float)))
        elif "H" in entry and "h" in entry:
            players.append(PlayerSpec(entry["Q"], interactions, entry["q"],
                                      np.asarray(entry["H"], dtype=float),
                                      np.asarray(entry["h"], dtype=float)))
        else:
            raise ConfigError(f'player {idx} needs local constraints ("box" or "H"/"h")')
    return assemble_game(players)


def game_from_json(source: str | Path) -> AggregativeGame:
    """Load a game document from a JSON file path or a JSON string."""
    text = Path(source).read_text() if Path(str(source)).is_file() else str(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid game JSON: {exc}") from exc
    return game_from_document(doc)
