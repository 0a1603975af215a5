"""Geometric queries over labelled halfspace systems.

A HalfspaceSystem stacks local constraint rows with sampled coupling rows
(each tagged by its 1-based sample index) and optional equality rows.
Queries are LP-backed: support values, per-sample activity, and extent
measurements along a direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import DimensionError, InfeasibleSystemError, UnboundedSystemError
from .lp import LinearProgram, LpStatus, Tolerances, check_feasible, solve_lp
from .util import freeze

LOCAL_ROW = -1  # row_sample tag for deterministic local rows

ACTIVITY_TOL = 1e-7


@dataclass(frozen=True)
class HalfspaceSystem:
    """Rows a z <= b with per-row origin tags, plus optional eq_a z = eq_b.

    row_sample holds LOCAL_ROW for local rows and the sample index k >= 1
    for sampled rows.
    """

    a: np.ndarray
    b: np.ndarray
    row_sample: np.ndarray
    eq_a: Optional[np.ndarray] = None
    eq_b: Optional[np.ndarray] = None

    def __init__(self, a, b, row_sample=None, eq_a=None, eq_b=None):
        a_mat = np.atleast_2d(np.asarray(a, dtype=float))
        b_vec = np.atleast_1d(np.asarray(b, dtype=float))
        if b_vec.shape != (a_mat.shape[0],):
            raise DimensionError("rows and offsets disagree in length")
        if row_sample is None:
            tags = np.full(a_mat.shape[0], LOCAL_ROW, dtype=int)
        else:
            tags = np.asarray(row_sample, dtype=int)
            if tags.shape != (a_mat.shape[0],):
                raise DimensionError("row_sample must tag every inequality row")
            if np.any((tags != LOCAL_ROW) & (tags < 1)):
                raise DimensionError("sample tags must be >= 1")
        if (eq_a is None) != (eq_b is None):
            raise DimensionError("eq_a and eq_b must be given together")
        if eq_a is not None:
            eq_a = np.atleast_2d(np.asarray(eq_a, dtype=float))
            eq_b = np.atleast_1d(np.asarray(eq_b, dtype=float))
            if eq_a.shape[1] != a_mat.shape[1] or eq_b.shape != (eq_a.shape[0],):
                raise DimensionError("equality rows inconsistent with system dimension")
            eq_a = freeze(eq_a)
            eq_b = freeze(eq_b)
        object.__setattr__(self, "a", freeze(a_mat))
        object.__setattr__(self, "b", freeze(b_vec))
        object.__setattr__(self, "row_sample", freeze(tags).astype(int))
        object.__setattr__(self, "eq_a", eq_a)
        object.__setattr__(self, "eq_b", eq_b)

    @property
    def n(self) -> int:
        return self.a.shape[1]

    @property
    def n_rows(self) -> int:
        return self.a.shape[0]

    @property
    def sample_indices(self) -> tuple[int, ...]:
        ks = sorted(set(int(k) for k in self.row_sample if k != LOCAL_ROW))
        return tuple(ks)

    def local_only(self) -> "HalfspaceSystem":
        mask = self.row_sample == LOCAL_ROW
        return HalfspaceSystem(self.a[mask], self.b[mask])

    def restrict_samples(self, keep: Iterable[int]) -> "HalfspaceSystem":
        """Keep local rows plus rows of the given sample indices."""
        keep_set = set(int(k) for k in keep)
        mask = np.array([t == LOCAL_ROW or int(t) in keep_set for t in self.row_sample])
        return HalfspaceSystem(self.a[mask], self.b[mask], self.row_sample[mask],
                               self.eq_a, self.eq_b)

    def with_rows(self, a, b, sample: int) -> "HalfspaceSystem":
        a_new = np.atleast_2d(np.asarray(a, dtype=float))
        b_new = np.atleast_1d(np.asarray(b, dtype=float))
        tags = np.full(a_new.shape[0], int(sample), dtype=int)
        return HalfspaceSystem(np.vstack([self.a, a_new]),
                               np.concatenate([self.b, b_new]),
                               np.concatenate([self.row_sample, tags]),
                               self.eq_a, self.eq_b)

    def with_equalities(self, eq_a, eq_b) -> "HalfspaceSystem":
        if self.eq_a is not None:
            raise DimensionError("system already carries equality rows")
        return HalfspaceSystem(self.a, self.b, self.row_sample, eq_a, eq_b)


def support_value(sys: HalfspaceSystem, direction: np.ndarray,
                  tol: Tolerances = Tolerances()) -> float:
    """max direction . z over the system; +inf when unbounded that way.

    Raises InfeasibleSystemError when the system is empty.
    """
    value, _ = support_witness(sys, direction, tol)
    return value


def support_witness(sys: HalfspaceSystem, direction: np.ndarray,
                    tol: Tolerances = Tolerances()) -> tuple[float, Optional[np.ndarray]]:
    """Support value plus a maximizing point (None when unbounded)."""
    d = np.asarray(direction, dtype=float)
    if d.shape != (sys.n,):
        raise DimensionError(f"direction must have length {sys.n}")
    lp = LinearProgram(-d, a_ub=sys.a, b_ub=sys.b, a_eq=sys.eq_a, b_eq=sys.eq_b)
    out = solve_lp(lp, tol)
    if out.status is LpStatus.OPTIMAL:
        return -out.value, out.point
    if out.status is LpStatus.UNBOUNDED:
        return math.inf, None
    if out.status is LpStatus.INFEASIBLE:
        raise InfeasibleSystemError("support query over an empty system")
    from .errors import NumericalError

    raise NumericalError("simplex breakdown in support query")


def feasible_witness(sys: HalfspaceSystem, tol: Tolerances = Tolerances()):
    """Feasibility verdict plus witness for the full system."""
    return check_feasible(a_ub=sys.a, b_ub=sys.b, a_eq=sys.eq_a, b_eq=sys.eq_b,
                          n_vars=sys.n, tol=tol)


def active_rows_by_sample(sys: HalfspaceSystem,
                          act_tol: float = ACTIVITY_TOL) -> dict[int, list[int]]:
    """For each sample k, the positions of its rows whose hyperplane touches
    the feasible set: support of the row normal >= offset - act_tol*(1+|offset|).
    """
    if not feasible_witness(sys).feasible:
        raise InfeasibleSystemError("activity query over an empty system")
    out: dict[int, list[int]] = {}
    for pos in np.flatnonzero(sys.row_sample != LOCAL_ROW):
        k = int(sys.row_sample[pos])
        out.setdefault(k, [])
        sigma = support_value(sys, sys.a[pos])
        if sigma >= sys.b[pos] - act_tol * (1.0 + abs(sys.b[pos])):
            out[k].append(int(pos))
    return out


def active_samples(sys: HalfspaceSystem, act_tol: float = ACTIVITY_TOL) -> tuple[int, ...]:
    """Sample indices with at least one row touching the feasible set."""
    by_sample = active_rows_by_sample(sys, act_tol)
    return tuple(sorted(k for k, rows in by_sample.items() if rows))


def extent_along(sys: HalfspaceSystem, direction: np.ndarray,
                 tol: Tolerances = Tolerances()) -> tuple[float, float]:
    """Interval [lo, hi] of direction . z over the system.

    Raises on infeasible systems and on directions along which the system
    is unbounded.
    """
    d = np.asarray(direction, dtype=float)
    hi = support_value(sys, d, tol)
    lo = -support_value(sys, -d, tol)
    if math.isinf(hi) or math.isinf(lo):
        raise UnboundedSystemError("system unbounded along the requested direction")
    return lo, hi
