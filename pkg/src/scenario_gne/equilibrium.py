"""Affine variational-inequality solver and equilibrium-set membership.

solve_vi computes one variational equilibrium of VI(X, F) for the affine
mapping F(x) = M x + q over a bounded polytope X given as inequality rows.
The KKT system is posed as a linear complementarity problem (after shifting
X strictly into the nonnegative orthant, so the auxiliary bound rows can
never be active) and solved by complementary pivoting with a covering
vector and a lexicographic ratio test.  A projected-extragradient fallback
for box-constrained problems is kept purely for cross-validation.

compute_invariants extracts the two constants shared by every equilibrium
of a monotone game ((M + M^T) x and x . M x), and is_equilibrium uses them
for an LP-backed membership test that never materializes the set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DimensionError,
    InfeasibleSystemError,
    NumericalError,
    RayTerminationError,
    UnboundedSystemError,
)
from .game import AggregativeGame
from .lp import LinearProgram, LpStatus, solve_lp
from .polytope import HalfspaceSystem, feasible_witness, support_value
from .util import freeze

MONOTONE_TOL = 1e-9
EQUALITY_TOL = 1e-6     # tau_eq on the invariant-equality residual
FEAS_TOL = 1e-8         # tau_feas, relative


@dataclass(frozen=True)
class VIProblem:
    """VI(X, F) data: affine mapping (M, q) over an inequality-only system."""

    mapping_matrix: np.ndarray
    mapping_offset: np.ndarray
    feasible: HalfspaceSystem

    def __init__(self, mapping_matrix, mapping_offset, feasible: HalfspaceSystem):
        m = np.atleast_2d(np.asarray(mapping_matrix, dtype=float))
        q = np.atleast_1d(np.asarray(mapping_offset, dtype=float))
        if m.shape != (q.shape[0], q.shape[0]):
            raise DimensionError("mapping matrix/offset dimensions disagree")
        if feasible.n != q.shape[0]:
            raise DimensionError("feasible system dimension disagrees with mapping")
        if feasible.eq_a is not None:
            raise DimensionError("VI feasible set must be inequality rows only")
        object.__setattr__(self, "mapping_matrix", freeze(m))
        object.__setattr__(self, "mapping_offset", freeze(q))
        object.__setattr__(self, "feasible", feasible)


@dataclass(frozen=True)
class EquilibriumInvariants:
    """The pair shared by all equilibria of the unconstrained-coupling game:
    c = (M + M^T) x* and d = x* . M x*, plus the witness that produced them.
    """

    c: np.ndarray
    d: float
    witness: np.ndarray


def _lemke(n_mat: np.ndarray, q_vec: np.ndarray, piv_tol: float = 1e-9,
           max_iters: int = 10_000) -> np.ndarray:
    """Complementary pivoting on w = q + N z with covering vector of ones.

    Returns z >= 0 with w >= 0 and z . w = 0.  Raises RayTerminationError
    when the scheme ends on a secondary ray (certifying no solution for
    copositive-plus N) and NumericalError on iteration explosion.
    """
    p = q_vec.shape[0]
    if p == 0:
        return np.zeros(0)
    if np.min(q_vec) >= -piv_tol:
        return np.zeros(p)

    # columns: w_0..w_{p-1}, z_0..z_{p-1}, t, rhs
    t_col = 2 * p
    tableau = np.zeros((p, 2 * p + 2))
    tableau[:, :p] = np.eye(p)
    tableau[:, p:2 * p] = -n_mat
    tableau[:, t_col] = -1.0
    tableau[:, -1] = q_vec
    basis = np.arange(p)

    def complement(var: int) -> int:
        return var + p if var < p else var - p

    # initial pivot: t enters, the most negative rhs row leaves
    r = int(np.argmin(q_vec))
    _pivot(tableau, r, t_col)
    driving = complement(basis[r])
    basis[r] = t_col

    for _ in range(max_iters):
        col = tableau[:, driving]
        eligible = np.flatnonzero(col > piv_tol)
        if eligible.size == 0:
            raise RayTerminationError("complementary pivoting ended on a ray")
        r = _lex_ratio_row(tableau, eligible, driving, p, piv_tol)
        leaving = int(basis[r])
        _pivot(tableau, r, driving)
        basis[r] = driving
        if leaving == t_col:
            z = np.zeros(p)
            for i in range(p):
                if p <= basis[i] < 2 * p:
                    z[basis[i] - p] = tableau[i, -1]
            return np.maximum(z, 0.0)
        driving = complement(leaving)
    raise NumericalError("complementary pivoting exceeded the iteration budget")


def _pivot(tableau: np.ndarray, r: int, j: int) -> None:
    tableau[r] /= tableau[r, j]
    factor = tableau[:, j].copy()
    factor[r] = 0.0
    tableau -= np.outer(factor, tableau[r])


def _lex_ratio_row(tableau: np.ndarray, eligible: np.ndarray, col: int, p: int,
                   tol: float) -> int:
    """Lexicographic min ratio over [rhs | w-block] (the running basis inverse)."""
    cand = eligible
    for level in range(p + 1):
        lex_col = tableau[:, -1] if level == 0 else tableau[:, level - 1]
        ratios = lex_col[cand] / tableau[cand, col]
        best = np.min(ratios)
        keep = cand[ratios <= best + tol * (1.0 + abs(best))]
        if keep.size == 1:
            return int(keep[0])
        cand = keep
    return int(cand[0])


def _coordinate_bounds(sys: HalfspaceSystem) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate min/max over the system; raises when unbounded/empty."""
    n = sys.n
    lo = np.empty(n)
    hi = np.empty(n)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        hi[j] = support_value(sys, e)
        lo[j] = -support_value(sys, -e)
        if not (np.isfinite(lo[j]) and np.isfinite(hi[j])):
            raise UnboundedSystemError(f"feasible set unbounded along coordinate {j}")
    return lo, hi


def _box_bounds(sys: HalfspaceSystem) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """(lo, hi) when every row constrains a single coordinate, else None."""
    n = sys.n
    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    for i in range(sys.n_rows):
        nz = np.flatnonzero(sys.a[i])
        if nz.size != 1:
            return None
        j = int(nz[0])
        coef = sys.a[i, j]
        if coef > 0:
            hi[j] = min(hi[j], sys.b[i] / coef)
        else:
            lo[j] = max(lo[j], sys.b[i] / coef)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        return None
    return lo, hi


def solve_vi(prob: VIProblem, kkt_tol: Optional[float] = None,
             method: str = "pivoting") -> np.ndarray:
    """One solution of VI(X, F): x* in X with multipliers lam >= 0 such that
    M x* + q + A^T lam = 0 and lam . (b - A x*) = 0, within tolerances.
    """
    x, _ = solve_vi_with_multipliers(prob, kkt_tol=kkt_tol, method=method)
    return x


def solve_vi_with_multipliers(prob: VIProblem, kkt_tol: Optional[float] = None,
                              method: str = "pivoting"):
    m_mat = prob.mapping_matrix
    q = prob.mapping_offset
    sys = prob.feasible
    n = q.shape[0]
    if kkt_tol is None:
        kkt_tol = 1e-8 * (1.0 + np.max(np.abs(q), initial=0.0))

    sym_min = float(np.linalg.eigvalsh(0.5 * (m_mat + m_mat.T))[0])
    if sym_min < -MONOTONE_TOL:
        raise NumericalError(f"mapping is not monotone (smallest eigenvalue {sym_min:g})")
    if not feasible_witness(sys).feasible:
        raise InfeasibleSystemError("VI feasible set is empty")

    if method == "extragradient":
        box = _box_bounds(sys)
        if box is None:
            raise DimensionError("extragradient fallback handles box constraints only")
        x = _extragradient_box(m_mat, q, box[0], box[1])
        return freeze(x), None
    if method != "pivoting":
        raise DimensionError(f"unknown VI method {method!r}")

    lo, _ = _coordinate_bounds(sys)
    shift = lo - 1.0  # strict margin: the auxiliary orthant rows never bind

    a, b = sys.a, sys.b
    m_rows = a.shape[0]
    n_lcp = np.zeros((n + m_rows, n + m_rows))
    n_lcp[:n, :n] = m_mat
    n_lcp[:n, n:] = a.T
    n_lcp[n:, :n] = -a
    q_lcp = np.concatenate([q + m_mat @ shift, b - a @ shift])

    z = _lemke(n_lcp, q_lcp)
    x = z[:n] + shift
    lam = z[n:]

    stat = m_mat @ x + q + a.T @ lam
    slack = b - a @ x
    feas_scale = FEAS_TOL * (1.0 + np.max(np.abs(b), initial=0.0))
    if np.max(np.abs(stat)) > kkt_tol:
        raise NumericalError(f"KKT stationarity residual {np.max(np.abs(stat)):g} "
                             f"exceeds {kkt_tol:g}")
    if np.min(slack, initial=0.0) < -feas_scale:
        raise NumericalError("pivoting returned an infeasible point")
    if abs(float(lam @ slack)) > kkt_tol * (1.0 + np.max(np.abs(lam), initial=0.0)):
        raise NumericalError("complementarity residual out of tolerance")
    return freeze(x), freeze(lam)


def _extragradient_box(m_mat: np.ndarray, q: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                       residual_tol: float = 1e-10, max_iters: int = 500_000) -> np.ndarray:
    norm = float(np.linalg.norm(m_mat, 2))
    step = 0.9 / norm if norm > 0 else 1.0

    def project(v: np.ndarray) -> np.ndarray:
        return np.clip(v, lo, hi)

    x = project(0.5 * (lo + hi))
    for _ in range(max_iters):
        fx = m_mat @ x + q
        if np.max(np.abs(x - project(x - fx))) <= residual_tol:
            return x
        y = project(x - step * fx)
        x = project(x - step * (m_mat @ y + q))
    raise NumericalError("extragradient did not converge within the iteration budget")


def compute_invariants(game: AggregativeGame, witness: np.ndarray) -> EquilibriumInvariants:
    """Invariants of the equilibrium set from one equilibrium of the
    coupling-free game: c = (M + M^T) x0 and d = x0 . M x0."""
    w = np.asarray(witness, dtype=float)
    if w.shape != (game.n,):
        raise DimensionError(f"witness must have length {game.n}")
    m_mat = game.mapping_matrix
    c = (m_mat + m_mat.T) @ w
    d = float(w @ (m_mat @ w))
    if -1e-9 * (1.0 + float(w @ w)) < d < 0.0:
        d = 0.0
    return EquilibriumInvariants(c=freeze(c), d=d, witness=freeze(w))


def omega_value(game: AggregativeGame, sys: HalfspaceSystem, x: np.ndarray) -> float:
    """min over y in the system of y . (M x + q), the dual-side surrogate."""
    fx = game.mapping(x)
    lp = LinearProgram(fx, a_ub=sys.a, b_ub=sys.b, a_eq=sys.eq_a, b_eq=sys.eq_b)
    out = solve_lp(lp)
    if out.status is LpStatus.OPTIMAL:
        return out.value
    if out.status is LpStatus.INFEASIBLE:
        raise InfeasibleSystemError("membership query over an empty system")
    if out.status is LpStatus.UNBOUNDED:
        raise UnboundedSystemError("membership query over an unbounded system")
    raise NumericalError("simplex breakdown in membership query")


def is_equilibrium(game: AggregativeGame, inv: EquilibriumInvariants,
                   sys: HalfspaceSystem, x: np.ndarray,
                   eq_tol: float = EQUALITY_TOL, feas_tol: float = FEAS_TOL) -> bool:
    """Membership test for the equilibrium set under the rows of sys.

    True iff (i) (M + M^T) x matches the invariant vector, (ii) x is
    feasible for sys, and (iii) the minimum of y . (M x + q) over sys is at
    least d + q . x (up to eq_tol).
    """
    x = np.asarray(x, dtype=float)
    m_mat = game.mapping_matrix
    if np.max(np.abs((m_mat + m_mat.T) @ x - inv.c), initial=0.0) > eq_tol:
        return False
    feas_scale = feas_tol * (1.0 + np.max(np.abs(sys.b), initial=0.0))
    if np.max(sys.a @ x - sys.b, initial=0.0) > feas_scale:
        return False
    if sys.eq_a is not None:
        eq_scale = feas_tol * (1.0 + np.max(np.abs(sys.eq_b), initial=0.0))
        if np.max(np.abs(sys.eq_a @ x - sys.eq_b), initial=0.0) > eq_scale:
            return False
    omega = omega_value(game, sys, x)
    return omega - (inv.d + float(game.mapping_offset @ x)) >= -eq_tol
