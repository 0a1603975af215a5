"""Dense two-phase primal simplex kernel.

Every downstream geometric query (support values, activity tests, dual
feasibility systems) funnels through this module, so it favors exact and
deterministic activity classification over speed: dense tableaus, a fixed
pivot rule that switches to Bland's rule after a stall, and explicit
status reporting.  A numerical breakdown is surfaced as its own status and
never folded into optimal/infeasible/unbounded.

Equality rows are carried into phase one with artificial variables; they
are never split into opposing inequalities.  Presolve is limited to
dropping all-zero rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DimensionError, NumericalError, UnboundedSystemError
from .util import freeze


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL = "numerical_breakdown"


@dataclass(frozen=True)
class Tolerances:
    """Pivoting and classification tolerances for the simplex kernel."""

    pivot: float = 1e-10        # pivot elements at or below this are rejected
    reduced: float = 1e-9       # entering threshold on reduced costs
    feas: float = 1e-8          # relative row-feasibility tolerance (tau_feas)
    stall_iters: int = 40       # stalled iterations before Bland's rule engages
    max_iters: int = 20_000


def _as_matrix(a, n_cols: int, name: str) -> np.ndarray:
    mat = np.zeros((0, n_cols)) if a is None else np.atleast_2d(np.asarray(a, dtype=float))
    if mat.size == 0:
        mat = mat.reshape(0, n_cols)
    if mat.shape[1] != n_cols:
        raise DimensionError(f"{name} has {mat.shape[1]} columns, expected {n_cols}")
    return mat


def _as_vector(b, n_rows: int, name: str) -> np.ndarray:
    vec = np.zeros(0) if b is None else np.atleast_1d(np.asarray(b, dtype=float))
    if vec.shape != (n_rows,):
        raise DimensionError(f"{name} has shape {vec.shape}, expected ({n_rows},)")
    if not np.all(np.isfinite(vec)):
        raise DimensionError(f"{name} contains non-finite entries")
    return vec


@dataclass(frozen=True)
class LinearProgram:
    """min objective . z  subject to  a_ub z <= b_ub,  a_eq z = b_eq,  bounds.

    bounds is an (n, 2) array of per-variable [lo, hi]; either side may be
    infinite.  All b vectors must be finite.
    """

    objective: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    bounds: np.ndarray

    def __init__(self, objective, a_ub=None, b_ub=None, a_eq=None, b_eq=None, bounds=None):
        c = np.atleast_1d(np.asarray(objective, dtype=float))
        n = c.shape[0]
        if not np.all(np.isfinite(c)):
            raise DimensionError("objective contains non-finite entries")
        a_ub_m = _as_matrix(a_ub, n, "a_ub")
        b_ub_v = _as_vector(b_ub, a_ub_m.shape[0], "b_ub")
        a_eq_m = _as_matrix(a_eq, n, "a_eq")
        b_eq_v = _as_vector(b_eq, a_eq_m.shape[0], "b_eq")
        if bounds is None:
            bnds = np.column_stack([np.full(n, -np.inf), np.full(n, np.inf)])
        else:
            bnds = np.asarray(bounds, dtype=float)
            if bnds.shape != (n, 2):
                raise DimensionError(f"bounds has shape {bnds.shape}, expected ({n}, 2)")
        if np.any(bnds[:, 0] > bnds[:, 1]):
            raise DimensionError("bounds with lo > hi")
        object.__setattr__(self, "objective", freeze(c))
        object.__setattr__(self, "a_ub", freeze(a_ub_m))
        object.__setattr__(self, "b_ub", freeze(b_ub_v))
        object.__setattr__(self, "a_eq", freeze(a_eq_m))
        object.__setattr__(self, "b_eq", freeze(b_eq_v))
        object.__setattr__(self, "bounds", freeze(bnds))

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]


@dataclass(frozen=True)
class LpOutcome:
    status: LpStatus
    point: Optional[np.ndarray]
    value: Optional[float]
    iterations: int
    dual_value: Optional[float] = None

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Standard:
    """Standard-form rewrite: min c.x, rows on x >= 0, plus an offset constant.

    Original variables are shifted (finite lower bound), mirrored (only an
    upper bound) or split into a difference of nonnegatives (free).  Finite
    upper bounds of shifted variables become explicit inequality rows.
    """

    def __init__(self, lp: LinearProgram):
        n = lp.n_vars
        lo = lp.bounds[:, 0]
        hi = lp.bounds[:, 1]

        cols_of: list[tuple[int, ...]] = []
        col_sign: list[float] = []
        offset = np.zeros(n)
        n_struct = 0
        for j in range(n):
            if np.isfinite(lo[j]):
                cols_of.append((n_struct,))
                col_sign.append(1.0)
                offset[j] = lo[j]
                n_struct += 1
            elif np.isfinite(hi[j]):
                cols_of.append((n_struct,))
                col_sign.append(-1.0)
                offset[j] = hi[j]
                n_struct += 1
            else:
                cols_of.append((n_struct, n_struct + 1))
                col_sign.append(1.0)
                n_struct += 2

        def to_struct(a_orig: np.ndarray) -> np.ndarray:
            out = np.zeros((a_orig.shape[0], n_struct))
            for j in range(n):
                cols = cols_of[j]
                out[:, cols[0]] = a_orig[:, j] * col_sign[j]
                if len(cols) == 2:
                    out[:, cols[1]] = -a_orig[:, j]
            return out

        ub_rows = [to_struct(lp.a_ub)]
        ub_rhs = [lp.b_ub - lp.a_ub @ offset]
        bound_rows = []
        bound_rhs = []
        for j in range(n):
            if np.isfinite(lo[j]) and np.isfinite(hi[j]):
                row = np.zeros(n_struct)
                row[cols_of[j][0]] = 1.0
                bound_rows.append(row)
                bound_rhs.append(hi[j] - lo[j])
        if bound_rows:
            ub_rows.append(np.array(bound_rows))
            ub_rhs.append(np.array(bound_rhs))

        self.a_ub = np.vstack(ub_rows)
        self.b_ub = np.concatenate(ub_rhs)
        self.a_eq = to_struct(lp.a_eq)
        self.b_eq = lp.b_eq - lp.a_eq @ offset

        c_struct = np.zeros(n_struct)
        for j in range(n):
            cols = cols_of[j]
            c_struct[cols[0]] += lp.objective[j] * col_sign[j]
            if len(cols) == 2:
                c_struct[cols[1]] -= lp.objective[j]

        self.n_struct = n_struct
        self.cols_of = cols_of
        self.col_sign = col_sign
        self.offset = offset
        self.const = float(lp.objective @ offset)
        self.c_struct = c_struct
        self.n_orig = n

    def to_original(self, x_struct: np.ndarray) -> np.ndarray:
        z = np.empty(self.n_orig)
        for j in range(self.n_orig):
            cols = self.cols_of[j]
            if len(cols) == 2:
                z[j] = x_struct[cols[0]] - x_struct[cols[1]]
            else:
                z[j] = self.offset[j] + self.col_sign[j] * x_struct[cols[0]]
        return z


class _Tableau:
    """Dense simplex tableau with a shared pivoting loop for both phases."""

    def __init__(self, std: _Standard, tol: Tolerances, debug_path: Optional[str]):
        self.tol = tol
        self.debug_path = debug_path
        self.iterations = 0
        self.final_obj = 0.0

        # the only presolve step: drop all-zero rows, flagging contradictions
        feas_scale = tol.feas * (1.0 + max(np.max(np.abs(std.b_ub), initial=0.0),
                                           np.max(np.abs(std.b_eq), initial=0.0)))
        self.trivially_infeasible = False
        keep_ub = []
        for i in range(std.a_ub.shape[0]):
            if np.max(np.abs(std.a_ub[i]), initial=0.0) == 0.0:
                if std.b_ub[i] < -feas_scale:
                    self.trivially_infeasible = True
            else:
                keep_ub.append(i)
        keep_eq = []
        for i in range(std.a_eq.shape[0]):
            if np.max(np.abs(std.a_eq[i]), initial=0.0) == 0.0:
                if abs(std.b_eq[i]) > feas_scale:
                    self.trivially_infeasible = True
            else:
                keep_eq.append(i)
        a_ub, b_ub = std.a_ub[keep_ub], std.b_ub[keep_ub]
        a_eq, b_eq = std.a_eq[keep_eq], std.b_eq[keep_eq]

        m_ub, m_eq = a_ub.shape[0], a_eq.shape[0]
        m = m_ub + m_eq
        n_s = std.n_struct

        rows = np.vstack([a_ub, a_eq]) if m else np.zeros((0, n_s))
        rhs = np.concatenate([b_ub, b_eq])
        is_eq = np.zeros(m, dtype=bool)
        is_eq[m_ub:] = True

        negate = rhs < 0.0
        rows = np.where(negate[:, None], -rows, rows)
        rhs = np.abs(rhs)

        slack = np.zeros((m, m_ub))
        for i in range(m_ub):
            slack[i, i] = -1.0 if negate[i] else 1.0

        need_art = is_eq | (negate & ~is_eq)
        art_rows = np.flatnonzero(need_art)
        n_art = art_rows.shape[0]
        art = np.zeros((m, n_art))
        for a_col, i in enumerate(art_rows):
            art[i, a_col] = 1.0

        self.m = m
        self.n_struct = n_s
        self.n_slack = m_ub
        self.n_art = n_art
        self.slack_cols = np.arange(n_s, n_s + m_ub)
        self.art_cols = np.arange(n_s + m_ub, n_s + m_ub + n_art)
        n_cols = n_s + m_ub + n_art

        self.body = np.hstack([rows, slack, art]) if m else np.zeros((0, n_cols))
        self.rhs = rhs
        # kept pristine for dual extraction from the final basis
        self.initial_body = self.body.copy()
        self.initial_rhs = self.rhs.copy()
        self.basis = np.empty(m, dtype=int)
        art_iter = iter(self.art_cols)
        for i in range(m):
            self.basis[i] = next(art_iter) if need_art[i] else self.slack_cols[i]
        self.c_phase2 = np.concatenate([std.c_struct, np.zeros(m_ub + n_art)])

    def _reduced_costs(self, cost: np.ndarray) -> tuple[np.ndarray, float]:
        red = cost.copy()
        obj = 0.0
        for i in range(self.m):
            cb = cost[self.basis[i]]
            if cb != 0.0:
                red -= cb * self.body[i]
                obj += cb * self.rhs[i]
        return red, obj

    def _pivot(self, r: int, j: int) -> None:
        piv = self.body[r, j]
        self.body[r] /= piv
        self.rhs[r] /= piv
        factor = self.body[:, j].copy()
        factor[r] = 0.0
        self.body -= np.outer(factor, self.body[r])
        self.rhs -= factor * self.rhs[r]
        np.maximum(self.rhs, 0.0, out=self.rhs)
        self.basis[r] = j

    def _dump(self, phase: int, red: np.ndarray, obj: float) -> None:
        if self.debug_path is None:
            return
        with open(self.debug_path, "a", encoding="utf-8") as fh:
            fh.write(f"# phase={phase} iteration={self.iterations} objective={obj!r}\n")
            for i in range(self.m):
                cells = [f"{v:.17g}" for v in self.body[i]] + [f"{self.rhs[i]:.17g}"]
                fh.write(",".join(cells) + "\n")
            fh.write(",".join(f"{v:.17g}" for v in red) + f",{obj:.17g}\n")

    def run(self, cost: np.ndarray, allowed: np.ndarray, phase: int) -> str:
        """Pivot to termination; returns 'optimal', 'unbounded' or 'numerical'."""
        tol = self.tol
        red, obj = self._reduced_costs(cost)
        stall = 0
        bland = False
        self._dump(phase, red, obj)
        while True:
            if not (np.all(np.isfinite(self.body)) and np.all(np.isfinite(self.rhs))):
                return "numerical"
            cand = np.flatnonzero(allowed & (red < -tol.reduced))
            if cand.size == 0:
                self.final_obj = obj
                return "optimal"
            if bland:
                j = int(cand[0])
            else:
                j = int(cand[np.argmin(red[cand])])
            col = self.body[:, j]
            pos = col > tol.pivot
            if not np.any(pos):
                return "unbounded"
            ratios = np.full(self.m, np.inf)
            ratios[pos] = self.rhs[pos] / col[pos]
            best = np.min(ratios)
            ties = np.flatnonzero(ratios <= best + tol.pivot * (1.0 + abs(best)))
            # tie-break: lowest basis-variable index (Bland-compatible)
            r = int(ties[np.argmin(self.basis[ties])])

            delta = red[j] * self.rhs[r] / self.body[r, j]
            self._pivot(r, j)
            red = red - red[j] * self.body[r]
            red[j] = 0.0
            new_obj = obj + delta
            if obj - new_obj <= 1e-12 * (1.0 + abs(obj)):
                stall += 1
                if stall >= tol.stall_iters:
                    bland = True
            else:
                stall = 0
            obj = new_obj
            self.iterations += 1
            self._dump(phase, red, obj)
            if self.iterations > tol.max_iters:
                return "numerical"


def _run_two_phases(lp: LinearProgram, tol: Tolerances, debug_path: Optional[str]):
    std = _Standard(lp)
    tab = _Tableau(std, tol, debug_path)
    if tab.trivially_infeasible:
        return LpStatus.INFEASIBLE, tab, std

    if tab.n_art:
        cost1 = np.zeros(tab.body.shape[1])
        cost1[tab.art_cols] = 1.0
        allowed = np.ones(tab.body.shape[1], dtype=bool)
        state = tab.run(cost1, allowed, phase=1)
        if state != "optimal":  # phase 1 is bounded below, so never 'unbounded'
            return LpStatus.NUMERICAL, tab, std
        feas_scale = tol.feas * (1.0 + np.max(np.abs(tab.initial_rhs), initial=0.0))
        if tab.final_obj > feas_scale:
            return LpStatus.INFEASIBLE, tab, std
        # drive leftover artificials out; rows that resist are redundant and
        # stay pinned at zero for the rest of the solve
        for i in range(tab.m):
            if tab.basis[i] >= tab.art_cols[0]:
                row = tab.body[i, : tab.n_struct + tab.n_slack]
                pivots = np.flatnonzero(np.abs(row) > tol.pivot)
                if pivots.size:
                    tab._pivot(i, int(pivots[0]))

    allowed = np.ones(tab.body.shape[1], dtype=bool)
    if tab.n_art:
        allowed[tab.art_cols] = False
    state = tab.run(tab.c_phase2, allowed, phase=2)
    if state == "numerical":
        return LpStatus.NUMERICAL, tab, std
    if state == "unbounded":
        return LpStatus.UNBOUNDED, tab, std
    return LpStatus.OPTIMAL, tab, std


def _extract_point(tab: _Tableau, std: _Standard) -> np.ndarray:
    x_std = np.zeros(tab.body.shape[1])
    x_std[tab.basis] = tab.rhs
    return std.to_original(x_std[: tab.n_struct])


def _dual_value(tab: _Tableau, std: _Standard) -> Optional[float]:
    """b.y for y = c_B B^{-1} at the final basis; equals the optimum there."""
    if tab.m == 0:
        return std.const
    try:
        basis_mat = tab.initial_body[:, tab.basis]
        y = np.linalg.solve(basis_mat.T, tab.c_phase2[tab.basis])
        return float(tab.initial_rhs @ y) + std.const
    except np.linalg.LinAlgError:
        return None


def solve_lp(lp: LinearProgram, tol: Tolerances = Tolerances(),
             debug_path: Optional[str] = None) -> LpOutcome:
    """Solve lp with the two-phase primal simplex.

    Deterministic: identical inputs produce identical outcomes.  When
    debug_path is given, the full tableau trajectory is appended there as
    CSV blocks for failure triage.
    """
    status, tab, std = _run_two_phases(lp, tol, debug_path)
    if status is not LpStatus.OPTIMAL:
        return LpOutcome(status=status, point=None, value=None, iterations=tab.iterations)
    point = _extract_point(tab, std)
    value = float(lp.objective @ point)
    return LpOutcome(status=LpStatus.OPTIMAL, point=freeze(point), value=value,
                     iterations=tab.iterations, dual_value=_dual_value(tab, std))


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    witness: Optional[np.ndarray]
    iterations: int


def check_feasible(a_ub=None, b_ub=None, a_eq=None, b_eq=None, bounds=None,
                   n_vars: Optional[int] = None,
                   tol: Tolerances = Tolerances()) -> FeasibilityResult:
    """Phase-one feasibility verdict for an inequality/equality system.

    The witness, when reported, satisfies every row within the relative
    feasibility tolerance.
    """
    if n_vars is None:
        for arr in (a_ub, a_eq):
            if arr is not None and np.asarray(arr).size:
                n_vars = np.atleast_2d(np.asarray(arr)).shape[1]
                break
        else:
            raise DimensionError("cannot infer variable count from empty system")
    lp = LinearProgram(np.zeros(n_vars), a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=b_eq,
                       bounds=bounds)
    out = solve_lp(lp, tol)
    if out.status is LpStatus.OPTIMAL:
        return FeasibilityResult(True, out.point, out.iterations)
    if out.status is LpStatus.INFEASIBLE:
        return FeasibilityResult(False, None, out.iterations)
    if out.status is LpStatus.UNBOUNDED:
        raise UnboundedSystemError("unexpected unbounded phase in feasibility check")
    raise NumericalError("simplex numerical breakdown in feasibility check")
