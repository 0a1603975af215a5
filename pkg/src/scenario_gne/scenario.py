"""Scenario sampling, support-subsample counting, and robustness certificates.

Workflow: draw K i.i.d. coupling constraints, pool them with the local
polytope, and count how many samples actually shape the equilibrium set.
A sample is *active* when its boundary touches the pooled feasible set;
an active sample *supports* the equilibrium set when a dual-feasibility
system on the augmented (multiplier, point) space is solvable on its
boundary.  The certificate converts the support count s_K into the
violation bound eps(s_K) obtained by splitting the confidence budget beta
evenly across the K binomial terms of the defining equation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .equilibrium import EquilibriumInvariants, VIProblem, solve_vi
from .errors import ConfigError, DimensionError, EmptyEquilibriumSetError
from .game import AggregativeGame, Monotonicity, check_monotone
from .lp import check_feasible
from .polytope import ACTIVITY_TOL, LOCAL_ROW, HalfspaceSystem, active_rows_by_sample
from .util import freeze, parallel_map, rng_stream

logger = logging.getLogger(__name__)

# per-sample verdicts
INACTIVE = "inactive"
ACTIVE_NO_EQUILIBRIUM = "active_no_equilibrium"
SUPPORT = "support"


@dataclass(frozen=True)
class Scenario:
    """One uncertainty realization: rows a x <= b (m rows, m >= 1)."""

    index: int
    a: np.ndarray
    b: np.ndarray

    def __init__(self, index: int, a, b):
        a_mat = np.atleast_2d(np.asarray(a, dtype=float))
        b_vec = np.atleast_1d(np.asarray(b, dtype=float))
        if a_mat.shape[0] < 1 or b_vec.shape != (a_mat.shape[0],):
            raise DimensionError("scenario needs at least one row with matching offset")
        if not (np.all(np.isfinite(a_mat)) and np.all(np.isfinite(b_vec))):
            raise DimensionError("scenario entries must be finite")
        object.__setattr__(self, "index", int(index))
        object.__setattr__(self, "a", freeze(a_mat))
        object.__setattr__(self, "b", freeze(b_vec))


@dataclass(frozen=True)
class SamplerSpec:
    """Either a uniform single-halfspace sampler (box over the n coefficient
    entries plus the offset) or a fixed user-supplied scenario list."""

    kind: str
    box: Optional[np.ndarray] = None
    scenarios: Optional[tuple[Scenario, ...]] = None

    @classmethod
    def uniform_halfspace(cls, box) -> "SamplerSpec":
        box_arr = np.asarray(box, dtype=float)
        if box_arr.ndim != 2 or box_arr.shape[1] != 2 or box_arr.shape[0] < 2:
            raise ConfigError("sampler box must be (n+1, 2)")
        if np.any(box_arr[:, 0] > box_arr[:, 1]):
            raise ConfigError("malformed sampler box: lo > hi")
        return cls(kind="uniform_halfspace", box=freeze(box_arr))

    @classmethod
    def user_supplied(cls, scenarios: Sequence[Scenario]) -> "SamplerSpec":
        return cls(kind="user_supplied", scenarios=tuple(scenarios))

    @property
    def dim(self) -> int:
        if self.kind == "uniform_halfspace":
            return self.box.shape[0] - 1
        return self.scenarios[0].a.shape[1] if self.scenarios else 0


def sample_scenarios(sampler: SamplerSpec, k: int, seed: int) -> list[Scenario]:
    """K i.i.d. scenarios; scenario k draws from the stream (seed, k).

    Streams are counter-based, so the list for K' > K extends the list for
    K sample-by-sample, and parallel generation cannot reorder draws.
    """
    if k < 0:
        raise ConfigError("scenario count must be nonnegative")
    if sampler.kind == "user_supplied":
        given = sampler.scenarios or ()
        if k > len(given):
            raise ConfigError(f"user-supplied sampler holds {len(given)} scenarios, "
                              f"requested {k}")
        return [Scenario(index=i + 1, a=s.a, b=s.b) for i, s in enumerate(given[:k])]
    if sampler.kind != "uniform_halfspace":
        raise ConfigError(f"unknown sampler kind {sampler.kind!r}")
    box = sampler.box
    n = box.shape[0] - 1
    out = []
    for idx in range(1, k + 1):
        vals = rng_stream(seed, idx).uniform(box[:, 0], box[:, 1])
        out.append(Scenario(index=idx, a=vals[:n].reshape(1, n), b=vals[n:]))
    return out


@dataclass(frozen=True)
class ScenarioProgram:
    """A game pooled with a K-multisample: the combined system carries the
    local rows plus every scenario row, tagged by sample index."""

    game: AggregativeGame
    scenarios: tuple[Scenario, ...]
    seed: int
    combined: HalfspaceSystem


def build_program(game: AggregativeGame, scenarios: Sequence[Scenario],
                  seed: int) -> ScenarioProgram:
    scen = tuple(scenarios)
    blocks_a = [game.local_a]
    blocks_b = [game.local_b]
    tags = [np.full(game.local_a.shape[0], LOCAL_ROW, dtype=int)]
    for s in scen:
        if s.a.shape[1] != game.n:
            raise DimensionError(f"scenario {s.index} has dimension {s.a.shape[1]}, "
                                 f"game has {game.n}")
        blocks_a.append(s.a)
        blocks_b.append(s.b)
        tags.append(np.full(s.a.shape[0], s.index, dtype=int))
    combined = HalfspaceSystem(np.vstack(blocks_a), np.concatenate(blocks_b),
                               np.concatenate(tags))
    return ScenarioProgram(game=game, scenarios=scen, seed=int(seed), combined=combined)


@dataclass(frozen=True)
class SupportResult:
    """Counting outcome: active sample set, support count s_K with respect
    to the equilibrium set, and v_K = |active| with respect to the pooled
    feasible set."""

    active: tuple[int, ...]
    s_k: int
    v_k: int
    per_sample: dict[int, str]


def _dual_membership_system(game: AggregativeGame, inv: EquilibriumInvariants,
                            combined: HalfspaceSystem,
                            facet: Optional[tuple[np.ndarray, float]] = None):
    """Feasibility system over (lam, x): lam >= 0 dual-certifies membership
    of x in the equilibrium set under the pooled rows; an optional facet
    pins x to one sampled hyperplane."""
    local = combined.row_sample == LOCAL_ROW
    h_mat = combined.a[local]
    h_vec = combined.b[local]
    n_loc = h_mat.shape[0]
    n = game.n
    m_mat = game.mapping_matrix
    q = game.mapping_offset

    a_ub = [np.concatenate([h_vec, q])[None, :]]
    b_ub = [np.array([-inv.d])]
    a_ub.append(np.hstack([np.zeros((combined.n_rows, n_loc)), combined.a]))
    b_ub.append(combined.b)

    a_eq = [np.hstack([h_mat.T, -m_mat.T])]
    b_eq = [-(inv.c + q)]
    if facet is not None:
        row, offset = facet
        a_eq.append(np.concatenate([np.zeros(n_loc), row])[None, :])
        b_eq.append(np.array([offset]))

    bounds = np.vstack([
        np.column_stack([np.zeros(n_loc), np.full(n_loc, np.inf)]),
        np.column_stack([np.full(n, -np.inf), np.full(n, np.inf)]),
    ])
    return (np.vstack(a_ub), np.concatenate(b_ub),
            np.vstack(a_eq), np.concatenate(b_eq), bounds)


def _equilibrium_set_nonempty(game: AggregativeGame, inv: EquilibriumInvariants,
                              combined: HalfspaceSystem) -> bool:
    a_ub, b_ub, a_eq, b_eq, bounds = _dual_membership_system(game, inv, combined)
    return check_feasible(a_ub, b_ub, a_eq, b_eq, bounds).feasible


def _first_emptying_prefix(game: AggregativeGame, inv: EquilibriumInvariants,
                           prog: ScenarioProgram) -> Optional[int]:
    for k in range(1, len(prog.scenarios) + 1):
        prefix = prog.combined.restrict_samples(range(1, k + 1))
        if not _equilibrium_set_nonempty(game, inv, prefix):
            return k
    return None


def support_subsample_count(prog: ScenarioProgram, inv: EquilibriumInvariants,
                            act_tol: float = ACTIVITY_TOL,
                            singleton_mode: str = "activity") -> SupportResult:
    """Count the samples that shape the equilibrium set.

    Per active sample, each touching row is pinned as an equality and the
    dual membership system is solved; the sample counts once toward s_K as
    soon as any of its rows admits a solution.  Exact duplicates count
    once: a minimal irreducible support subsample never needs two copies
    of the same constraint.  Strictly monotone games have a singleton
    equilibrium set; there the default is a direct activity test at the
    unique equilibrium (singleton_mode="activity"), with the dual system
    retained as the "dual" mode.
    """
    if singleton_mode not in ("activity", "dual"):
        raise ConfigError(f"unknown singleton_mode {singleton_mode!r}")
    game = prog.game
    combined = prog.combined
    by_sample = active_rows_by_sample(combined, act_tol)
    active = tuple(sorted(k for k, rows in by_sample.items() if rows))
    per_sample = {s.index: INACTIVE for s in prog.scenarios}
    geometry = {s.index: (s.a.tobytes(), s.b.tobytes()) for s in prog.scenarios}

    verdict, _ = check_monotone(game)
    use_activity = (verdict is Monotonicity.STRICTLY_MONOTONE
                    and singleton_mode == "activity")

    if use_activity:
        x_star = solve_vi(VIProblem(game.mapping_matrix, game.mapping_offset, combined))
        statuses = []
        for k in active:
            hit = False
            for pos in by_sample[k]:
                gap = abs(float(combined.a[pos] @ x_star) - combined.b[pos])
                if gap <= act_tol * (1.0 + abs(combined.b[pos])):
                    hit = True
                    break
            statuses.append(SUPPORT if hit else ACTIVE_NO_EQUILIBRIUM)
    else:
        if not _equilibrium_set_nonempty(game, inv, combined):
            first = _first_emptying_prefix(game, inv, prog)
            logger.warning("equilibrium set emptied at sample prefix %s; the "
                           "nonemptiness premise does not hold for this draw", first)
            raise EmptyEquilibriumSetError(
                f"equilibrium set is empty under the pooled samples "
                f"(first emptying prefix: {first})")

        def sample_supports(k: int) -> str:
            for pos in by_sample[k]:
                facet = (combined.a[pos], float(combined.b[pos]))
                a_ub, b_ub, a_eq, b_eq, bounds = _dual_membership_system(
                    game, inv, combined, facet)
                if check_feasible(a_ub, b_ub, a_eq, b_eq, bounds).feasible:
                    return SUPPORT
            return ACTIVE_NO_EQUILIBRIUM

        statuses = parallel_map(sample_supports, active)

    for k, status in zip(active, statuses):
        per_sample[k] = status
    # a minimal irreducible support subsample keeps one copy of exact
    # duplicates, so the count is over distinct supporting geometries
    s_k = len({geometry[k] for k, v in per_sample.items() if v == SUPPORT})
    return SupportResult(active=active, s_k=s_k, v_k=len(active), per_sample=per_sample)


def epsilon_even_split(k: int, beta: float, h: int) -> float:
    """Violation bound eps(h) for an even beta split across the K terms.

    eps(K) = 1; for h < K, eps(h) = 1 - (beta / (K * binom(K, h)))^(1/(K-h)),
    evaluated in the log domain so large K stays exact to double precision.
    """
    _validate_epsilon_args(k, beta, h)
    if h == k:
        return 1.0
    return min(1.0, max(0.0, -math.expm1(_log_one_minus_epsilon(k, beta, h))))


def _log_one_minus_epsilon(k: int, beta: float, h: int) -> float:
    return (math.log(beta) - math.log(k) - _log_binom(k, h)) / (k - h)


def epsilon_from_weights(k: int, beta: float, h: int, weights: Sequence[float]) -> float:
    """Violation bound for an arbitrary positive split of beta.

    weights[h] is the budget of term h, h = 0..K-1; the weights must be
    positive and sum to beta.
    """
    _validate_epsilon_args(k, beta, h)
    w = np.asarray(weights, dtype=float)
    if w.shape != (k,):
        raise ConfigError(f"need {k} weights, got {w.shape}")
    if np.any(w <= 0.0):
        raise ConfigError("weights must be positive")
    if not math.isclose(float(w.sum()), beta, rel_tol=1e-9, abs_tol=0.0):
        raise ConfigError("weights must sum to beta")
    if h == k:
        return 1.0
    log_term = (math.log(w[h]) - _log_binom(k, h)) / (k - h)
    return min(1.0, max(0.0, -math.expm1(log_term)))


def epsilon_defining_sum(k: int, beta: float) -> float:
    """Re-evaluate sum_{h<K} binom(K,h) (1 - eps(h))^(K-h) for the even split;
    equals beta because each term is beta/K by construction.

    The terms are accumulated in the log domain: for h close to K the
    rounded eps(h) double carries too few bits of 1 - eps(h) to reproduce
    the sum to full precision.
    """
    total = 0.0
    for h in range(k):
        total += math.exp(_log_binom(k, h) + (k - h) * _log_one_minus_epsilon(k, beta, h))
    return total


def _validate_epsilon_args(k: int, beta: float, h: int) -> None:
    if k < 1:
        raise ConfigError("K must be >= 1")
    if not 0.0 < beta < 1.0:
        raise ConfigError("beta out of range (0, 1)")
    if not 0 <= h <= k:
        raise ConfigError(f"support count {h} outside 0..{k}")


def _log_binom(k: int, h: int) -> float:
    return math.lgamma(k + 1) - math.lgamma(h + 1) - math.lgamma(k - h + 1)


@dataclass(frozen=True)
class Certificate:
    """A-posteriori robustness certificate: with confidence 1 - beta, the
    violation probability of the equilibrium set is at most epsilon_s.
    epsilon_v is the looser bound for the pooled feasible set."""

    k: int
    beta: float
    s_k: int
    v_k: int
    epsilon_s: float
    epsilon_v: float
    seed: int
    per_sample: dict[int, str]

    def to_json_dict(self) -> dict:
        return {
            "K": self.k,
            "beta": self.beta,
            "s_K": self.s_k,
            "v_K": self.v_k,
            "epsilon_sK": self.epsilon_s,
            "epsilon_vK": self.epsilon_v,
            "seed": self.seed,
            "per_sample": {str(k): v for k, v in sorted(self.per_sample.items())},
        }


def certify(prog: ScenarioProgram, inv: EquilibriumInvariants, beta: float,
            act_tol: float = ACTIVITY_TOL, singleton_mode: str = "activity") -> Certificate:
    """Run the counting algorithm and evaluate the violation bound.

    K = 0 is the documented trivial edge: no samples, no guarantee, eps = 1.
    """
    if not 0.0 < beta < 1.0:
        raise ConfigError("beta out of range (0, 1)")
    k = len(prog.scenarios)
    if k == 0:
        return Certificate(k=0, beta=beta, s_k=0, v_k=0, epsilon_s=1.0, epsilon_v=1.0,
                           seed=prog.seed, per_sample={})
    result = support_subsample_count(prog, inv, act_tol=act_tol,
                                     singleton_mode=singleton_mode)
    return Certificate(
        k=k,
        beta=beta,
        s_k=result.s_k,
        v_k=result.v_k,
        epsilon_s=epsilon_even_split(k, beta, result.s_k),
        epsilon_v=epsilon_even_split(k, beta, result.v_k),
        seed=prog.seed,
        per_sample=result.per_sample,
    )
