"""Empirical violation estimates and the sample-size sweep.

The equilibrium set of a monotone aggregative game is the intersection of
an affine carrier with the pooled polytope; when that intersection is a
segment it is gridded by a scalar parameter mu in [0, 1] and each probe is
scored against fresh scenario draws.  A probe violates a draw when any of
the drawn rows cuts it off; since probes are equilibria that stay
equilibria whenever they stay feasible, violation reduces to feasibility.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .equilibrium import EquilibriumInvariants, is_equilibrium
from .errors import (
    ConfigError,
    EmptyEquilibriumSetError,
    InfeasibleSystemError,
    NonSegmentSetError,
    NumericalError,
)
from .game import AggregativeGame
from .polytope import HalfspaceSystem, extent_along, support_witness
from .scenario import SamplerSpec, sample_scenarios
from .util import child_seed, freeze, parallel_map

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-8
_RANK_TOL = 1e-9


def _segment_direction(game: AggregativeGame, inv: EquilibriumInvariants) -> np.ndarray:
    """Unit vector spanning the null space of M + M^T, canonical sign.

    Errors out unless that null space is exactly one-dimensional (the
    carrier of a segment); higher-dimensional sets are out of scope and a
    zero-dimensional carrier means the set is a single point.
    """
    sym = game.mapping_matrix + game.mapping_matrix.T
    evals, evecs = np.linalg.eigh(sym)
    scale = max(1.0, float(np.max(np.abs(evals))))
    null_idx = np.flatnonzero(np.abs(evals) <= _RANK_TOL * scale)
    if null_idx.size == 0:
        raise NonSegmentSetError(
            "M + M^T has full rank: the equilibrium set is a single point, not a segment")
    if null_idx.size > 1:
        raise NonSegmentSetError(
            f"M + M^T has a {null_idx.size}-dimensional null space: the equilibrium "
            f"set is not a segment and cannot be gridded")
    u = evecs[:, null_idx[0]]
    lead = np.flatnonzero(np.abs(u) > 1e-12)
    if lead.size and u[lead[0]] < 0:
        u = -u
    return u


def carrier_system(game: AggregativeGame, inv: EquilibriumInvariants,
                   sys: HalfspaceSystem) -> HalfspaceSystem:
    """sys intersected with the affine carrier (M + M^T) x = c."""
    sym = game.mapping_matrix + game.mapping_matrix.T
    return sys.with_equalities(sym, inv.c)


def grid_equilibrium_set(game: AggregativeGame, inv: EquilibriumInvariants,
                         sys: HalfspaceSystem,
                         granularity: float) -> tuple[np.ndarray, np.ndarray]:
    """Probe points (1 - mu) x1 + mu x2 between the segment extrema.

    Returns (mus, points); mu runs from 0 to 1 in steps of granularity with
    the endpoint always included.  Every probe is checked for membership.
    """
    if not 0.0 < granularity <= 1.0:
        raise ConfigError("granularity must lie in (0, 1]")
    u = _segment_direction(game, inv)
    carrier = carrier_system(game, inv, sys)
    try:
        _, x_lo = support_witness(carrier, -u)
        _, x_hi = support_witness(carrier, u)
    except InfeasibleSystemError as exc:
        raise EmptyEquilibriumSetError("equilibrium set is empty") from exc
    if x_lo is None or x_hi is None:
        raise NonSegmentSetError("carrier is unbounded along the segment direction")

    count = int(math.floor((1.0 - 1e-9) / granularity)) + 1
    mus = [i * granularity for i in range(count)]
    if 1.0 - mus[-1] > 1e-9:
        mus.append(1.0)
    else:
        mus[-1] = 1.0
    mus_arr = np.array(mus)
    points = np.outer(1.0 - mus_arr, x_lo) + np.outer(mus_arr, x_hi)

    for mu, pt in zip(mus_arr, points):
        if not is_equilibrium(game, inv, sys, pt):
            raise NumericalError(f"grid point at mu={mu:g} failed the membership test")
    return freeze(mus_arr), freeze(points)


@dataclass(frozen=True)
class ViolationReport:
    """Per-probe empirical violation frequencies against fresh draws.

    set_violation is the frequency of draws cutting off at least one probe,
    so it dominates every per-probe frequency on the same draw set.
    """

    mus: np.ndarray
    points: np.ndarray
    per_point: np.ndarray
    set_violation: float
    n_fresh: int
    seed: int
    epsilon_bound: Optional[float] = None

    @property
    def max_violation(self) -> float:
        return float(np.max(self.per_point))

    @property
    def argmax_mu(self) -> float:
        return float(self.mus[int(np.argmax(self.per_point))])


def empirical_violation(mus: np.ndarray, points: np.ndarray, sampler: SamplerSpec,
                        n_fresh: int, seed: int,
                        epsilon_bound: Optional[float] = None,
                        feas_tol: float = FEAS_TOL) -> ViolationReport:
    """Score every probe against n_fresh fresh scenario draws.

    A probe violates a draw when some drawn row exceeds its offset by more
    than the relative feasibility tolerance.  Draw j uses the stream
    (seed, j), so estimates for a prefix of draws are reproducible
    regardless of scheduling.
    """
    if n_fresh < 1:
        raise ConfigError("n_fresh must be >= 1")
    pts = np.asarray(points, dtype=float)
    draws = sample_scenarios(sampler, n_fresh, seed)

    def violated_by(draw) -> np.ndarray:
        scale = feas_tol * (1.0 + np.max(np.abs(draw.b), initial=0.0))
        excess = draw.a @ pts.T - draw.b[:, None]
        return np.any(excess > scale, axis=0)

    flags = parallel_map(violated_by, draws)
    matrix = np.vstack(flags)
    per_point = matrix.mean(axis=0)
    set_violation = float(np.any(matrix, axis=1).mean())
    return ViolationReport(
        mus=freeze(np.asarray(mus, dtype=float)),
        points=freeze(pts),
        per_point=freeze(per_point),
        set_violation=set_violation,
        n_fresh=int(n_fresh),
        seed=int(seed),
        epsilon_bound=epsilon_bound,
    )


@dataclass(frozen=True)
class SweepResult:
    """Normalized segment length |set_K| / |set_0| per trial and sample count."""

    k_grid: tuple[int, ...]
    ratios: np.ndarray          # (trials, len(k_grid))
    mean: np.ndarray
    std: np.ndarray
    seed: int


def sweep_normalized_length(game: AggregativeGame, inv: EquilibriumInvariants,
                            sampler: SamplerSpec, k_grid: Sequence[int],
                            trials: int, seed: int) -> SweepResult:
    """Shrinkage of the equilibrium segment as samples accumulate.

    Trial t draws its scenarios from the child stream (seed, t); within a
    trial the draws for consecutive K values are nested prefixes, so each
    trial's ratio curve is non-increasing by construction.  An emptied set
    is logged and scored as length zero.
    """
    ks = [int(k) for k in k_grid]
    if any(k < 0 for k in ks) or sorted(ks) != ks:
        raise ConfigError("k_grid must be a sorted list of nonnegative counts")
    if trials < 1:
        raise ConfigError("trials must be >= 1")

    u = _segment_direction(game, inv)
    local = HalfspaceSystem(game.local_a, game.local_b)
    lo0, hi0 = extent_along(carrier_system(game, inv, local), u)
    base_len = hi0 - lo0
    if base_len <= 0.0:
        raise NonSegmentSetError("baseline equilibrium segment has zero length")

    ratios = np.ones((trials, len(ks)))
    for t in range(trials):
        trial_seed = child_seed(seed, t + 1)
        scenarios = sample_scenarios(sampler, max(ks, default=0), trial_seed)
        for col, k in enumerate(ks):
            if k == 0:
                ratios[t, col] = 1.0
                continue
            sys_k = local
            for s in scenarios[:k]:
                sys_k = sys_k.with_rows(s.a, s.b, s.index)
            try:
                lo, hi = extent_along(carrier_system(game, inv, sys_k), u)
                ratios[t, col] = max(0.0, hi - lo) / base_len
            except InfeasibleSystemError:
                logger.warning("trial %d: equilibrium set emptied by K=%d samples", t + 1, k)
                ratios[t, col] = 0.0
    ddof = 1 if trials > 1 else 0
    return SweepResult(
        k_grid=tuple(ks),
        ratios=freeze(ratios),
        mean=freeze(ratios.mean(axis=0)),
        std=freeze(ratios.std(axis=0, ddof=ddof)),
        seed=int(seed),
    )


def write_violation_csv(report: ViolationReport, path, header_lines: Sequence[str] = ()) -> None:
    """CSV columns: mu, x1..xn, violation_freq; header_lines go in as comments."""
    n = report.points.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(line.rstrip("\n") + "\n")
        writer = csv.writer(fh)
        writer.writerow(["mu"] + [f"x{j + 1}" for j in range(n)] + ["violation_freq"])
        for mu, pt, freq in zip(report.mus, report.points, report.per_point):
            writer.writerow([f"{mu:.17g}"] + [f"{v:.17g}" for v in pt] + [f"{freq:.17g}"])


def violation_summary(report: ViolationReport) -> dict:
    return {
        "n_fresh": report.n_fresh,
        "seed": report.seed,
        "set_violation": report.set_violation,
        "max_violation": report.max_violation,
        "argmax_mu": report.argmax_mu,
        "epsilon_bound": report.epsilon_bound,
        "n_probes": int(report.mus.shape[0]),
    }


def write_sweep_csv(result: SweepResult, path, header_lines: Sequence[str] = ()) -> None:
    """CSV columns: K, mean_ratio, std_ratio."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(line.rstrip("\n") + "\n")
        writer = csv.writer(fh)
        writer.writerow(["K", "mean_ratio", "std_ratio"])
        for k, mean, std in zip(result.k_grid, result.mean, result.std):
            writer.writerow([k, f"{mean:.17g}", f"{std:.17g}"])
