"""VI solver and membership tests: pivoting against the extragradient
fallback, grid-residual oracles, invariance of (c, d), and nestedness."""

import numpy as np
import pytest

from conftest import make_reference_game
from oracles import box_vi_residual, feasible_grid
from scenario_gne import (
    DimensionError,
    HalfspaceSystem,
    InfeasibleSystemError,
    VIProblem,
    box_rows,
    compute_invariants,
    is_equilibrium,
    solve_vi,
)
from scenario_gne.equilibrium import solve_vi_with_multipliers
from scenario_gne.game import AggregativeGame
from scenario_gne.util import freeze


def _local(game):
    return HalfspaceSystem(game.local_a, game.local_b)


def test_reference_solution_lies_on_equilibrium_line(ref_game, local_sys):
    x = solve_vi(VIProblem(ref_game.mapping_matrix, ref_game.mapping_offset, local_sys))
    assert abs(x[1] - x[0] - 1.0) <= 1e-8
    assert np.all(np.abs(x) <= 2.0 + 1e-8)


def test_single_player_projected_minimum():
    # min 0.5 x^2 + x on [0, 2]: unconstrained minimizer -1 projects to 0
    a, b = box_rows([[0.0, 2.0]])
    x = solve_vi(VIProblem([[1.0]], [1.0], HalfspaceSystem(a, b)))
    assert x[0] == pytest.approx(0.0, abs=1e-9)


def test_cut_problem_solution_on_clipped_segment(ref_game, local_sys):
    sys = local_sys.with_rows([[1.0, 1.0]], [0.0], sample=1)
    x = solve_vi(VIProblem(ref_game.mapping_matrix, ref_game.mapping_offset, sys))
    assert abs(x[1] - x[0] - 1.0) <= 1e-8
    assert -2.0 - 1e-9 <= x[0] <= -0.5 + 1e-9

    # grid VI-residual oracle at 0.01: no feasible grid point strictly
    # improves on the returned point by more than the VI gap tolerance
    grid = feasible_grid(sys.a, sys.b, lim=2.0, step=0.01)
    f_star = ref_game.mapping(x)
    gaps = (grid - x) @ f_star
    assert np.min(gaps) >= -1e-6


def test_kkt_certificate_reported(ref_game, local_sys):
    x, lam = solve_vi_with_multipliers(
        VIProblem(ref_game.mapping_matrix, ref_game.mapping_offset, local_sys))
    stat = ref_game.mapping(x) + local_sys.a.T @ lam
    assert np.max(np.abs(stat)) <= 1e-8 * (1.0 + np.max(np.abs(ref_game.mapping_offset)))
    slack = local_sys.b - local_sys.a @ x
    assert np.min(slack) >= -1e-8
    assert abs(float(lam @ slack)) <= 1e-8


def test_infeasible_region_raises(ref_game):
    sys = HalfspaceSystem([[1.0, 0.0], [-1.0, 0.0]], [0.0, -1.0])
    with pytest.raises(InfeasibleSystemError):
        solve_vi(VIProblem(ref_game.mapping_matrix, ref_game.mapping_offset, sys))


def test_invariants_reference_values(ref_game):
    inv = compute_invariants(ref_game, [0.0, 1.0])
    np.testing.assert_allclose(inv.c, [-2.0, 2.0], atol=1e-12)
    assert inv.d == pytest.approx(1.0, abs=1e-12)

    inv2 = compute_invariants(ref_game, [-1.0, 0.0])
    np.testing.assert_allclose(inv2.c, inv.c, atol=1e-12)
    assert inv2.d == pytest.approx(inv.d, abs=1e-12)


def test_invariants_identity_matrix(rng):
    a, b = box_rows([[-3, 3], [-3, 3]])
    game = AggregativeGame(n_players=1, dims=(2,), mapping_matrix=freeze(np.eye(2)),
                           mapping_offset=freeze(np.zeros(2)), local_a=freeze(a),
                           local_b=freeze(b))
    w = rng.normal(size=2)
    inv = compute_invariants(game, w)
    np.testing.assert_allclose(inv.c, 2.0 * w, atol=1e-12)
    assert inv.d == pytest.approx(float(w @ w), abs=1e-12)


def test_membership_examples(ref_game, ref_inv, local_sys):
    assert is_equilibrium(ref_game, ref_inv, local_sys, [0.0, 1.0])
    assert not is_equilibrium(ref_game, ref_inv, local_sys, [0.0, 0.0])
    cut = local_sys.with_rows([[1.0, 1.0]], [0.0], sample=1)
    assert not is_equilibrium(ref_game, ref_inv, cut, [0.0, 1.0])
    assert is_equilibrium(ref_game, ref_inv, cut, [-0.5, 0.5])


def test_cross_method_agreement(ref_game, local_sys):
    m_mat = ref_game.mapping_matrix
    prob = VIProblem(m_mat, ref_game.mapping_offset, local_sys)
    x_a = solve_vi(prob, method="pivoting")
    x_b = solve_vi(prob, method="extragradient")
    sym = m_mat + m_mat.T
    np.testing.assert_allclose(sym @ x_a, sym @ x_b, atol=1e-6)

    inv_a = compute_invariants(ref_game, x_a)
    inv_b = compute_invariants(ref_game, x_b)
    np.testing.assert_allclose(inv_a.c, inv_b.c, atol=1e-6)
    assert inv_a.d == pytest.approx(inv_b.d, abs=1e-6)


def test_extragradient_requires_boxes(ref_game, local_sys):
    sys = local_sys.with_rows([[1.0, 1.0]], [1.0], sample=1)
    with pytest.raises(DimensionError):
        solve_vi(VIProblem(ref_game.mapping_matrix, ref_game.mapping_offset, sys),
                 method="extragradient")


def _random_monotone_box_instance(rng):
    g = rng.normal(size=(2, 2))
    sym = g @ g.T
    skew = rng.normal() * np.array([[0.0, 1.0], [-1.0, 0.0]])
    m_mat = sym + skew
    q = rng.uniform(-2.0, 2.0, 2)
    half = rng.uniform(0.5, 2.0, 2)
    a, b = box_rows(np.column_stack([-half, half]))
    return m_mat, q, -half, half, HalfspaceSystem(a, b)


def test_random_instances_beat_grid_residual(rng):
    for _ in range(10):
        m_mat, q, lo, hi, sys = _random_monotone_box_instance(rng)
        x = solve_vi(VIProblem(m_mat, q, sys))
        res_star = box_vi_residual(m_mat, q, lo, hi, x[None, :])[0]
        assert res_star <= 1e-8

        pts = feasible_grid(sys.a, sys.b, lim=float(np.max(hi)), step=0.05)
        grid_res = box_vi_residual(m_mat, q, lo, hi, pts)
        lipschitz = 1.0 + np.linalg.norm(m_mat, 2)
        assert np.min(grid_res) >= res_star - 0.05 * lipschitz


def test_zero_matrix_game_membership():
    # with no curvature the equilibria are exactly the minimizers of q . x
    a, b = box_rows([[-1.0, 1.0], [-1.0, 1.0]])
    sys = HalfspaceSystem(a, b)
    game = AggregativeGame(n_players=1, dims=(2,), mapping_matrix=freeze(np.zeros((2, 2))),
                           mapping_offset=freeze(np.array([1.0, 0.0])),
                           local_a=freeze(a), local_b=freeze(b))
    x = solve_vi(VIProblem(game.mapping_matrix, game.mapping_offset, sys))
    assert x[0] == pytest.approx(-1.0, abs=1e-9)
    inv = compute_invariants(game, x)
    np.testing.assert_array_equal(inv.c, [0.0, 0.0])
    assert inv.d == 0.0  # x . M x vanishes, membership rests on (ii)-(iii)
    # the whole face x1 = -1 passes, everything else fails
    assert is_equilibrium(game, inv, sys, [-1.0, 0.3])
    assert is_equilibrium(game, inv, sys, [-1.0, -1.0])
    assert not is_equilibrium(game, inv, sys, [0.0, 0.0])


def test_nestedness_of_membership(rng, ref_sampler):
    from scenario_gne import build_program, sample_scenarios

    game = make_reference_game()
    local = _local(game)
    inv = compute_invariants(
        game, solve_vi(VIProblem(game.mapping_matrix, game.mapping_offset, local)))
    grid = feasible_grid(game.local_a, game.local_b, lim=2.0, step=0.2)
    for run in range(5):
        scen = sample_scenarios(ref_sampler, 4, seed=1000 + run)
        prog = build_program(game, scen, seed=1000 + run)
        verdicts = []
        for k in range(len(scen) + 1):
            sys_k = prog.combined.restrict_samples(range(1, k + 1))
            verdicts.append(np.array([
                is_equilibrium(game, inv, sys_k, pt) for pt in grid]))
        for k in range(len(scen)):
            # membership under k+1 samples implies membership under k
            assert np.all(verdicts[k][verdicts[k + 1]])
