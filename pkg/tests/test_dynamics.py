from fractions import Fraction

import numpy as np
import pytest

from bepdyn.dynamics import (
    classify_convergence,
    find_rest_points,
    integrate,
    interior_grid,
    numeric_jacobian,
    perturbation_probe,
)
from bepdyn.game import (
    make_asymmetric_hawk_dove,
    make_asymmetric_pd,
    make_coordination,
    make_prisoners_dilemma,
    make_public_goods,
)
from bepdyn.pd import solve_p_star
from bepdyn.stability import support_matrix

HALF = Fraction(1, 2)


def test_single_sample_decays_monotonically():
    traj = integrate(make_prisoners_dilemma(HALF, HALF), 1, [0.5, 0.5], 20.0)
    c = traj.array[:, 0]
    assert np.all(np.diff(c) <= 0)
    # field is -p^2, so p(t) = p0 / (1 + p0 t)
    assert c[-1] == pytest.approx(0.5 / (1 + 0.5 * traj.times[-1]), abs=1e-6)


def test_two_samples_converge_to_root():
    traj = integrate(make_prisoners_dilemma(HALF, HALF), 2, [0.9, 0.1], 200.0)
    assert traj.terminal_reason == "converged"
    assert traj.terminal[0] == pytest.approx(solve_p_star(2), abs=1e-6)


def test_vertex_is_stationary():
    traj = integrate(make_coordination(2, [3, 2, 1]), 2, [0, 1, 0], 5.0)
    assert traj.terminal_reason == "converged"
    assert len(traj) == 1
    assert traj.terminal.tolist() == [0, 1, 0]


def test_simplex_preserved():
    for game, k, x0 in [(make_coordination(2, [3, 2, 1]), 2, [0.2, 0.3, 0.5]),
                        (make_public_goods(3, [0, "1/2", "9/5", 2]), 3, [0.6, 0.4]),
                        (make_asymmetric_hawk_dove(1, HALF, "2/5", HALF), 2, [[0.3, 0.7], [0.6, 0.4]])]:
        traj = integrate(game, k, x0, 30.0, dt=0.1)
        assert traj.min_preclip >= -1e-12
        start = 0
        for s in traj.sizes:
            assert np.all(np.abs(traj.array[:, start:start + s].sum(axis=1) - 1) <= 1e-10)
            start += s
        assert np.all(np.diff(traj.times) > 0)


@pytest.mark.parametrize("k", [2, 3])
def test_step_size_robustness(k):
    game = make_prisoners_dilemma(HALF, HALF)
    a = integrate(game, k, [0.9, 0.1], 40.0, dt=0.05, tol=0).terminal
    b = integrate(game, k, [0.9, 0.1], 40.0, dt=0.025, tol=0).terminal
    assert np.max(np.abs(a - b)) < 1e-6


def test_rejects_bad_step():
    with pytest.raises(ValueError):
        integrate(make_prisoners_dilemma(1, 1), 1, [0.5, 0.5], 1.0, dt=0)


def _cooperation_levels(search):
    return sorted(round(float(r.state[0]), 3) for r in search.rest_points)


def test_rest_points_pd():
    assert _cooperation_levels(find_rest_points(make_prisoners_dilemma(HALF, HALF), 1, horizon=100)) == [0.0]
    assert _cooperation_levels(find_rest_points(make_prisoners_dilemma(2, HALF), 2)) == [0.0, 0.245]
    assert _cooperation_levels(find_rest_points(make_prisoners_dilemma("3/5", "3/10"), 3)) == [0.0, 0.323]
    assert _cooperation_levels(find_rest_points(make_prisoners_dilemma(HALF, 2), 2)) == [0.0]


def test_rest_points_report_residuals():
    search = find_rest_points(make_coordination(2, [3, 2, 1]), 2)
    assert not search.unresolved
    assert all(r.residual <= 1e-9 for r in search.rest_points)
    states = [r.state for r in search.rest_points]
    for v in np.eye(3):
        assert any(np.max(np.abs(s - v)) < 1e-9 for s in states)


def test_rest_points_need_seed():
    with pytest.raises(ValueError):
        find_rest_points(make_prisoners_dilemma(1, 1), 2, seeds=[])


def test_interior_grid_bounds():
    pts = interior_grid(make_coordination(2, [3, 2, 1]), 4)
    assert len(pts) == 3
    assert all(p.min() >= 1e-3 for p in pts)


def test_classify_convergence():
    game = make_prisoners_dilemma(HALF, HALF)
    p = solve_p_star(2)
    still = integrate(game, 2, [p, 1 - p], 1.0)
    assert classify_convergence(still, [p, 1 - p], 1e-6) == "converged-to-target"
    esc = integrate(game, 2, [0.01, 0.99], 300.0)
    assert classify_convergence(esc, [p, 1 - p], 1e-6) == "converged-to-target"
    short = integrate(game, 2, [0.9, 0.1], 0.5)
    assert classify_convergence(short, [0.0, 1.0], 1e-3) == "not-converged"
    assert classify_convergence(esc, [0.0, 1.0], 1e-3) == "converged-elsewhere"


def test_jacobian_examples():
    j = numeric_jacobian(make_prisoners_dilemma(HALF, 2), 2, [0, 1])
    assert j.matrix.shape == (1, 1) and j.matrix[0, 0] == pytest.approx(-1, abs=1e-3)
    j = numeric_jacobian(make_prisoners_dilemma(HALF, HALF), 2, [0, 1])
    assert j.matrix[0, 0] == pytest.approx(1, abs=1e-3)
    j = numeric_jacobian(make_coordination(2, [3, 2, 1]), 2, [1, 0, 0])
    np.testing.assert_allclose(np.linalg.eigvals(j.matrix).real, -1, atol=1e-3)
    with pytest.raises(ValueError, match="rest point"):
        numeric_jacobian(make_prisoners_dilemma(HALF, HALF), 2, [0.5, 0.5])


@pytest.mark.parametrize("game,star,k", [
    (make_prisoners_dilemma(HALF, "1/3"), "d", 2),
    (make_prisoners_dilemma(HALF, "1/3"), "d", 3),
    (make_coordination(2, [5, 3, 2]), "a3", 2),
    (make_coordination(3, [5, 3, 2]), "a2", 2),
    (make_public_goods(3, [0, "1/2", "9/5", 2]), "nc", 2),
    (make_asymmetric_pd(1, "1/3", "2/5", "3/2"), ("d1", "d2"), 2),
    (make_asymmetric_hawk_dove(1, HALF, "2/5", HALF), ("D1", "H2"), 2),
])
def test_jacobian_matches_support_matrix(game, star, k):
    sm = support_matrix(game, star, k)
    mult = k * (game.n - 1) if hasattr(game, "actions") else k
    expected = mult * sm.strict - np.eye(len(sm.index))
    if hasattr(game, "actions"):
        x = np.zeros(game.m)
        x[game.index(star)] = 1
    else:
        prof = game.profile_index(star)
        x = [np.eye(s)[prof[i]] for i, s in enumerate(game.sizes)]
    j = numeric_jacobian(game, k, x)
    order = [j.coords.index(lab if hasattr(game, "actions") else f"p{fi + 1}_{lab}")
             for fi, lab in _flat_labels(game, sm)]
    np.testing.assert_allclose(j.matrix[np.ix_(order, order)], expected, atol=1e-3)


def _flat_labels(game, sm):
    if hasattr(game, "actions"):
        return [(0, lab) for lab in sm.index]
    out = []
    for f in sm.flat_index:
        start = 0
        for i, s in enumerate(game.sizes):
            if f < start + s:
                out.append((i, game.action_sets[i][f - start]))
                break
            start += s
    return out


@pytest.mark.parametrize("k", [2, 3])
def test_global_convergence_from_grid(k):
    game = make_prisoners_dilemma("1/4", "1/4")
    target = solve_p_star(k)
    for p in np.linspace(0.1, 0.9, 9):
        traj = integrate(game, k, [p, 1 - p], 400.0)
        assert abs(traj.terminal[0] - target) < 1e-6


def test_probe_outcomes():
    assert perturbation_probe(make_prisoners_dilemma(HALF, HALF), 2, [0, 1], [0])["outcome"] == "escaped"
    assert perturbation_probe(make_prisoners_dilemma(HALF, 2), 2, [0, 1], [0])["outcome"] == "returned"
