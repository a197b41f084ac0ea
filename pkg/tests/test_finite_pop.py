from fractions import Fraction

import numpy as np
import pytest

from bepdyn import _backend, _pycore
from bepdyn.dynamics import Trajectory, integrate
from bepdyn.finite_pop import AgentPopulation, _symmetric_tables, compare_to_mean_dynamic, simulate_agents
from bepdyn.game import make_asymmetric_hawk_dove, make_prisoners_dilemma, make_public_goods
from bepdyn.kernel import TieRule

HALF = Fraction(1, 2)


def test_population_validation():
    with pytest.raises(ValueError):
        AgentPopulation([3, 3], 5, 0, (2,))
    with pytest.raises(ValueError):
        AgentPopulation([-1, 6], 5, 0, (2,))
    pop = AgentPopulation.from_state(make_prisoners_dilemma(1, 1), [1 / 3, 2 / 3], 10, 1)
    assert pop.counts.sum() == 10


def test_counts_conserved_and_deterministic():
    game = make_asymmetric_hawk_dove(1, HALF, "2/5", HALF)
    init = AgentPopulation.from_state(game, [[0.5, 0.5], [0.5, 0.5]], 500, 42)
    a = simulate_agents(game, 2, init, 3000, record_every=100)
    b = simulate_agents(game, 2, init, 3000, record_every=7)
    assert np.allclose(a.array.reshape(-1, 2, 2).sum(axis=2), 1.0)
    np.testing.assert_array_equal(a.terminal, b.terminal)
    assert a.times[-1] == pytest.approx(3000 / (2 * 500))


def test_single_sample_cooperation_decays():
    game = make_prisoners_dilemma(HALF, HALF)
    init = AgentPopulation.from_state(game, [0.5, 0.5], 20000, 5)
    traj = simulate_agents(game, 1, init, 20000 * 10)
    assert traj.terminal[0] < 0.15


def test_borderline_cooperation_grows_initially_for_three_samples():
    game = make_prisoners_dilemma(1, HALF)  # l = 1/(k-1) at k = 3
    init = AgentPopulation.from_state(game, [0.02, 0.98], 10000, 11)
    traj = simulate_agents(game, 3, init, 10000 * 2)
    assert traj.terminal[0] > 0.02


def test_backends_bit_identical(rng):
    game = make_public_goods(3, [0, "1/2", "9/5", 2])
    slot_pop, strides, pay, pay_off = _symmetric_tables(game)
    counts0 = np.array([400, 600], dtype=np.int64)
    u = rng.random((3000, 3 + 2 * 3 * 2))
    fixed = (np.zeros(1, np.int64), np.array([2], np.int64), np.array([1000], np.int64),
             slot_pop, strides, pay, pay_off, 3, 0, np.zeros(2, np.int64), u)
    a, b = counts0.copy(), counts0.copy()
    _pycore.run_events(a, *fixed)
    _backend.run_events(b, *fixed)
    np.testing.assert_array_equal(a, b)


def test_priority_tie_rule_changes_borderline_outcomes():
    game = make_prisoners_dilemma(1, 1)
    init = AgentPopulation.from_state(game, [0.3, 0.7], 2000, 3)
    pc = simulate_agents(game, 2, init, 4000, TieRule("priority", ("c", "d")))
    pdd = simulate_agents(game, 2, init, 4000, TieRule("priority", ("d", "c")))
    assert pc.terminal[0] > pdd.terminal[0]


def test_compare_identical_is_zero():
    t = Trajectory(np.array([0.0, 1.0]), np.array([[0.5, 0.5], [0.4, 0.6]]), "horizon", ["c", "d"], (2,))
    assert compare_to_mean_dynamic(t, t) == 0.0


def test_compare_disjoint_raises():
    a = Trajectory(np.array([0.0, 1.0]), np.zeros((2, 2)), "horizon", ["c", "d"], (2,))
    b = Trajectory(np.array([2.0, 3.0]), np.zeros((2, 2)), "horizon", ["c", "d"], (2,))
    with pytest.raises(ValueError):
        compare_to_mean_dynamic(a, b)


def test_small_population_reports_deviation():
    game = make_prisoners_dilemma(HALF, HALF)
    init = AgentPopulation.from_state(game, [0.5, 0.5], 100, 9)
    emp = simulate_agents(game, 2, init, 1000)
    ode = integrate(game, 2, init.frequencies(), float(emp.times[-1]))
    dev = compare_to_mean_dynamic(emp, ode)
    assert np.isfinite(dev) and dev >= 0
