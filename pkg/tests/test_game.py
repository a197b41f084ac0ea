import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bepdyn.formats import game_from_json, game_to_json
from bepdyn.game import (
    GameSchemaError,
    as_rational,
    make_asymmetric_game,
    make_asymmetric_hawk_dove,
    make_asymmetric_pd,
    make_coordination,
    make_prisoners_dilemma,
    make_public_goods,
    make_symmetric_game,
)


def pd_entries(g, l):
    return [("c", ["c"], 1), ("c", ["d"], -l), ("d", ["c"], 1 + g), ("d", ["d"], 0)]


def test_pd_from_entries():
    g = make_symmetric_game(2, ["c", "d"], pd_entries(Fraction(1, 2), Fraction(1, 2)))
    assert g.m == 2 and g.n == 2
    assert g.u("d", "c") == Fraction(3, 2)


def test_missing_entry_is_named():
    entries = pd_entries(1, 1)[:-1]
    with pytest.raises(GameSchemaError, match=r"\(d, \{d\}\)"):
        make_symmetric_game(2, ["c", "d"], entries)


def test_duplicate_entry_is_named():
    entries = pd_entries(1, 1) + [("c", ["d"], 5)]
    with pytest.raises(GameSchemaError, match=r"duplicate.*\(c, \{d\}\)"):
        make_symmetric_game(2, ["c", "d"], entries)


def test_three_player_two_action_entry_count():
    entries = [(a, list(opp), i) for i, (a, opp) in enumerate(
        (a, opp) for a in "xy" for opp in itertools.combinations_with_replacement("xy", 2))]
    assert len(entries) == 6
    g = make_symmetric_game(3, ["x", "y"], entries)
    assert g.u("x", "y", "x") == g.u("x", "x", "y")


@pytest.mark.parametrize("g,l,expect", [
    (1, 1, {("c", "c"): 1, ("c", "d"): -1, ("d", "c"): 2, ("d", "d"): 0}),
    (Fraction(1, 2), Fraction(1, 2), {("d", "c"): Fraction(3, 2)}),
])
def test_prisoners_dilemma_values(g, l, expect):
    game = make_prisoners_dilemma(g, l)
    for (a, b), v in expect.items():
        assert game.u(a, b) == v


@pytest.mark.parametrize("bad", [(0, 1), (1, 0), (-1, 2)])
def test_prisoners_dilemma_rejects_nonpositive(bad):
    with pytest.raises(GameSchemaError):
        make_prisoners_dilemma(*bad)


def test_public_goods_two_and_three_players():
    g2 = make_public_goods(2, [0, "1/2", "9/5"])
    assert g2.u("c", "c") == Fraction(4, 5)
    assert g2.u("c", "nc") == Fraction(-1, 2)
    assert g2.u("nc", "c") == Fraction(1, 2)
    assert g2.u("nc", "nc") == 0
    g3 = make_public_goods(3, [0, "1/2", "9/5", 2])
    assert g3.u("c", "c", "nc") == Fraction(4, 5)
    with pytest.raises(GameSchemaError):
        make_public_goods(2, [0, 1, 2])
    with pytest.raises(GameSchemaError):
        make_public_goods(2, [0, "1/2", "1/4"])


def test_coordination():
    g = make_coordination(2, [3, 2, 1])
    assert g.u("a2", "a2") == 2 and g.u("a1", "a2") == 0
    g3 = make_coordination(3, [1, 1])
    assert g3.u("a1", "a1", "a1") == 1 and g3.u("a1", "a1", "a2") == 0
    with pytest.raises(GameSchemaError):
        make_coordination(2, [1, 2])
    with pytest.raises(GameSchemaError):
        make_coordination(2, [1, 0])


def test_asymmetric_families():
    apd = make_asymmetric_pd(1, 1, "2/5", "3/2")
    assert apd.payoff(1, ("c1", "d2")) == 2
    hd = make_asymmetric_hawk_dove(1, "1/2", "2/5", "1/2")
    assert hd.payoff(0, ("D1", "H2")) == Fraction(2, 5)
    with pytest.raises(GameSchemaError):
        make_asymmetric_hawk_dove(1, "1/2", 1, "1/2")


def test_asymmetric_missing_profile():
    with pytest.raises(GameSchemaError, match="missing"):
        make_asymmetric_game(2, [["a", "b"], ["x"]], [(0, ("a", "x"), 1), (1, ("a", "x"), 1), (0, ("b", "x"), 0)])


def test_constructor_fidelity_exhaustive():
    for n in (2, 3, 4):
        phi = [Fraction(j, 2) * Fraction(j + 1, 3) for j in range(n + 1)]
        phi[1] = Fraction(1, 3)
        phi = [Fraction(0)] + sorted(phi[1:])
        game = make_public_goods(n, phi)
        for prof in itertools.product(["c", "nc"], repeat=n):
            contrib = prof.count("c")
            own = prof[0]
            expect = phi[contrib] - (1 if own == "c" else 0)
            assert game.u(own, *prof[1:]) == expect
        u = [5, 3, 2]
        coord = make_coordination(n, u)
        for prof in itertools.product(coord.actions, repeat=n):
            expect = u[int(prof[0][1:]) - 1] if len(set(prof)) == 1 else 0
            assert coord.u(prof[0], *prof[1:]) == expect


game_values = st.fractions(min_value=-5, max_value=5, max_denominator=7)


@st.composite
def symmetric_games(draw):
    n = draw(st.integers(2, 4))
    m = draw(st.integers(2, 3))
    actions = [f"s{i}" for i in range(m)]
    entries = [(a, list(opp), draw(game_values))
               for a in actions for opp in itertools.combinations_with_replacement(actions, n - 1)]
    return make_symmetric_game(n, actions, entries)


@settings(max_examples=40, deadline=None)
@given(symmetric_games(), st.randoms(use_true_random=False))
def test_permutation_invariance(game, rnd):
    for own in game.actions:
        for opp in itertools.product(game.actions, repeat=game.n - 1):
            shuffled = list(opp)
            rnd.shuffle(shuffled)
            assert game.payoff(own, opp) == game.payoff(own, shuffled)


@settings(max_examples=40, deadline=None)
@given(symmetric_games())
def test_json_round_trip_symmetric(game):
    assert game_from_json(game_to_json(game)) == game


def test_json_round_trip_asymmetric():
    for g in (make_asymmetric_pd("1/3", 2, "2/5", "7/3"), make_asymmetric_hawk_dove(1, "1/2", "2/5", "1/2"),
              make_public_goods(3, [0, "1/2", "9/5", 2]).to_asymmetric()):
        assert game_from_json(game_to_json(g)) == g


def test_as_rational_forms():
    assert as_rational(0.1) == Fraction(1, 10)
    assert as_rational("3/7") == Fraction(3, 7)
    assert as_rational("0.25") == Fraction(1, 4)
    with pytest.raises(GameSchemaError):
        as_rational("abc")
    with pytest.raises(GameSchemaError):
        as_rational(float("nan"))


def test_strict_equilibrium_checks():
    pd = make_prisoners_dilemma(1, 1)
    assert pd.is_strict_equilibrium("d") and not pd.is_strict_equilibrium("c")
    apd = make_asymmetric_pd(1, 1, 1, 1)
    assert apd.is_strict_equilibrium(("d1", "d2"))
    assert not apd.is_strict_equilibrium(("c1", "d2"))
