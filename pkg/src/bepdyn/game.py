"""Exact-payoff symmetric and asymmetric n-player games.

Payoffs are stored as :class:`fractions.Fraction`.  Symmetric games key
their payoffs by (own action, sorted opponent multiset), so permutation
invariance over opponents holds by construction.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

__all__ = [
    "AsymmetricGame",
    "GameSchemaError",
    "SymmetricGame",
    "as_rational",
    "format_rational",
    "make_asymmetric_game",
    "make_asymmetric_hawk_dove",
    "make_asymmetric_pd",
    "make_coordination",
    "make_matrix_game",
    "make_prisoners_dilemma",
    "make_public_goods",
    "make_symmetric_game",
]


class GameSchemaError(ValueError):
    """A game description is incomplete, duplicated or out of range."""


def as_rational(value) -> Fraction:
    """Convert ints, Fractions, ``"p/q"`` / decimal strings or floats to a Fraction.

    Floats go through their shortest repr, so ``0.1`` becomes ``1/10``
    rather than the nearest binary fraction.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise GameSchemaError(f"not a rational number: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise GameSchemaError(f"not a finite number: {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise GameSchemaError(f"not a rational number: {value!r}") from exc
    try:
        return Fraction(value)
    except (TypeError, ValueError) as exc:
        raise GameSchemaError(f"not a rational number: {value!r}") from exc


def format_rational(value: Fraction) -> str | int:
    """Serialize as an int when integral, else as ``"p/q"``."""
    value = Fraction(value)
    if value.denominator == 1:
        return value.numerator
    return f"{value.numerator}/{value.denominator}"


def _multisets(m: int, size: int) -> Iterator[tuple[int, ...]]:
    return itertools.combinations_with_replacement(range(m), size)


class SymmetricGame:
    """Symmetric n-player game with payoff u(own, opponent multiset).

    Instances are immutable and hashable; equal games hash equally.
    """

    __slots__ = ("n", "actions", "_payoff", "_index", "_key", "_int_cache")

    def __init__(self, n: int, actions: Sequence[str], payoff: dict):
        self.n = int(n)
        self.actions = tuple(str(a) for a in actions)
        self._index = {a: i for i, a in enumerate(self.actions)}
        self._payoff = dict(payoff)
        self._key = (
            "symmetric",
            self.n,
            self.actions,
            tuple(sorted(self._payoff.items())),
        )
        self._int_cache = None

    # -- lookup ---------------------------------------------------------
    @property
    def m(self) -> int:
        return len(self.actions)

    def index(self, action) -> int:
        if isinstance(action, (int,)) and not isinstance(action, bool):
            if 0 <= action < self.m:
                return action
            raise KeyError(f"action index out of range: {action}")
        try:
            return self._index[action]
        except KeyError:
            raise KeyError(f"unknown action {action!r}; known: {list(self.actions)}") from None

    def payoff(self, own, opponents: Iterable) -> Fraction:
        """Payoff to ``own`` against ``opponents`` given in any order."""
        opp = tuple(sorted(self.index(b) for b in opponents))
        if len(opp) != self.n - 1:
            raise ValueError(f"expected {self.n - 1} opponents, got {len(opp)}")
        return self._payoff[(self.index(own), opp)]

    def u(self, own, *opponents) -> Fraction:
        return self.payoff(own, opponents)

    def against(self, own, others: dict, default) -> Fraction:
        """Payoff of ``own`` when opponents are ``default`` except ``others`` ({action: count})."""
        opp = []
        for b, c in others.items():
            opp.extend([b] * c)
        opp.extend([default] * (self.n - 1 - len(opp)))
        return self.payoff(own, opp)

    def opponent_multisets(self) -> list[tuple[int, ...]]:
        return list(_multisets(self.m, self.n - 1))

    def profiles(self) -> Iterator[tuple[int, tuple[int, ...], Fraction]]:
        for (own, opp), v in sorted(self._payoff.items()):
            yield own, opp, v

    def values(self) -> list[Fraction]:
        return [v for _, _, v in self.profiles()]

    # -- equilibrium helpers --------------------------------------------
    def monomorphic_payoff(self, own, population) -> Fraction:
        """u(own, population, ..., population)."""
        p = self.index(population)
        return self._payoff[(self.index(own), (p,) * (self.n - 1))]

    def is_strict_equilibrium(self, action) -> bool:
        a = self.index(action)
        best = self.monomorphic_payoff(a, a)
        return all(self.monomorphic_payoff(b, a) < best for b in range(self.m) if b != a)

    def integer_payoffs(self) -> tuple[int, dict]:
        """Common denominator ``scale`` and payoffs multiplied by it (exact ints)."""
        if self._int_cache is None:
            scale = 1
            for v in self._payoff.values():
                scale = math.lcm(scale, v.denominator)
            table = {key: int(v * scale) for key, v in self._payoff.items()}
            self._int_cache = (scale, table)
        return self._int_cache

    def to_asymmetric(self) -> "AsymmetricGame":
        """The same game with players numbered, for n-population dynamics."""
        sets = tuple(self.actions for _ in range(self.n))
        payoffs = []
        for i in range(self.n):
            table = {}
            for prof in itertools.product(range(self.m), repeat=self.n):
                others = prof[:i] + prof[i + 1:]
                table[prof] = self._payoff[(prof[i], tuple(sorted(others)))]
            payoffs.append(table)
        return AsymmetricGame(self.n, sets, payoffs)

    # -- dunder ---------------------------------------------------------
    def __eq__(self, other):
        return isinstance(other, SymmetricGame) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"SymmetricGame(n={self.n}, actions={list(self.actions)})"


class AsymmetricGame:
    """n-player game with per-player action sets and payoffs on full profiles."""

    __slots__ = ("n", "action_sets", "_payoffs", "_index", "_key", "_int_cache")

    def __init__(self, n: int, action_sets: Sequence[Sequence[str]], payoffs: Sequence[dict]):
        self.n = int(n)
        self.action_sets = tuple(tuple(str(a) for a in s) for s in action_sets)
        self._index = [{a: j for j, a in enumerate(s)} for s in self.action_sets]
        self._payoffs = tuple(dict(p) for p in payoffs)
        self._key = (
            "asymmetric",
            self.n,
            self.action_sets,
            tuple(tuple(sorted(p.items())) for p in self._payoffs),
        )
        self._int_cache = None

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.action_sets)

    def index(self, player: int, action) -> int:
        if isinstance(action, int) and not isinstance(action, bool):
            if 0 <= action < len(self.action_sets[player]):
                return action
            raise KeyError(f"action index out of range for player {player}: {action}")
        try:
            return self._index[player][action]
        except KeyError:
            raise KeyError(
                f"unknown action {action!r} for player {player}; "
                f"known: {list(self.action_sets[player])}"
            ) from None

    def profile_index(self, profile: Sequence) -> tuple[int, ...]:
        if len(profile) != self.n:
            raise ValueError(f"profile needs {self.n} actions, got {len(profile)}")
        return tuple(self.index(i, a) for i, a in enumerate(profile))

    def payoff(self, player: int, profile: Sequence) -> Fraction:
        return self._payoffs[player][self.profile_index(profile)]

    def deviate(self, profile: Sequence, changes: dict) -> tuple[int, ...]:
        """``profile`` with the players in ``changes`` switched to the given actions."""
        prof = list(self.profile_index(profile))
        for i, a in changes.items():
            prof[i] = self.index(i, a)
        return tuple(prof)

    def profiles(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(s) for s in self.sizes))

    def values(self, player: int) -> list[Fraction]:
        return [v for _, v in sorted(self._payoffs[player].items())]

    def is_strict_equilibrium(self, profile: Sequence) -> bool:
        star = self.profile_index(profile)
        for i in range(self.n):
            best = self._payoffs[i][star]
            for b in range(self.sizes[i]):
                if b != star[i] and self._payoffs[i][self.deviate(star, {i: b})] >= best:
                    return False
        return True

    def integer_payoffs(self) -> tuple[int, list[dict]]:
        if self._int_cache is None:
            scale = 1
            for table in self._payoffs:
                for v in table.values():
                    scale = math.lcm(scale, v.denominator)
            tables = [{prof: int(v * scale) for prof, v in t.items()} for t in self._payoffs]
            self._int_cache = (scale, tables)
        return self._int_cache

    def __eq__(self, other):
        return isinstance(other, AsymmetricGame) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"AsymmetricGame(n={self.n}, action_sets={[list(s) for s in self.action_sets]})"


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def make_symmetric_game(n: int, actions: Sequence[str], entries: Iterable) -> SymmetricGame:
    """Build a symmetric game from ``(own, opponents, value)`` entries.

    Every (action, opponent multiset) pair must appear exactly once; the
    error message names every missing or duplicated pair.
    """
    n = int(n)
    actions = [str(a) for a in actions]
    if n < 2:
        raise GameSchemaError(f"need at least 2 players, got n={n}")
    if len(actions) < 2:
        raise GameSchemaError(f"need at least 2 actions, got {actions}")
    if len(set(actions)) != len(actions):
        raise GameSchemaError(f"duplicate action labels in {actions}")
    index = {a: i for i, a in enumerate(actions)}

    def label_pair(own, opp):
        return f"({actions[own]}, {{{', '.join(actions[b] for b in opp)}}})"

    payoff: dict = {}
    duplicates = []
    for own, opponents, value in entries:
        try:
            o = index[str(own)]
            opp = tuple(sorted(index[str(b)] for b in opponents))
        except KeyError as exc:
            raise GameSchemaError(f"unknown action label {exc.args[0]!r}") from None
        if len(opp) != n - 1:
            raise GameSchemaError(
                f"entry for {own!r} has {len(opp)} opponents, expected {n - 1}"
            )
        if (o, opp) in payoff:
            duplicates.append(label_pair(o, opp))
        payoff[(o, opp)] = as_rational(value)
    missing = [
        label_pair(o, opp)
        for o in range(len(actions))
        for opp in _multisets(len(actions), n - 1)
        if (o, opp) not in payoff
    ]
    problems = []
    if missing:
        problems.append("missing payoff entries: " + ", ".join(missing))
    if duplicates:
        problems.append("duplicate payoff entries: " + ", ".join(duplicates))
    if problems:
        raise GameSchemaError("; ".join(problems))
    expected = len(actions) * math.comb(len(actions) + n - 2, n - 1)
    assert len(payoff) == expected
    return SymmetricGame(n, actions, payoff)


def make_matrix_game(actions: Sequence[str], matrix: Sequence[Sequence]) -> SymmetricGame:
    """Two-player symmetric game from a row-player payoff matrix."""
    if len(matrix) != len(actions) or any(len(r) != len(actions) for r in matrix):
        raise GameSchemaError("payoff matrix must be square with one row per action")
    entries = [
        (a, [b], matrix[i][j]) for i, a in enumerate(actions) for j, b in enumerate(actions)
    ]
    return make_symmetric_game(2, actions, entries)


def _positive(name, value) -> Fraction:
    q = as_rational(value)
    if q <= 0:
        raise GameSchemaError(f"{name} must be positive, got {q}")
    return q


def make_prisoners_dilemma(g, l) -> SymmetricGame:
    """Two-player prisoner's dilemma with gain ``g`` and loss ``l`` (both > 0)."""
    g = _positive("g", g)
    l = _positive("l", l)
    return make_matrix_game(["c", "d"], [[1, -l], [1 + g, 0]])


def make_public_goods(n: int, phi: Sequence) -> SymmetricGame:
    """n-player contribution game with production function ``phi[0..n]``.

    A contributor earns phi(contributors) - 1, a non-contributor phi(contributors).
    """
    n = int(n)
    if n < 2:
        raise GameSchemaError(f"need at least 2 players, got n={n}")
    phi = [as_rational(x) for x in phi]
    if len(phi) != n + 1:
        raise GameSchemaError(f"phi needs n+1={n + 1} values phi(0..n), got {len(phi)}")
    if phi[0] != 0:
        raise GameSchemaError(f"phi(0) must be 0, got {phi[0]}")
    if any(b < a for a, b in zip(phi, phi[1:])):
        raise GameSchemaError("phi must be nondecreasing")
    if phi[1] >= 1:
        raise GameSchemaError(f"phi(1) must be < 1, got {phi[1]}")
    entries = []
    for opp in _multisets(2, n - 1):
        contributing = sum(1 for b in opp if b == 0)
        labels = ["c" if b == 0 else "nc" for b in opp]
        entries.append(("c", labels, phi[contributing + 1] - 1))
        entries.append(("nc", labels, phi[contributing]))
    return make_symmetric_game(n, ["c", "nc"], entries)


def make_coordination(n: int, utilities: Sequence) -> SymmetricGame:
    """Pure coordination: everyone on a_j pays u_j, any mismatch pays 0."""
    u = [as_rational(x) for x in utilities]
    if len(u) < 2:
        raise GameSchemaError("need at least 2 utilities")
    if any(x <= 0 for x in u):
        raise GameSchemaError(f"utilities must be positive, got {[str(x) for x in u]}")
    if any(b > a for a, b in zip(u, u[1:])):
        raise GameSchemaError("utilities must be sorted u_1 >= u_2 >= ... >= u_m")
    actions = [f"a{j + 1}" for j in range(len(u))]
    entries = []
    for own in range(len(u)):
        for opp in _multisets(len(u), int(n) - 1):
            value = u[own] if all(b == own for b in opp) else Fraction(0)
            entries.append((actions[own], [actions[b] for b in opp], value))
    return make_symmetric_game(n, actions, entries)


def make_asymmetric_game(n: int, action_sets: Sequence[Sequence[str]], entries: Iterable) -> AsymmetricGame:
    """Build from ``(player, profile, value)`` entries covering every profile for every player."""
    n = int(n)
    if n < 2 or len(action_sets) != n:
        raise GameSchemaError(f"need n>=2 action sets, got n={n} with {len(action_sets)} sets")
    sets = [[str(a) for a in s] for s in action_sets]
    for i, s in enumerate(sets):
        if len(s) < 1 or len(set(s)) != len(s):
            raise GameSchemaError(f"player {i} action set invalid: {s}")
    index = [{a: j for j, a in enumerate(s)} for s in sets]
    payoffs: list[dict] = [{} for _ in range(n)]
    duplicates = []
    for player, profile, value in entries:
        player = int(player)
        if not 0 <= player < n:
            raise GameSchemaError(f"player index out of range: {player}")
        if len(profile) != n:
            raise GameSchemaError(f"profile {profile} must have {n} actions")
        try:
            prof = tuple(index[i][str(a)] for i, a in enumerate(profile))
        except KeyError as exc:
            raise GameSchemaError(f"unknown action label {exc.args[0]!r}") from None
        if prof in payoffs[player]:
            duplicates.append(f"player {player} at {tuple(profile)}")
        payoffs[player][prof] = as_rational(value)
    missing = []
    for i in range(n):
        for prof in itertools.product(*(range(len(s)) for s in sets)):
            if prof not in payoffs[i]:
                missing.append(f"player {i} at {tuple(sets[j][a] for j, a in enumerate(prof))}")
    problems = []
    if missing:
        problems.append("missing payoff entries: " + ", ".join(missing))
    if duplicates:
        problems.append("duplicate payoff entries: " + ", ".join(duplicates))
    if problems:
        raise GameSchemaError("; ".join(problems))
    return AsymmetricGame(n, sets, payoffs)


def _bimatrix(sets, row_payoffs, col_payoffs) -> AsymmetricGame:
    entries = []
    for i, a in enumerate(sets[0]):
        for j, b in enumerate(sets[1]):
            entries.append((0, (a, b), row_payoffs[i][j]))
            entries.append((1, (a, b), col_payoffs[i][j]))
    return make_asymmetric_game(2, sets, entries)


def make_asymmetric_pd(g1, g2, l1, l2) -> AsymmetricGame:
    """Prisoner's dilemma where each player has its own gain and loss."""
    g1, g2, l1, l2 = (_positive(k, v) for k, v in zip(("g1", "g2", "l1", "l2"), (g1, g2, l1, l2)))
    return _bimatrix(
        [["c1", "d1"], ["c2", "d2"]],
        [[1, -l1], [1 + g1, 0]],
        [[1, 1 + g2], [-l2, 0]],
    )


def make_asymmetric_hawk_dove(g1, g2, l1, l2) -> AsymmetricGame:
    """Hawk-dove with player-specific parameters; requires 0 < l1, l2 < 1."""
    g1, g2, l1, l2 = (_positive(k, v) for k, v in zip(("g1", "g2", "l1", "l2"), (g1, g2, l1, l2)))
    for name, v in (("l1", l1), ("l2", l2)):
        if v >= 1:
            raise GameSchemaError(f"{name} must be < 1 in hawk-dove, got {v}")
    return _bimatrix(
        [["D1", "H1"], ["D2", "H2"]],
        [[1, l1], [1 + g1, 0]],
        [[1, 1 + g2], [l2, 0]],
    )
