"""Checks for the genericity properties the support-matrix theory relies on."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .game import AsymmetricGame, SymmetricGame, format_rational
from .stability import _asym_inequalities, _sym_inequalities

__all__ = ["GenericityReport", "check_effective_genericity", "surrogate_sequence_check"]

_SURROGATE_CAP = 10**6


@dataclass
class GenericityReport:
    is_strict_equilibrium: bool
    unique_second_best: bool
    no_weak_support_ties: bool
    surrogate_sequence_check: dict | None
    tie_locations: list[str]

    @property
    def effectively_generic(self) -> bool:
        return self.is_strict_equilibrium and self.unique_second_best and self.no_weak_support_ties

    def to_json(self) -> dict:
        return {
            "isStrictEquilibrium": self.is_strict_equilibrium,
            "uniqueSecondBest": self.unique_second_best,
            "noWeakSupportTies": self.no_weak_support_ties,
            "effectivelyGeneric": self.effectively_generic,
            "tieLocations": list(self.tie_locations),
            "surrogateSequenceCheck": self.surrogate_sequence_check,
        }


def _unique_max(values) -> bool:
    if len(values) < 2:
        return True
    top = max(values)
    return values.count(top) == 1


def surrogate_sequence_check(game, l_max: int = 2) -> dict:
    """Bounded version of the "distinct payoff sums" requirement.

    For every L <= ``l_max``, two multisets of L profiles (for one player)
    whose payoffs sum to the same value must use the same multiset of
    own actions.  Passing is necessary, not sufficient, for genericity.
    """
    if isinstance(game, SymmetricGame):
        per_player = [[(own, v) for own, _, v in game.profiles()]]
    else:
        per_player = [
            [(prof[i], v) for prof, v in sorted(game._payoffs[i].items())] for i in range(game.n)
        ]
    for player, items in enumerate(per_player):
        for L in range(1, l_max + 1):
            if math.comb(len(items) + L - 1, L) > _SURROGATE_CAP:
                return {"L_max": l_max, "passed": None, "surrogate": True,
                        "violation": f"too many sequences at L={L}; check skipped"}
            seen: dict = {}
            for combo in itertools.combinations_with_replacement(items, L):
                total = sum(v for _, v in combo)
                owns = tuple(sorted(a for a, _ in combo))
                prev = seen.setdefault(total, owns)
                if prev != owns:
                    return {
                        "L_max": l_max,
                        "passed": False,
                        "surrogate": True,
                        "violation": {
                            "player": player + 1,
                            "length": L,
                            "sum": format_rational(total),
                        },
                    }
    return {"L_max": l_max, "passed": True, "surrogate": True, "violation": None}


def check_effective_genericity(game, candidate, k: int, l_max: int = 2) -> GenericityReport:
    """Report whether ``candidate`` is strict and all support inequalities are strict.

    Never raises for a valid candidate; a non-strict candidate is simply
    flagged.  Set ``l_max=0`` to skip the bounded sequence check.
    """
    ties: list[str] = []
    if isinstance(game, SymmetricGame):
        star = game.index(candidate)
        strict = game.is_strict_equilibrium(star)
        others = [b for b in range(game.m) if b != star]
        unique = _unique_max([game.monomorphic_payoff(b, star) for b in others])
        for ap in others:
            for a in others:
                ineq = _sym_inequalities(game, star, a, ap, k)
                if ineq.direct == 0:
                    ties.append(f"{game.actions[a]} directly supports {game.actions[ap]}")
                if ineq.spoil == 0:
                    ties.append(f"{game.actions[a]} spoils for {game.actions[ap]}")
    elif isinstance(game, AsymmetricGame):
        star = game.profile_index(candidate)
        strict = game.is_strict_equilibrium(star)
        unique = True
        for j in range(game.n):
            dev = [game._payoffs[j][game.deviate(star, {j: b})] for b in range(game.sizes[j]) if b != star[j]]
            unique = unique and _unique_max(dev)
        elems = [(i, b) for i in range(game.n) for b in range(game.sizes[i]) if b != star[i]]
        for j, aj in elems:
            for i, ai in elems:
                if i == j:
                    continue
                ineq = _asym_inequalities(game, star, i, ai, j, aj, k)
                si, sj = game.action_sets[i][ai], game.action_sets[j][aj]
                if ineq.direct == 0:
                    ties.append(f"{si} directly supports {sj}")
                if ineq.spoil == 0:
                    ties.append(f"{si} spoils for {sj}")
    else:
        raise TypeError(f"unsupported game type {type(game).__name__}")
    surrogate = surrogate_sequence_check(game, l_max) if l_max > 0 else None
    return GenericityReport(strict, unique, not ties, surrogate, ties)
