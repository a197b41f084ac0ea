"""Exact revision probabilities of best experienced payoff sampling.

A revising agent tests every action ``k`` times, each trial against
freshly drawn opponents, and adopts the action with the highest total
(equivalently mean) payoff.  ``best_experienced_probabilities`` returns
the probability vector of the adopted action.

Sample totals are compared as exact integers (payoffs scaled by a common
denominator); probabilities are floats.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _backend
from .game import AsymmetricGame, SymmetricGame

__all__ = [
    "DEFAULT_CAP",
    "MultiPopulationState",
    "PayoffDistribution",
    "PopulationState",
    "ResourceCapError",
    "SamplingKernel",
    "TieRule",
    "asymmetric_best_experienced",
    "best_experienced_probabilities",
    "brute_force_w",
    "k_trial_total_distribution",
    "trial_payoff_distribution",
]

DEFAULT_CAP = 10**7


class ResourceCapError(RuntimeError):
    """An exact enumeration would exceed the configured size cap."""


class PopulationState:
    """Action frequencies on the unit simplex (renormalized on construction)."""

    __slots__ = ("weights",)

    def __init__(self, weights):
        w = np.array(weights, dtype=float).ravel()
        if w.size < 1 or not np.all(np.isfinite(w)):
            raise ValueError(f"invalid population state {weights!r}")
        if np.any(w < 0):
            raise ValueError(f"negative frequency in population state {w.tolist()}")
        total = w.sum()
        if total <= 0:
            raise ValueError("population state sums to zero")
        self.weights = w / total

    @classmethod
    def vertex(cls, m: int, a: int) -> "PopulationState":
        w = np.zeros(m)
        w[a] = 1.0
        return cls(w)

    @classmethod
    def two_action(cls, p: float) -> "PopulationState":
        return cls([p, 1.0 - p])

    def __len__(self):
        return self.weights.size

    def __getitem__(self, i):
        return self.weights[i]

    def __repr__(self):
        return f"PopulationState({self.weights.tolist()})"


class MultiPopulationState:
    """One :class:`PopulationState` per player population."""

    __slots__ = ("components",)

    def __init__(self, components: Sequence):
        self.components = tuple(
            c if isinstance(c, PopulationState) else PopulationState(c) for c in components
        )

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.components)

    def flat(self) -> np.ndarray:
        return np.concatenate([c.weights for c in self.components])

    @classmethod
    def from_flat(cls, x, sizes) -> "MultiPopulationState":
        parts = np.split(np.asarray(x, dtype=float), np.cumsum(sizes)[:-1])
        return cls(parts)

    def __getitem__(self, i):
        return self.components[i]

    def __len__(self):
        return len(self.components)

    def __repr__(self):
        return f"MultiPopulationState({[c.weights.tolist() for c in self.components]})"


@dataclass(frozen=True)
class PayoffDistribution:
    """Law of a payoff total: sorted (exact value, probability) pairs."""

    support: tuple[tuple[Fraction, float], ...]

    def __post_init__(self):
        keys = [v for v, _ in self.support]
        if len(set(keys)) != len(keys):
            raise ValueError("support keys must be distinct")

    @classmethod
    def from_mapping(cls, mapping) -> "PayoffDistribution":
        return cls(tuple(sorted((Fraction(v), float(p)) for v, p in mapping.items() if p > 0)))

    def as_dict(self) -> dict:
        return dict(self.support)

    def total_probability(self) -> float:
        return math.fsum(p for _, p in self.support)


@dataclass(frozen=True)
class TieRule:
    """How co-winning actions share the revision probability.

    ``uniform`` splits equally; ``priority`` gives everything to the
    co-winner listed first in ``ordering``.
    """

    variant: str = "uniform"
    ordering: tuple | None = None

    def __post_init__(self):
        if self.variant not in ("uniform", "priority"):
            raise ValueError(f"unknown tie rule {self.variant!r}")
        if self.variant == "priority" and not self.ordering:
            raise ValueError("priority tie rule needs an ordering")

    @classmethod
    def parse(cls, text: str | None) -> "TieRule":
        """``"uniform"`` or ``"priority:a,b,c"``."""
        if text is None or text == "uniform":
            return cls()
        if text.startswith("priority:"):
            return cls("priority", tuple(x.strip() for x in text[len("priority:"):].split(",")))
        raise ValueError(f"cannot parse tie rule {text!r}")

    def __str__(self):
        if self.variant == "uniform":
            return "uniform"
        return "priority:" + ",".join(str(x) for x in self.ordering)

    def ranks(self, labels: Sequence[str], exact: bool = True) -> np.ndarray:
        """Rank of each label (lower wins ties).

        With ``exact`` the ordering must be a permutation of ``labels``;
        otherwise it may also rank other players' actions.
        """
        if self.variant == "uniform":
            return np.zeros(len(labels), dtype=np.int64)
        order = [str(x) for x in self.ordering]
        # asymmetric games pass one player's labels; the ordering may list all players
        missing = [a for a in labels if a not in order]
        if missing or len(set(order)) != len(order) or (exact and len(order) != len(labels)):
            raise ValueError(f"priority ordering {order} does not rank {list(labels)} exactly once")
        return np.array([order.index(a) for a in labels], dtype=np.int64)

    @property
    def mode(self) -> int:
        return 0 if self.variant == "uniform" else 1


UNIFORM = TieRule()


# ---------------------------------------------------------------------------
# single-action laws (Fraction keyed, public)
# ---------------------------------------------------------------------------

def _multinomial(counts) -> int:
    out = math.factorial(sum(counts))
    for c in counts:
        out //= math.factorial(c)
    return out


def trial_payoff_distribution(game: SymmetricGame, action, state: PopulationState) -> PayoffDistribution:
    """Law of one trial of ``action`` against n-1 opponents drawn i.i.d. from ``state``."""
    a = game.index(action)
    w = state.weights
    if len(w) != game.m:
        raise ValueError(f"state has {len(w)} entries, game has {game.m} actions")
    law: dict = {}
    for opp in game.opponent_multisets():
        counts = [opp.count(b) for b in range(game.m)]
        prob = float(_multinomial(counts))
        for b, c in enumerate(counts):
            if c:
                prob *= w[b] ** c
        if prob > 0:
            v = game.payoff(a, opp)
            law[v] = law.get(v, 0.0) + prob
    return PayoffDistribution.from_mapping(law)


def k_trial_total_distribution(d: PayoffDistribution, k: int) -> PayoffDistribution:
    """Law of the sum of ``k`` independent draws from ``d``."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    out = dict(d.support)
    for _ in range(k - 1):
        nxt: dict = {}
        for x, px in out.items():
            for y, py in d.support:
                nxt[x + y] = nxt.get(x + y, 0.0) + px * py
        out = nxt
    return PayoffDistribution.from_mapping(out)


# ---------------------------------------------------------------------------
# compiled-kernel driver
# ---------------------------------------------------------------------------

@dataclass
class _PopulationTables:
    opp_counts: np.ndarray
    coef: np.ndarray
    pay: np.ndarray
    rank: np.ndarray
    sl: slice


@dataclass
class SamplingKernel:
    """Precomputed tables mapping a flat state vector to revision probabilities.

    Symmetric games have one population; asymmetric games have one per
    player and the flat state concatenates the player simplices.
    """

    game: object
    k: int
    tie: TieRule = UNIFORM
    cap: float = DEFAULT_CAP
    sizes: tuple = field(init=False)
    _tables: list = field(init=False, repr=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if isinstance(self.game, SymmetricGame):
            self._tables = [self._symmetric_tables(self.game)]
            self.sizes = (self.game.m,)
        elif isinstance(self.game, AsymmetricGame):
            self._tables = self._asymmetric_tables(self.game)
            self.sizes = self.game.sizes
        else:
            raise TypeError(f"not a game: {self.game!r}")
        self._mode = self.tie.mode
        self._capf = float(self.cap)

    def _symmetric_tables(self, game):
        _, table = game.integer_payoffs()
        opps = game.opponent_multisets()
        counts = np.array([[opp.count(b) for b in range(game.m)] for opp in opps], dtype=np.int64)
        coef = np.array([float(_multinomial(row)) for row in counts])
        pay = np.array([[table[(a, opp)] for opp in opps] for a in range(game.m)], dtype=np.int64)
        return _PopulationTables(counts, coef, pay, self.tie.ranks(game.actions), slice(0, game.m))

    def _asymmetric_tables(self, game):
        _, tables = game.integer_payoffs()
        sizes = game.sizes
        offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        out = []
        for i in range(game.n):
            others = [j for j in range(game.n) if j != i]
            outcomes = list(itertools.product(*(range(sizes[j]) for j in others)))
            counts = np.zeros((len(outcomes), offsets[-1]), dtype=np.int64)
            for s, combo in enumerate(outcomes):
                for j, b in zip(others, combo):
                    counts[s, offsets[j] + b] = 1
            pay = np.zeros((sizes[i], len(outcomes)), dtype=np.int64)
            for a in range(sizes[i]):
                for s, combo in enumerate(outcomes):
                    prof = list(combo)
                    prof.insert(i, a)
                    pay[a, s] = tables[i][tuple(prof)]
            out.append(
                _PopulationTables(
                    counts,
                    np.ones(len(outcomes)),
                    pay,
                    self.tie.ranks(game.action_sets[i], exact=False),
                    slice(offsets[i], offsets[i + 1]),
                )
            )
        return out

    def weights(self, x) -> np.ndarray:
        """Revision probabilities for the flat state ``x`` (same layout as ``x``)."""
        x = np.ascontiguousarray(x, dtype=float)
        if len(self._tables) == 1:
            return self._population(self._tables[0], x)
        out = np.empty_like(x)
        for t in self._tables:
            out[t.sl] = self._population(t, x)
        return out

    def _population(self, t, x):
        w, status = _backend.population_weights(
            x, t.opp_counts, t.coef, t.pay, self.k, self._mode, t.rank, self._capf
        )
        if status == _backend.CAP_EXCEEDED:
            raise ResourceCapError(
                f"joint support enumeration exceeds cap {self.cap:.0e}; "
                "use the Monte Carlo simulator (mc) for this instance"
            )
        return w

    def field(self, x) -> np.ndarray:
        """Mean dynamic w_k(x) - x."""
        x = np.ascontiguousarray(x, dtype=float)
        return self.weights(x) - x


@functools.lru_cache(maxsize=256)
def _cached_kernel(game, k, tie, cap):
    return SamplingKernel(game, k, tie, cap)


def get_kernel(game, k: int, tie: TieRule = UNIFORM, cap: float = DEFAULT_CAP) -> SamplingKernel:
    return _cached_kernel(game, int(k), tie, cap)


def best_experienced_probabilities(
    game: SymmetricGame,
    state: PopulationState,
    k: int,
    tie: TieRule = UNIFORM,
    cap: float = DEFAULT_CAP,
) -> np.ndarray:
    """w_k(state): probability that each action is adopted by a revising agent."""
    if not isinstance(game, SymmetricGame):
        raise TypeError("use asymmetric_best_experienced for asymmetric games")
    if not isinstance(state, PopulationState):
        state = PopulationState(state)
    if len(state) != game.m:
        raise ValueError(f"state has {len(state)} entries, game has {game.m} actions")
    return get_kernel(game, k, tie, cap).weights(state.weights)


def asymmetric_best_experienced(
    game: AsymmetricGame,
    state: MultiPopulationState,
    k: int,
    tie: TieRule = UNIFORM,
    cap: float = DEFAULT_CAP,
) -> list[np.ndarray]:
    """Per-player revision probability vectors w^i_k(state)."""
    if not isinstance(state, MultiPopulationState):
        state = MultiPopulationState(state)
    if state.sizes != game.sizes:
        raise ValueError(f"state sizes {state.sizes} do not match game {game.sizes}")
    flat = get_kernel(game, k, tie, cap).weights(state.flat())
    return np.split(flat, np.cumsum(game.sizes)[:-1])


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

def brute_force_w(game, state, k: int, tie: TieRule = UNIFORM, cap: float = DEFAULT_CAP):
    """Revision probabilities by enumerating every ordered opponent draw.

    Exponential; meant as an independent test oracle.  Symmetric games
    return one vector, asymmetric games a list of per-player vectors.
    """
    if isinstance(game, SymmetricGame):
        st = state if isinstance(state, PopulationState) else PopulationState(state)
        return _brute_population(
            labels=game.actions,
            slot_probs=[st.weights] * (game.n - 1),
            payoff=lambda a, opp: game.payoff(a, opp),
            k=k,
            tie=tie,
            cap=cap,
        )
    st = state if isinstance(state, MultiPopulationState) else MultiPopulationState(state)
    out = []
    for i in range(game.n):
        others = [j for j in range(game.n) if j != i]

        def payoff(a, opp, i=i):
            prof = list(opp)
            prof.insert(i, a)
            return game.payoff(i, prof)

        out.append(
            _brute_population(
                labels=game.action_sets[i],
                slot_probs=[st[j].weights for j in others],
                payoff=payoff,
                k=k,
                tie=tie,
                cap=cap,
            )
        )
    return out


def _brute_population(labels, slot_probs, payoff, k, tie, cap):
    m = len(labels)
    n_outcomes = 1
    for probs in slot_probs:
        n_outcomes *= len(probs) ** (k * m)
    if n_outcomes > cap:
        raise ResourceCapError(f"brute force needs {n_outcomes} outcomes > cap {cap:.0e}")
    ranks = tie.ranks(labels, exact=False)
    # every ordered draw sequence (k trials x n-1 opponents) for each tested action,
    # totals kept as exact Fractions, then scaled to integers for the joint comparison
    per_action = []
    for a in range(m):
        slots = list(slot_probs) * k
        totals, probs = [], []
        for draw in itertools.product(*(range(len(p)) for p in slots)):
            prob = 1.0
            for s, b in enumerate(draw):
                prob *= slots[s][b]
            tot = Fraction(0)
            for t in range(k):
                tot += payoff(a, draw[t * len(slot_probs):(t + 1) * len(slot_probs)])
            totals.append(tot)
            probs.append(prob)
        per_action.append((totals, probs))
    scale = 1
    for totals, _ in per_action:
        for v in totals:
            scale = math.lcm(scale, v.denominator)
    shape = [len(p) for _, p in per_action]
    grids_t, prob = [], np.ones(shape)
    for a, (totals, probs) in enumerate(per_action):
        view = [1] * m
        view[a] = -1
        grids_t.append(np.broadcast_to(
            np.array([int(v * scale) for v in totals], dtype=object).reshape(view), shape))
        prob = prob * np.array(probs).reshape(view)
    stacked = np.stack(grids_t)
    best = stacked.max(axis=0)
    is_win = stacked == best
    n_win = is_win.sum(axis=0)
    w = np.zeros(m)
    if tie.variant == "uniform":
        for a in range(m):
            w[a] = float(np.sum(np.where(is_win[a], prob / n_win, 0.0)))
    else:
        order = sorted(range(m), key=lambda a: ranks[a])
        taken = np.zeros(shape, dtype=bool)
        for a in order:
            mine = is_win[a] & ~taken
            w[a] = float(np.sum(prob[mine]))
            taken |= mine
    return w
