"""Agent-based simulation of best-experienced-payoff revision in a finite population.

Every event a uniformly chosen agent tests each action ``k`` times
against opponents drawn with replacement from the current population
(itself included), totals the payoffs exactly and switches to the best
action.  Time advances by 1/N per event (1/(nN) with n populations, one
population revising per event), so one unit of time is one revision
opportunity per agent on average.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _backend
from .dynamics import Trajectory, block_sizes, column_labels, to_flat
from .game import SymmetricGame
from .kernel import UNIFORM, TieRule

__all__ = [
    "AgentPopulation",
    "compare_to_mean_dynamic",
    "simulate_agents",
]

_BLOCK = 8192


@dataclass
class AgentPopulation:
    """Action counts (flat over populations), population size and seed."""

    counts: np.ndarray
    N: int
    rng_seed: int
    sizes: tuple[int, ...]

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64).copy()
        self.sizes = tuple(int(s) for s in self.sizes)
        if self.counts.shape != (sum(self.sizes),):
            raise ValueError(f"counts must have length {sum(self.sizes)}")
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")
        start = 0
        for s in self.sizes:
            if int(self.counts[start:start + s].sum()) != self.N:
                raise ValueError(f"each population must have exactly N={self.N} agents")
            start += s

    @classmethod
    def from_state(cls, game, state, N: int, rng_seed: int) -> "AgentPopulation":
        """Round a state to integer counts (largest remainder per population)."""
        sizes = block_sizes(game)
        x = to_flat(game, state)
        counts = []
        start = 0
        for s in sizes:
            target = x[start:start + s] * N
            base = np.floor(target).astype(np.int64)
            short = N - int(base.sum())
            order = np.argsort(-(target - base), kind="stable")
            base[order[:short]] += 1
            counts.extend(base.tolist())
            start += s
        return cls(np.array(counts), int(N), int(rng_seed), sizes)

    def frequencies(self) -> np.ndarray:
        return self.counts / float(self.N)


def _symmetric_tables(game: SymmetricGame):
    m, n = game.m, game.n
    _, table = game.integer_payoffs()
    ns = n - 1
    ncode = m**ns
    pay = np.empty(m * ncode, dtype=np.int64)
    for a in range(m):
        for code, opp in enumerate(itertools.product(range(m), repeat=ns)):
            pay[a * ncode + code] = table[(a, tuple(sorted(opp)))]
    strides = np.array([[m ** (ns - 1 - s) for s in range(ns)]], dtype=np.int64)
    slot_pop = np.zeros((1, ns), dtype=np.int64)
    return slot_pop, strides, pay, np.zeros(1, dtype=np.int64)


def _asymmetric_tables(game):
    n, sizes = game.n, game.sizes
    _, tables = game.integer_payoffs()
    slot_pop = np.array([[j for j in range(n) if j != p] for p in range(n)], dtype=np.int64)
    strides = np.zeros((n, n - 1), dtype=np.int64)
    chunks, pay_off, off = [], [], 0
    for p in range(n):
        slots = [sizes[j] for j in slot_pop[p]]
        for s in range(n - 1):
            strides[p, s] = int(np.prod(slots[s + 1:], dtype=np.int64))
        block = []
        for a in range(sizes[p]):
            for others in itertools.product(*(range(s) for s in slots)):
                prof = list(others)
                prof.insert(p, a)
                block.append(tables[p][tuple(prof)])
        pay_off.append(off)
        off += len(block)
        chunks.extend(block)
    return slot_pop, strides, np.array(chunks, dtype=np.int64), np.array(pay_off, dtype=np.int64)


def simulate_agents(game, k: int, init: AgentPopulation, revisions: int,
                    tie: TieRule = UNIFORM, record_every: int | None = None) -> Trajectory:
    """Run ``revisions`` revision events; returns the empirical frequency path.

    Identical seeds give identical trajectories for either kernel backend,
    independent of ``record_every``.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if revisions < 1:
        raise ValueError("revisions must be >= 1")
    sizes = block_sizes(game)
    if tuple(init.sizes) != tuple(sizes):
        raise ValueError("population layout does not match the game")
    if init.N < max(sizes):
        raise ValueError(f"N={init.N} must be at least the number of actions")
    if isinstance(game, SymmetricGame):
        slot_pop, strides, pay, pay_off = _symmetric_tables(game)
        rank = tie.ranks(game.actions)
    else:
        slot_pop, strides, pay, pay_off = _asymmetric_tables(game)
        rank = np.concatenate([tie.ranks(s, exact=False) for s in game.action_sets])
    rank = np.asarray(rank, dtype=np.int64)
    n_pop = len(sizes)
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
    sizes_a = np.array(sizes, dtype=np.int64)
    pop_n = np.full(n_pop, init.N, dtype=np.int64)
    width = 3 + max(sizes) * k * slot_pop.shape[1]
    dt = 1.0 / (init.N * n_pop)
    if record_every is None:
        record_every = max(1, init.N * n_pop // 10)

    rng = np.random.default_rng(init.rng_seed)
    counts = init.counts.copy()
    times, rows = [0.0], [counts / float(init.N)]
    done = 0
    while done < revisions:
        chunk = min(record_every, revisions - done)
        left = chunk
        while left:
            b = min(left, _BLOCK)
            u = rng.random((b, width))
            _backend.run_events(counts, offsets, sizes_a, pop_n, slot_pop, strides, pay,
                                pay_off, k, tie.mode, rank, u)
            left -= b
        done += chunk
        times.append(done * dt)
        rows.append(counts / float(init.N))
    return Trajectory(np.array(times), np.array(rows), "horizon", column_labels(game), tuple(sizes))


def compare_to_mean_dynamic(empirical: Trajectory, ode: Trajectory) -> float:
    """Max over the shared time window of the max-norm state gap.

    Both paths are linearly interpolated on the union of their time
    grids.  An ODE path that stopped because it converged is held
    constant afterwards.
    """
    t_ode = ode.times
    x_ode = ode.array
    if ode.terminal_reason == "converged" and t_ode[-1] < empirical.times[-1]:
        t_ode = np.append(t_ode, empirical.times[-1])
        x_ode = np.vstack([x_ode, x_ode[-1]])
    lo = max(empirical.times[0], t_ode[0])
    hi = min(empirical.times[-1], t_ode[-1])
    if hi < lo or empirical.array.shape[1] != x_ode.shape[1]:
        raise ValueError("trajectories have disjoint time ranges or different layouts")
    grid = np.union1d(empirical.times, t_ode)
    grid = grid[(grid >= lo) & (grid <= hi)]
    gap = 0.0
    for c in range(x_ode.shape[1]):
        e = np.interp(grid, empirical.times, empirical.array[:, c])
        o = np.interp(grid, t_ode, x_ode[:, c])
        gap = max(gap, float(np.max(np.abs(e - o))))
    return gap
