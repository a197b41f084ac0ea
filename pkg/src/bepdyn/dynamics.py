"""Mean dynamic x' = w_k(x) - x: integration, rest points and Jacobians.

States are handled internally as flat vectors; asymmetric games
concatenate one simplex block per player.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .game import AsymmetricGame, SymmetricGame
from .kernel import (
    UNIFORM,
    MultiPopulationState,
    PopulationState,
    TieRule,
    get_kernel,
)

__all__ = [
    "Jacobian",
    "RestPoint",
    "RestPointSearch",
    "Trajectory",
    "classify_convergence",
    "find_rest_points",
    "integrate",
    "numeric_jacobian",
    "perturbation_probe",
]

log = logging.getLogger(__name__)

CONVERGED = "converged"
HORIZON = "horizon"
DIVERGED = "diverged-from-simplex"


def block_sizes(game) -> tuple[int, ...]:
    if isinstance(game, SymmetricGame):
        return (game.m,)
    return game.sizes


def column_labels(game) -> list[str]:
    if isinstance(game, SymmetricGame):
        return list(game.actions)
    return [f"p{i + 1}_{a}" for i, s in enumerate(game.action_sets) for a in s]


def to_flat(game, state) -> np.ndarray:
    """Accept PopulationState, MultiPopulationState, nested lists or a flat array."""
    sizes = block_sizes(game)
    if isinstance(state, PopulationState):
        x = state.weights.copy()
    elif isinstance(state, MultiPopulationState):
        x = state.flat()
    else:
        try:
            x = np.asarray(state, dtype=float).ravel()
        except ValueError:
            x = np.concatenate([np.asarray(s, dtype=float) for s in state])
        if x.size != sum(sizes):
            x = np.concatenate([np.asarray(s, dtype=float) for s in state])
    if x.size != sum(sizes):
        raise ValueError(f"state has {x.size} entries, expected {sum(sizes)}")
    return _project(x, sizes)


def to_state(game, x):
    if isinstance(game, SymmetricGame):
        return PopulationState(x)
    return MultiPopulationState.from_flat(x, game.sizes)


def _project(x: np.ndarray, sizes) -> np.ndarray:
    out = np.maximum(x, 0.0)
    if len(sizes) == 1:
        total = out.sum()
        if total <= 0:
            raise ValueError("state block has no mass")
        out /= total
        return out
    start = 0
    for s in sizes:
        block = out[start:start + s]
        total = block.sum()
        if total <= 0:
            raise ValueError("state block has no mass")
        out[start:start + s] = block / total
        start += s
    return out


@dataclass
class Trajectory:
    """Recorded path of the mean dynamic (or an empirical path)."""

    times: np.ndarray
    array: np.ndarray
    terminal_reason: str
    labels: list[str]
    sizes: tuple[int, ...]
    min_preclip: float = 0.0

    @property
    def states(self) -> list:
        if len(self.sizes) == 1:
            return [PopulationState(row) for row in self.array]
        return [MultiPopulationState.from_flat(row, self.sizes) for row in self.array]

    @property
    def terminal(self) -> np.ndarray:
        return self.array[-1]

    def __len__(self):
        return len(self.times)


def integrate(
    game,
    k: int,
    alpha0,
    horizon: float,
    dt: float = 0.05,
    tie: TieRule = UNIFORM,
    tol: float = 1e-10,
    record_every: int = 1,
) -> Trajectory:
    """Fixed-step RK4 of the k-payoff sampling dynamic.

    After each step negative entries are clipped and every block is
    renormalized.  Stops early once the field's max-norm drops below
    ``tol``.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if horizon < 0:
        raise ValueError(f"horizon must be nonnegative, got {horizon}")
    sizes = block_sizes(game)
    kern = get_kernel(game, k, tie)
    f = kern.field
    x = to_flat(game, alpha0)
    t = 0.0
    times = [0.0]
    rows = [x.copy()]
    min_pre = float(x.min())
    n_steps = int(np.ceil(horizon / dt - 1e-12))
    reason = HORIZON
    for step in range(n_steps):
        k1 = f(x)
        if np.max(np.abs(k1)) < tol:
            reason = CONVERGED
            break
        h = min(dt, horizon - t)
        k2 = f(_project(x + 0.5 * h * k1, sizes))
        k3 = f(_project(x + 0.5 * h * k2, sizes))
        k4 = f(_project(x + h * k3, sizes))
        y = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        lo = y.min()
        if not np.isfinite(lo) or not np.isfinite(y.max()):
            raise RuntimeError(f"internal error: non-finite state at t={t}")
        min_pre = min(min_pre, float(lo))
        x = _project(y, sizes)
        t += h
        if (step + 1) % record_every == 0 or step == n_steps - 1:
            times.append(t)
            rows.append(x.copy())
    else:
        if np.max(np.abs(f(x))) < tol:
            reason = CONVERGED
    if times[-1] != t:
        times.append(t)
        rows.append(x.copy())
    return Trajectory(
        np.array(times), np.array(rows), reason, column_labels(game), sizes, min_preclip=min_pre
    )


def classify_convergence(traj: Trajectory, target, radius: float) -> str:
    """``converged-to-target``, ``converged-elsewhere`` or ``not-converged``."""
    target = np.asarray(
        target.flat() if isinstance(target, MultiPopulationState)
        else target.weights if isinstance(target, PopulationState) else target,
        dtype=float,
    ).ravel()
    dist = float(np.max(np.abs(traj.terminal - target)))
    if dist <= radius:
        return "converged-to-target"
    if traj.terminal_reason == CONVERGED:
        return "converged-elsewhere"
    return "not-converged"


# ---------------------------------------------------------------------------
# rest points
# ---------------------------------------------------------------------------

@dataclass
class RestPoint:
    state: np.ndarray
    residual: float
    labels: list[str]
    sizes: tuple[int, ...]
    source: str = "seed"
    stability: dict = field(default_factory=dict)

    def as_state(self):
        if len(self.sizes) == 1:
            return PopulationState(self.state)
        return MultiPopulationState.from_flat(self.state, self.sizes)


@dataclass
class RestPointSearch:
    rest_points: list[RestPoint]
    unresolved: list[np.ndarray]

    @property
    def states(self) -> list[np.ndarray]:
        return [r.state for r in self.rest_points]


def interior_grid(game, resolution: int = 4, min_weight: float = 1e-3) -> list[np.ndarray]:
    """Lattice of interior states with every weight at least ``min_weight``."""
    blocks = []
    for s in block_sizes(game):
        pts = []
        for combo in itertools.product(range(1, resolution), repeat=s):
            if sum(combo) == resolution:
                pts.append(np.array(combo, dtype=float) / resolution)
        if not pts:
            pts = [np.full(s, 1.0 / s)]
        pts = [np.maximum(p, min_weight) / np.maximum(p, min_weight).sum() for p in pts]
        blocks.append(pts)
    return [np.concatenate(c) for c in itertools.product(*blocks)]


def _polish(kern, x, sizes, tol, lam=0.5, max_iter=20000):
    for _ in range(max_iter):
        res = float(np.max(np.abs(kern.field(x))))
        if res <= 1e-13:
            return x, res
        x = _project((1.0 - lam) * x + lam * kern.weights(x), sizes)
    res = float(np.max(np.abs(kern.field(x))))
    return x, res


def _vertices(game) -> Iterable[np.ndarray]:
    sizes = block_sizes(game)
    for combo in itertools.product(*(range(s) for s in sizes)):
        x = np.zeros(sum(sizes))
        start = 0
        for s, a in zip(sizes, combo):
            x[start + a] = 1.0
            start += s
        yield x


def _two_action_scan(kern, tol, n_grid=400) -> list[np.ndarray]:
    def g(p):
        return kern.field(np.array([p, 1.0 - p]))[0]

    grid = np.linspace(0.0, 1.0, n_grid + 1)
    vals = [g(p) for p in grid]
    out = []
    for a, b, fa, fb in zip(grid, grid[1:], vals, vals[1:]):
        if (fa > 0) != (fb > 0) and fa != 0 and fb != 0:
            lo, hi, flo = a, b, fa
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                fm = g(mid)
                if abs(fm) < 1e-14 or hi - lo < 1e-15:
                    break
                if (fm > 0) == (flo > 0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            out.append(np.array([mid, 1.0 - mid]))
    return out


def find_rest_points(
    game,
    k: int,
    seeds: Sequence | int | None = None,
    tol: float = 1e-9,
    tie: TieRule = UNIFORM,
    dt: float = 0.05,
    horizon: float = 400.0,
    include_vertices: bool = True,
    dedup: float = 1e-6,
) -> RestPointSearch:
    """Rest points reached from ``seeds`` plus pure-state and scan candidates.

    ``seeds`` is a list of states or an int lattice resolution for
    :func:`interior_grid`.  Seeds that neither converge nor polish to a
    residual below ``tol`` are returned in ``unresolved``.
    """
    sizes = block_sizes(game)
    kern = get_kernel(game, k, tie)
    if seeds is None:
        seeds = interior_grid(game, 4)
    elif isinstance(seeds, int):
        seeds = interior_grid(game, seeds)
    seeds = [to_flat(game, s) for s in seeds]
    if not seeds:
        raise ValueError("need at least one seed")

    found: list[RestPoint] = []
    unresolved = []

    def add(x, res, source):
        for r in found:
            if np.max(np.abs(r.state - x)) < dedup:
                if res < r.residual:
                    r.state, r.residual = x, res
                return
        found.append(RestPoint(x, res, column_labels(game), sizes, source))

    for s in seeds:
        traj = integrate(game, k, s, horizon, dt, tie, tol=min(tol, 1e-10))
        x, res = _polish(kern, traj.terminal, sizes, tol)
        if res <= tol:
            add(x, res, "seed")
        else:
            log.warning("seed %s unresolved (residual %.3g)", s, res)
            unresolved.append(s)
    if include_vertices:
        for v in _vertices(game):
            res = float(np.max(np.abs(kern.field(v))))
            if res <= tol:
                add(v, res, "vertex")
    if isinstance(game, SymmetricGame) and game.m == 2:
        for x in _two_action_scan(kern, tol):
            res = float(np.max(np.abs(kern.field(x))))
            if res <= tol:
                add(x, res, "scan")
    found.sort(key=lambda r: tuple(-r.state))
    return RestPointSearch(found, unresolved)


# ---------------------------------------------------------------------------
# linearization
# ---------------------------------------------------------------------------

@dataclass
class Jacobian:
    matrix: np.ndarray
    coords: list[str]
    reference: list[str]

    def max_real_eigenvalue(self) -> float:
        if self.matrix.size == 0:
            return float("-inf")
        return float(np.max(np.linalg.eigvals(self.matrix).real))


def numeric_jacobian(game, k: int, rest, h: float = 1e-5, tie: TieRule = UNIFORM,
                     check_tol: float = 1e-8) -> Jacobian:
    """One-sided finite-difference Jacobian in the coordinates off each block's largest entry.

    At a pure state this is the Jacobian with respect to the frequencies
    of the non-equilibrium actions.
    """
    sizes = block_sizes(game)
    labels = column_labels(game)
    kern = get_kernel(game, k, tie)
    x0 = to_flat(game, rest)
    f0 = kern.field(x0)
    if np.max(np.abs(f0)) > check_tol:
        raise ValueError(f"state is not a rest point (residual {np.max(np.abs(f0)):.3g})")
    coords, refs = [], []
    start = 0
    for s in sizes:
        block = x0[start:start + s]
        r = start + int(np.argmax(block))
        refs.append(r)
        coords.extend((start + j, r) for j in range(s) if start + j != r)
        start += s
    J = np.zeros((len(coords), len(coords)))
    for col, (c, r) in enumerate(coords):
        if x0[r] < h:
            raise ValueError(f"step h={h} leaves the simplex at coordinate {labels[r]}")
        x = x0.copy()
        x[c] += h
        x[r] -= h
        df = (kern.field(x) - f0) / h
        J[:, col] = [df[i] for i, _ in coords]
    return Jacobian(J, [labels[c] for c, _ in coords], [labels[r] for r in refs])


def perturbation_probe(game, k: int, base, targets: Sequence[int], eps: float = 1e-3,
                       tie: TieRule = UNIFORM, horizon: float = 80.0, dt: float = 0.05) -> dict:
    """Start ``eps`` away from ``base`` toward the flat coordinates ``targets``.

    Outcome ``escaped`` when the max-norm distance grows tenfold,
    ``returned`` when it shrinks below a hundredth of its start,
    otherwise ``inconclusive``.
    """
    sizes = block_sizes(game)
    x0 = to_flat(game, base)
    x = x0.copy()
    start = 0
    for s in sizes:
        mine = [t for t in targets if start <= t < start + s]
        if mine:
            x[start:start + s] *= 1.0 - eps
            for t in mine:
                x[t] += eps / len(mine)
        start += s
    traj = integrate(game, k, x, horizon, dt, tie)
    dists = np.max(np.abs(traj.array - x0), axis=1)
    d0 = float(dists[0])
    peak = float(dists.max())
    final = float(dists[-1])
    if peak >= 10.0 * d0:
        outcome = "escaped"
    elif final <= 1e-2 * d0:
        outcome = "returned"
    else:
        outcome = "inconclusive"
    return {
        "epsilon": eps,
        "outcome": outcome,
        "initial_distance": d0,
        "max_distance": peak,
        "final_distance": final,
    }
