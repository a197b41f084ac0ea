"""Stability of strict equilibria under S(k) dynamics via support matrices.

Action ``a`` supports ``a'`` against the equilibrium ``a*`` when a single
appearance of ``a`` in an otherwise all-``a*`` sample can make ``a'`` the
best-performing tested action, either directly (``a`` shows up in the
``a'``-sample) or by spoiling (``a`` shows up in the ``a*``-sample and
``a'`` is the unique second-best reply).  The support matrix ``T`` has
``T[a', a]`` = number of ways ``a`` supports ``a'`` (0, 1 or 2).

Near ``a*`` the dynamic linearizes to ``k(n-1) T - I`` (``k T - I`` for
n-population dynamics), and a nonnegative integer matrix has spectral
radius 0 iff repeated deletion of zero rows empties it, else >= 1.  The
verdict is therefore combinatorial and exact; eigenvalues are only a
cross-check.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .game import AsymmetricGame, SymmetricGame
from .kernel import UNIFORM, TieRule

__all__ = [
    "ConditionResult",
    "KThreshold",
    "NotStrictEquilibriumError",
    "StabilityVerdict",
    "SupportMatrix",
    "SupportRelation",
    "asymmetric_support_relation",
    "condition_check",
    "k_threshold",
    "spectral_radius",
    "spectral_radius_cross_check",
    "stability_verdict",
    "support_matrix",
    "support_relation",
]


class NotStrictEquilibriumError(ValueError):
    """The candidate is not a strict (symmetric) equilibrium."""


def _cmp(lhs: Fraction, rhs: Fraction) -> int:
    return (lhs > rhs) - (lhs < rhs)


@dataclass(frozen=True)
class SupportInequalities:
    """Signs of the defining inequalities (+1 strict, 0 equality, -1 fails)."""

    direct: int
    spoil: int
    second_best: int  # min over competitors b of sign(u(a') - u(b)); +1 if none

    def holds(self, weak: bool) -> tuple[bool, bool]:
        lo = 0 if weak else 1
        return self.direct >= lo, self.spoil >= lo and self.second_best >= lo

    @property
    def has_equality(self) -> bool:
        return self.direct == 0 or self.spoil == 0


@dataclass(frozen=True)
class SupportRelation:
    supporter: str
    supported: str
    kind: str  # none | direct | spoiling | double
    strictness: str | None  # strict | weak-only | None when kind is none
    inequalities: SupportInequalities


def _relation(supporter, supported, ineq: SupportInequalities, weak: bool) -> SupportRelation:
    d, s = ineq.holds(weak)
    kind = {(False, False): "none", (True, False): "direct",
            (False, True): "spoiling", (True, True): "double"}[(d, s)]
    strictness = None
    if kind != "none":
        sd, ss = ineq.holds(False)
        strict_kind = (not d or sd) and (not s or ss)
        strictness = "strict" if strict_kind else "weak-only"
    return SupportRelation(str(supporter), str(supported), kind, strictness, ineq)


# -- symmetric ---------------------------------------------------------------

def _sym_inequalities(game: SymmetricGame, star: int, a: int, ap: int, k: int) -> SupportInequalities:
    u_star = game.monomorphic_payoff(star, star)
    u_ap = game.monomorphic_payoff(ap, star)
    direct = _cmp(game.against(ap, {a: 1}, star) + (k - 1) * u_ap, k * u_star)
    spoil = _cmp(k * u_ap, game.against(star, {a: 1}, star) + (k - 1) * u_star)
    second = 1
    for b in range(game.m):
        if b not in (star, ap):
            second = min(second, _cmp(u_ap, game.monomorphic_payoff(b, star)))
    return SupportInequalities(direct, spoil, second)


def _require_strict_sym(game, a_star) -> int:
    star = game.index(a_star)
    if not game.is_strict_equilibrium(star):
        raise NotStrictEquilibriumError(f"{game.actions[star]!r} is not a strict symmetric equilibrium")
    return star


def support_relation(game: SymmetricGame, a_star, a, a_prime, k: int, weak: bool = False) -> SupportRelation:
    """How ``a`` supports ``a_prime`` against ``a_star`` with samples of size ``k``."""
    star = _require_strict_sym(game, a_star)
    ia, iap = game.index(a), game.index(a_prime)
    if star in (ia, iap):
        raise ValueError("supporter and supported must differ from the equilibrium action")
    ineq = _sym_inequalities(game, star, ia, iap, k)
    return _relation(game.actions[ia], game.actions[iap], ineq, weak)


# -- asymmetric --------------------------------------------------------------

def _asym_inequalities(game: AsymmetricGame, star, i, ai, j, aj, k) -> SupportInequalities:
    u = game._payoffs[j]
    u_star = u[star]
    u_aj = u[game.deviate(star, {j: aj})]
    direct = _cmp(u[game.deviate(star, {i: ai, j: aj})] + (k - 1) * u_aj, k * u_star)
    spoil = _cmp(k * u_aj, u[game.deviate(star, {i: ai})] + (k - 1) * u_star)
    second = 1
    for b in range(game.sizes[j]):
        if b not in (star[j], aj):
            second = min(second, _cmp(u_aj, u[game.deviate(star, {j: b})]))
    return SupportInequalities(direct, spoil, second)


def _require_strict_asym(game, profile) -> tuple[int, ...]:
    star = game.profile_index(profile)
    if not game.is_strict_equilibrium(star):
        raise NotStrictEquilibriumError(f"{profile!r} is not a strict equilibrium")
    return star


def _player_action(game: AsymmetricGame, pa) -> tuple[int, int]:
    i, a = pa
    return int(i), game.index(int(i), a)


def asymmetric_support_relation(game: AsymmetricGame, a_star, a_i, a_j, k: int,
                                weak: bool = False) -> SupportRelation:
    """``a_i`` and ``a_j`` are (player, action) pairs off the equilibrium profile."""
    star = _require_strict_asym(game, a_star)
    i, ai = _player_action(game, a_i)
    j, aj = _player_action(game, a_j)
    if ai == star[i] or aj == star[j]:
        raise ValueError("supporter and supported must be non-equilibrium actions")
    name_i = f"{game.action_sets[i][ai]}"
    name_j = f"{game.action_sets[j][aj]}"
    if i == j:
        return SupportRelation(name_i, name_j, "none", None, SupportInequalities(-1, -1, -1))
    ineq = _asym_inequalities(game, star, i, ai, j, aj, k)
    return _relation(name_i, name_j, ineq, weak)


# -- support matrix -----------------------------------------------------------

@dataclass
class SupportMatrix:
    """Rows are supported actions, columns supporters, both indexed by A*."""

    index: list[str]
    strict: np.ndarray
    weak: np.ndarray
    flat_index: list[int]
    has_equality: bool

    @property
    def T(self) -> np.ndarray:
        return self.strict

    @property
    def T_weak(self) -> np.ndarray:
        return self.weak


def _entries(ineq: SupportInequalities) -> tuple[int, int]:
    sd, ss = ineq.holds(False)
    wd, ws = ineq.holds(True)
    return int(sd) + int(ss), int(wd) + int(ws)


def support_matrix(game, a_star, k: int) -> SupportMatrix:
    """Strict matrix T and its weak completion (weak relations counted as 1 each)."""
    if isinstance(game, SymmetricGame):
        star = _require_strict_sym(game, a_star)
        others = [b for b in range(game.m) if b != star]
        T = np.zeros((len(others), len(others)), dtype=np.int64)
        W = np.zeros_like(T)
        eq = False
        for r, ap in enumerate(others):
            for c, a in enumerate(others):
                ineq = _sym_inequalities(game, star, a, ap, k)
                T[r, c], W[r, c] = _entries(ineq)
                eq = eq or ineq.has_equality
        return SupportMatrix([game.actions[b] for b in others], T, W, others, eq)

    star = _require_strict_asym(game, a_star)
    offsets = np.concatenate([[0], np.cumsum(game.sizes)]).astype(int)
    elems = [(i, b) for i in range(game.n) for b in range(game.sizes[i]) if b != star[i]]
    T = np.zeros((len(elems), len(elems)), dtype=np.int64)
    W = np.zeros_like(T)
    eq = False
    for r, (j, aj) in enumerate(elems):
        for c, (i, ai) in enumerate(elems):
            if i == j:
                continue
            ineq = _asym_inequalities(game, star, i, ai, j, aj, k)
            T[r, c], W[r, c] = _entries(ineq)
            eq = eq or ineq.has_equality
    labels = [f"{game.action_sets[i][b]}" for i, b in elems]
    if len(set(labels)) != len(labels):
        labels = [f"p{i + 1}:{game.action_sets[i][b]}" for i, b in elems]
    return SupportMatrix(labels, T, W, [int(offsets[i] + b) for i, b in elems], eq)


# -- conditions I / I' / II / II' ---------------------------------------------

@dataclass
class ConditionResult:
    holds: bool
    ordering: list[int]  # removal order (indices into the matrix)
    stuck: list[int]  # remaining self-sustaining set when the condition fails

    def witness(self, labels: Sequence[str] | None = None):
        idx = self.ordering if self.holds else self.stuck
        return [labels[i] for i in idx] if labels is not None else list(idx)


def condition_check(M, by: str = "row") -> ConditionResult:
    """Repeatedly delete an index whose row (or column) is zero in the remaining submatrix.

    The condition holds iff everything gets deleted.  Ties between
    deletable indices go to the smallest index.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("support matrix must be square")
    if by == "column":
        M = M.T
    elif by != "row":
        raise ValueError(f"by must be 'row' or 'column', got {by!r}")
    alive = list(range(M.shape[0]))
    order = []
    while alive:
        for i in alive:
            if not any(M[i, j] for j in alive):
                alive.remove(i)
                order.append(i)
                break
        else:
            return ConditionResult(False, order, alive)
    return ConditionResult(True, order, [])


def spectral_radius(M, tol: float = 1e-12, max_iter: int = 20000) -> float:
    """Spectral radius of a nonnegative matrix.

    Nilpotency is settled exactly (``M**d == 0`` in integer arithmetic
    for integer input).  Otherwise power iteration on ``M + I`` (whose
    Perron root strictly dominates), falling back to a dense eigensolver
    when the iteration stalls.
    """
    M = np.asarray(M)
    d = M.shape[0]
    if d == 0:
        return 0.0
    if np.issubdtype(M.dtype, np.integer):
        P = M.astype(object)
        Q = np.identity(d, dtype=object)
        for _ in range(d):
            Q = Q.dot(P)
        if not np.any(Q != 0):
            return 0.0
    A = M.astype(float) + np.eye(d)
    x = np.ones(d) / np.sqrt(d)
    lam = 0.0
    for _ in range(max_iter):
        y = A @ x
        nrm = np.linalg.norm(y)
        if nrm == 0:
            break
        y /= nrm
        if abs(nrm - lam) < tol * max(1.0, nrm) and np.linalg.norm(y - x) < 1e-10:
            return float(nrm - 1.0)
        x, lam = y, nrm
    return float(np.max(np.abs(np.linalg.eigvals(M.astype(float)))))


def spectral_radius_cross_check(T, k: int, n: int) -> float:
    """Largest real eigenvalue of k(n-1)T - I, namely k(n-1)rho(T) - 1."""
    return k * (n - 1) * spectral_radius(T) - 1.0


# -- verdict -------------------------------------------------------------------

@dataclass
class StabilityVerdict:
    conclusion: str  # stable | unstable | indeterminate
    k: int
    condition_I: ConditionResult
    condition_I_column: ConditionResult
    condition_II: ConditionResult
    condition_II_column: ConditionResult
    support: SupportMatrix
    genericity: object
    necessity_available: bool
    spectral_radius: float
    linear_max_real_eig: float
    jacobian_eigen_max_real: float | None = None
    epsilon_probe: dict | None = None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        labels = self.support.index
        return {
            "conclusion": self.conclusion,
            "k": self.k,
            "conditionI": {
                "holds": self.condition_I.holds,
                "witness": self.condition_I.witness(labels),
            },
            "conditionII": {
                "holds": self.condition_II.holds,
                "witness": self.condition_II.witness(labels),
            },
            "jacobianMaxRealEig": self.jacobian_eigen_max_real,
            "linearMaxRealEig": self.linear_max_real_eig,
            "spectralRadius": self.spectral_radius,
            "necessityAvailable": self.necessity_available,
            "supportMatrix": {
                "index": labels,
                "T": self.support.strict.tolist(),
                "Tweak": self.support.weak.tolist(),
            },
            "genericity": self.genericity.to_json(),
            "probe": self.epsilon_probe,
            "notes": list(self.notes),
        }


def _multiplier(game, k) -> int:
    if isinstance(game, SymmetricGame):
        return k * (game.n - 1)
    return k


def _vertex(game, a_star) -> np.ndarray:
    if isinstance(game, SymmetricGame):
        x = np.zeros(game.m)
        x[game.index(a_star)] = 1.0
        return x
    star = game.profile_index(a_star)
    parts = []
    for i, s in enumerate(game.sizes):
        e = np.zeros(s)
        e[star[i]] = 1.0
        parts.append(e)
    return np.concatenate(parts)


def stability_verdict(game, a_star, k: int, tie: TieRule = UNIFORM, probe: bool = True,
                      jacobian: bool = True, epsilon: float = 1e-3) -> StabilityVerdict:
    """Asymptotic stability of the strict equilibrium ``a_star`` under S(k) dynamics.

    Effectively generic games get an exact stable/unstable answer.
    Otherwise the strict-support condition is necessary and the
    weak-support condition sufficient, and the gap is reported as
    ``indeterminate``.
    """
    from .dynamics import numeric_jacobian, perturbation_probe
    from .genericity import check_effective_genericity

    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    sm = support_matrix(game, a_star, k)
    gen = check_effective_genericity(game, a_star, k)
    c1 = condition_check(sm.strict, "row")
    c1c = condition_check(sm.strict, "column")
    c2 = condition_check(sm.weak, "row")
    c2c = condition_check(sm.weak, "column")
    mult = _multiplier(game, k)
    necessity = mult >= 2
    notes = []
    if gen.effectively_generic and necessity:
        conclusion = "stable" if c1.holds else "unstable"
    elif c2.holds:
        conclusion = "stable"
    elif not c1.holds and necessity:
        conclusion = "unstable"
    else:
        conclusion = "indeterminate"
    if not necessity:
        notes.append(
            "k(n-1) < 2: the strict-support condition is not necessary here; "
            "only the weak-support condition (sufficient) is informative"
        )
    if sm.has_equality:
        notes.append(
            "a support inequality holds with equality (boundary case); the linear "
            "behaviour there depends on the tie-breaking rule"
        )
    rho = spectral_radius(sm.strict)
    verdict = StabilityVerdict(
        conclusion=conclusion,
        k=k,
        condition_I=c1,
        condition_I_column=c1c,
        condition_II=c2,
        condition_II_column=c2c,
        support=sm,
        genericity=gen,
        necessity_available=necessity,
        spectral_radius=rho,
        linear_max_real_eig=(mult * rho - 1.0) if sm.index else -1.0,
        notes=notes,
    )
    base = _vertex(game, a_star)
    if jacobian and sm.index:
        verdict.jacobian_eigen_max_real = numeric_jacobian(game, k, base, tie=tie).max_real_eigenvalue()
    if probe and sm.index:
        targets = [sm.flat_index[i] for i in (c1.stuck if not c1.holds else range(len(sm.index)))]
        verdict.epsilon_probe = perturbation_probe(game, k, base, targets, epsilon, tie)
    return verdict


@dataclass
class KThreshold:
    k0: int | None
    k_bar: int
    conclusions: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def _k_bar(game, a_star) -> int:
    """Smallest k >= 2 at which no weak support can exist, from payoff extremes."""
    bounds = []
    if isinstance(game, SymmetricGame):
        star = game.index(a_star)
        vals = game.values()
        span = max(vals) - min(vals)
        u_star = game.monomorphic_payoff(star, star)
        gaps = [u_star - game.monomorphic_payoff(b, star) for b in range(game.m) if b != star]
        bounds.append((span, min(gaps)))
    else:
        star = game.profile_index(a_star)
        for j in range(game.n):
            vals = game.values(j)
            span = max(vals) - min(vals)
            u = game._payoffs[j]
            gaps = [u[star] - u[game.deviate(star, {j: b})] for b in range(game.sizes[j]) if b != star[j]]
            if gaps:
                bounds.append((span, min(gaps)))
    k_bar = 2
    for span, gap in bounds:
        k_bar = max(k_bar, int(Fraction(span) // gap) + 1)
    return k_bar


def k_threshold(game, a_star) -> KThreshold:
    """Smallest k >= 2 for which ``a_star`` is S(k) asymptotically stable."""
    if isinstance(game, SymmetricGame):
        _require_strict_sym(game, a_star)
    else:
        _require_strict_asym(game, a_star)
    k_bar = _k_bar(game, a_star)
    conclusions = {}
    for k in range(2, k_bar + 1):
        conclusions[k] = stability_verdict(game, a_star, k, probe=False, jacobian=False).conclusion
    stable = [k for k, c in conclusions.items() if c == "stable"]
    k0 = min(stable) if stable else None
    if k0 is None or any(conclusions[k] != "stable" for k in range(k0, k_bar + 1)):
        raise RuntimeError(f"stability not monotone in k: {conclusions}")
    return KThreshold(k0, k_bar, conclusions)
