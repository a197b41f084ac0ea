"""Closed-form prisoner's dilemma machinery.

With ``p`` the cooperating share, ``Tie(k, p)`` is the probability that
two independent Binomial(k, p) counts coincide and ``Win = (1 - Tie)/2``.
For small gains and losses the cooperation share moves as
``h_k(p) = Win(k, p) - p``.  For k in {2, 3} every (g, l) region has its
own polynomial right-hand side, catalogued in :data:`REGION_RHS`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import integrate

from .game import as_rational

__all__ = [
    "HCurve",
    "PdBoundaryError",
    "PdRegion",
    "REGION_RHS",
    "binom_pmf",
    "bisect_root",
    "classify_region",
    "h",
    "pd_sample_comparison",
    "solve_p_star",
    "tie_prob",
    "tie_prob_cf",
    "win_prob",
]


class PdBoundaryError(ValueError):
    """(g, l) lies on a region boundary where some sample comparison ties."""


def binom_pmf(k: int, p: float, j: int) -> float:
    if not 0 <= j <= k:
        raise ValueError(f"j must lie in [0, {k}], got {j}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return math.comb(k, j) * p**j * (1.0 - p) ** (k - j)


def tie_prob(k: int, p: float) -> float:
    """P(X = Y) for independent X, Y ~ Binomial(k, p)."""
    return math.fsum(binom_pmf(k, p, j) ** 2 for j in range(k + 1))


def tie_prob_cf(k: int, p: float) -> float:
    """Same probability via the characteristic function of X - Y.

    phi_k(t; p) = (1 - 4p(1-p) sin^2(t/2))^k is even, so integrate over
    [0, pi] and divide by pi.
    """
    c = 4.0 * p * (1.0 - p)
    val, _ = integrate.quad(
        lambda t: (1.0 - c * math.sin(t / 2.0) ** 2) ** k,
        0.0,
        math.pi,
        epsabs=1e-10,
        epsrel=1e-12,
        limit=200,
    )
    return val / math.pi


def win_prob(k: int, p: float) -> float:
    return 0.5 * (1.0 - tie_prob(k, p))


def h(k: int, p: float) -> float:
    """Cooperation drift Win(k, p) - p."""
    return win_prob(k, p) - p


@dataclass(frozen=True)
class HCurve:
    k: int

    def __call__(self, p):
        if np.ndim(p):
            return np.array([h(self.k, float(x)) for x in np.ravel(p)]).reshape(np.shape(p))
        return h(self.k, float(p))


def bisect_root(f: Callable[[float], float], lo: float, hi: float,
                ftol: float = 1e-12, xtol: float = 1e-15, maxiter: int = 200) -> float:
    """Bisection on a sign-changing bracket; stops when |f| < ftol or the bracket collapses."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError(f"no sign change on [{lo}, {hi}]: f={flo}, {fhi}")
    mid = 0.5 * (lo + hi)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) < ftol or hi - lo < xtol:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return mid


def solve_p_star(k: int) -> float:
    """Unique root of h_k in (0, 1/2) for k >= 2."""
    if k < 2:
        raise ValueError(f"h_k has an interior root only for k >= 2, got k={k}")
    return bisect_root(lambda p: h(k, p), 1e-6, 0.5, ftol=1e-12)


def pd_sample_comparison(g, l, k: int, j: int, jp: int) -> int:
    """Sign of (c-sample total) - (d-sample total).

    ``j`` cooperators met while testing c, ``jp`` while testing d.
    """
    g, l = as_rational(g), as_rational(l)
    if not (0 <= j <= k and 0 <= jp <= k):
        raise ValueError(f"cooperation counts must lie in [0, {k}]")
    diff = (j - (k - j) * l) - jp * (1 + g)
    return (diff > 0) - (diff < 0)


# ---------------------------------------------------------------------------
# (g, l) region catalogue for k = 2, 3
# ---------------------------------------------------------------------------

def _baseline(k):
    return lambda p: h(k, p)


REGION_RHS: dict[tuple[int, str], Callable[[float], float]] = {
    (2, "baseline"): _baseline(2),
    (2, "I"): lambda p: (1 - p) ** 2 - (1 - p) ** 4 - p,
    (2, "II"): lambda p: p**2 * (1 - p**2) - p,
    (2, "III"): lambda p: p**2 * (1 - p) ** 2 - p,
    (3, "baseline"): _baseline(3),
    (3, "I"): lambda p: p**2 * (1 - p) ** 2 * (3 - 2 * p) * (1 + 2 * p) + 3 * p * (1 - p) ** 5 - p,
    (3, "II"): lambda p: p**3 * (1 - p) ** 2 * (1 + 2 * p) + 3 * p * (1 - p) ** 4 - p,
    (3, "III"): lambda p: (1 - p) ** 3 - (1 - p) ** 6 - p,
    (3, "IV"): lambda p: p**3 * (1 - p**3) + 3 * p**2 * (1 - p) ** 3 * (1 + 2 * p) - p,
    (3, "V"): lambda p: p**3 * (1 - p**3) + 3 * p**2 * (1 - p) ** 4 - p,
    (3, "VI"): lambda p: p**3 * (1 - p) ** 2 * (1 + 2 * p) + 3 * p**2 * (1 - p) ** 4 - p,
    (3, "VII"): lambda p: p**2 * (1 - p) ** 3 * (3 - 2 * p) - p,
    (3, "VIII"): lambda p: p**3 * (1 - p**3) - p,
    (3, "IX"): lambda p: p**3 * (1 - p) ** 2 * (1 + 2 * p) - p,
    (3, "X"): lambda p: p**3 * (1 - p) ** 3 - p,
}


@dataclass(frozen=True)
class PdRegion:
    k: int
    region_id: str
    g: Fraction
    l: Fraction
    rest_points: tuple[float, ...]
    stable_equilibrium: float

    def rhs(self, p):
        return REGION_RHS[(self.k, self.region_id)](p)


def _region_id(k: int, g: Fraction, l: Fraction) -> str:
    half, one, two = Fraction(1, 2), Fraction(1), Fraction(2)
    if k == 2:
        if g < one and l < one:
            return "baseline"
        if l < one < g:
            return "I"
        if g < one < l:
            return "II"
        return "III"
    if g < half and l < half:
        return "baseline"
    if l < half:
        if g > two:
            return "III"
        return "I" if g + l < one else "II"
    if l < two:
        if g < half:
            return "IV" if g + l < one else "V"
        return "VI" if g < two else "VII"
    if g < half:
        return "VIII"
    return "IX" if g < two else "X"


def _rest_points(rhs, grid_size: int = 2000) -> tuple[float, ...]:
    grid = np.linspace(1e-6, 1.0, grid_size)
    vals = [rhs(p) for p in grid]
    roots = [0.0]
    for a, b, fa, fb in zip(grid, grid[1:], vals, vals[1:]):
        if fa == 0.0:
            roots.append(float(a))
        elif (fa > 0) != (fb > 0):
            roots.append(bisect_root(rhs, float(a), float(b), ftol=1e-13))
    return tuple(roots)


def classify_region(g, l, k: int) -> PdRegion:
    """Region of the (g, l) quadrant for k in {2, 3} with its stable rest point.

    Parameters on a boundary, where a c-sample and a d-sample can tie,
    are rejected: the outcome there depends on the tie-breaking rule.
    """
    g, l = as_rational(g), as_rational(l)
    if k not in (2, 3):
        raise ValueError(f"region catalogue covers k in {{2, 3}}, got k={k}")
    if g <= 0 or l <= 0:
        raise ValueError(f"g and l must be positive, got g={g}, l={l}")
    ties = [
        (j, jp)
        for j in range(k + 1)
        for jp in range(k + 1)
        if pd_sample_comparison(g, l, k, j, jp) == 0
    ]
    if ties:
        j, jp = ties[0]
        raise PdBoundaryError(
            f"(g, l) = ({g}, {l}) is a region boundary for k={k}: a c-sample with {j} "
            f"cooperators ties a d-sample with {jp}; stability there depends on the "
            "tie-breaking rule"
        )
    rid = _region_id(k, g, l)
    rhs = REGION_RHS[(k, rid)]
    if rid == "baseline":
        roots = (0.0, solve_p_star(k))
    else:
        roots = _rest_points(rhs)
    # the stable point is where the drift turns from positive to negative
    stable = 0.0
    for r in roots[1:]:
        if rhs(max(r - 1e-4, 0.0)) > 0 > rhs(min(r + 1e-4, 1.0)):
            stable = r
    return PdRegion(k, rid, g, l, roots, stable)
