import random
from fractions import Fraction

import numpy as np
import pytest

from bepdyn.game import make_prisoners_dilemma
from bepdyn.kernel import best_experienced_probabilities
from bepdyn.pd import (
    REGION_RHS,
    HCurve,
    PdBoundaryError,
    binom_pmf,
    classify_region,
    h,
    pd_sample_comparison,
    solve_p_star,
    tie_prob,
    tie_prob_cf,
    win_prob,
)


def test_binomial_pmf():
    assert binom_pmf(2, 0.5, 1) == 0.5
    assert binom_pmf(4, 0.0, 0) == 1.0
    assert binom_pmf(3, 0.25, 2) == pytest.approx(0.140625)
    with pytest.raises(ValueError):
        binom_pmf(2, 0.5, 3)


def test_tie_forms():
    assert tie_prob(2, 0.5) == pytest.approx(0.375)
    assert tie_prob(5, 0.0) == 1.0
    assert tie_prob_cf(2, 0.5) == pytest.approx(0.375, abs=1e-8)


def test_h_values():
    assert h(1, 0.3) == pytest.approx(-0.09)
    assert h(2, 0.28) == pytest.approx(0.00127, abs=5e-5)
    for k in range(2, 9):
        assert h(k, 0.5) < 0
    assert HCurve(2)(np.array([0.0, 1.0])).tolist() == pytest.approx([0.0, -1.0])


def test_win_is_half_of_non_tie():
    assert win_prob(3, 0.4) == pytest.approx(0.5 * (1 - tie_prob(3, 0.4)))


def test_p_star_ordering_and_residual():
    roots = [solve_p_star(k) for k in range(2, 9)]
    assert 0.28 < roots[0]
    assert roots[-1] < 0.5
    assert all(a < b for a, b in zip(roots, roots[1:]))
    for k, r in zip(range(2, 9), roots):
        assert abs(h(k, r)) < 1e-10
    with pytest.raises(ValueError):
        solve_p_star(1)


def test_sample_comparison_signs():
    g, l = Fraction(1, 3), Fraction(1, 4)
    for k in (2, 3):
        for j in range(k + 1):
            for jp in range(k + 1):
                s = pd_sample_comparison(g, l, k, j, jp)
                assert s == (1 if j > jp else -1)
    assert pd_sample_comparison(1, 1, 2, 1, 0) == 0


@pytest.mark.parametrize("g,l,k,rid,stable", [
    (2, "1/2", 2, "I", 0.245),
    ("1/2", 2, 2, "II", 0.0),
    (2, 2, 2, "III", 0.0),
    ("9/10", "2/5", 3, "II", 0.250),
    ("3/5", "3/10", 3, "I", 0.323),
    (3, "1/4", 3, "III", 0.245),
    (3, 3, 3, "X", 0.0),
    ("2/5", "9/10", 3, "V", 0.0),
])
def test_region_examples(g, l, k, rid, stable):
    r = classify_region(g, l, k)
    assert r.region_id == rid
    assert r.stable_equilibrium == pytest.approx(stable, abs=1e-3)
    assert r.rhs(0.0) == 0.0


def test_baseline_region_uses_root():
    r = classify_region("1/2", "1/2", 2)
    assert r.region_id == "baseline"
    assert r.stable_equilibrium == pytest.approx(solve_p_star(2), abs=1e-12)


@pytest.mark.parametrize("g,l,k", [(1, "1/2", 2), ("1/2", 1, 2), ("1/4", "1/2", 3), (2, "1/4", 3)])
def test_boundaries_rejected(g, l, k):
    with pytest.raises(PdBoundaryError, match="tie-breaking"):
        classify_region(g, l, k)


# representative (g, l) for each region, drawn at random inside its predicates
REGION_BOXES = {
    (2, "baseline"): ((0.05, 0.95), (0.05, 0.95)),
    (2, "I"): ((1.05, 4), (0.05, 0.95)),
    (2, "II"): ((0.05, 0.95), (1.05, 4)),
    (2, "III"): ((1.05, 4), (1.05, 4)),
    (3, "baseline"): ((0.02, 0.48), (0.02, 0.48)),
    (3, "III"): ((2.05, 5), (0.02, 0.48)),
    (3, "VII"): ((2.05, 5), (0.52, 1.95)),
    (3, "VI"): ((0.52, 1.95), (0.52, 1.95)),
    (3, "VIII"): ((0.02, 0.48), (2.05, 5)),
    (3, "IX"): ((0.52, 1.95), (2.05, 5)),
    (3, "X"): ((2.05, 5), (2.05, 5)),
}


def _rand_rational(lo, hi, rnd):
    return Fraction(round(rnd.uniform(lo, hi) * 997), 997)


def test_region_rhs_matches_kernel():
    rnd = random.Random(7)
    grid = np.linspace(0.05, 0.95, 10)
    hits = set()
    for (k, rid), (gb, lb) in REGION_BOXES.items():
        for _ in range(3):
            g, l = _rand_rational(*gb, rnd), _rand_rational(*lb, rnd)
            _check_region(k, rid, g, l, grid)
            hits.add((k, rid))
    # regions split by g + l
    for k, rid, g, l in [(3, "I", "7/10", "1/5"), (3, "I", "3/5", "3/10"), (3, "II", "9/10", "2/5"),
                         (3, "IV", "1/5", "3/5"), (3, "V", "2/5", "9/10"), (3, "V", "1/3", "7/4")]:
        _check_region(k, rid, Fraction(g), Fraction(l), grid)
        hits.add((k, rid))
    assert hits == set(REGION_RHS)


def _check_region(k, rid, g, l, grid):
    region = classify_region(g, l, k)
    assert region.region_id == rid, (g, l)
    game = make_prisoners_dilemma(g, l)
    for p in grid:
        w = best_experienced_probabilities(game, [p, 1 - p], k)[0]
        assert abs(region.rhs(p) - (w - p)) < 1e-10, (k, rid, g, l, p)
