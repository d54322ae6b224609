import itertools
from fractions import Fraction

import pytest

from coopauth.analysis import (
    PUBLISHED_BOTH_SIDES_N15,
    both_sides_closed_form,
    exact_verifier_count,
    prob_both_sides,
    prob_table,
    verifier_count_distribution,
)
from coopauth.obu import ElectionStrategy

PAPER = ElectionStrategy.PAPER_RULE
NEAREST = ElectionStrategy.P_NEAREST


def brute_force_both_sides(n):
    """Enumerate all 2**n front/back assignments exactly."""
    if n == 0:
        return Fraction(0)
    good = sum(1 for sides in itertools.product((0, 1), repeat=n) if 0 < sum(sides) < n)
    return Fraction(good, 2**n)


@pytest.mark.parametrize("n", range(0, 13))
def test_closed_form_matches_enumeration(n):
    assert both_sides_closed_form(n) == pytest.approx(float(brute_force_both_sides(n)), abs=1e-15)


def test_closed_form_values():
    assert both_sides_closed_form(1) == 0.0
    assert both_sides_closed_form(2) == 0.5
    assert round(both_sides_closed_form(15), 5) == 0.99994
    assert PUBLISHED_BOTH_SIDES_N15 == 0.99998


def test_closed_form_monotone():
    values = [both_sides_closed_form(n) for n in range(0, 60)]
    assert values == sorted(values)


def test_monte_carlo_agrees():
    for r in prob_table(20, 20_000, seed=3):
        assert r.agrees, r


def test_stderr_shrinks_as_inverse_sqrt():
    errs = [prob_both_sides(4, t, seed=1).mc_stderr for t in (1_000, 10_000, 100_000)]
    assert errs[0] / errs[1] == pytest.approx(10**0.5, rel=0.15)
    assert errs[1] / errs[2] == pytest.approx(10**0.5, rel=0.15)


def test_zero_trials_rejected():
    with pytest.raises(ValueError):
        prob_both_sides(3, 0)


def test_prob_is_seeded():
    assert prob_both_sides(7, 1000, seed=5) == prob_both_sides(7, 1000, seed=5)


def test_large_k_counts():
    assert exact_verifier_count(15, 5, NEAREST) == 5
    assert exact_verifier_count(15, 5, PAPER) == 11


def test_fallback_counts_every_receiver():
    # k = 3 mutual neighbors means 4 receivers, all below p = 5
    assert exact_verifier_count(3, 5, NEAREST) == 4
    assert exact_verifier_count(3, 5, PAPER) == 4


@pytest.mark.parametrize("strategy", [PAPER, NEAREST])
def test_distribution_is_a_point_mass(strategy):
    res = verifier_count_distribution(8, 3, strategy, trials=300, seed=2)
    assert res.histogram == {res.exact: 300}
    assert sum(res.frequencies().values()) == pytest.approx(1.0)


def test_exact_omitted_above_twelve():
    assert verifier_count_distribution(13, 2, NEAREST, trials=5).exact is None


def test_k_must_be_positive():
    with pytest.raises(ValueError):
        verifier_count_distribution(0, 2, NEAREST, trials=5)
