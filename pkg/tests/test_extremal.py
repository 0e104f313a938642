import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from keyguarantee.dist import (
    DistributionError,
    KeySubset,
    SubsetOutcome,
    conditional_guess_prob,
    distance_to_uniform,
    eve_bit_error_rate,
    is_uniform,
    marginal,
    optimal_guess_prob,
    uniform,
)
from keyguarantee.extremal import (
    ExtremalRecipe,
    InfeasibleBudget,
    construct_biased_bits_distribution,
    construct_equality_distribution,
    feasible_budget_limit,
    max_guess_given_budget,
)

from corpus import brute_condition, brute_marginal


def lp_max_guess(l, positions, favored_bits, eps):
    """Linear program over the full 2**l table: maximize one marginal entry."""
    n = 1 << l
    u = 2.0 ** -l
    fav = np.array([
        all(format(k, f"0{l}b")[i] == b for i, b in zip(positions, favored_bits))
        for k in range(n)
    ], dtype=float)
    # variables: p (n), t (n) with t >= |p - u|
    c = np.concatenate([-fav, np.zeros(n)])
    eye = np.eye(n)
    A_ub = np.block([[eye, -eye], [-eye, -eye], [np.zeros((1, n)), np.ones((1, n))]])
    b_ub = np.concatenate([np.full(n, u), np.full(n, -u), [2 * eps]])
    A_eq = np.concatenate([np.ones(n), np.zeros(n)])[None, :]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * (2 * n), method="highs")
    assert res.success
    return -res.fun


def test_whole_key_example():
    P = construct_equality_distribution(ExtremalRecipe.simple(3, 0.1))
    assert P.probs[0] == pytest.approx(0.225, abs=1e-15)
    np.testing.assert_allclose(P.probs[1:], 0.125 - 0.1 / 7, atol=1e-15)
    assert distance_to_uniform(P) == pytest.approx(0.1, abs=1e-12)
    assert optimal_guess_prob(P, KeySubset.whole(3)) == pytest.approx(0.225, abs=1e-12)
    # brute-force maximum over the 8 marginal entries
    assert max(brute_marginal(P.probs, 3, (0, 1, 2))) == pytest.approx(0.225, abs=1e-15)


def test_partial_subset_example():
    P = construct_equality_distribution(ExtremalRecipe.simple(4, 0.05, positions=[0, 1], favored=0b11))
    m = brute_marginal(P.probs, 4, (0, 1))
    assert m[0b11] == pytest.approx(0.30, abs=1e-15)
    np.testing.assert_allclose(marginal(P, KeySubset((0, 1), 4)), m, atol=1e-15)


def test_zero_budget_gives_uniform():
    P = construct_equality_distribution(ExtremalRecipe.simple(5, 0.0))
    assert is_uniform(P, 0.0)


def test_budget_at_limit_gives_point_mass_on_favored_set():
    l, pos = 4, [1, 3]
    P = construct_equality_distribution(
        ExtremalRecipe.simple(l, feasible_budget_limit(2), positions=pos, favored=0b01))
    assert optimal_guess_prob(P, KeySubset((1, 3), l)) == pytest.approx(1.0, abs=1e-12)
    assert np.all(P.probs >= 0)


@pytest.mark.parametrize("eps", [0.875 + 1e-9, 1.0, -0.1, float("nan")])
def test_infeasible_budget(eps):
    with pytest.raises(InfeasibleBudget, match="infeasible budget"):
        ExtremalRecipe.simple(3, eps)


def test_recipe_rejects_mismatched_outcome():
    t = KeySubset((0, 1), 3)
    with pytest.raises(DistributionError):
        ExtremalRecipe(3, 0.1, t, SubsetOutcome(KeySubset((0, 2), 3), 0))


def test_conditional_example_by_enumeration():
    P = construct_equality_distribution(ExtremalRecipe.simple(3, 0.1))
    cond = brute_condition(P.probs, 3, (0,), "0")
    expected = max(brute_marginal(cond, 3, (1, 2)))
    # 0.225 / (0.225 + 3 * (0.125 - 0.1/7))
    assert expected == pytest.approx(0.225 / 0.5571428571428572, rel=1e-14)
    got = conditional_guess_prob(P, SubsetOutcome(KeySubset((0,), 3), 0), KeySubset((1, 2), 3))
    assert got == pytest.approx(expected, abs=1e-14)


def test_tightness_sweep():
    for l in range(1, 9):
        for m in range(1, l + 1):
            for pos in itertools.islice(itertools.combinations(range(l), m), 4):
                for eps in (1e-3, 0.01, 0.1, 0.3):
                    if eps > feasible_budget_limit(m):
                        continue
                    fav = (1 << m) - 1
                    P = construct_equality_distribution(ExtremalRecipe.simple(l, eps, pos, fav))
                    S = KeySubset(pos, l)
                    assert abs(optimal_guess_prob(P, S) - 2.0 ** -m - eps) <= 1e-12
                    assert abs(distance_to_uniform(P) - eps) <= 1e-12
                    assert not is_uniform(P, eps * 2.0 ** -l)


# -- oracle --------------------------------------------------------------------


def test_oracle_examples():
    assert max_guess_given_budget(5, KeySubset((0, 3), 5), 0.0) == 0.25
    assert max_guess_given_budget(3, KeySubset.whole(3), 0.1) == pytest.approx(0.225, abs=1e-15)
    assert max_guess_given_budget(4, KeySubset((2,), 4), 0.5) == 1.0
    assert max_guess_given_budget(4, KeySubset((2,), 4), 0.9) == 1.0


def test_oracle_scale_cap():
    with pytest.raises(DistributionError, match="scale"):
        max_guess_given_budget(13, KeySubset.whole(13), 0.1)


@pytest.mark.parametrize("l, positions", [(2, (0,)), (3, (0, 2)), (3, (0, 1, 2)), (4, (1, 2)), (4, (0, 1, 2, 3))])
@pytest.mark.parametrize("eps", [0.0, 0.01, 0.1, 0.4, 0.95])
def test_greedy_oracle_agrees_with_linear_program(l, positions, eps):
    greedy = max_guess_given_budget(l, KeySubset(positions, l), eps)
    lp = lp_max_guess(l, positions, "0" * len(positions), eps)
    assert greedy == pytest.approx(lp, abs=1e-9)
    assert greedy == pytest.approx(min(1.0, 2.0 ** -len(positions) + eps), abs=1e-12)


# -- biased bits ---------------------------------------------------------------


def test_biased_bits_examples():
    assert is_uniform(construct_biased_bits_distribution(6, 0.0), 0.0)
    P = construct_biased_bits_distribution(8, 0.05)
    assert eve_bit_error_rate(P) == pytest.approx(0.45, abs=1e-14)
    assert optimal_guess_prob(P, KeySubset.whole(8)) == pytest.approx(0.55 ** 8, rel=1e-13)
    assert 0.55 ** 8 == pytest.approx(0.00837, abs=5e-6)
    Q = construct_biased_bits_distribution(4, 0.5)
    assert Q.probs[0] == 1.0 and Q.probs[1:].sum() == 0.0


def test_biased_bits_decoupling():
    # bit errors drop well below 1/2 while the whole key stays hard to name
    for l in (8, 12, 16):
        for beta in (0.01, 0.02, 0.05):
            P = construct_biased_bits_distribution(l, beta)
            assert eve_bit_error_rate(P) == pytest.approx(0.5 - beta, abs=1e-12)
            assert optimal_guess_prob(P, KeySubset.whole(l)) == pytest.approx((0.5 + beta) ** l, rel=1e-12)
    small = distance_to_uniform(construct_biased_bits_distribution(12, 0.01))
    large = distance_to_uniform(construct_biased_bits_distribution(12, 0.05))
    assert small < large


@pytest.mark.parametrize("beta", [-0.01, 0.51])
def test_biased_bits_rejects_out_of_range(beta):
    with pytest.raises(DistributionError):
        construct_biased_bits_distribution(4, beta)


def test_marginal_of_uniform_is_oracle_start():
    np.testing.assert_array_equal(marginal(uniform(6), KeySubset((1, 4), 6)), [0.25] * 4)
