"""Adversary distributions that meet the subset guessing bound with equality.

The construction adds the whole budget ``eps`` to the keys consistent with a
favored subset outcome and removes it evenly from every other key.  The two
deviation sets are disjoint, so the variational distance to uniform is exactly
``eps`` and the favored marginal entry is exactly ``2**-m + eps``.

:func:`max_guess_given_budget` is an independent check: a greedy mass-transfer
optimizer over the marginal simplex that never looks at the construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dist import (
    MAX_KEY_LENGTH,
    DistributionError,
    KeyDistribution,
    KeySubset,
    SubsetOutcome,
    _consistent_mask,
    marginal,
    product_distribution,
    uniform,
)

ORACLE_MAX_KEY_LENGTH = 12


class InfeasibleBudget(DistributionError):
    pass


def feasible_budget_limit(subset_size: int) -> float:
    """Largest budget the construction accepts for a target of ``subset_size`` bits."""
    return 1.0 - 2.0 ** -subset_size


@dataclass(frozen=True)
class ExtremalRecipe:
    key_length: int
    budget: float
    target: KeySubset
    favored: SubsetOutcome

    def __post_init__(self):
        if self.target.key_length != self.key_length:
            raise DistributionError("target subset does not match key_length")
        if self.favored.subset != self.target:
            raise DistributionError("favored outcome must be an outcome of the target subset")
        if not math.isfinite(self.budget) or self.budget < 0:
            raise InfeasibleBudget(f"infeasible budget {self.budget!r}: must be >= 0")
        limit = feasible_budget_limit(self.target.size)
        if self.budget > limit:
            raise InfeasibleBudget(
                f"infeasible budget {self.budget!r}: exceeds 1 - 2^-{self.target.size} = {limit!r}"
            )

    @classmethod
    def simple(cls, key_length: int, budget: float, positions=None, favored: int = 0):
        """Recipe with target ``positions`` (default whole key) and favored outcome value."""
        if positions is None:
            target = KeySubset.whole(key_length)
        else:
            target = KeySubset.of(positions, key_length)
        return cls(key_length, budget, target, SubsetOutcome(target, favored))


def construct_equality_distribution(recipe: ExtremalRecipe) -> KeyDistribution:
    l = recipe.key_length
    m = recipe.target.size
    eps = float(recipe.budget)
    if eps == 0.0:
        return uniform(l)
    mask = _consistent_mask(l, recipe.favored)
    n_favored = 1 << (l - m)
    n_rest = (1 << l) - n_favored
    base = 2.0 ** -l
    probs = np.full(1 << l, base)
    probs[mask] += eps / n_favored
    probs[~mask] -= eps / n_rest
    # at the feasibility limit the rest entries are zero up to rounding
    probs[~mask] = np.maximum(probs[~mask], 0.0)
    return KeyDistribution(l, probs)


def _tv(q: np.ndarray, ref: np.ndarray) -> float:
    return 0.5 * math.fsum(np.abs(q - ref))


def _greedy_single(ref: np.ndarray, favored: int, eps: float) -> float:
    q = ref.copy()
    order = [j for j in np.argsort(q, kind="stable") if j != favored]
    for j in order:
        # distance is re-measured on the table itself, not inferred from the transfers
        room = eps - _tv(q, ref)
        if room <= 0.0:
            break
        take = min(room, q[j])
        q[j] -= take
        q[favored] += take
    return float(q[favored])


def max_guess_given_budget(l: int, S: KeySubset, eps: float) -> float:
    """Largest guess probability for ``S`` among distributions within ``eps`` of uniform.

    Works on the marginal of ``S`` only: any marginal table within ``eps`` of
    the uniform marginal lifts to a full distribution at the same distance, and
    marginalizing never increases the distance.  Mass is moved from the
    smallest entries onto each candidate favored outcome until the distance
    budget is spent.
    """
    if not 1 <= l <= ORACLE_MAX_KEY_LENGTH:
        raise DistributionError(
            f"oracle scale exceeded: key_length {l} > {ORACLE_MAX_KEY_LENGTH}"
        )
    if S.key_length != l:
        raise DistributionError("subset does not match key_length")
    if eps < 0:
        raise DistributionError("budget must be nonnegative")
    ref = marginal(uniform(l), S)
    n = ref.shape[0]
    candidates = range(n) if n <= 64 else (0, n // 2, n - 1)
    best = max(_greedy_single(ref, f, float(eps)) for f in candidates)
    return min(1.0, best)


def construct_biased_bits_distribution(l: int, per_bit_bias: float) -> KeyDistribution:
    """Independent bits, each 0 with probability ``1/2 + per_bit_bias``.

    The adversary's bit error rate is ``1/2 - per_bit_bias`` while the whole-key
    guess probability ``(1/2 + per_bit_bias)**l`` can stay close to ``2**-l``.
    """
    if not 0.0 <= per_bit_bias <= 0.5:
        raise DistributionError(f"per-bit bias {per_bit_bias} out of [0, 1/2]")
    if not 1 <= l <= MAX_KEY_LENGTH:
        raise DistributionError(f"key_length {l} out of range [1, {MAX_KEY_LENGTH}]")
    return product_distribution([0.5 + per_bit_bias] * l)
