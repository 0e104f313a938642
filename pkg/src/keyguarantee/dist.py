"""Adversary posteriors over l-bit keys.

A :class:`KeyDistribution` is a dense table of ``2**l`` probabilities indexed
by the integer value of the key bitstring.  Bit 0 is the most significant bit
of that integer, so key ``0b101`` with ``l = 3`` has bit 0 = 1, bit 1 = 0 and
bit 2 = 1.  Subset outcomes use the same convention: the bit at the first
(lowest) position of a subset is the most significant bit of the outcome.

All objects are immutable and every operation is a pure function.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

MAX_KEY_LENGTH = 24
SUM_TOLERANCE = 1e-12
FILE_SUM_TOLERANCE = 1e-9


class DistributionError(ValueError):
    """Raised for invalid distributions, subsets, or impossible observations."""


def _check_key_length(l: int) -> int:
    if isinstance(l, bool) or not isinstance(l, (int, np.integer)):
        raise DistributionError(f"key_length must be an integer, got {l!r}")
    if not 1 <= l <= MAX_KEY_LENGTH:
        raise DistributionError(
            f"key_length {l} out of range [1, {MAX_KEY_LENGTH}]"
        )
    return int(l)


@dataclass(frozen=True, eq=False)
class KeyDistribution:
    """Probability table over all ``2**key_length`` key values."""

    key_length: int
    probs: np.ndarray

    def __post_init__(self):
        l = _check_key_length(self.key_length)
        probs = np.array(self.probs, dtype=np.float64, copy=True).reshape(-1)
        if probs.shape[0] != 1 << l:
            raise DistributionError(
                f"expected {1 << l} probabilities for key_length {l}, got {probs.shape[0]}"
            )
        if not np.all(np.isfinite(probs)):
            raise DistributionError("probabilities must be finite")
        if np.any(probs < 0):
            raise DistributionError("probabilities must be nonnegative")
        total = math.fsum(probs)
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise DistributionError(
                f"probabilities sum to {total!r}, not 1 within {SUM_TOLERANCE}"
            )
        probs.setflags(write=False)
        object.__setattr__(self, "key_length", l)
        object.__setattr__(self, "probs", probs)

    @property
    def size(self) -> int:
        return 1 << self.key_length

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"KeyDistribution(key_length={self.key_length})"


@dataclass(frozen=True)
class KeySubset:
    """Strictly increasing bit positions of a key of length ``key_length``."""

    positions: tuple[int, ...]
    key_length: int

    def __post_init__(self):
        l = _check_key_length(self.key_length)
        positions = tuple(int(p) for p in self.positions)
        if not positions:
            raise DistributionError("subset must be non-empty")
        if any(b <= a for a, b in zip(positions, positions[1:])):
            raise DistributionError(f"positions must be strictly increasing: {positions}")
        if positions[0] < 0 or positions[-1] >= l:
            raise DistributionError(f"positions {positions} out of range [0, {l})")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "key_length", l)

    @classmethod
    def of(cls, positions: Sequence[int], key_length: int) -> "KeySubset":
        """Build a subset from positions in any order."""
        ordered = sorted(int(p) for p in positions)
        if len(set(ordered)) != len(ordered):
            raise DistributionError(f"duplicate positions in {list(positions)}")
        return cls(tuple(ordered), key_length)

    @classmethod
    def whole(cls, key_length: int) -> "KeySubset":
        return cls(tuple(range(key_length)), key_length)

    @classmethod
    def prefix(cls, size: int, key_length: int) -> "KeySubset":
        """The first ``size`` bits of the key."""
        return cls(tuple(range(size)), key_length)

    @property
    def size(self) -> int:
        return len(self.positions)

    def __len__(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class SubsetOutcome:
    """A value for the bits at ``subset.positions``."""

    subset: KeySubset
    value: int

    def __post_init__(self):
        if not 0 <= self.value < (1 << self.subset.size):
            raise DistributionError(
                f"outcome {self.value} out of range for {self.subset.size} bits"
            )

    @classmethod
    def from_bits(cls, subset: KeySubset, bits: str) -> "SubsetOutcome":
        """Outcome from a bitstring aligned with ``subset.positions``."""
        if len(bits) != subset.size or set(bits) - {"0", "1"}:
            raise DistributionError(
                f"bits {bits!r} do not match a subset of size {subset.size}"
            )
        return cls(subset, int(bits, 2))

    def bits(self) -> str:
        return format(self.value, f"0{self.subset.size}b")


def _check_subset(P: KeyDistribution, S: KeySubset):
    if S.key_length != P.key_length:
        raise DistributionError(
            f"subset is for key_length {S.key_length}, distribution has {P.key_length}"
        )


def uniform(l: int) -> KeyDistribution:
    l = _check_key_length(l)
    return KeyDistribution(l, np.full(1 << l, 2.0 ** -l))


def point_mass(l: int, key: int) -> KeyDistribution:
    l = _check_key_length(l)
    if not 0 <= key < 1 << l:
        raise DistributionError(f"key {key} out of range for {l} bits")
    probs = np.zeros(1 << l)
    probs[key] = 1.0
    return KeyDistribution(l, probs)


def product_distribution(bit_zero_probs: Sequence[float]) -> KeyDistribution:
    """Independent bits; entry i is the probability that bit i equals 0."""
    table = np.ones(1)
    for q in bit_zero_probs:
        if not 0.0 <= q <= 1.0:
            raise DistributionError(f"bit probability {q} out of [0, 1]")
        table = np.kron(table, np.array([q, 1.0 - q]))
    return KeyDistribution(len(bit_zero_probs), table)


def variational_distance(P: KeyDistribution, Q: KeyDistribution) -> float:
    """Half the L1 distance between two key distributions."""
    if P.key_length != Q.key_length:
        raise DistributionError(
            f"key lengths differ: {P.key_length} vs {Q.key_length}"
        )
    return 0.5 * math.fsum(np.abs(P.probs - Q.probs))


def distance_to_uniform(P: KeyDistribution) -> float:
    return 0.5 * math.fsum(np.abs(P.probs - 2.0 ** -P.key_length))


def _project(probs: np.ndarray, l: int, positions: tuple[int, ...]) -> np.ndarray:
    # C-order reshape puts bit 0 (the MSB) on axis 0.
    table = probs.reshape((2,) * l)
    drop = tuple(i for i in range(l) if i not in positions)
    if drop:
        table = table.sum(axis=drop)
    return table.reshape(-1)


def marginal(P: KeyDistribution, S: KeySubset) -> np.ndarray:
    """Distribution of the bits at ``S``, indexed by subset outcome value."""
    _check_subset(P, S)
    return _project(P.probs, P.key_length, S.positions)


def _consistent_mask(l: int, obs: SubsetOutcome) -> np.ndarray:
    keys = np.arange(1 << l, dtype=np.int64)
    mask = np.ones(1 << l, dtype=bool)
    m = obs.subset.size
    for j, pos in enumerate(obs.subset.positions):
        want = (obs.value >> (m - 1 - j)) & 1
        mask &= ((keys >> (l - 1 - pos)) & 1) == want
    return mask


def condition(P: KeyDistribution, obs: SubsetOutcome) -> KeyDistribution:
    """Bayes conditioning of ``P`` on the bits at ``obs.subset`` taking ``obs.value``."""
    _check_subset(P, obs.subset)
    mask = _consistent_mask(P.key_length, obs)
    mass = math.fsum(P.probs[mask])
    if mass <= 0.0:
        raise DistributionError(
            f"cannot condition on zero-probability outcome {obs.bits()} at {obs.subset.positions}"
        )
    probs = np.where(mask, P.probs, 0.0) / mass
    # division leaves rounding error of order 2**-52 * len; re-anchor the sum
    probs /= math.fsum(probs)
    return KeyDistribution(P.key_length, probs)


def optimal_guess_prob(P: KeyDistribution, S: KeySubset) -> float:
    """Adversary's best probability of naming the bits at ``S`` correctly."""
    return float(marginal(P, S).max())


def conditional_guess_prob(
    P: KeyDistribution, known: SubsetOutcome, target: KeySubset
) -> float:
    """Best guess probability for ``target`` after learning ``known``."""
    if set(known.subset.positions) & set(target.positions):
        raise DistributionError(
            f"known positions {known.subset.positions} overlap target {target.positions}"
        )
    _check_subset(P, target)
    return optimal_guess_prob(condition(P, known), target)


def bit_marginals(P: KeyDistribution) -> np.ndarray:
    """Probability that each bit equals 0, shape ``(l,)``."""
    l = P.key_length
    table = P.probs.reshape((2,) * l)
    out = np.empty(l)
    for i in range(l):
        out[i] = table.take(0, axis=i).sum()
    return out


def eve_bit_error_rate(P: KeyDistribution) -> float:
    """Average per-bit error of the bitwise maximum-posterior estimate.

    Each bit is guessed as its more likely value; the error for bit i is then
    ``1 - max_b P(K_i = b)``, averaged over the ``l`` bits.
    """
    zero = bit_marginals(P)
    per_bit = 1.0 - np.maximum(zero, 1.0 - zero)
    return float(np.clip(per_bit.mean(), 0.0, 0.5))


def is_uniform(P: KeyDistribution, tol: float = 0.0) -> bool:
    if tol < 0:
        raise DistributionError("tol must be nonnegative")
    return bool(np.max(np.abs(P.probs - 2.0 ** -P.key_length)) <= tol)


# -- file format -------------------------------------------------------------


def distribution_to_dict(P: KeyDistribution, compact_uniform: bool = True) -> dict:
    if compact_uniform and is_uniform(P, 0.0):
        return {"key_length": P.key_length, "probs": "uniform"}
    return {"key_length": P.key_length, "probs": [float(x) for x in P.probs]}


def distribution_from_dict(doc: dict) -> KeyDistribution:
    """Parse the file form, accepting a sum within ``FILE_SUM_TOLERANCE`` of 1.

    Decimal serialization can leave the sum slightly off; such tables are
    rescaled onto the simplex.  Anything further from 1 is rejected.
    """
    if not isinstance(doc, dict) or "key_length" not in doc or "probs" not in doc:
        raise DistributionError("distribution document needs 'key_length' and 'probs'")
    l = _check_key_length(doc["key_length"])
    probs = doc["probs"]
    if probs == "uniform":
        return uniform(l)
    if isinstance(probs, str) or not isinstance(probs, list):
        raise DistributionError("'probs' must be a list of numbers or \"uniform\"")
    try:
        arr = np.array([float(x) for x in probs])
    except (TypeError, ValueError) as exc:
        raise DistributionError(f"non-numeric probability: {exc}") from None
    if arr.shape[0] != 1 << l:
        raise DistributionError(
            f"expected {1 << l} probabilities for key_length {l}, got {arr.shape[0]}"
        )
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise DistributionError("probabilities must be finite and nonnegative")
    total = math.fsum(arr)
    if abs(total - 1.0) > FILE_SUM_TOLERANCE:
        raise DistributionError(
            f"normalization failure: probabilities sum to {total!r}"
        )
    return KeyDistribution(l, arr / total)


def load_distribution(path: str | Path) -> KeyDistribution:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DistributionError(f"malformed distribution file {path}: {exc}") from None
    return distribution_from_dict(doc)


def save_distribution(P: KeyDistribution, path: str | Path):
    Path(path).write_text(dumps_distribution(P))


def dumps_distribution(P: KeyDistribution) -> str:
    return json.dumps(distribution_to_dict(P), indent=1) + "\n"
