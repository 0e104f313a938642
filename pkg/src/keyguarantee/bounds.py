"""Closed-form guarantees for an l-bit key held at variational level d.

Everything here is scalar arithmetic and works for any key length, including
``l = 10**6`` and beyond.  Quantities involving ``2**-l`` are combined in the
log2 domain so that nothing underflows.

Two readings of the level ``d`` are carried side by side in a
:class:`GuaranteeReport`:

* the averaged guarantee, where the subset guessing bounds hold with slack
  ``d`` only on average over key values and hash choices;
* the individual guarantee, obtained by Markov conversion, where the slack
  grows to ``d**(1/3)`` (two averaging levels).

The report also records the "ideal with probability >= 1 - d" reading as a
refuted claim, never as a guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LOG2_E = math.log2(math.e)
# 2*sqrt(log2 e); the BER constant is read as d**(1/4) / (2*sqrt(log2 e))
BER_DENOMINATOR = 2.0 * math.sqrt(LOG2_E)

DEFAULT_SUBSET_SIZES = (1, 8, 64)
NEAR_UNIFORM_FACTOR = 0.1


class ParameterError(ValueError):
    """An input outside its documented range.  ``field`` names the input."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _check_distance(d: float, name: str = "trace_distance") -> float:
    d = float(d)
    if not (0.0 <= d <= 1.0):
        raise ParameterError(name, f"must lie in [0, 1], got {d!r}")
    return d


def log2_raw_guess_bound(m: int, epsilon_prime: float) -> float:
    """``log2(2**-m + epsilon_prime)`` without forming ``2**-m``."""
    if m < 1:
        raise ParameterError("subset_size", f"must be >= 1, got {m}")
    if epsilon_prime < 0:
        raise ParameterError("epsilon", f"must be >= 0, got {epsilon_prime}")
    if epsilon_prime == 0.0:
        return float(-m)
    return float(np.logaddexp2(-float(m), math.log2(epsilon_prime)))


def raw_guess_bound(m: int, epsilon_prime: float) -> float:
    """Largest allowed guess probability for an m-bit subset: ``2**-m + epsilon_prime``."""
    return 2.0 ** log2_raw_guess_bound(m, epsilon_prime)


def kpa_guess_bound(m: int, epsilon_double_prime: float) -> float:
    """Known-plaintext form: bound on guessing ``m`` further bits given a known segment."""
    return raw_guess_bound(m, epsilon_double_prime)


def markov_individual_epsilon(d: float, averaging_levels: int = 2) -> float:
    """Individual-instance slack from an averaged level ``d``.

    Each averaging level costs one Markov step with a symmetric split, so the
    exponent is ``1 / (levels + 1)``: ``d**(1/3)`` for averaging over both key
    values and privacy-amplification hashes, ``d**(1/2)`` for a single average.
    """
    d = _check_distance(d)
    if averaging_levels == 1:
        return math.sqrt(d)
    if averaging_levels == 2:
        return float(np.cbrt(d))
    raise ParameterError("averaging_levels", f"must be 1 or 2, got {averaging_levels!r}")


def ber_gap_bound(d: float) -> float:
    """Guaranteed upper bound on ``1/2 - p_b`` over the whole key."""
    d = _check_distance(d)
    return d ** 0.25 / BER_DENOMINATOR


def effective_uniform_bits(l: int, epsilon: float) -> float:
    """Length n of a uniform key whose guess probability ``2**-n`` equals ``2**-l + epsilon``."""
    if l < 1:
        raise ParameterError("key_length", f"must be >= 1, got {l}")
    if epsilon == 0.0:
        return float(l)
    return -log2_raw_guess_bound(l, epsilon)


def convergence_exponent(l: int, d: float) -> float:
    """Rate ``lam`` in ``d = 2**(-lam * l)``."""
    if l < 1:
        raise ParameterError("key_length", f"must be >= 1, got {l}")
    if not (0.0 < d < 1.0):
        raise ParameterError("trace_distance", f"exponent undefined for d = {d!r}; need 0 < d < 1")
    return -math.log2(d) / l


def leak_ec(qber: float) -> float:
    """Binary entropy ``h(qber)`` in bits, with ``h(0) = 0``."""
    q = float(qber)
    if not (0.0 <= q <= 0.5):
        raise ParameterError("qber", f"must lie in [0, 1/2], got {q!r}")
    if q == 0.0:
        return 0.0
    if q == 0.5:
        return 1.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


def is_near_uniform(l: int, epsilon: float) -> bool:
    """True when ``epsilon`` is small on the ``2**-l`` scale, not merely small against 1."""
    if epsilon == 0.0:
        return True
    return math.log2(epsilon) <= -l + math.log2(NEAR_UNIFORM_FACTOR)


@dataclass(frozen=True)
class SecurityParameters:
    key_length: int
    trace_distance: float
    qber: float | None = None

    def __post_init__(self):
        if isinstance(self.key_length, bool) or not isinstance(self.key_length, int):
            raise ParameterError("key_length", f"must be an integer, got {self.key_length!r}")
        if self.key_length < 1:
            raise ParameterError("key_length", f"must be >= 1, got {self.key_length}")
        _check_distance(self.trace_distance)
        if self.qber is not None and not (0.0 <= self.qber <= 0.5):
            raise ParameterError("qber", f"must lie in [0, 1/2], got {self.qber!r}")


@dataclass(frozen=True)
class SubsetBound:
    """Averaged and individual guess-probability bounds for one subset size."""

    subset_size: int
    averaged: float
    individual: float
    log2_averaged: float
    log2_individual: float


@dataclass(frozen=True)
class RefutedClaim:
    statement: str
    claimed_probability_ideal: float
    actual_probability_ideal: float
    markov_exponent_under_claim: float
    individual_epsilon_under_claim: float
    status: str = "refuted"


@dataclass(frozen=True)
class GuaranteeReport:
    params: SecurityParameters
    subset_sizes: tuple[int, ...]
    raw_subset_bound_avg: dict[int, float]
    raw_subset_bound_individual: dict[int, float]
    kpa_bound_avg: dict[int, float]
    kpa_bound_individual: dict[int, float]
    raw_rows: tuple[SubsetBound, ...]
    individual_epsilon: float
    individual_epsilon_single_avg: float
    ber_gap_bound: float
    ber_gap_bound_individual: float
    effective_uniform_bits_avg: float
    effective_uniform_bits_individual: float
    lambda_: float | None
    near_uniform: bool
    leak_ec: float | None
    leak_ec_subtraction_valid: bool | None
    wrong_interpretation_claim: RefutedClaim
    notes: tuple[str, ...] = field(default=())

    @property
    def effective_uniform_bits_avg_display(self) -> int:
        return math.floor(self.effective_uniform_bits_avg + 1e-9)

    @property
    def effective_uniform_bits_individual_display(self) -> int:
        return math.floor(self.effective_uniform_bits_individual + 1e-9)


BER_NOTE = (
    "BER bound read as d^(1/4) / (2*sqrt(log2 e)); the grouping "
    "(d^(1/4)/2)*sqrt(log2 e) would be larger by a factor log2 e ~ 1.443."
)
AVERAGING_NOTE = (
    "Averaged bounds use slack d and hold only on average; individual bounds "
    "use d^(1/3) after Markov conversion over key values and hash choices."
)
LEAK_NOTE = (
    "leak_EC is reported, never subtracted: removing h(QBER) bits presumes a "
    "near-uniform key, which this level of d does not provide."
)
LEAK_NOTE_OK = (
    "leak_EC is reported, never subtracted; at this level the key is "
    "near-uniform on the 2^-l scale."
)


def _subset_bound(m: int, eps_avg: float, eps_ind: float) -> SubsetBound:
    # a probability bound above 1 carries no information; clamp for display
    lo_avg = min(0.0, log2_raw_guess_bound(m, eps_avg))
    lo_ind = min(0.0, log2_raw_guess_bound(m, eps_ind))
    return SubsetBound(m, 2.0 ** lo_avg, 2.0 ** lo_ind, lo_avg, lo_ind)


def build_report(params: SecurityParameters, subset_sizes=None) -> GuaranteeReport:
    l = params.key_length
    d = float(params.trace_distance)
    if subset_sizes is None:
        sizes = sorted({m for m in DEFAULT_SUBSET_SIZES if m <= l} | {l})
    else:
        sizes = sorted(set(int(m) for m in subset_sizes))
        bad = [m for m in sizes if not 1 <= m <= l]
        if bad:
            raise ParameterError("subset_sizes", f"sizes {bad} not in [1, {l}]")

    eps_ind = markov_individual_epsilon(d, 2)
    eps_single = markov_individual_epsilon(d, 1)
    rows = tuple(_subset_bound(m, d, eps_ind) for m in sizes)
    raw_avg = {r.subset_size: r.averaged for r in rows}
    raw_ind = {r.subset_size: r.individual for r in rows}
    # the known-plaintext bound has the same form with its own slack, set to d as well
    kpa_avg = {m: min(1.0, kpa_guess_bound(m, d)) for m in sizes}
    kpa_ind = {m: min(1.0, kpa_guess_bound(m, eps_ind)) for m in sizes}

    lam = convergence_exponent(l, d) if 0.0 < d < 1.0 else None
    near = is_near_uniform(l, d)

    claim = RefutedClaim(
        statement="key is ideal (uniform to the adversary) with probability >= 1 - d",
        claimed_probability_ideal=1.0 - d,
        actual_probability_ideal=1.0 if d == 0.0 else 0.0,
        markov_exponent_under_claim=0.5,
        individual_epsilon_under_claim=eps_single,
    )

    notes = [AVERAGING_NOTE, BER_NOTE]
    if params.qber is not None:
        leak = leak_ec(params.qber)
        subtraction_ok = near
        notes.append(LEAK_NOTE_OK if near else LEAK_NOTE)
    else:
        leak = None
        subtraction_ok = None

    return GuaranteeReport(
        params=params,
        subset_sizes=tuple(sizes),
        raw_subset_bound_avg=raw_avg,
        raw_subset_bound_individual=raw_ind,
        kpa_bound_avg=kpa_avg,
        kpa_bound_individual=kpa_ind,
        raw_rows=rows,
        individual_epsilon=eps_ind,
        individual_epsilon_single_avg=eps_single,
        ber_gap_bound=ber_gap_bound(d),
        ber_gap_bound_individual=ber_gap_bound(eps_ind),
        effective_uniform_bits_avg=max(0.0, effective_uniform_bits(l, d)),
        effective_uniform_bits_individual=max(0.0, effective_uniform_bits(l, eps_ind)),
        lambda_=lam,
        near_uniform=near,
        leak_ec=leak,
        leak_ec_subtraction_valid=subtraction_ok,
        wrong_interpretation_claim=claim,
        notes=tuple(notes),
    )
