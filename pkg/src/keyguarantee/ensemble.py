"""Averaged versus individual guarantees over an ensemble of instances.

A security proof bounds the *average* distance over instances (key values,
hash choices).  Markov's inequality turns that into a statement about a single
instance, at the price of an exception set:

    weight{ distance >= t } <= average / t

With ``t = d**a`` the exception weight is at most ``d**(1 - a)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dist import (
    DistributionError,
    KeyDistribution,
    KeySubset,
    distance_to_uniform,
    distribution_from_dict,
    load_distribution,
    optimal_guess_prob,
)

WEIGHT_TOLERANCE = 1e-12
DISTANCE_MATCH_TOLERANCE = 1e-9


class EnsembleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DistanceEnsemble:
    weights: np.ndarray
    distances: np.ndarray
    distributions: tuple[KeyDistribution, ...] | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        dd = np.array(self.distances, dtype=np.float64).reshape(-1)
        if w.shape != dd.shape or w.size == 0:
            raise EnsembleError("weights and distances must be non-empty and of equal length")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise EnsembleError("weights must be positive")
        if abs(math.fsum(w) - 1.0) > WEIGHT_TOLERANCE:
            raise EnsembleError(f"weights sum to {math.fsum(w)!r}, not 1")
        if np.any(dd < 0) or np.any(dd > 1) or not np.all(np.isfinite(dd)):
            raise EnsembleError("distances must lie in [0, 1]")
        if self.distributions is not None:
            dists = tuple(self.distributions)
            if len(dists) != w.size:
                raise EnsembleError("one distribution per entry is required")
            for j, P in enumerate(dists):
                got = distance_to_uniform(P)
                if abs(got - dd[j]) > DISTANCE_MATCH_TOLERANCE:
                    raise EnsembleError(
                        f"entry {j}: distribution is at distance {got!r}, declared {dd[j]!r}"
                    )
            object.__setattr__(self, "distributions", dists)
        w.setflags(write=False)
        dd.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "distances", dd)

    @classmethod
    def from_distributions(cls, weights, distributions: Sequence[KeyDistribution]):
        dists = tuple(distributions)
        return cls(weights, [distance_to_uniform(P) for P in dists], dists)

    def __len__(self) -> int:
        return self.weights.size


def average_distance(e: DistanceEnsemble) -> float:
    return math.fsum(e.weights * e.distances)


def exceedance_fraction(e: DistanceEnsemble, threshold: float) -> float:
    """Total weight of entries whose distance is at least ``threshold``."""
    if not threshold > 0:
        raise EnsembleError(f"threshold must be > 0, got {threshold!r}")
    return math.fsum(e.weights[e.distances >= threshold])


def markov_bound(e: DistanceEnsemble, threshold: float) -> float:
    if not threshold > 0:
        raise EnsembleError(f"threshold must be > 0, got {threshold!r}")
    return average_distance(e) / threshold


def individual_guarantee_split(d_avg: float, exponent: float = 0.5) -> tuple[float, float]:
    """Split an average level into ``(exception_probability, conditional_epsilon)``.

    The threshold is ``d_avg**exponent``; outside an exception set of weight at
    most ``d_avg**(1 - exponent)`` every instance is within that threshold.
    The default symmetric split gives ``(sqrt(d), sqrt(d))``.
    """
    if not 0.0 < d_avg < 1.0:
        raise EnsembleError(f"average level must lie in (0, 1), got {d_avg!r}")
    if not 0.0 < exponent < 1.0:
        raise EnsembleError(f"split exponent must lie in (0, 1), got {exponent!r}")
    if exponent == 0.5:
        r = math.sqrt(d_avg)
        return r, r
    return d_avg ** (1.0 - exponent), d_avg ** exponent


def compose_levels(d_avg: float, levels: int = 2) -> tuple[tuple[float, ...], float]:
    """Markov conversion through nested averages with equal per-level exceptions.

    Level j uses the threshold ``a_j = a_{j-1} / d**(1/(levels+1))`` starting at
    ``a_0 = d``, so every level contributes exception weight ``d**(1/(levels+1))``
    and the final individual slack is ``d**(1/(levels+1))``.  Two levels:
    ``d -> d**(2/3) -> d**(1/3)``.

    Returns the per-level exception weights and the final slack.
    """
    if not 0.0 < d_avg < 1.0:
        raise EnsembleError(f"average level must lie in (0, 1), got {d_avg!r}")
    if levels < 1:
        raise EnsembleError("need at least one averaging level")
    step = d_avg ** (1.0 / (levels + 1))
    level = d_avg
    exceptions = []
    for _ in range(levels):
        nxt = level / step
        exceptions.append(level / nxt)
        level = nxt
    return tuple(exceptions), level


def two_point_ensemble(average: float, threshold: float) -> DistanceEnsemble:
    """Ensemble meeting Markov's bound with equality: mass ``average/threshold`` at ``threshold``."""
    if not 0.0 < average <= threshold <= 1.0:
        raise EnsembleError("need 0 < average <= threshold <= 1")
    p = average / threshold
    if p == 1.0:
        return DistanceEnsemble([1.0], [threshold])
    return DistanceEnsemble([p, 1.0 - p], [threshold, 0.0])


def sample_ensemble(
    n: int, mean: float, seed: int, spread: float = 1.0
) -> DistanceEnsemble:
    """Random ensemble of ``n`` entries with weighted mean distance ``mean``.

    Weights are Dirichlet(1); distances are lognormal with log-spread
    ``spread``, rescaled to the requested mean.  Deterministic in ``seed``.
    """
    if n < 1:
        raise EnsembleError("n must be >= 1")
    if not 0.0 < mean < 1.0:
        raise EnsembleError("mean must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(n))
    w = w / math.fsum(w)
    raw = rng.lognormal(0.0, spread, size=n)
    dists = raw * (mean / math.fsum(w * raw))
    if dists.max() > 1.0:
        raise EnsembleError(
            f"mean {mean} with spread {spread} pushes a distance above 1; lower either"
        )
    return DistanceEnsemble(w, dists)


def check_individual_guarantees(
    e: DistanceEnsemble, subsets: Sequence[KeySubset], exponent: float = 0.5
) -> list[dict]:
    """Check subset guessing bounds entry by entry outside the Markov exception set.

    For each entry with attached distribution and distance below the split
    threshold, every subset's guess probability must stay within
    ``2**-m + conditional_epsilon``.
    """
    if e.distributions is None:
        raise EnsembleError("ensemble has no attached distributions")
    d_avg = average_distance(e)
    if d_avg == 0.0:
        eps = 0.0
    else:
        _, eps = individual_guarantee_split(d_avg, exponent)
    results = []
    for j, P in enumerate(e.distributions):
        excepted = bool(d_avg > 0.0 and e.distances[j] >= eps)
        for S in subsets:
            if S.key_length != P.key_length:
                continue
            g = optimal_guess_prob(P, S)
            bound = 2.0 ** -S.size + eps
            results.append({
                "entry": j,
                "positions": S.positions,
                "guess": g,
                "bound": bound,
                "excepted": excepted,
                "ok": excepted or g <= bound + 1e-12,
            })
    return results


# -- file format -------------------------------------------------------------


def ensemble_from_dict(doc: dict, base_dir: str | Path | None = None) -> DistanceEnsemble:
    """Parse ``{"entries": [{"weight": w, "distance": d, "distribution": ...}, ...]}``.

    ``distribution`` is optional; it may be an inline distribution document or
    a path relative to ``base_dir``.  Weights within 1e-9 of summing to 1 are
    rescaled, as for distribution files.
    """
    if not isinstance(doc, dict) or not isinstance(doc.get("entries"), list):
        raise EnsembleError("ensemble document needs an 'entries' list")
    weights, distances, dists = [], [], []
    for k, entry in enumerate(doc["entries"]):
        try:
            weights.append(float(entry["weight"]))
            distances.append(float(entry["distance"]))
        except (KeyError, TypeError, ValueError):
            raise EnsembleError(f"entry {k} needs numeric 'weight' and 'distance'") from None
        ref = entry.get("distribution")
        if ref is None:
            dists.append(None)
        elif isinstance(ref, dict):
            dists.append(distribution_from_dict(ref))
        else:
            path = Path(ref)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            dists.append(load_distribution(path))
    if not weights:
        raise EnsembleError("ensemble has no entries")
    w = np.array(weights)
    total = math.fsum(w)
    if abs(total - 1.0) > 1e-9:
        raise EnsembleError(f"weights sum to {total!r}, not 1")
    attached = None
    if any(P is not None for P in dists):
        if any(P is None for P in dists):
            raise EnsembleError("distributions must be attached to all entries or none")
        attached = tuple(dists)
    return DistanceEnsemble(w / total, distances, attached)


def ensemble_to_dict(e: DistanceEnsemble) -> dict:
    return {
        "entries": [
            {"weight": float(w), "distance": float(d)}
            for w, d in zip(e.weights, e.distances)
        ]
    }


def load_ensemble(path: str | Path) -> DistanceEnsemble:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise EnsembleError(f"malformed ensemble file {path}: {exc}") from None
    try:
        return ensemble_from_dict(doc, base_dir=path.parent)
    except DistributionError as exc:
        raise EnsembleError(str(exc)) from None


def save_ensemble(e: DistanceEnsemble, path: str | Path):
    Path(path).write_text(json.dumps(ensemble_to_dict(e), indent=1) + "\n")
