import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from keyguarantee.dist import KeySubset, uniform
from keyguarantee.ensemble import (
    DistanceEnsemble,
    EnsembleError,
    average_distance,
    check_individual_guarantees,
    compose_levels,
    ensemble_from_dict,
    exceedance_fraction,
    individual_guarantee_split,
    load_ensemble,
    markov_bound,
    sample_ensemble,
    save_ensemble,
    two_point_ensemble,
)
from keyguarantee.extremal import ExtremalRecipe, construct_equality_distribution

from corpus import all_subsets, random_distribution


def test_average_examples():
    assert average_distance(DistanceEnsemble([1.0], [0.3])) == 0.3
    assert average_distance(DistanceEnsemble([0.5, 0.5], [0.0, 0.2])) == pytest.approx(0.1, abs=1e-16)


def test_average_matches_plain_summation():
    e = sample_ensemble(1000, 1e-3, seed=42)
    total = 0.0
    for w, d in zip(e.weights.tolist(), e.distances.tolist()):
        total += w * d
    assert average_distance(e) == pytest.approx(total, rel=1e-12)
    assert average_distance(e) == pytest.approx(1e-3, rel=1e-12)


def test_exceedance_examples():
    zero = DistanceEnsemble([0.25] * 4, [0.0] * 4)
    assert exceedance_fraction(zero, 1e-9) == 0.0
    single = DistanceEnsemble([1.0], [0.2])
    assert exceedance_fraction(single, 0.2) == 1.0
    assert markov_bound(single, 0.2) == 1.0
    with pytest.raises(EnsembleError):
        exceedance_fraction(single, 0.0)


def test_sampled_ensemble_exceedance():
    e = sample_ensemble(5000, 1e-3, seed=1, spread=1.5)
    frac = exceedance_fraction(e, 0.1)
    assert frac <= 1e-2
    # counted directly
    assert frac == pytest.approx(sum(w for w, d in zip(e.weights, e.distances) if d >= 0.1), abs=1e-15)


def test_split_examples():
    exc, eps = individual_guarantee_split(1e-6)
    assert exc == pytest.approx(1e-3, rel=1e-15) and eps == pytest.approx(1e-3, rel=1e-15)
    assert individual_guarantee_split(0.25) == (0.5, 0.5)
    exc, eps = individual_guarantee_split(1e-6, exponent=1 / 3)
    assert exc == pytest.approx(1e-4, rel=1e-12) and eps == pytest.approx(1e-2, rel=1e-12)
    for bad in (0.0, 1.0):
        with pytest.raises(EnsembleError):
            individual_guarantee_split(bad)


def test_compose_two_levels_gives_cube_root():
    exceptions, eps = compose_levels(1e-6, 2)
    assert eps == pytest.approx(1e-2, rel=1e-12)
    assert exceptions == pytest.approx((1e-2, 1e-2), rel=1e-12)
    exceptions, eps = compose_levels(1e-6, 1)
    assert eps == pytest.approx(1e-3, rel=1e-12)


def test_compose_two_levels_on_nested_ensemble():
    # outer average over hash choices, inner over key values; intermediate level d**(2/3)
    rng = np.random.default_rng(9)
    d = 1e-4
    n_out, n_in = 200, 200
    inner = rng.lognormal(0, 2.0, size=(n_out, n_in))
    inner *= d / inner.mean()
    inner = np.minimum(inner, 1.0)
    d = inner.mean()
    exceptions, eps = compose_levels(d, 2)
    mid = d ** (2 / 3)
    code_avgs = inner.mean(axis=1)
    bad_codes = code_avgs >= mid
    assert bad_codes.mean() <= exceptions[0] + 1e-15
    for row in inner[~bad_codes]:
        assert (row >= eps).mean() <= exceptions[1] + 1e-12
    # total weight of instances that are neither in a bad code nor below eps
    total_exc = bad_codes.mean() + (inner[~bad_codes] >= eps).sum() / inner.size
    assert total_exc <= sum(exceptions) + 1e-12


def test_two_point_ensemble_is_tight():
    for avg, t in [(1e-3, 0.1), (0.05, 0.05), (1e-6, 1e-3), (0.2, 0.9)]:
        e = two_point_ensemble(avg, t)
        assert abs(exceedance_fraction(e, t) - markov_bound(e, t)) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 50), st.floats(1e-4, 1.0))
def test_markov_never_violated(seed, n, t):
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(n))
    w = w / math.fsum(w)
    e = DistanceEnsemble(w, rng.uniform(0, 1, n) ** rng.uniform(1, 6))
    assert exceedance_fraction(e, t) <= markov_bound(e, t) + 1e-12


def test_split_holds_on_random_ensembles():
    rng = np.random.default_rng(2)
    for k in range(200):
        mean = 10 ** rng.uniform(-6, -2)
        e = sample_ensemble(int(rng.integers(1, 400)), mean, seed=k, spread=rng.uniform(0.1, 2.0))
        exc, eps = individual_guarantee_split(average_distance(e))
        assert exceedance_fraction(e, eps) <= exc + 1e-12


def test_sampling_is_deterministic():
    a = sample_ensemble(100, 0.01, seed=123)
    b = sample_ensemble(100, 0.01, seed=123)
    np.testing.assert_array_equal(a.weights, b.weights)
    np.testing.assert_array_equal(a.distances, b.distances)
    c = sample_ensemble(100, 0.01, seed=124)
    assert not np.array_equal(a.distances, c.distances)


def test_ensemble_validation():
    with pytest.raises(EnsembleError):
        DistanceEnsemble([0.5, 0.4], [0.1, 0.1])
    with pytest.raises(EnsembleError):
        DistanceEnsemble([1.0], [1.5])
    with pytest.raises(EnsembleError):
        DistanceEnsemble([0.0, 1.0], [0.1, 0.1])
    with pytest.raises(EnsembleError, match="declared"):
        DistanceEnsemble([1.0], [0.2], (uniform(3),))


def test_attached_distributions_individual_guarantees():
    rng = np.random.default_rng(4)
    dists, weights = [], []
    for j in range(30):
        l = int(rng.integers(2, 8))
        if j % 3 == 0:
            dists.append(construct_equality_distribution(ExtremalRecipe.simple(l, float(rng.uniform(0, 0.05)))))
        else:
            dists.append(random_distribution(rng, l))
        weights.append(rng.uniform(0.5, 1.5))
    w = np.array(weights) / math.fsum(weights)
    e = DistanceEnsemble.from_distributions(w / math.fsum(w), dists)
    subsets = [KeySubset(pos, l) for l in range(2, 8) for pos in all_subsets(l, max_size=3)]
    subsets += [KeySubset.whole(l) for l in range(2, 8)]
    results = check_individual_guarantees(e, subsets)
    assert results and all(r["ok"] for r in results)
    assert any(r["excepted"] for r in results) or average_distance(e) == 0


def test_file_round_trip(tmp_path):
    e = sample_ensemble(20, 0.01, seed=5)
    path = tmp_path / "e.json"
    save_ensemble(e, path)
    f = load_ensemble(path)
    np.testing.assert_allclose(f.weights, e.weights, rtol=1e-15)
    np.testing.assert_array_equal(f.distances, e.distances)


def test_file_with_distribution_references(tmp_path):
    P = construct_equality_distribution(ExtremalRecipe.simple(3, 0.1))
    (tmp_path / "p.json").write_text(
        '{"key_length": 3, "probs": [%s]}' % ", ".join(repr(float(x)) for x in P.probs))
    (tmp_path / "e.json").write_text(
        '{"entries": [{"weight": 0.5, "distance": 0.1, "distribution": "p.json"},'
        ' {"weight": 0.5, "distance": 0.0, "distribution": {"key_length": 3, "probs": "uniform"}}]}')
    e = load_ensemble(tmp_path / "e.json")
    assert e.distributions is not None and len(e.distributions) == 2
    assert average_distance(e) == pytest.approx(0.05)


@pytest.mark.parametrize("doc", [
    {},
    {"entries": []},
    {"entries": [{"weight": 1.0}]},
    {"entries": [{"weight": 0.5, "distance": 0.1}]},
])
def test_malformed_ensemble_documents(doc):
    with pytest.raises(EnsembleError):
        ensemble_from_dict(doc)
