from collections import Counter
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_chance
from statechange.core import GroundTruth, ShapeError, TemporalLabel
from statechange.evaluation import (
    VideoPrecision,
    aggregate,
    expected_chance_precision,
    random_constrained_baseline,
    sample_constrained_triples,
    unrank_triples,
    video_precision,
)


def test_action_membership():
    gt = GroundTruth("bbaaaaaabb")
    assert video_precision(TemporalLabel(1, 5, 10), gt).action_prec == 1.0


def test_half_state_match():
    gt = GroundTruth("biiaaeebbb")
    assert video_precision(TemporalLabel(2, 4, 9), gt).state_prec == 0.5


def test_all_background_predictions():
    gt = GroundTruth("bbiaebbb")
    assert video_precision(TemporalLabel(1, 2, 8), gt) == VideoPrecision(0.0, 0.0)


def test_length_mismatch():
    with pytest.raises(ShapeError):
        video_precision(TemporalLabel(1, 2, 3), GroundTruth("biae"), T=5)


def test_aggregate_arithmetic():
    res = aggregate(
        {
            "A": [("a1", VideoPrecision(1.0, 1.0)), ("a2", VideoPrecision(0.0, 0.0))],
            "B": [("b1", VideoPrecision(1.0, 1.0)), ("b2", VideoPrecision(1.0, 1.0))],
        }
    )
    assert res.per_category["A"]["state_prec"] == 0.5 and res.per_category["B"]["action_prec"] == 1.0
    assert res.macro_state == 0.75 and res.macro_action == 0.75


def test_noise_video_excluded():
    p = video_precision(TemporalLabel(1, 2, 3), GroundTruth("bbbb"))
    assert p == VideoPrecision(None, None)
    res = aggregate({"A": [("n", p), ("c", VideoPrecision(1.0, 0.0))]})
    assert res.macro_state == 1.0 and res.macro_action == 0.0


def test_single_category_macro():
    res = aggregate({"A": [("x", VideoPrecision(0.5, 1.0)), ("y", VideoPrecision(1.0, 0.0))]})
    assert res.macro_state == res.per_category["A"]["state_prec"] == 0.75


def test_baseline_certain_events():
    res = random_constrained_baseline({"c": {"v": GroundTruth("a" * 10)}}, trials=50)
    assert res.macro_action == 1.0
    res = random_constrained_baseline({"c": {"v": GroundTruth("iae")}}, trials=50)
    assert res.macro_state == 1.0


def test_unrank_is_bijection():
    for T in range(3, 12):
        tr = unrank_triples(np.arange(comb(T, 3)), T)
        assert len({tuple(t) for t in tr.tolist()}) == comb(T, 3)
        assert np.all((1 <= tr[:, 0]) & (tr[:, 0] < tr[:, 1]) & (tr[:, 1] < tr[:, 2]) & (tr[:, 2] <= T))


def test_sampling_uniform_chi_square():
    T = 7
    n_cells = comb(T, 3)
    for seed in range(10):
        tr = sample_constrained_triples(T, 20000, np.random.default_rng(seed))
        counts = np.array(list(Counter(map(tuple, tr.tolist())).values()))
        assert len(counts) == n_cells
        exp = 20000 / n_cells
        chi2 = ((counts - exp) ** 2 / exp).sum()
        # df = 34; chi-square upper 1% point is 56.06
        assert chi2 < 56.06


@given(st.text(alphabet="biae", min_size=3, max_size=14))
def test_expectation_matches_enumeration(labels):
    gt = GroundTruth(labels)
    exp = expected_chance_precision(gt)
    s, a = brute_chance(labels)
    if exp.state_prec is not None:
        assert exp.state_prec == pytest.approx(s, abs=1e-12)
    if exp.action_prec is not None:
        assert exp.action_prec == pytest.approx(a, abs=1e-12)


def test_baseline_near_forty_percent_action():
    r = np.random.default_rng(3)
    gts = {}
    for i in range(30):
        T = int(r.integers(40, 80))
        n_a = int(round(0.4 * T))
        start = int(r.integers(0, T - n_a))
        gts[f"v{i}"] = GroundTruth("b" * start + "a" * n_a + "b" * (T - start - n_a))
    trials = 10000
    res = random_constrained_baseline({"c": gts}, trials=trials, seed=1)
    mus = np.array([expected_chance_precision(gts[v]).action_prec for v, _ in res.per_video["c"]])
    # the category mean is a mean of independent binomial proportions
    sigma = np.sqrt((mus * (1 - mus) / trials).sum()) / len(mus)
    assert abs(res.macro_action - mus.mean()) <= 3 * sigma
    # the constraint pushes the action index towards the middle, so chance exceeds the raw 40% share
    assert abs(mus.mean() - 0.4) < 0.2
