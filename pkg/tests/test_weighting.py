import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_theta
from statechange.core import DataError, InsufficientDataError, ParameterError, UnknownIdError
from statechange.weighting import (
    RelevanceReport,
    compute_weights,
    retrieval_diagnostic,
    select_theta,
    sigmoid,
    threshold_objective,
)


def test_bimodal_pair():
    assert select_theta([0, 0, 1, 1]) == 0.5
    assert threshold_objective([0, 0, 1, 1], 0.5) == 0.0


def test_degenerate_all_equal():
    th = select_theta([0.3, 0.3, 0.3])
    assert th == 0.3
    rep = compute_weights([("a", 0.3), ("b", 0.3), ("c", 0.3)], th, 0.001)
    assert all(v.omega == 0.5 for v in rep.videos)


def test_mixture_matches_exhaustive_scan():
    r = np.random.default_rng(5)
    x = np.where(r.random(1000) < 0.5, r.normal(0, 0.1, 1000), r.normal(1, 0.1, 1000))
    th = select_theta(x)
    assert 0.25 < th < 0.75
    assert th == brute_theta(x)[0]


def test_errors():
    with pytest.raises(InsufficientDataError):
        select_theta([1.0])
    with pytest.raises(DataError):
        select_theta([1.0, np.inf])


@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=60))
def test_matches_brute_force(xs):
    assert select_theta(xs) == brute_theta(xs)[0]


@given(st.lists(st.sampled_from([0.0, 1.0, 2.0, 5.0, 5.5]), min_size=2, max_size=30))
def test_matches_brute_force_repeated_values(xs):
    assert select_theta(xs) == brute_theta(xs)[0]


@given(
    st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=40, unique=True),
    st.floats(-50, 50),
    st.floats(0.1, 10),
)
def test_equivariance(xs, c, k):
    x = np.array(xs)
    th = select_theta(x)
    assert select_theta(x + c) == pytest.approx(th + c, abs=1e-9, rel=1e-9)
    assert select_theta(x * k) == pytest.approx(th * k, abs=1e-9, rel=1e-9)


def test_weights_closed_form():
    rep = compute_weights([("a", 2.0), ("b", 2.0 + 0.01), ("c", 2.0 - 1.0)], 2.0, 0.001)
    w = rep.weights()
    assert w["a"] == 0.5
    assert w["b"] == pytest.approx(1 / (1 + np.exp(-10)), rel=1e-12)
    assert w["b"] == pytest.approx(0.9999546, abs=1e-7)
    assert 0 < w["c"] < 1e-300 or w["c"] == 0.0 or np.isfinite(w["c"])
    assert np.isfinite(w["c"]) and w["c"] >= 0
    with pytest.raises(ParameterError):
        compute_weights([("a", 1.0)], 0.0, 0.0)


def test_sigmoid_extremes():
    s = sigmoid(np.array([-1e6, -1000.0, 0.0, 1000.0, 1e6]))
    assert np.all(np.isfinite(s))
    assert s[2] == 0.5 and s[-1] == 1.0


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=30), st.floats(-5, 5), st.floats(0.01, 10))
def test_report_invariants(rs, theta, tau):
    rep = compute_weights([(str(i), r) for i, r in enumerate(rs)], theta, tau)
    for v in rep.videos:
        assert v.omega == pytest.approx(float(sigmoid((v.r - theta) / tau)), abs=1e-12)
    order = sorted(rep.videos, key=lambda v: v.r)
    for a, b in zip(order, order[1:]):
        assert a.omega <= b.omega
    assert RelevanceReport.from_dict(rep.to_dict()) == rep


def test_retrieval_construction():
    scores = [(f"v{i}", float(i)) for i in range(10)]
    rep = compute_weights(scores, 6.5, 1.0)
    assert retrieval_diagnostic(rep, {"v7", "v8", "v9"}) == (1.0, 0.3)
    with pytest.raises(InsufficientDataError):
        retrieval_diagnostic(rep, set())
    with pytest.raises(UnknownIdError):
        retrieval_diagnostic(rep, {"nope"})


def test_retrieval_bimodal_simulation():
    r = np.random.default_rng(11)
    relevant = r.random(400) < 0.5
    x = np.where(relevant, r.normal(3, 0.5, 400), r.normal(0, 0.5, 400))
    scores = [(f"v{i}", float(s)) for i, s in enumerate(x)]
    rep = compute_weights(scores, select_theta(x), 0.001)
    rel, all_ = retrieval_diagnostic(rep, {f"v{i}" for i in np.flatnonzero(relevant)})
    assert rel > all_
