import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import brute_pair, brute_triple
from statechange.core import DataError, ExemplarSet, PartitionError, ShapeError, TooShortError, VideoFeatures
from statechange.temporal import (
    FrameScores,
    argmax_ordered_pair,
    attention_weights,
    exemplar_baseline_label,
    exemplar_similarity,
    label_argmax,
    label_argmax_attended,
    prediction_score,
    relevance_score,
    segment_average,
)

unit = st.floats(0, 1, allow_nan=False)
# coarse grid makes ties frequent
grid = st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0])

def scores_strategy(elements=unit, lo=3, hi=12):
    return st.integers(lo, hi).flatmap(
        lambda T: st.tuples(*(arrays(np.float64, T, elements=elements) for _ in range(3)))
    )

def test_single_feasible_triple():
    res = label_argmax(FrameScores([0.9, 0.1, 0.1], [0.1, 0.8, 0.1], [0.1, 0.1, 0.7]))
    assert tuple(vars(res.label).values()) == (1, 2, 3)
    assert res.score == pytest.approx(0.504, rel=1e-12)

def test_uniform_ties_pick_smallest():
    res = label_argmax(FrameScores(*[np.full(5, 0.5)] * 3))
    assert (res.label.s1, res.label.a, res.label.s2) == (1, 2, 3)
    assert res.score == 0.125

@given(scores_strategy())
def test_matches_brute_force(hgh):
    res = label_argmax(FrameScores(*hgh))
    arg, best = brute_triple(*hgh)
    assert (res.label.s1, res.label.a, res.label.s2) == arg
    assert res.score == best

@given(scores_strategy(grid))
def test_matches_brute_force_with_ties(hgh):
    res = label_argmax(FrameScores(*hgh))
    assert ((res.label.s1, res.label.a, res.label.s2), res.score) == brute_triple(*hgh)

@given(scores_strategy())
def test_score_recomputable_and_valid(hgh):
    h1, g, h2 = hgh
    res = label_argmax(FrameScores(*hgh))
    lab = res.label
    assert lab.is_valid(len(h1))
    assert res.score == pytest.approx(h1[lab.s1 - 1] * g[lab.a - 1] * h2[lab.s2 - 1], rel=1e-12, abs=0)

@given(scores_strategy(), unit, unit, unit)
def test_appending_frame_never_decreases(hgh, x, y, z):
    h1, g, h2 = hgh
    before = label_argmax(FrameScores(h1, g, h2)).score
    after = label_argmax(FrameScores(np.append(h1, x), np.append(g, y), np.append(h2, z))).score
    assert after >= before

def _all_products(h1, g, h2):
    T = len(g)
    return [h1[s] * g[a] * h2[t] for s in range(T) for a in range(s + 1, T) for t in range(a + 1, T)]


@given(scores_strategy(), st.floats(0.01, 1))
def test_label_invariant_to_scaling_g(hgh, c):
    # positive scalar rescaling only; a nonlinear monotone map of g can reorder products
    h1, g, h2 = hgh
    for gg in (g, g * c):
        vals = _all_products(h1, gg, h2)
        assume(len(set(vals)) == len(vals))
    assert label_argmax(FrameScores(h1, g, h2)).label == label_argmax(FrameScores(h1, g * c, h2)).label


def test_nonlinear_map_of_g_can_change_label():
    h1, g, h2 = [0.125, 1, 0, 0], np.array([1, 1, 0.5, 1]), [0, 0, 1, 0.5]
    assert label_argmax(FrameScores(h1, g, h2)).label != label_argmax(FrameScores(h1, g**2, h2)).label


def test_too_short_and_bad_values():
    with pytest.raises(TooShortError):
        label_argmax(FrameScores([0.5, 0.5], [0.5, 0.5], [0.5, 0.5]))
    with pytest.raises(DataError):
        FrameScores([0.1, np.nan, 0.1], [0.1] * 3, [0.1] * 3)
    with pytest.raises(DataError):
        label_argmax(FrameScores([1.5, 0.1, 0.1], [0.1] * 3, [0.1] * 3))
    with pytest.raises(ShapeError):
        FrameScores([0.1] * 3, [0.1] * 4, [0.1] * 3)

def test_attended_identity_sims():
    r = np.random.default_rng(0)
    s = FrameScores(*r.uniform(size=(3, 9)))
    assert label_argmax_attended(s, np.ones(9), np.ones(9)) == label_argmax(s)

def test_attended_example():
    s = FrameScores(np.full(5, 0.5), [0.1, 0.1, 0.9, 0.1, 0.1], np.full(5, 0.5))
    res = label_argmax_attended(s, [0, 1, 0, 0, 0], [0, 0, 0, 0, 1])
    assert (res.label.s1, res.label.a, res.label.s2) == (2, 3, 5)

@given(scores_strategy(), st.data())
def test_attended_matches_brute_force(hgh, data):
    h1, g, h2 = hgh
    T = len(g)
    s1 = data.draw(arrays(np.float64, T, elements=st.floats(0, 5)))
    s2 = data.draw(arrays(np.float64, T, elements=st.floats(0, 5)))
    res = label_argmax_attended(FrameScores(h1, g, h2), s1, s2)
    arg, best = brute_triple(s1 * h1, g, s2 * h2)
    assert (res.label.s1, res.label.a, res.label.s2) == arg and res.score == best

def test_prediction_score():
    r = np.random.default_rng(1)
    s = FrameScores(*r.uniform(size=(3, 7)))
    assert prediction_score(s) == label_argmax(s).score
    assert prediction_score(FrameScores(s.h1, np.zeros(7), s.h2)) == 0.0

@given(scores_strategy(), st.data())
def test_prediction_score_monotone(hgh, data):
    h1, g, h2 = (a.copy() for a in hgh)
    before = prediction_score(FrameScores(h1, g, h2))
    which = data.draw(st.sampled_from([h1, g, h2]))
    i = data.draw(st.integers(0, len(g) - 1))
    which[i] = data.draw(st.floats(which[i], 1))
    assert prediction_score(FrameScores(h1, g, h2)) >= before

def test_segment_average():
    s = FrameScores([0.2, 0.4, 0.9], [0.1, 0.2, 0.3], [0.5, 0.5, 0.5])
    out = segment_average(s, [(1, 2), (3, 3)])
    np.testing.assert_allclose(out.h1, [0.3, 0.3, 0.9], rtol=0, atol=1e-15)
    same = segment_average(s, [(1, 1), (2, 2), (3, 3)])
    for name in ("h1", "g", "h2"):
        np.testing.assert_array_equal(getattr(same, name), getattr(s, name))
    np.testing.assert_allclose(segment_average(s, [(1, 3)]).g, np.full(3, 0.2))
    for bad in ([(1, 1), (3, 3)], [(1, 2), (2, 3)], [(1, 2)]):
        with pytest.raises(PartitionError):
            segment_average(s, bad)

def test_relevance_orthonormal():
    e = ExemplarSet([[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    v = VideoFeatures("o", [[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    A, B = exemplar_similarity(v, e)
    np.testing.assert_array_equal(A, [1, 0, 0])
    np.testing.assert_array_equal(B, [0, 1, 0])
    assert relevance_score(v, e) == 1.0
    assert exemplar_baseline_label(v, e) == (1, 2)

def test_ordered_pair_negative_products():
    assert argmax_ordered_pair([-1, -2, 0], [0, -3, -1]) == (1, 2, 3.0)

def test_ordered_pair_uniform_tie():
    assert argmax_ordered_pair(np.ones(6), np.ones(6))[:2] == (1, 2)
    with pytest.raises(TooShortError):
        argmax_ordered_pair([1.0], [1.0])

@given(st.integers(2, 40).flatmap(lambda T: st.tuples(*(arrays(np.float64, T, elements=st.floats(-5, 5)) for _ in range(2)))))
def test_ordered_pair_brute_force(AB):
    t, u, best = argmax_ordered_pair(*AB)
    arg, b = brute_pair(*AB)
    assert best == b and (t, u) == arg

@given(st.integers(2, 30).flatmap(lambda T: st.tuples(*(arrays(np.float64, T, elements=st.sampled_from([-2.0, -1.0, 0.0, 1.0, 2.0])) for _ in range(2)))))
def test_ordered_pair_brute_force_ties(AB):
    t, u, best = argmax_ordered_pair(*AB)
    assert ((t, u), best) == brute_pair(*AB)

def test_relevance_zero_norm_frame():
    e = ExemplarSet([[1.0, 0.0]], [[0.0, 1.0]])
    with pytest.raises(DataError):
        relevance_score(VideoFeatures("z", [[1, 0], [0, 0], [0, 1]]), e)
    with pytest.raises(ShapeError):
        relevance_score(VideoFeatures("z", np.ones((3, 3))), e)

def test_attention_weights_clip(rng):
    e = ExemplarSet(rng.normal(size=(2, 4)), rng.normal(size=(3, 4)))
    v = VideoFeatures("v", rng.normal(size=(10, 4)))
    A, B = exemplar_similarity(v, e)
    wA, wB = attention_weights(v, e)
    np.testing.assert_array_equal(wA, np.maximum(A, 0))
    np.testing.assert_array_equal(wB, np.maximum(B, 0))


def test_label_fields_are_python_ints():
    lab = label_argmax(FrameScores([0.1, 0.9, 0.2, 0.3], [0.2, 0.1, 0.8, 0.1], [0.1, 0.1, 0.2, 0.9])).label
    assert all(type(x) is int for x in (lab.s1, lab.a, lab.s2))
    t, u, _ = argmax_ordered_pair([1.0, 2.0, 0.5], [0.0, 1.0, 3.0])
    assert type(t) is int and type(u) is int
