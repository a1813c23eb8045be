"""Ordered-triple and ordered-pair maximisation over per-second scores.

All searches run in O(T) using running prefix/suffix extrema and accumulate
in float64. Ties are broken towards the lexicographically smallest indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    DataError,
    ExemplarSet,
    PartitionError,
    ShapeError,
    TemporalLabel,
    TooShortError,
    VideoFeatures,
)


@dataclass(frozen=True)
class FrameScores:
    """Per-frame initial-state, action and end-state scores of one video."""

    h1: np.ndarray
    g: np.ndarray
    h2: np.ndarray

    def __post_init__(self):
        arrs = []
        for name in ("h1", "g", "h2"):
            a = np.array(getattr(self, name), dtype=np.float64, copy=True).reshape(-1)
            if np.any(np.isnan(a)):
                raise DataError(f"{name} contains NaN")
            a.setflags(write=False)
            arrs.append(a)
            object.__setattr__(self, name, a)
        if not arrs[0].shape == arrs[1].shape == arrs[2].shape:
            raise ShapeError("h1, g and h2 must have equal length")

    @property
    def T(self) -> int:
        return int(self.h1.shape[0])


@dataclass(frozen=True)
class LabeledScore:
    label: TemporalLabel
    score: float


def argmax_ordered_triple(h1: np.ndarray, g: np.ndarray, h2: np.ndarray) -> LabeledScore:
    """Maximise h1[s1]*g[a]*h2[s2] over s1 < a < s2 for nonnegative inputs.

    Ties, including ties created by rounding, go to the lexicographically
    smallest triple. Rounded products are monotone in each nonnegative factor,
    which makes prefix/suffix maxima sufficient for the optimum.
    """
    T = len(h1)
    if T < 3:
        raise TooShortError(f"need T >= 3 frames for an ordered triple, got {T}")
    if np.any(np.isnan(h1)) or np.any(np.isnan(g)) or np.any(np.isnan(h2)):
        raise DataError("scores contain NaN")
    if min(h1.min(), g.min(), h2.min()) < 0:
        raise DataError("scores must be nonnegative")
    pre = np.maximum.accumulate(h1)
    suf = np.maximum.accumulate(h2[::-1])[::-1]
    # a runs over 0-based 1..T-2
    best = float((pre[: T - 2] * g[1 : T - 1] * suf[2:]).max())
    if best == 0.0:
        # every feasible triple scores 0
        return LabeledScore(TemporalLabel(1, 2, 3), 0.0)
    # smallest s1 whose best completion reaches the optimum; the cheap bound
    # h1[s1]*max(g)*max(h2) filters candidates before the exact O(T) check
    bound = h1[: T - 2] * g[1 : T - 1].max() * h2[2:].max()
    for s1 in np.flatnonzero(bound >= best).tolist():
        row = h1[s1] * g[s1 + 1 : T - 1] * suf[s1 + 2 :]
        hit = np.flatnonzero(row == best)
        if hit.size:
            a = s1 + 1 + int(hit[0])
            s2 = a + 1 + int(np.flatnonzero(h1[s1] * g[a] * h2[a + 1 :] == best)[0])
            label = TemporalLabel(s1 + 1, a + 1, s2 + 1)
            assert label.is_valid(T)
            return LabeledScore(label, best)
    raise AssertionError("optimum not attained")  # pragma: no cover


def _check_unit_interval(scores: FrameScores) -> None:
    for name in ("h1", "g", "h2"):
        a = getattr(scores, name)
        if a.size and (a.min() < 0 or a.max() > 1):
            raise DataError(f"{name} scores must lie in [0, 1]")


def label_argmax(scores: FrameScores) -> LabeledScore:
    """Best causally ordered (initial state, action, end state) triple."""
    _check_unit_interval(scores)
    return argmax_ordered_triple(scores.h1, scores.g, scores.h2)


def label_argmax_attended(scores: FrameScores, sim1: Sequence[float], sim2: Sequence[float]) -> LabeledScore:
    """Labeling with state scores reweighted by exemplar similarity.

    ``sim1``/``sim2`` multiply h1/h2 frame-wise and must be nonnegative;
    use :func:`attention_weights` to derive them from exemplars.
    """
    _check_unit_interval(scores)
    sim1 = np.asarray(sim1, dtype=np.float64).reshape(-1)
    sim2 = np.asarray(sim2, dtype=np.float64).reshape(-1)
    if sim1.shape != (scores.T,) or sim2.shape != (scores.T,):
        raise ShapeError("similarity sequences must have length T")
    if np.any(np.isnan(sim1)) or np.any(np.isnan(sim2)):
        raise DataError("similarities contain NaN")
    return argmax_ordered_triple(sim1 * scores.h1, scores.g, sim2 * scores.h2)


def prediction_score(scores: FrameScores) -> float:
    """Score of the best ordered triple, used to rank videos of a category."""
    return label_argmax(scores).score


def _as_frames(v) -> np.ndarray:
    frames = v.frames if isinstance(v, VideoFeatures) else np.asarray(v)
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2:
        raise ShapeError("frames must be a 2-D (T, d) array")
    return frames


def exemplar_similarity(v, e: ExemplarSet) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame summed cosine similarity to the initial and end exemplars."""
    frames = _as_frames(v)
    if frames.shape[1] != e.d:
        raise ShapeError(f"feature dimension {frames.shape[1]} != exemplar dimension {e.d}")
    norms = np.linalg.norm(frames, axis=1)
    if np.any(norms == 0):
        raise DataError("zero-norm frame vector: cosine similarity undefined")
    unit = frames / norms[:, None]
    e1 = e.initial / np.linalg.norm(e.initial, axis=1, keepdims=True)
    e2 = e.end / np.linalg.norm(e.end, axis=1, keepdims=True)
    return (unit @ e1.T).sum(axis=1), (unit @ e2.T).sum(axis=1)


def attention_weights(v, e: ExemplarSet) -> tuple[np.ndarray, np.ndarray]:
    """Nonnegative frame weights for attended labeling (negative similarity -> 0)."""
    A, B = exemplar_similarity(v, e)
    return np.maximum(A, 0.0), np.maximum(B, 0.0)


def argmax_ordered_pair(A: np.ndarray, B: np.ndarray) -> tuple[int, int, float]:
    """Maximise A[t]*B[t'] over t < t' (signs arbitrary).

    Returns 1-based (t, t') and the maximum; ties go to the lexicographically
    smallest pair.
    """
    A = np.asarray(A, dtype=np.float64).reshape(-1)
    B = np.asarray(B, dtype=np.float64).reshape(-1)
    T = len(A)
    if len(B) != T:
        raise ShapeError("A and B must have equal length")
    if T < 2:
        raise TooShortError(f"need T >= 2 frames for an ordered pair, got {T}")
    if np.any(np.isnan(A)) or np.any(np.isnan(B)):
        raise DataError("similarities contain NaN")
    # for fixed B[t'] the product is monotone in A[t]: only the running max/min matter
    pmax = np.maximum.accumulate(A)[:-1] * B[1:]
    pmin = np.minimum.accumulate(A)[:-1] * B[1:]
    best = float(np.maximum(pmax, pmin).max())
    # smallest t whose best later partner reaches the optimum, then smallest t'
    smax = np.maximum.accumulate(B[::-1])[::-1][1:]
    smin = np.minimum.accumulate(B[::-1])[::-1][1:]
    per_t = np.maximum(A[:-1] * smax, A[:-1] * smin)
    t = int(np.flatnonzero(per_t == best)[0])
    u = t + 1 + int(np.flatnonzero(A[t] * B[t + 1 :] == best)[0])
    return t + 1, u + 1, best


def relevance_score(v, e: ExemplarSet) -> float:
    """Largest product of initial-exemplar and later end-exemplar similarity."""
    A, B = exemplar_similarity(v, e)
    return argmax_ordered_pair(A, B)[2]


def exemplar_baseline_label(v, e: ExemplarSet) -> tuple[int, int]:
    """State positions predicted from exemplar similarity alone (1-based)."""
    A, B = exemplar_similarity(v, e)
    t, t2, _ = argmax_ordered_pair(A, B)
    return t, t2


def check_partition(segments, T: int) -> list[tuple[int, int]]:
    segs = sorted((int(a), int(b)) for a, b in segments)
    expect = 1
    for a, b in segs:
        if a != expect or b < a:
            raise PartitionError(f"segments do not tile [1, {T}] contiguously near {a}-{b}")
        expect = b + 1
    if expect != T + 1:
        raise PartitionError(f"segments cover [1, {expect - 1}], expected [1, {T}]")
    return segs


def segment_average(scores: FrameScores, segments) -> FrameScores:
    """Replace every score by its mean over the enclosing segment (tracklet)."""
    segs = check_partition(segments, scores.T)
    out = []
    for a in (scores.h1, scores.g, scores.h2):
        b = a.copy()
        for lo, hi in segs:
            b[lo - 1 : hi] = a[lo - 1 : hi].mean()
        out.append(b)
    return FrameScores(*out)
