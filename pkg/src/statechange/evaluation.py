"""State/action precision, category and macro averaging, chance baseline."""

from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass, field
from math import comb
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import ACTION, END, INITIAL, GroundTruth, ShapeError, TemporalLabel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class VideoPrecision:
    state_prec: Optional[float]
    action_prec: Optional[float]


def video_precision(label: TemporalLabel, gt: GroundTruth, T: Optional[int] = None) -> VideoPrecision:
    """Per-video precision; a metric is None when the video has no annotation for it."""
    if T is not None and len(gt) != T:
        raise ShapeError(f"ground truth length {len(gt)} != T={T}")
    label.check(len(gt))
    action = float(gt[label.a] == ACTION) if gt.has(ACTION) else None
    if gt.has(INITIAL) or gt.has(END):
        state = 0.5 * (gt[label.s1] == INITIAL) + 0.5 * (gt[label.s2] == END)
    else:
        state = None
    return VideoPrecision(state, action)


@dataclass
class PrecisionResult:
    per_video: dict[str, list[tuple[str, VideoPrecision]]] = field(default_factory=dict)
    per_category: dict[str, dict[str, Optional[float]]] = field(default_factory=dict)
    macro_state: Optional[float] = None
    macro_action: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "per_category": self.per_category,
            "macro": {"state_prec": self.macro_state, "action_prec": self.macro_action},
        }


def _mean(xs) -> Optional[float]:
    xs = [x for x in xs if x is not None]
    return float(np.mean(xs)) if xs else None


def aggregate(results: Mapping[str, Sequence[tuple[str, VideoPrecision]]]) -> PrecisionResult:
    """Average video precisions within each category, then across categories."""
    out = PrecisionResult()
    for cat in sorted(results):
        rows = sorted(results[cat], key=lambda r: r[0])
        out.per_video[cat] = rows
        s = _mean(p.state_prec for _, p in rows)
        a = _mean(p.action_prec for _, p in rows)
        for name, val in (("state", s), ("action", a)):
            if val is None:
                log.warning("category %r has no videos eligible for %s precision", cat, name)
        out.per_category[cat] = {"state_prec": s, "action_prec": a, "n_videos": len(rows)}
    out.macro_state = _mean(c["state_prec"] for c in out.per_category.values())
    out.macro_action = _mean(c["action_prec"] for c in out.per_category.values())
    return out


def _crc(s: str) -> int:
    return zlib.crc32(s.encode("utf-8"))


def unrank_triples(ranks: np.ndarray, T: int) -> np.ndarray:
    """Map ranks in [0, C(T,3)) to distinct 1-based triples s1 < a < s2 (colex order)."""
    ranks = np.asarray(ranks, dtype=np.int64).copy()
    k = np.arange(T + 1)
    c3 = np.array([comb(int(i), 3) for i in k], dtype=np.int64)
    c2 = np.array([comb(int(i), 2) for i in k], dtype=np.int64)
    hi = np.searchsorted(c3, ranks, side="right") - 1
    ranks -= c3[hi]
    mid = np.searchsorted(c2, ranks, side="right") - 1
    ranks -= c2[mid]
    return np.stack([ranks, mid, hi], axis=1) + 1


def baseline_rng(seed: int, category: str, video_id: str) -> np.random.Generator:
    return np.random.default_rng([seed, _crc(category), _crc(video_id)])


def sample_constrained_triples(T: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """n uniform draws from all triples 1 <= s1 < a < s2 <= T, shape (n, 3)."""
    return unrank_triples(rng.integers(0, comb(T, 3), size=n), T)


def expected_chance_precision(gt: GroundTruth) -> VideoPrecision:
    """Closed-form expectation of video_precision under a uniform ordered triple."""
    T = len(gt)
    n = comb(T, 3)
    t = np.arange(1, T + 1)
    labels = np.array(list(gt.labels))
    p_a = (t - 1) * (T - t) / n
    p_s1 = np.array([comb(T - i, 2) for i in t]) / n
    p_s2 = np.array([comb(i - 1, 2) for i in t]) / n
    action = float(p_a[labels == ACTION].sum()) if gt.has(ACTION) else None
    if gt.has(INITIAL) or gt.has(END):
        state = 0.5 * float(p_s1[labels == INITIAL].sum()) + 0.5 * float(p_s2[labels == END].sum())
    else:
        state = None
    return VideoPrecision(state, action)


def random_constrained_baseline(
    corpus: Mapping[str, Mapping[str, GroundTruth]], trials: int = 1000, seed: int = 0
) -> PrecisionResult:
    """Chance precision of uniformly drawn causally ordered triples.

    ``corpus`` maps category -> video id -> ground truth. Each video's
    precision is averaged over ``trials`` independent draws.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    results = {}
    for cat in sorted(corpus):
        rows = []
        for vid in sorted(corpus[cat]):
            gt = corpus[cat][vid]
            T = len(gt)
            if T < 3:
                log.warning("skipping video %r with T=%d < 3", vid, T)
                continue
            triples = sample_constrained_triples(T, trials, baseline_rng(seed, cat, vid))
            labels = np.array(list(gt.labels))
            s1, a, s2 = labels[triples[:, 0] - 1], labels[triples[:, 1] - 1], labels[triples[:, 2] - 1]
            action = float(np.mean(a == ACTION)) if gt.has(ACTION) else None
            if gt.has(INITIAL) or gt.has(END):
                state = float(np.mean(0.5 * (s1 == INITIAL) + 0.5 * (s2 == END)))
            else:
                state = None
            rows.append((vid, VideoPrecision(state, action)))
        results[cat] = rows
    return aggregate(results)
