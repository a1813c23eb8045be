"""Alternating optimisation: relabel each batch video, then take one SGD step."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .core import (
    DataError,
    ExemplarSet,
    GroundTruth,
    HyperParams,
    ModelParams,
    TemporalLabel,
    ValidationError,
    VideoFeatures,
)
from .evaluation import aggregate, video_precision
from .neural import (
    ACTION_NEG,
    ACTION_POS,
    STATE1,
    STATE2,
    OptimizerState,
    backward,
    forward,
    init_params,
    sgd_step,
    zeros_like_params,
)
from .temporal import (
    FrameScores,
    LabeledScore,
    attention_weights,
    label_argmax,
    label_argmax_attended,
    segment_average,
)


@dataclass(frozen=True)
class SampledSets:
    """1-based frame indices used as positives/negatives for one video."""

    s1_pos: tuple[int, ...]
    s2_pos: tuple[int, ...]
    act_pos: tuple[int, ...]
    act_neg: tuple[int, ...]


def sample_positives(center: int, delta: int, T: int) -> tuple[int, ...]:
    if not 1 <= center <= T:
        raise ValidationError(f"center {center} outside [1, {T}]")
    return tuple(range(max(1, center - delta), min(T, center + delta) + 1))


def sample_action_negatives(act_pos: Sequence[int], kappa: int, T: int) -> tuple[int, ...]:
    """Frames kappa away from each action positive, clamped into [1, T].

    Clamped offsets land on the first/last frame; anything coinciding with a
    positive is dropped.
    """
    pos = set(act_pos)
    if not pos or min(pos) < 1 or max(pos) > T:
        raise ValidationError("action positives must be non-empty and inside [1, T]")
    neg = set()
    for t in pos:
        neg.add(min(max(t - kappa, 1), T))
        neg.add(min(max(t + kappa, 1), T))
    return tuple(sorted(neg - pos))


def sample_sets(label: TemporalLabel, hp: HyperParams, T: int) -> SampledSets:
    label.check(T)
    act = sample_positives(label.a, hp.delta, T)
    return SampledSets(
        sample_positives(label.s1, hp.delta, T),
        sample_positives(label.s2, hp.delta, T),
        act,
        sample_action_negatives(act, hp.kappa, T),
    )


def video_batch(sets: SampledSets, hp: HyperParams) -> tuple[np.ndarray, list[str], np.ndarray]:
    """0-based frame rows, roles and per-row weights (omega excluded)."""
    rows, roles, weights = [], [], []
    for idx, role, w in (
        (sets.s1_pos, STATE1, 1.0),
        (sets.s2_pos, STATE2, 1.0),
        (sets.act_pos, ACTION_POS, hp.lam * hp.mu),
        (sets.act_neg, ACTION_NEG, hp.lam),
    ):
        rows += [t - 1 for t in idx]
        roles += [role] * len(idx)
        weights += [w] * len(idx)
    return np.array(rows, dtype=np.int64), roles, np.array(weights, dtype=np.float64)


def augment(frames: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Add one Gaussian offset, shared by every frame of the video."""
    noise = rng.normal(0.0, sigma, size=frames.shape[1])
    return (frames + noise).astype(frames.dtype)


def video_loss(
    m: ModelParams,
    v: VideoFeatures,
    label: TemporalLabel,
    omega: float,
    hp: HyperParams,
    rng: Optional[np.random.Generator] = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """omega * (state loss + lambda * action loss) for one labelled video."""
    sets = sample_sets(label, hp, v.T)
    frames = v.frames
    if hp.aug_sigma > 0 and rng is not None:
        frames = augment(frames, hp.aug_sigma, rng)
    rows, roles, w = video_batch(sets, hp)
    loss, grads = backward(m, frames[rows], roles, omega * w)
    return loss, grads


def frame_scores(m: ModelParams, frames: np.ndarray) -> FrameScores:
    """Classifier scores for every frame, evaluated in float64."""
    if m.dtype != np.float64:
        m = m.astype(np.float64)
    out = forward(m, frames)
    return FrameScores(out.h1, out.g, out.h2)


def predict_label(
    m: ModelParams,
    v: VideoFeatures,
    attention: Optional[tuple[np.ndarray, np.ndarray]] = None,
    segments=None,
) -> LabeledScore:
    scores = frame_scores(m, v.frames)
    if segments is not None:
        scores = segment_average(scores, segments)
    if attention is not None:
        return label_argmax_attended(scores, *attention)
    return label_argmax(scores)


@dataclass
class EpochLog:
    epoch: int
    mean_loss: float
    state_prec: Optional[float] = None
    action_prec: Optional[float] = None
    label_calls: int = 0

    def to_dict(self) -> dict:
        d = {"epoch": self.epoch, "mean_loss": self.mean_loss}
        if self.state_prec is not None:
            d["state_prec"] = self.state_prec
        if self.action_prec is not None:
            d["action_prec"] = self.action_prec
        return d


@dataclass
class TrainResult:
    params: ModelParams
    log: list[EpochLog]
    best_params: Optional[ModelParams] = None
    best_epoch: Optional[int] = None
    # total label computations, one per video-batch membership
    memberships: int = 0


def evaluate_model(
    m: ModelParams,
    videos: Sequence[VideoFeatures],
    gt: Mapping[str, GroundTruth],
    attention: Optional[Mapping[str, tuple]] = None,
    category: str = "category",
):
    results = []
    for v in videos:
        if v.id not in gt:
            continue
        lab = predict_label(m, v, attention.get(v.id) if attention else None).label
        results.append((v.id, video_precision(lab, gt[v.id])))
    return aggregate({category: results})


def _video_seed(seed: int, epoch: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, epoch, index, 0xA5])


def train_category(
    videos: Sequence[VideoFeatures],
    hp: HyperParams,
    weights: Optional[Mapping[str, float]] = None,
    gt: Optional[Mapping[str, GroundTruth]] = None,
    exemplars: Optional[ExemplarSet] = None,
    attend: bool = False,
    select_best: bool = False,
    threads: int = 1,
    init: Optional[ModelParams] = None,
    on_epoch: Optional[Callable[[EpochLog], None]] = None,
) -> TrainResult:
    """Train one category's classifiers from scratch.

    ``weights`` maps video id to omega (missing ids default to 1). Ground
    truth, when given, is only used for per-epoch reporting and, with
    ``select_best``, for picking the best epoch.
    """
    videos = list(videos)
    if not videos:
        raise DataError("no videos to train on")
    d = videos[0].d
    if any(v.d != d for v in videos):
        raise DataError("videos differ in feature dimension")
    ids = [v.id for v in videos]
    if len(set(ids)) != len(ids):
        raise DataError("duplicate video ids")
    weights = dict(weights or {})
    gt = dict(gt or {})
    attention = None
    if attend:
        if exemplars is None:
            raise DataError("attended labeling needs exemplars")
        attention = {v.id: attention_weights(v, exemplars) for v in videos}

    m = init if init is not None else init_params(d, hp.hidden_dim, hp.seed)
    if m.d != d:
        raise DataError(f"initial parameters expect d={m.d}, videos have d={d}")
    opt = OptimizerState.create(m, hp.lr, hp.momentum, hp.l2)
    order_rng = np.random.default_rng([hp.seed, 0x5EED])
    index_of = {v.id: i for i, v in enumerate(videos)}
    result = TrainResult(m, [])
    best_key = -math.inf
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None

    def process(job):
        epoch, v = job
        lab = predict_label(m64, v, attention.get(v.id) if attention else None).label
        rng = _video_seed(hp.seed, epoch, index_of[v.id]) if hp.aug_sigma > 0 else None
        return video_loss(m, v, lab, weights.get(v.id, 1.0), hp, rng)

    try:
        for epoch in range(1, hp.epochs + 1):
            perm = order_rng.permutation(len(videos))
            losses, calls = [], 0
            for start in range(0, len(videos), hp.batch_size):
                # reduction order is by video id regardless of worker scheduling
                batch = sorted((videos[i] for i in perm[start : start + hp.batch_size]), key=lambda v: v.id)
                jobs = [(epoch, v) for v in batch]
                m64 = m.astype(np.float64)
                outs = list(pool.map(process, jobs)) if pool else [process(j) for j in jobs]
                calls += len(batch)
                total = zeros_like_params(m)
                for loss, g in outs:
                    losses.append(loss)
                    for name in total:
                        total[name] += g[name]
                scale = m.dtype.type(1.0 / len(batch))
                mean_grad = {name: total[name] * scale for name in total}
                m, opt = sgd_step(m, mean_grad, opt)
            entry = EpochLog(epoch, float(np.mean(losses)), label_calls=calls)
            result.memberships += calls
            if gt:
                pr = evaluate_model(m.astype(np.float64), videos, gt, attention)
                entry.state_prec, entry.action_prec = pr.macro_state, pr.macro_action
                if select_best:
                    key = (entry.state_prec or 0.0) + (entry.action_prec or 0.0)
                    if key > best_key:
                        best_key = key
                        result.best_params, result.best_epoch = m, epoch
            result.log.append(entry)
            if on_epoch:
                on_epoch(entry)
    finally:
        if pool:
            pool.shutdown()
    result.params = m
    return result
