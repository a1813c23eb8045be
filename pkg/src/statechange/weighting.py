"""Per-category relevance threshold and per-video loss weights."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import DataError, InsufficientDataError, ParameterError, UnknownIdError


def _running_var(x: np.ndarray) -> np.ndarray:
    """Population variance of x[:k+1] for every k (Welford)."""
    out = np.empty(len(x))
    mean = m2 = 0.0
    for k, v in enumerate(x, start=1):
        delta = v - mean
        mean += delta / k
        m2 += delta * (v - mean)
        out[k - 1] = m2 / k
    return out


def threshold_objective(scores: Sequence[float], theta: float) -> float:
    """Summed population variance of the scores strictly below and above theta."""
    r = np.asarray(scores, dtype=np.float64)
    lo, hi = r[r < theta], r[r > theta]
    return (lo.var() if lo.size > 1 else 0.0) + (hi.var() if hi.size > 1 else 0.0)


def select_theta(scores: Sequence[float]) -> float:
    """Threshold minimising intra-class variance of a category's relevance scores.

    Candidates are midpoints between consecutive distinct sorted scores; near
    ties (within 1e-12 of the total variance) resolve to the smallest candidate.
    """
    r = np.sort(np.asarray(scores, dtype=np.float64).reshape(-1))
    if r.size < 2:
        raise InsufficientDataError(f"need at least 2 scores, got {r.size}")
    if not np.all(np.isfinite(r)):
        raise DataError("relevance scores must be finite")
    u = np.unique(r)
    if u.size == 1:
        return float(u[0])
    cand = u[:-1] + (u[1:] - u[:-1]) / 2
    # class sizes by strict comparison, so a midpoint rounding onto a value excludes it
    n_lo = np.searchsorted(r, cand, side="left")
    n_hi_start = np.searchsorted(r, cand, side="right")
    var_lo = np.concatenate([[0.0], _running_var(r)])
    var_hi = np.concatenate([_running_var(r[::-1])[::-1], [0.0]])
    obj = var_lo[n_lo] + var_hi[n_hi_start]
    tol = 1e-12 * r.var() + 1e-300
    k = int(np.flatnonzero(obj <= obj.min() + tol)[0])
    return float(cand[k])


def sigmoid(x):
    """Logistic function without exp overflow."""
    x = np.asarray(x, dtype=np.float64)
    pos = x >= 0
    z = np.exp(-np.abs(x))
    return np.where(pos, 1.0 / (1.0 + z), z / (1.0 + z))


@dataclass(frozen=True)
class VideoWeight:
    id: str
    r: float
    omega: float


@dataclass(frozen=True)
class RelevanceReport:
    videos: tuple[VideoWeight, ...]
    theta: float
    tau: float

    def weights(self) -> dict[str, float]:
        return {v.id: v.omega for v in self.videos}

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "tau": self.tau,
            "videos": [{"id": v.id, "r": v.r, "omega": v.omega} for v in self.videos],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RelevanceReport":
        vids = tuple(VideoWeight(str(v["id"]), float(v["r"]), float(v["omega"])) for v in doc["videos"])
        return cls(vids, float(doc["theta"]), float(doc["tau"]))


def compute_weights(scores: Iterable[tuple[str, float]], theta: float, tau: float) -> RelevanceReport:
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    scores = list(scores)
    r = np.array([s for _, s in scores], dtype=np.float64)
    omega = sigmoid((r - theta) / tau)
    vids = tuple(VideoWeight(str(i), float(ri), float(w)) for (i, _), ri, w in zip(scores, r, omega))
    return RelevanceReport(vids, float(theta), float(tau))


def retrieval_diagnostic(report: RelevanceReport, relevant_ids) -> tuple[float, float]:
    """Fractions of relevant videos and of all videos whose score exceeds theta."""
    relevant_ids = set(relevant_ids)
    if not relevant_ids:
        raise InsufficientDataError("relevant id set is empty")
    by_id = {v.id: v.r for v in report.videos}
    missing = relevant_ids - by_id.keys()
    if missing:
        raise UnknownIdError(f"ids not in report: {sorted(missing)[:5]}")
    above = {i for i, r in by_id.items() if r > report.theta}
    return len(above & relevant_ids) / len(relevant_ids), len(above) / len(by_id)
