"""Synthetic feature corpora with known per-second ground truth.

Four Gaussian clusters stand for background, initial state, action and end
state. A clean video holds one episode (initial -> action -> end) with at
least one background second on each side; a noise video is background only.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from itertools import combinations
from pathlib import Path
from typing import Optional

import numpy as np

from .core import ACTION, BACKGROUND, END, INITIAL, ConfigError, ExemplarSet, GroundTruth, VideoFeatures
from .io import Manifest, VideoEntry, save_manifest, write_exemplars, write_feature_file

# centroid rows
CLASSES = (BACKGROUND, INITIAL, ACTION, END)


@dataclass(frozen=True)
class GenConfig:
    n_videos: int = 200
    noise_fraction: float = 0.0
    t_min: int = 40
    t_max: int = 80
    d: int = 16
    cluster_separation: float = 6.0
    frame_noise_std: float = 0.5
    n_exemplars: int = 5
    p_initial: float = 0.05
    p_action: float = 0.42
    p_end: float = 0.12
    exemplar_noise_std: Optional[float] = None
    geometry: str = "gaussian"
    category: str = "synthetic"
    seed: int = 0

    def __post_init__(self):
        if self.n_videos < 1:
            raise ConfigError("n_videos must be >= 1")
        if not 0 <= self.noise_fraction <= 1:
            raise ConfigError("noise_fraction must lie in [0, 1]")
        if self.t_min < 10 or self.t_max < self.t_min:
            raise ConfigError("need 10 <= t_min <= t_max")
        if self.d < 1:
            raise ConfigError("d must be >= 1")
        if self.cluster_separation <= 0 or self.frame_noise_std <= 0:
            raise ConfigError("cluster_separation and frame_noise_std must be positive")
        if not 1 <= self.n_exemplars <= 5:
            raise ConfigError("n_exemplars must lie in [1, 5]")
        if self.geometry not in ("gaussian", "simplex"):
            raise ConfigError(f"unknown geometry {self.geometry!r}")
        props = (self.p_initial, self.p_action, self.p_end)
        if min(props) <= 0 or sum(props) >= 1:
            raise ConfigError("label proportions must be positive and sum below 1")

    @property
    def exemplar_std(self) -> float:
        return self.frame_noise_std if self.exemplar_noise_std is None else self.exemplar_noise_std


@dataclass
class SynthCorpus:
    config: GenConfig
    videos: list[VideoFeatures]
    gt: dict[str, GroundTruth]
    exemplars: ExemplarSet
    centroids: np.ndarray
    noise_ids: frozenset

    @property
    def clean_ids(self) -> list[str]:
        return [v.id for v in self.videos if v.id not in self.noise_ids]


def _cos(a, b) -> float:
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


def draw_centroids(cfg: GenConfig, rng: np.random.Generator, retries: int = 1000) -> np.ndarray:
    """Four centroids, all pairwise distances equal to the separation when d >= 3.

    A regular simplex centred at the origin is randomly rotated into R^d; for
    d < 3 random draws are retried until every pair is far enough apart.
    """
    if cfg.geometry == "simplex" and cfg.d >= 3:
        simplex = np.eye(4) - 0.25  # pairwise distance sqrt(2), centred
        u, s, _ = np.linalg.svd(simplex)
        coords = u[:, :3] * s[:3]  # same simplex in 3-D coordinates
        q, _ = np.linalg.qr(rng.standard_normal((cfg.d, 3)))
        return coords @ q.T * (cfg.cluster_separation / np.sqrt(2))
    scale = cfg.cluster_separation / np.sqrt(cfg.d)
    for _ in range(retries):
        c = rng.normal(0.0, scale, size=(4, cfg.d))
        if min(np.linalg.norm(c[i] - c[j]) for i, j in combinations(range(4), 2)) >= cfg.cluster_separation:
            return c
    raise ConfigError(f"could not place 4 centroids {cfg.cluster_separation} apart in d={cfg.d}")


def draw_exemplars(cfg: GenConfig, centroids: np.ndarray, rng: np.random.Generator, retries: int = 1000) -> ExemplarSet:
    c_init, c_end = centroids[1], centroids[3]
    for _ in range(retries):
        e1 = c_init + rng.normal(0.0, cfg.exemplar_std, size=(cfg.n_exemplars, cfg.d))
        e2 = c_end + rng.normal(0.0, cfg.exemplar_std, size=(cfg.n_exemplars, cfg.d))
        ok = all(_cos(e, c_init) > _cos(e, c_end) for e in e1) and all(_cos(e, c_end) > _cos(e, c_init) for e in e2)
        if ok:
            return ExemplarSet(e1.astype(np.float32), e2.astype(np.float32))
    raise ConfigError("could not draw exemplars closer to their own state centroid")


def censored_geometric_mean(q: float, cap: int) -> float:
    """E[min(G, cap)] for G ~ Geometric(q) on {1, 2, ...}."""
    return (1.0 - (1.0 - q) ** cap) / q


def solve_geometric(target: float, cap: int) -> float:
    """Success probability q with E[min(G, cap)] == target (bisection; the mean falls in q)."""
    if target <= 1.0 or cap <= 1:
        return 1.0
    if target >= cap:
        return 1e-12
    lo, hi = 1e-12, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if censored_geometric_mean(mid, cap) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def episode_lengths(cfg: GenConfig, T: int, rng: np.random.Generator) -> tuple[int, int, int]:
    """Initial, action and end run lengths.

    Each run is a geometric draw censored at its share of the T - 2
    non-margin seconds, with the geometric parameter solved so the censored
    mean equals p*T. The episode therefore always fits and the expected
    proportions match the targets whenever p*T lies in [1, cap].
    """
    props = np.array([cfg.p_initial, cfg.p_action, cfg.p_end])
    caps = np.maximum(1, np.floor((T - 2) * props / props.sum()).astype(int))
    lens = []
    for p, cap in zip(props, caps):
        q = solve_geometric(p * T, int(cap))
        lens.append(int(min(rng.geometric(q), cap)))
    return tuple(lens)


def episode_labels(cfg: GenConfig, T: int, rng: np.random.Generator) -> str:
    n_i, n_a, n_e = episode_lengths(cfg, T, rng)
    total = n_i + n_a + n_e
    start = int(rng.integers(1, T - total))  # >= 1 background second on both sides
    return BACKGROUND * start + INITIAL * n_i + ACTION * n_a + END * n_e + BACKGROUND * (T - start - total)


def frames_for(labels: str, centroids: np.ndarray, std: float, rng: np.random.Generator) -> np.ndarray:
    idx = np.array([CLASSES.index(c) for c in labels])
    return (centroids[idx] + rng.normal(0.0, std, size=(len(labels), centroids.shape[1]))).astype(np.float32)


def generate_corpus(cfg: GenConfig) -> SynthCorpus:
    """Build the corpus in memory; each video uses its own derived random stream."""
    master = np.random.default_rng([cfg.seed, 0xC0])
    centroids = draw_centroids(cfg, master)
    exemplars = draw_exemplars(cfg, centroids, master)
    n_noise = int(round(cfg.noise_fraction * cfg.n_videos))
    noise_idx = set(master.permutation(cfg.n_videos)[:n_noise].tolist())

    videos, gt, noise_ids = [], {}, set()
    for i in range(cfg.n_videos):
        rng = np.random.default_rng([cfg.seed, i, 1])
        vid = f"v{i:04d}"
        T = int(rng.integers(cfg.t_min, cfg.t_max + 1))
        if i in noise_idx:
            labels = BACKGROUND * T
            noise_ids.add(vid)
        else:
            labels = episode_labels(cfg, T, rng)
        videos.append(VideoFeatures(vid, frames_for(labels, centroids, cfg.frame_noise_std, rng)))
        gt[vid] = GroundTruth(labels)
    return SynthCorpus(cfg, videos, gt, exemplars, centroids, frozenset(noise_ids))


def write_corpus(corpus: SynthCorpus, out_dir) -> Manifest:
    out = Path(out_dir)
    (out / "features").mkdir(parents=True, exist_ok=True)
    entries = []
    for v in corpus.videos:
        path = out / "features" / f"{v.id}.lftc"
        write_feature_file(v, path)
        entries.append(VideoEntry(v.id, path, corpus.gt[v.id]))
    write_exemplars(corpus.exemplars, out / "exemplars.lftc", out / "exemplars.json")
    manifest = Manifest(corpus.config.category, tuple(entries), out / "exemplars.lftc", out / "exemplars.json", out)
    save_manifest(manifest, out / "manifest.json")
    report = {
        "config": asdict(corpus.config),
        "n_clean": len(corpus.videos) - len(corpus.noise_ids),
        "n_noise": len(corpus.noise_ids),
        "noise_ids": sorted(corpus.noise_ids),
    }
    (out / "generation.json").write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    return manifest


def generate(cfg: GenConfig, out_dir) -> Manifest:
    """Generate a corpus and write manifest, features, exemplars and report to ``out_dir``."""
    return write_corpus(generate_corpus(cfg), out_dir)
