"""Domain types, errors and the hyper-parameter record.

Frame indices exposed by these types are 1-based. Arrays are stored 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np


class StateChangeError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(StateChangeError, ValueError):
    pass


class LengthError(StateChangeError, ValueError):
    pass


class DataError(StateChangeError, ValueError):
    pass


class ShapeError(StateChangeError, ValueError):
    pass


class ValidationError(StateChangeError, ValueError):
    pass


class ParameterError(StateChangeError, ValueError):
    pass


class PartitionError(StateChangeError, ValueError):
    pass


class TooShortError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class ConfigError(StateChangeError, ValueError):
    pass


class UnknownIdError(StateChangeError, KeyError):
    pass


# ground-truth alphabet, one character per second
BACKGROUND, INITIAL, ACTION, END = "b", "i", "a", "e"
GT_ALPHABET = BACKGROUND + INITIAL + ACTION + END


def _frozen_array(a, dtype=None) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class VideoFeatures:
    """One video as a (T, d) sequence of per-second feature vectors."""

    id: str
    frames: np.ndarray

    def __post_init__(self):
        frames = _frozen_array(self.frames, dtype=np.float32)
        if frames.ndim != 2:
            raise ValidationError(f"frames must be 2-D (T, d), got shape {frames.shape}")
        if frames.shape[0] < 3:
            raise ValidationError(f"video {self.id!r} has T={frames.shape[0]} < 3")
        if frames.shape[1] < 1:
            raise ValidationError("feature dimension must be positive")
        if not np.all(np.isfinite(frames)):
            raise DataError(f"video {self.id!r} contains non-finite features")
        object.__setattr__(self, "frames", frames)

    @property
    def T(self) -> int:
        return int(self.frames.shape[0])

    @property
    def d(self) -> int:
        return int(self.frames.shape[1])

    def __eq__(self, other):
        if not isinstance(other, VideoFeatures):
            return NotImplemented
        return (
            self.id == other.id
            and self.frames.shape == other.frames.shape
            and self.frames.tobytes() == other.frames.tobytes()
        )

    __hash__ = None


@dataclass(frozen=True, order=True)
class TemporalLabel:
    """Initial state, action and end state positions (1-based seconds)."""

    s1: int
    a: int
    s2: int

    def is_valid(self, T: int) -> bool:
        return 1 <= self.s1 < self.a < self.s2 <= T

    def check(self, T: int) -> "TemporalLabel":
        if not self.is_valid(T):
            raise ValidationError(f"label {self} violates 1 <= s1 < a < s2 <= {T}")
        return self


@dataclass(frozen=True)
class ExemplarSet:
    initial: np.ndarray
    end: np.ndarray

    def __post_init__(self):
        initial = _frozen_array(np.atleast_2d(self.initial), dtype=np.float64)
        end = _frozen_array(np.atleast_2d(self.end), dtype=np.float64)
        for name, s in (("initial", initial), ("end", end)):
            if not 1 <= s.shape[0] <= 5:
                raise ValidationError(f"{name} exemplar set must hold 1-5 vectors, got {s.shape[0]}")
            if not np.all(np.isfinite(s)):
                raise DataError(f"{name} exemplars contain non-finite values")
            if np.any(np.linalg.norm(s, axis=1) == 0):
                raise DataError(f"{name} exemplars contain a zero-norm vector")
        if initial.shape[1] != end.shape[1]:
            raise ShapeError("initial and end exemplars differ in dimension")
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "end", end)

    @property
    def d(self) -> int:
        return int(self.initial.shape[1])


@dataclass(frozen=True)
class GroundTruth:
    """Per-second annotation string over 'b', 'i', 'a', 'e'."""

    labels: str

    def __post_init__(self):
        bad = set(self.labels) - set(GT_ALPHABET)
        if bad:
            raise ValidationError(f"unknown ground-truth characters {sorted(bad)}")

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, t: int) -> str:
        """Label of 1-based second ``t``."""
        if not 1 <= t <= len(self.labels):
            raise IndexError(t)
        return self.labels[t - 1]

    def has(self, kind: str) -> bool:
        return kind in self.labels


@dataclass(frozen=True)
class HyperParams:
    delta: int = 2
    kappa: int = 60
    lam: float = 0.2
    mu: float = 10.0
    tau: float = 0.001
    lr: float = 0.01
    momentum: float = 0.9
    l2: float = 0.001
    batch_size: int = 48
    epochs: int = 100
    hidden_dim: int = 512
    aug_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        checks = [
            (self.delta >= 0, "delta must be >= 0"),
            (self.kappa >= 1, "kappa must be >= 1"),
            (self.lam >= 0, "lambda must be >= 0"),
            (self.mu > 0, "mu must be > 0"),
            (self.tau > 0, "tau must be > 0"),
            (self.lr >= 0, "lr must be >= 0"),
            (0 <= self.momentum < 1, "momentum must lie in [0, 1)"),
            (self.l2 >= 0, "l2 must be >= 0"),
            (self.batch_size >= 1, "batch_size must be >= 1"),
            (self.epochs >= 1, "epochs must be >= 1"),
            (self.hidden_dim >= 1, "hidden_dim must be >= 1"),
            (self.aug_sigma >= 0, "aug_sigma must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ParameterError(msg)

    def replace(self, **changes) -> "HyperParams":
        return replace(self, **changes)


# tensor order is the checkpoint order
PARAM_NAMES = (
    "state_w1",
    "state_b1",
    "state_w2",
    "state_b2",
    "action_w1",
    "action_b1",
    "action_w2",
    "action_b2",
)


@dataclass(frozen=True)
class ModelParams:
    """Weights of the state MLP (two-way head) and action MLP (one-way head)."""

    state_w1: np.ndarray
    state_b1: np.ndarray
    state_w2: np.ndarray
    state_b2: np.ndarray
    action_w1: np.ndarray
    action_b1: np.ndarray
    action_w2: np.ndarray
    action_b2: np.ndarray

    def __post_init__(self):
        H, d = np.shape(self.state_w1)
        expected = {
            "state_w1": (H, d),
            "state_b1": (H,),
            "state_w2": (2, H),
            "state_b2": (2,),
            "action_w1": (H, d),
            "action_b1": (H,),
            "action_w2": (1, H),
            "action_b2": (1,),
        }
        dtype = np.asarray(self.state_w1).dtype
        if dtype not in (np.float32, np.float64):
            dtype = np.float32
        for name in PARAM_NAMES:
            a = _frozen_array(getattr(self, name), dtype=dtype)
            if a.shape != expected[name]:
                raise ShapeError(f"{name} has shape {a.shape}, expected {expected[name]}")
            if not np.all(np.isfinite(a)):
                raise DataError(f"{name} contains non-finite entries")
            object.__setattr__(self, name, a)

    @property
    def d(self) -> int:
        return int(self.state_w1.shape[1])

    @property
    def hidden_dim(self) -> int:
        return int(self.state_w1.shape[0])

    @property
    def dtype(self) -> np.dtype:
        return self.state_w1.dtype

    def tensors(self) -> Iterator[tuple[str, np.ndarray]]:
        for name in PARAM_NAMES:
            yield name, getattr(self, name)

    def astype(self, dtype) -> "ModelParams":
        return ModelParams(**{n: np.asarray(a, dtype=dtype) for n, a in self.tensors()})

    def equals(self, other: "ModelParams") -> bool:
        """Bit-exact equality of every tensor."""
        return all(
            a.dtype == b.dtype and a.tobytes() == b.tobytes()
            for (_, a), (_, b) in zip(self.tensors(), other.tensors())
        )
