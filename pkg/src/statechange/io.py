"""Binary feature/checkpoint files and the JSON dataset manifest.

Feature file ("LFTC"), all little-endian::

    magic   4 bytes  b"LFTC"
    version u32      1
    T       u32
    d       u32
    payload T*d f32  row-major, frame after frame

Checkpoint file ("LFTM")::

    magic   4 bytes  b"LFTM"
    version u32      1
    d       u32
    hidden  u32
    payload f32      tensors in PARAM_NAMES order, each row-major
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import (
    PARAM_NAMES,
    DataError,
    ExemplarSet,
    FormatError,
    GroundTruth,
    LengthError,
    ModelParams,
    ShapeError,
    ValidationError,
    VideoFeatures,
)

FEATURE_MAGIC = b"LFTC"
CHECKPOINT_MAGIC = b"LFTM"
VERSION = 1
_HEADER = struct.Struct("<4sIII")
_F32 = np.dtype("<f4")


def _read_header(buf: bytes, magic: bytes, path) -> tuple[int, int]:
    if len(buf) < 4 or buf[:4] != magic:
        raise FormatError(f"{path}: bad magic {buf[:4]!r}, expected {magic!r}")
    if len(buf) < _HEADER.size:
        raise LengthError(f"{path}: truncated header")
    _, version, a, b = _HEADER.unpack_from(buf)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    return a, b


def write_frames(frames: np.ndarray, path) -> None:
    """Write a raw (n, d) array in feature-file layout, without the T >= 3 rule."""
    frames = np.asarray(frames)
    if frames.ndim != 2:
        raise ShapeError(f"expected a 2-D array, got shape {frames.shape}")
    payload = np.ascontiguousarray(frames, dtype=_F32)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FEATURE_MAGIC, VERSION, frames.shape[0], frames.shape[1]))
        fh.write(payload.tobytes())


def read_frames(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    T, d = _read_header(buf, FEATURE_MAGIC, path)
    need = _HEADER.size + 4 * T * d
    if len(buf) < need:
        raise LengthError(f"{path}: payload holds {len(buf) - _HEADER.size} bytes, header claims {4 * T * d}")
    if len(buf) > need:
        raise LengthError(f"{path}: {len(buf) - need} trailing bytes")
    frames = np.frombuffer(buf, dtype=_F32, count=T * d, offset=_HEADER.size).reshape(T, d)
    if not np.all(np.isfinite(frames)):
        raise DataError(f"{path}: non-finite feature value")
    return frames.astype(np.float32)


def write_feature_file(v: VideoFeatures, path) -> None:
    if not isinstance(v, VideoFeatures):
        # re-validate raw input through the type
        v = VideoFeatures("", v)
    write_frames(v.frames, path)


def read_feature_file(path, video_id: Optional[str] = None) -> VideoFeatures:
    frames = read_frames(path)
    return VideoFeatures(video_id if video_id is not None else Path(path).stem, frames)


def save_checkpoint(m: ModelParams, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CHECKPOINT_MAGIC, VERSION, m.d, m.hidden_dim))
        for _, a in m.tensors():
            fh.write(np.ascontiguousarray(a, dtype=_F32).tobytes())


def _param_shapes(d: int, H: int) -> dict[str, tuple[int, ...]]:
    return {
        "state_w1": (H, d),
        "state_b1": (H,),
        "state_w2": (2, H),
        "state_b2": (2,),
        "action_w1": (H, d),
        "action_b1": (H,),
        "action_w2": (1, H),
        "action_b2": (1,),
    }


def load_checkpoint(path, d: Optional[int] = None, hidden_dim: Optional[int] = None) -> ModelParams:
    """Load a checkpoint; ``d``/``hidden_dim`` if given must match the file."""
    buf = Path(path).read_bytes()
    fd, fh = _read_header(buf, CHECKPOINT_MAGIC, path)
    if d is not None and d != fd:
        raise ShapeError(f"{path}: checkpoint feature dimension {fd} != expected {d}")
    if hidden_dim is not None and hidden_dim != fh:
        raise ShapeError(f"{path}: checkpoint hidden dimension {fh} != expected {hidden_dim}")
    shapes = _param_shapes(fd, fh)
    n = sum(int(np.prod(s)) for s in shapes.values())
    if len(buf) != _HEADER.size + 4 * n:
        raise LengthError(f"{path}: expected {4 * n} payload bytes, found {len(buf) - _HEADER.size}")
    flat = np.frombuffer(buf, dtype=_F32, count=n, offset=_HEADER.size).astype(np.float32)
    tensors, pos = {}, 0
    for name in PARAM_NAMES:
        size = int(np.prod(shapes[name]))
        tensors[name] = flat[pos : pos + size].reshape(shapes[name])
        pos += size
    return ModelParams(**tensors)


def write_exemplars(e: ExemplarSet, features_path, sidecar_path) -> None:
    write_frames(np.vstack([e.initial, e.end]), features_path)
    Path(sidecar_path).write_text(json.dumps({"n_initial": int(e.initial.shape[0]), "n_end": int(e.end.shape[0])}, sort_keys=True) + "\n")


def read_exemplars(features_path, sidecar_path) -> ExemplarSet:
    frames = read_frames(features_path)
    split = json.loads(Path(sidecar_path).read_text())
    k1, k2 = int(split["n_initial"]), int(split.get("n_end", frames.shape[0] - int(split["n_initial"])))
    if k1 + k2 != frames.shape[0]:
        raise FormatError(f"{sidecar_path}: split {k1}+{k2} does not match {frames.shape[0]} stored vectors")
    return ExemplarSet(frames[:k1], frames[k1:])


@dataclass(frozen=True)
class VideoEntry:
    id: str
    features: Path
    gt: Optional[GroundTruth] = None
    segments: Optional[tuple[tuple[int, int], ...]] = None


@dataclass(frozen=True)
class Manifest:
    """One category: its videos and a reference to the exemplar files."""

    category: str
    videos: tuple[VideoEntry, ...]
    exemplar_features: Path
    exemplar_sidecar: Path
    root: Path = field(default=Path("."))

    def load_videos(self) -> list[VideoFeatures]:
        out = []
        for entry in self.videos:
            v = read_feature_file(entry.features, entry.id)
            if entry.gt is not None and len(entry.gt) != v.T:
                raise ShapeError(f"video {entry.id!r}: ground truth length {len(entry.gt)} != T={v.T}")
            out.append(v)
        return out

    def load_exemplars(self) -> ExemplarSet:
        return read_exemplars(self.exemplar_features, self.exemplar_sidecar)

    def ground_truth(self) -> dict[str, GroundTruth]:
        return {e.id: e.gt for e in self.videos if e.gt is not None}

    def segments(self) -> dict[str, tuple[tuple[int, int], ...]]:
        return {e.id: e.segments for e in self.videos if e.segments is not None}


def _rel(p: Path, root: Path) -> str:
    try:
        return Path(p).relative_to(root).as_posix()
    except ValueError:
        return str(p)


def manifest_to_dict(m: Manifest) -> dict:
    videos = []
    for e in m.videos:
        rec = {"id": e.id, "features": _rel(e.features, m.root)}
        if e.gt is not None:
            rec["gt"] = e.gt.labels
        if e.segments is not None:
            rec["segments"] = [list(s) for s in e.segments]
        videos.append(rec)
    return {
        "category": m.category,
        "exemplars": {"features": _rel(m.exemplar_features, m.root), "sidecar": _rel(m.exemplar_sidecar, m.root)},
        "videos": videos,
    }


def save_manifest(m: Manifest, path) -> None:
    Path(path).write_text(json.dumps(manifest_to_dict(m), indent=1, sort_keys=True) + "\n")


def load_manifest(path) -> Manifest:
    """Parse a manifest; relative paths resolve against the manifest's directory."""
    path = Path(path)
    root = path.parent
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    for key in ("category", "videos", "exemplars"):
        if key not in doc:
            raise FormatError(f"{path}: missing key {key!r}")

    def resolve(p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else root / q

    ex = doc["exemplars"]
    ex_feat, ex_side = resolve(ex["features"]), resolve(ex["sidecar"])
    for p in (ex_feat, ex_side):
        if not p.is_file():
            raise ValidationError(f"{path}: exemplar reference {p} does not exist")

    seen = set()
    entries = []
    for rec in doc["videos"]:
        vid = str(rec["id"])
        if vid in seen:
            raise ValidationError(f"{path}: duplicate video id {vid!r}")
        seen.add(vid)
        gt = GroundTruth(rec["gt"]) if rec.get("gt") is not None else None
        segs = rec.get("segments")
        segs = tuple((int(a), int(b)) for a, b in segs) if segs is not None else None
        entries.append(VideoEntry(vid, resolve(rec["features"]), gt, segs))
    return Manifest(str(doc["category"]), tuple(entries), ex_feat, ex_side, root)
