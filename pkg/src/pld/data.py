"""Video records, temporal clips and the dataset manifest format.

A dataset is a `dataset.json` manifest plus PLDT tensor files. Manifest
schema::

    {"videos": [{"id": str,
                 "frames": [paths...],
                 "segments": [[start, end], ...],   # half-open, covering
                 "labels": [0|1, ...],              # 1 = highlight
                 "saliency": [paths...],            # optional, one per frame
                 "domain": str }]}                  # optional

Paths are relative to the manifest's directory. Segment labels are already
binary; borderline source annotations are expected to arrive collapsed to 0
(non-highlight).
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import pldt
from .util import read_json, write_json


class DataError(ValueError):
    """A dataset, manifest or clip request is invalid."""


@dataclass(frozen=True, eq=False)
class VideoRecord:
    """One video: frames, a covering segment partition and per-segment labels."""

    video_id: str
    frames: tuple
    segments: tuple
    labels: tuple
    domain: str = "default"

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    def segment_of(self, t: int) -> int:
        """Index of the segment containing frame t."""
        for i, (start, end) in enumerate(self.segments):
            if start <= t < end:
                return i
        raise DataError(f"video {self.video_id}: frame {t} outside all segments")

    def frame_shape(self) -> tuple:
        return self.frames[0].shape

    def validate(self) -> None:
        vid = self.video_id
        if not self.frames:
            raise DataError(f"video {vid}: no frames")
        shape = self.frames[0].shape
        if len(shape) not in (2, 3):
            raise DataError(f"video {vid}: frames must be (H,W) or (3,H,W), got {shape}")
        for i, f in enumerate(self.frames):
            if f.shape != shape:
                raise DataError(
                    f"video {vid}: frame {i} shape {f.shape} differs from {shape}"
                )
        if len(self.labels) != len(self.segments):
            raise DataError(
                f"video {vid}: {len(self.labels)} labels for {len(self.segments)} segments"
            )
        for y in self.labels:
            if y not in (0, 1):
                raise DataError(f"video {vid}: label {y!r} not in {{0,1}}")
        cursor = 0
        for start, end in self.segments:
            if start != cursor or end <= start:
                raise DataError(
                    f"video {vid}: segments not covering [0, {self.frame_count}) "
                    f"(got [{start}, {end}) at position {cursor})"
                )
            cursor = end
        if cursor != self.frame_count:
            raise DataError(
                f"video {vid}: segments not covering [0, {self.frame_count}) "
                f"(end at {cursor})"
            )


@dataclass(frozen=True, eq=False)
class Clip:
    """Exactly L frames ordered oldest to target; the last one is frame t."""

    target_index: int
    frames: tuple

    def __len__(self) -> int:
        return len(self.frames)

    def to_array(self) -> np.ndarray:
        """Stack to (C, L, H, W) float32; grayscale frames become C=1."""
        stacked = np.stack(self.frames)  # (L,H,W) or (L,3,H,W)
        if stacked.ndim == 3:
            stacked = stacked[None]
        else:
            stacked = stacked.transpose(1, 0, 2, 3)
        return np.ascontiguousarray(stacked, dtype=np.float32)


def build_clip(video: VideoRecord, t: int, length: int) -> Clip:
    """The sliding-window clip ending at frame t.

    Offsets before the start of the video are mirrored about frame 0 without
    repeating the boundary, so t=0 with length 3 yields [f2, f1, f0].
    """
    _check_clip_args(video, t, length)
    frames = []
    for k in range(length):
        m = t - length + 1 + k
        if m < 0:
            m = -m
        frames.append(video.frames[m])
    return Clip(t, tuple(frames))


def build_clip_no_temporal(video: VideoRecord, t: int, length: int) -> Clip:
    """Ablation clip: the target frame duplicated to fill all L positions."""
    _check_clip_args(video, t, length)
    return Clip(t, (video.frames[t],) * length)


def _check_clip_args(video: VideoRecord, t: int, length: int) -> None:
    n = video.frame_count
    if not 0 <= t < n:
        raise DataError(f"video {video.video_id}: frame {t} out of range [0, {n})")
    if not 1 <= length <= n:
        raise DataError(
            f"video {video.video_id}: clip length {length} not in [1, {n}]"
        )


@dataclass
class Dataset:
    """Loaded videos plus optional per-video saliency mask sequences."""

    videos: list = field(default_factory=list)
    saliency: dict = field(default_factory=dict)

    def video(self, video_id: str) -> VideoRecord:
        for v in self.videos:
            if v.video_id == video_id:
                return v
        raise DataError(f"unknown video id {video_id!r}")

    def has_saliency(self) -> bool:
        return all(v.video_id in self.saliency for v in self.videos)


def load_dataset(manifest_path) -> Dataset:
    """Read a manifest and all referenced PLDT files, validating everything."""
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise DataError(f"manifest not found: {manifest_path}")
    doc = read_json(manifest_path)
    base = manifest_path.parent
    if not isinstance(doc, dict) or "videos" not in doc:
        raise DataError(f"{manifest_path}: manifest must be an object with 'videos'")

    dataset = Dataset()
    for entry in doc["videos"]:
        vid = entry.get("id")
        if not vid:
            raise DataError(f"{manifest_path}: video entry without id")
        try:
            frames = tuple(pldt.read_tensor(base / p) for p in entry["frames"])
        except (OSError, pldt.PldtError) as exc:
            raise DataError(f"video {vid}: cannot read frame file: {exc}") from exc
        record = VideoRecord(
            video_id=vid,
            frames=frames,
            segments=tuple(tuple(s) for s in entry["segments"]),
            labels=tuple(int(y) for y in entry["labels"]),
            domain=entry.get("domain", "default"),
        )
        record.validate()
        dataset.videos.append(record)

        sal_paths = entry.get("saliency")
        if sal_paths:
            if len(sal_paths) != record.frame_count:
                raise DataError(
                    f"video {vid}: {len(sal_paths)} saliency files for "
                    f"{record.frame_count} frames"
                )
            try:
                masks = tuple(pldt.read_tensor(base / p) for p in sal_paths)
            except (OSError, pldt.PldtError) as exc:
                raise DataError(f"video {vid}: cannot read saliency file: {exc}") from exc
            spatial = record.frame_shape()[-2:]
            for i, m in enumerate(masks):
                if m.shape != spatial:
                    raise DataError(
                        f"video {vid}: saliency {i} shape {m.shape} != frame {spatial}"
                    )
                if (m < 0).any():
                    raise DataError(f"video {vid}: saliency {i} has negative values")
            dataset.saliency[vid] = masks
    return dataset


def write_dataset(dataset: Dataset, out_dir) -> Path:
    """Write manifest + PLDT files under `out_dir`; returns the manifest path."""
    out_dir = Path(out_dir)
    entries = []
    for video in dataset.videos:
        video.validate()
        vdir = f"videos/{video.video_id}"
        frame_paths = []
        for i, frame in enumerate(video.frames):
            rel = f"{vdir}/frame_{i:05d}.pldt"
            pldt.write_tensor(out_dir / rel, frame)
            frame_paths.append(rel)
        entry = {
            "id": video.video_id,
            "frames": frame_paths,
            "segments": [list(s) for s in video.segments],
            "labels": list(video.labels),
            "domain": video.domain,
        }
        masks = dataset.saliency.get(video.video_id)
        if masks is not None:
            sal_paths = []
            for i, mask in enumerate(masks):
                rel = f"{vdir}/saliency_{i:05d}.pldt"
                pldt.write_tensor(out_dir / rel, mask)
                sal_paths.append(rel)
            entry["saliency"] = sal_paths
        entries.append(entry)
    manifest = out_dir / "dataset.json"
    write_json(manifest, {"videos": entries})
    return manifest
