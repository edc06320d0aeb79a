"""Segment scores from predicted distinction maps, plus map export.

A segment's score is the flat mean of every pixel of every evaluated frame's
predicted map: frames start, start+stride, ... within the segment. With
stride 1 that is the full per-frame sum; larger strides trade fidelity for
speed. Exported maps are written both as PLDT tensors and as 8-bit PGM
images (value = floor(255 * p + 0.5)).
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import pldt
from .data import DataError, Dataset, VideoRecord
from .model import PldNet
from .train import clip_builder


@dataclass(frozen=True)
class SegmentScore:
    video_id: str
    segment_index: int
    score: float


def segment_score(net, video: VideoRecord, segment_index: int,
                  stride: int = 1, temporal_mode: str = "sliding") -> SegmentScore:
    """Mean pixel distinction over every stride-th frame of the segment.

    `net` needs only `clip_len` and `predict(clip) -> (H, W) array`.
    """
    if stride < 1:
        raise DataError(f"stride must be >= 1, got {stride}")
    if not 0 <= segment_index < len(video.segments):
        raise DataError(
            f"video {video.video_id}: segment {segment_index} out of range"
        )
    start, end = video.segments[segment_index]
    if end <= start:
        raise DataError(f"video {video.video_id}: segment {segment_index} is empty")
    build = clip_builder(temporal_mode)
    total = 0.0
    count = 0
    for t in range(start, end, stride):
        m = net.predict(build(video, t, net.clip_len))
        total += float(m.sum(dtype=np.float64))
        count += m.size
    return SegmentScore(video.video_id, segment_index, total / count)


def score_dataset(net: PldNet, dataset: Dataset, stride: int = 1,
                  temporal_mode: str = "sliding") -> list:
    scores = []
    for video in dataset.videos:
        for s in range(len(video.segments)):
            scores.append(segment_score(net, video, s, stride, temporal_mode))
    return scores


def rank_segments(scores) -> list:
    """Descending by score; ties broken by ascending segment index, then id."""
    return sorted(scores, key=lambda s: (-s.score, s.segment_index, s.video_id))


def scores_to_json(scores) -> list:
    return [
        {"video_id": s.video_id, "segment_index": s.segment_index, "score": s.score}
        for s in scores
    ]


def scores_from_json(doc) -> list:
    return [SegmentScore(d["video_id"], int(d["segment_index"]), float(d["score"]))
            for d in doc]


def write_pgm(path, values: np.ndarray) -> None:
    """8-bit binary PGM of a [0,1] map; 0.5 rounds up to 128."""
    if values.ndim != 2:
        raise DataError(f"PGM wants a 2D map, got shape {values.shape}")
    levels = np.floor(values.astype(np.float64) * 255.0 + 0.5)
    levels = np.clip(levels, 0, 255).astype(np.uint8)
    h, w = values.shape
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(levels.tobytes(order="C"))


def export_distinction_maps(net, video: VideoRecord, out_dir,
                            stride: int = 1, temporal_mode: str = "sliding") -> list:
    """Write one PLDT + one PGM per evaluated frame; returns relative paths."""
    if stride < 1:
        raise DataError(f"stride must be >= 1, got {stride}")
    out_dir = Path(out_dir)
    build = clip_builder(temporal_mode)
    written = []
    for t in range(0, video.frame_count, stride):
        m = net.predict(build(video, t, net.clip_len))
        rel_pldt = f"{video.video_id}/frame_{t:05d}.pldt"
        rel_pgm = f"{video.video_id}/frame_{t:05d}.pgm"
        pldt.write_tensor(out_dir / rel_pldt, m)
        write_pgm(out_dir / rel_pgm, m)
        written += [rel_pldt, rel_pgm]
    return written
