"""Synthetic segmented videos with known ground truth and oracle saliency.

Two content modes:

* ``moving-square``: highlight segments show a bright square (intensity 1.0)
  drifting over a noisy dark background; non-highlight segments are
  background only.
* ``static-distractor``: every segment contains the square, but it moves
  only in highlight segments and sits still elsewhere, so single-frame
  appearance carries no class signal.

Background noise is normal around `background` with `noise_sigma`, truncated
to [0, background + 5 * noise_sigma], so a non-highlight frame can never
exceed that bound. Oracle saliency is 1.0 exactly on the square footprint
and 0 elsewhere. Output is deterministic per seed, byte for byte.
"""

from dataclasses import dataclass

import numpy as np

from .data import Dataset, VideoRecord
from .util import stable_rng

CONTENT_MODES = ("moving-square", "static-distractor")


@dataclass(frozen=True)
class SynthConfig:
    videos: int = 12
    segments_per_video: int = 8
    frames_per_segment: int = 100
    height: int = 32
    width: int = 32
    highlight_fraction: float = 0.5
    noise_sigma: float = 0.02
    background: float = 0.1
    square_size: int = 8
    content: str = "moving-square"
    id_prefix: str = "video"
    seed: int = 0

    def validate(self) -> None:
        for name in ("videos", "segments_per_video", "frames_per_segment", "height", "width"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 < self.highlight_fraction < 1.0:
            raise ValueError("highlight_fraction must be in (0, 1)")
        if self.content not in CONTENT_MODES:
            raise ValueError(f"content must be one of {CONTENT_MODES}")
        if not 1 <= self.square_size <= min(self.height, self.width):
            raise ValueError("square_size must fit inside the frame")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


def generate_synthetic(config: SynthConfig) -> Dataset:
    config.validate()
    dataset = Dataset()
    for v in range(config.videos):
        video_id = f"{config.id_prefix}_{v:03d}"
        rng = stable_rng(config.seed, f"synth:{config.id_prefix}:{v}")
        record, masks = _generate_video(video_id, config, rng)
        dataset.videos.append(record)
        dataset.saliency[video_id] = masks
    return dataset


def _segment_labels(config: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    n = config.segments_per_video
    count = int(round(config.highlight_fraction * n))
    count = max(1, min(n - 1, count)) if n > 1 else 1
    labels = np.zeros(n, dtype=np.int64)
    labels[rng.permutation(n)[:count]] = 1
    return labels


def _square_track(config: SynthConfig, rng: np.random.Generator, moving: bool) -> list:
    """Per-frame top-left (y, x) positions of the square within one segment."""
    h, w, size = config.height, config.width, config.square_size
    y = int(rng.integers(0, h - size + 1))
    x = int(rng.integers(0, w - size + 1))
    if not moving:
        return [(y, x)] * config.frames_per_segment

    vy, vx = 0, 0
    while vy == 0 and vx == 0:
        vy = int(rng.integers(-2, 3))
        vx = int(rng.integers(-2, 3))
    track = []
    for _ in range(config.frames_per_segment):
        track.append((y, x))
        y, vy = _bounce(y + vy, vy, h - size)
        x, vx = _bounce(x + vx, vx, w - size)
    return track


def _bounce(pos: int, vel: int, limit: int) -> tuple:
    if pos < 0:
        return -pos, -vel
    if pos > limit:
        return 2 * limit - pos, -vel
    return pos, vel


def _generate_video(video_id: str, config: SynthConfig, rng: np.random.Generator):
    labels = _segment_labels(config, rng)
    n_frames = config.segments_per_video * config.frames_per_segment
    hi = config.background + 5.0 * config.noise_sigma

    frames = []
    masks = []
    segments = []
    for s, label in enumerate(labels):
        start = s * config.frames_per_segment
        segments.append((start, start + config.frames_per_segment))

        if config.content == "moving-square":
            track = _square_track(config, rng, moving=True) if label else None
        else:
            track = _square_track(config, rng, moving=bool(label))

        for k in range(config.frames_per_segment):
            noise = rng.normal(config.background, config.noise_sigma, (config.height, config.width))
            frame = np.clip(noise, 0.0, hi).astype(np.float32)
            mask = np.zeros((config.height, config.width), dtype=np.float32)
            if track is not None:
                y, x = track[k]
                size = config.square_size
                frame[y : y + size, x : x + size] = 1.0
                mask[y : y + size, x : x + size] = 1.0
            frames.append(frame)
            masks.append(mask)

    record = VideoRecord(
        video_id=video_id,
        frames=tuple(frames),
        segments=tuple(segments),
        labels=tuple(int(y) for y in labels),
        domain="synthetic",
    )
    record.validate()
    assert len(frames) == n_frames
    return record, tuple(masks)
