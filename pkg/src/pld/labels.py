"""Per-pixel pseudo-distinction labels derived from segment annotations.

Two generators:

* `basic_label`: every pixel of a highlight frame is 1, every pixel of a
  non-highlight frame is 0.
* `saliency_label`: non-highlight frames stay all-zero; on highlight frames
  a pixel is 1 exactly when its saliency value strictly exceeds the
  threshold beta (a value equal to beta maps to 0).

Saliency values are compared raw against beta, without normalization.
"""

from dataclasses import dataclass

import numpy as np

from .data import DataError, Dataset, VideoRecord

DEFAULT_BETA = 0.0005


@dataclass(frozen=True, eq=False)
class SaliencyMask:
    """Non-negative per-pixel saliency for one frame."""

    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2:
            raise DataError(f"saliency mask must be (H,W), got {self.values.shape}")
        if (self.values < 0).any():
            raise DataError("saliency mask has negative values")


@dataclass(frozen=True, eq=False)
class DistinctionMap:
    """Per-pixel distinction values in [0, 1] for one frame.

    Pseudo-label maps are exactly binary; maps predicted by the network lie
    strictly inside (0, 1).
    """

    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2:
            raise DataError(f"distinction map must be (H,W), got {self.values.shape}")
        if (self.values < 0).any() or (self.values > 1).any():
            raise DataError("distinction map values outside [0, 1]")


def _spatial_shape(video: VideoRecord) -> tuple:
    return video.frame_shape()[-2:]


def basic_label(frame_index: int, video: VideoRecord) -> DistinctionMap:
    """All-ones map if the frame's segment is highlight, all-zeros otherwise."""
    label = video.labels[video.segment_of(frame_index)]
    shape = _spatial_shape(video)
    fill = 1.0 if label == 1 else 0.0
    return DistinctionMap(np.full(shape, fill, dtype=np.float32))


def saliency_label(
    frame_index: int, video: VideoRecord, mask: SaliencyMask, beta: float
) -> DistinctionMap:
    """Saliency-gated map: on highlight frames, 1 where saliency > beta."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    shape = _spatial_shape(video)
    if mask.values.shape != shape:
        raise DataError(
            f"video {video.video_id}: mask shape {mask.values.shape} != frame {shape}"
        )
    label = video.labels[video.segment_of(frame_index)]
    if label != 1:
        return DistinctionMap(np.zeros(shape, dtype=np.float32))
    return DistinctionMap((mask.values > beta).astype(np.float32))


def saliency_sequence(dataset: Dataset, video_id: str) -> tuple:
    """One SaliencyMask per frame of the video, from files or the synthetic oracle.

    Rejects videos without saliency or with a frame-count mismatch.
    """
    video = dataset.video(video_id)
    masks = dataset.saliency.get(video_id)
    if masks is None:
        raise DataError(f"video {video_id}: no saliency masks available")
    if len(masks) != video.frame_count:
        raise DataError(
            f"video {video_id}: {len(masks)} saliency masks for "
            f"{video.frame_count} frames"
        )
    return tuple(SaliencyMask(m) for m in masks)
