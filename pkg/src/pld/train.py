"""Training loop: per-frame MSE between predicted and pseudo-label maps.

Each sampled target frame is one optimizer step (batch size 1): build the
clip for the configured temporal mode, build the label map for the
configured label mode, take the MSE gradient, update. The per-epoch loss in
the report is measured by a separate frozen-weights pass over the same
(clip, label) pairs after the epoch's updates, so it can be recomputed
independently.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .autograd import Tensor, backward, mse_loss
from .data import Dataset, build_clip, build_clip_no_temporal
from .labels import DEFAULT_BETA, basic_label, saliency_label, saliency_sequence
from .model import NetConfig, PldNet, default_config
from .optim import SGD
from .util import derive_seed, stable_rng

LABEL_MODES = ("basic", "saliency")
TEMPORAL_MODES = ("sliding", "duplicate")


class TrainError(RuntimeError):
    """Training aborted (bad configuration or diverged optimization)."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    lr: float = 0.05
    momentum: float = 0.9
    clip_len: int = 4
    beta: float = DEFAULT_BETA
    frames_per_segment_sampled: int = 8
    label_mode: str = "saliency"
    temporal_mode: str = "sliding"
    seed: int = 0

    def validate(self) -> None:
        if self.epochs < 1:
            raise TrainError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr <= 0:
            raise TrainError(f"lr must be > 0, got {self.lr}")
        if self.clip_len < 1:
            raise TrainError(f"clip_len must be >= 1, got {self.clip_len}")
        if self.beta < 0:
            raise TrainError(f"beta must be >= 0, got {self.beta}")
        if self.frames_per_segment_sampled < 1:
            raise TrainError("frames_per_segment_sampled must be >= 1")
        if self.label_mode not in LABEL_MODES:
            raise TrainError(f"label_mode must be one of {LABEL_MODES}")
        if self.temporal_mode not in TEMPORAL_MODES:
            raise TrainError(f"temporal_mode must be one of {TEMPORAL_MODES}")


@dataclass
class TrainReport:
    epoch_losses: list = field(default_factory=list)
    wall_clock_seconds: float = 0.0
    checkpoint_path: str = ""

    def to_dict(self) -> dict:
        return {
            "epoch_losses": [float(x) for x in self.epoch_losses],
            "wall_clock_seconds": self.wall_clock_seconds,
            "checkpoint_path": self.checkpoint_path,
        }


def clip_builder(temporal_mode: str):
    if temporal_mode == "sliding":
        return build_clip
    if temporal_mode == "duplicate":
        return build_clip_no_temporal
    raise TrainError(f"unknown temporal mode {temporal_mode!r}")


def sample_targets(dataset: Dataset, per_segment: int, seed: int) -> list:
    """(video_id, frame) pairs: `per_segment` frames drawn without replacement
    from every segment of every video, clamped to the segment length."""
    if per_segment < 1:
        raise TrainError(f"per_segment must be >= 1, got {per_segment}")
    rng = stable_rng(seed, "sample-targets")
    targets = []
    for video in dataset.videos:
        for start, end in video.segments:
            count = min(per_segment, end - start)
            picks = rng.choice(end - start, size=count, replace=False)
            for offset in np.sort(picks):
                targets.append((video.video_id, start + int(offset)))
    return targets


def training_pairs(dataset: Dataset, config: TrainConfig, epoch: int) -> list:
    """The exact (clip, label-values) pairs a given epoch trains on, in order."""
    videos = {v.video_id: v for v in dataset.videos}
    if config.label_mode == "saliency":
        masks = {v.video_id: saliency_sequence(dataset, v.video_id) for v in dataset.videos}
    else:
        masks = {}

    epoch_seed = derive_seed(config.seed, f"epoch:{epoch}")
    targets = sample_targets(dataset, config.frames_per_segment_sampled, epoch_seed)
    stable_rng(epoch_seed, "order").shuffle(targets)

    build = clip_builder(config.temporal_mode)
    pairs = []
    for vid, t in targets:
        video = videos[vid]
        clip = build(video, t, config.clip_len)
        if config.label_mode == "basic":
            label = basic_label(t, video)
        else:
            label = saliency_label(t, video, masks[vid][t], config.beta)
        pairs.append((clip, label.values))
    return pairs


def _pair_loss(net: PldNet, clip, label_values: np.ndarray):
    pred = net.forward(clip)
    target = Tensor(label_values.reshape(pred.shape))
    return mse_loss(pred, target)


def evaluate_mean_loss(net: PldNet, pairs) -> float:
    """Mean MSE over (clip, label-values) pairs with the weights held fixed."""
    total = 0.0
    for clip, label_values in pairs:
        total += float(_pair_loss(net, clip, label_values).data)
    return total / len(pairs)


def train(dataset: Dataset, config: TrainConfig, net_config: NetConfig = None):
    """Optimize a fresh net on the dataset; returns (net, TrainReport).

    Deterministic for a fixed config: sampling order, initialization and
    updates all derive from `config.seed`.
    """
    config.validate()
    if not dataset.videos:
        raise TrainError("dataset has no videos")
    if config.label_mode == "saliency" and not dataset.has_saliency():
        missing = [v.video_id for v in dataset.videos if v.video_id not in dataset.saliency]
        raise TrainError(f"label_mode=saliency but videos lack saliency masks: {missing}")

    spatial = dataset.videos[0].frame_shape()
    in_channels = 1 if len(spatial) == 2 else spatial[0]
    if net_config is None:
        net_config = default_config(config.clip_len, spatial[-2], spatial[-1], in_channels)

    net = PldNet.init(net_config, config.seed)
    opt = SGD(net.parameters(), lr=config.lr, momentum=config.momentum)
    report = TrainReport()
    started = time.perf_counter()

    for epoch in range(config.epochs):
        pairs = training_pairs(dataset, config, epoch)
        for step, (clip, label_values) in enumerate(pairs):
            loss = _pair_loss(net, clip, label_values)
            value = float(loss.data)
            if not np.isfinite(value):
                raise TrainError(f"non-finite loss {value} at epoch {epoch} step {step}")
            opt.zero_grads()
            backward(loss)
            opt.step()
        report.epoch_losses.append(evaluate_mean_loss(net, pairs))

    report.wall_clock_seconds = time.perf_counter() - started
    return net, report
