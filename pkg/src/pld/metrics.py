"""Ranking metrics: average precision, truncated AP@k, and dataset rollups.

`average_precision` follows the usual retrieval definition: the mean, over
the positives, of precision at each positive's rank. `ap_at_k` truncates the
ranked list to its first k entries and normalizes by min(total positives, k),
which reduces to plain AP whenever k covers the whole list. Videos without a
single positive segment score 0 and stay in the mean; reports say so.
"""

import warnings

from .data import DataError, Dataset
from .score import rank_segments

METRIC_DEFINITIONS = {
    "map": "mean over videos of average precision of binary highlight labels "
           "under the predicted segment ranking",
    "ap5": "mean over videos of AP truncated to the top 5 ranked segments, "
           "normalized by min(positives, 5)",
}
ZERO_POSITIVE_POLICY = "videos with no positive segment score 0 and are included in the mean"


def average_precision(ranked) -> float:
    """AP of a binary relevance list already sorted by descending score."""
    _check_binary(ranked)
    positives = sum(ranked)
    if positives == 0:
        warnings.warn("ranked list has no positives; average precision is 0")
        return 0.0
    hits = 0
    total = 0.0
    for k, rel in enumerate(ranked, start=1):
        if rel:
            hits += 1
            total += hits / k
    return total / positives


def ap_at_k(ranked, k: int) -> float:
    """AP over the first min(k, len) entries, normalized by min(positives, k)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    _check_binary(ranked)
    positives = sum(ranked)
    denom = min(positives, k)
    if denom == 0:
        return 0.0
    hits = 0
    total = 0.0
    for rank, rel in enumerate(ranked[:k], start=1):
        if rel:
            hits += 1
            total += hits / rank
    return total / denom


def _check_binary(ranked) -> None:
    for r in ranked:
        if r not in (0, 1):
            raise ValueError(f"relevance values must be 0 or 1, got {r!r}")


def ranked_labels(scores, video) -> list:
    """Ground-truth labels of one video's segments in ranked-score order."""
    own = [s for s in scores if s.video_id == video.video_id]
    seen = {s.segment_index for s in own}
    expected = set(range(len(video.segments)))
    if seen != expected:
        missing = sorted(expected - seen)
        extra = sorted(seen - expected)
        raise DataError(
            f"video {video.video_id}: scored segments do not match ground truth "
            f"(missing {missing}, unknown {extra})"
        )
    return [video.labels[s.segment_index] for s in rank_segments(own)]


def map_eval(scores, dataset: Dataset, metric: str = "map", k: int = 5) -> dict:
    """Per-video AP (or AP@k), per-domain means and the overall mean."""
    if metric not in METRIC_DEFINITIONS:
        raise ValueError(f"metric must be one of {tuple(METRIC_DEFINITIONS)}")
    if not dataset.videos:
        raise DataError("cannot evaluate an empty dataset")
    known = {(v.video_id, i) for v in dataset.videos for i in range(len(v.segments))}
    for s in scores:
        if (s.video_id, s.segment_index) not in known:
            raise DataError(
                f"scored segment ({s.video_id}, {s.segment_index}) not in dataset"
            )

    per_video = {}
    domains = {}
    zero_positive = []
    for video in dataset.videos:
        ranked = ranked_labels(scores, video)
        if sum(ranked) == 0:
            zero_positive.append(video.video_id)
        if metric == "map":
            ap = average_precision(ranked) if sum(ranked) else 0.0
        else:
            ap = ap_at_k(ranked, k)
        per_video[video.video_id] = ap
        domains.setdefault(video.domain, []).append(ap)

    per_domain = {d: sum(v) / len(v) for d, v in domains.items()}
    overall = sum(per_video.values()) / len(per_video)
    return {
        "metric": metric,
        "definition": METRIC_DEFINITIONS[metric],
        "k": k if metric == "ap5" else None,
        "per_video": per_video,
        "per_domain": per_domain,
        "overall": overall,
        "zero_positive_videos": zero_positive,
        "zero_positive_policy": ZERO_POSITIVE_POLICY,
    }
