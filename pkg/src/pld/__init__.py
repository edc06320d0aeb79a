"""Pixel-level distinction video highlight detection.

Pipeline: synthesize or load a segmented video dataset, derive per-pixel
pseudo-labels from segment annotations (optionally gated by saliency masks),
train a small 3D convolutional encoder-decoder with an MSE objective, score
segments by averaging predicted per-pixel distinctions, and evaluate the
segment ranking with mean average precision.
"""

__version__ = "0.1.0"
