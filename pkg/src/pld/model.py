"""The clip-to-distinction-map network and its checkpoint format.

Architecture: a stack of strided 3D conv + relu encoder stages that squeeze
the temporal extent down to 1, a decoder of nearest-neighbor upsample + conv
+ relu stages that restores the spatial size, and a 1x1x1 conv head with a
sigmoid, so the output is a (1, 1, H, W) map matching the target frame.

Configs are validated by walking the shape chain; construction fails naming
the first stage whose shapes do not work out.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import pldt
from .autograd import Parameter, ShapeError, Tensor, conv3d, relu, sigmoid, upsample3d_nearest
from .data import Clip
from .util import read_json, stable_rng, write_json

CHECKPOINT_FORMAT = "pld-checkpoint-v1"


class ConfigError(ValueError):
    """A network configuration does not produce a valid shape chain."""


@dataclass(frozen=True)
class ConvSpec:
    out_channels: int
    kernel: tuple
    stride: tuple = (1, 1, 1)
    padding: tuple = (0, 0, 0)


@dataclass(frozen=True)
class DecoderSpec:
    factors: tuple
    conv: ConvSpec


@dataclass(frozen=True)
class NetConfig:
    clip_len: int
    height: int
    width: int
    in_channels: int = 1
    encoder: tuple = ()
    decoder: tuple = ()

    def to_dict(self) -> dict:
        return {
            "clip_len": self.clip_len,
            "height": self.height,
            "width": self.width,
            "in_channels": self.in_channels,
            "encoder": [
                {"out_channels": s.out_channels, "kernel": list(s.kernel),
                 "stride": list(s.stride), "padding": list(s.padding)}
                for s in self.encoder
            ],
            "decoder": [
                {"factors": list(d.factors),
                 "out_channels": d.conv.out_channels, "kernel": list(d.conv.kernel),
                 "stride": list(d.conv.stride), "padding": list(d.conv.padding)}
                for d in self.decoder
            ],
        }

    @staticmethod
    def from_dict(doc: dict) -> "NetConfig":
        enc = tuple(
            ConvSpec(s["out_channels"], tuple(s["kernel"]), tuple(s["stride"]), tuple(s["padding"]))
            for s in doc["encoder"]
        )
        dec = tuple(
            DecoderSpec(
                tuple(d["factors"]),
                ConvSpec(d["out_channels"], tuple(d["kernel"]), tuple(d["stride"]), tuple(d["padding"])),
            )
            for d in doc["decoder"]
        )
        return NetConfig(
            clip_len=doc["clip_len"],
            height=doc["height"],
            width=doc["width"],
            in_channels=doc["in_channels"],
            encoder=enc,
            decoder=dec,
        )


def _conv_out(dims, spec: ConvSpec, stage: str):
    out = []
    for n, k, s, p in zip(dims, spec.kernel, spec.stride, spec.padding):
        if s < 1:
            raise ConfigError(f"{stage}: stride {spec.stride} has a component < 1")
        if p < 0:
            raise ConfigError(f"{stage}: padding {spec.padding} has a component < 0")
        if n + 2 * p < k:
            raise ConfigError(
                f"{stage}: kernel {spec.kernel} does not fit input extent {tuple(dims)} "
                f"with padding {spec.padding}"
            )
        out.append((n + 2 * p - k) // s + 1)
    return tuple(out)


def shape_chain(config: NetConfig) -> list:
    """Per-stage output shapes (C, T, H, W); raises ConfigError on a bad stage."""
    chain = [(config.in_channels, config.clip_len, config.height, config.width)]
    dims = (config.clip_len, config.height, config.width)
    channels = config.in_channels
    for i, spec in enumerate(config.encoder):
        dims = _conv_out(dims, spec, f"encoder stage {i}")
        channels = spec.out_channels
        chain.append((channels, *dims))
    if dims[0] != 1:
        raise ConfigError(
            f"encoder leaves temporal extent {dims[0]}, must reduce it to 1"
        )
    for i, dec in enumerate(config.decoder):
        if min(dec.factors) < 1:
            raise ConfigError(f"decoder stage {i}: upsample factors {dec.factors} must be >= 1")
        dims = tuple(n * f for n, f in zip(dims, dec.factors))
        dims = _conv_out(dims, dec.conv, f"decoder stage {i}")
        channels = dec.conv.out_channels
        chain.append((channels, *dims))
    if dims != (1, config.height, config.width):
        raise ConfigError(
            f"decoder output extent {tuple(dims)} != (1, {config.height}, {config.width})"
        )
    chain.append((1, *dims))  # head: 1x1x1 conv to a single channel
    return chain


def default_config(clip_len: int = 4, height: int = 32, width: int = 32,
                   in_channels: int = 1) -> NetConfig:
    """Small production config: 2 strided encoder stages, mirrored decoder.

    Spatial size must be divisible by 4 (two stride-2 stages). Clip lengths
    the two stages cannot reduce to 1 get one extra temporal-collapse conv.
    """
    if height % 4 or width % 4 or height < 4 or width < 4:
        raise ConfigError(f"height/width must be multiples of 4, got {height}x{width}")
    if clip_len < 1:
        raise ConfigError(f"clip_len must be >= 1, got {clip_len}")
    encoder = [
        ConvSpec(8, (3, 3, 3), (2, 2, 2), (1, 1, 1)),
        ConvSpec(16, (3, 3, 3), (2, 2, 2), (1, 1, 1)),
    ]
    t = clip_len
    for spec in encoder:
        t = (t + 2 * spec.padding[0] - spec.kernel[0]) // spec.stride[0] + 1
    if t > 1:
        encoder.append(ConvSpec(16, (t, 1, 1), (1, 1, 1), (0, 0, 0)))
    decoder = (
        DecoderSpec((1, 2, 2), ConvSpec(8, (1, 3, 3), (1, 1, 1), (0, 1, 1))),
        DecoderSpec((1, 2, 2), ConvSpec(8, (1, 3, 3), (1, 1, 1), (0, 1, 1))),
    )
    return NetConfig(clip_len, height, width, in_channels, tuple(encoder), decoder)


def toy_config(clip_len: int = 4, height: int = 8, width: int = 8,
               in_channels: int = 1) -> NetConfig:
    """Sub-500-parameter config used by the gradient-check harness."""
    if height % 4 or width % 4:
        raise ConfigError(f"height/width must be multiples of 4, got {height}x{width}")
    encoder = [
        ConvSpec(2, (3, 3, 3), (2, 2, 2), (1, 1, 1)),
        ConvSpec(4, (3, 3, 3), (2, 2, 2), (1, 1, 1)),
    ]
    t = clip_len
    for spec in encoder:
        t = (t + 2 * spec.padding[0] - spec.kernel[0]) // spec.stride[0] + 1
    if t > 1:
        encoder.append(ConvSpec(4, (t, 1, 1), (1, 1, 1), (0, 0, 0)))
    decoder = (
        DecoderSpec((1, 2, 2), ConvSpec(2, (1, 3, 3), (1, 1, 1), (0, 1, 1))),
        DecoderSpec((1, 2, 2), ConvSpec(2, (1, 3, 3), (1, 1, 1), (0, 1, 1))),
    )
    return NetConfig(clip_len, height, width, in_channels, tuple(encoder), decoder)


NAMED_CONFIGS = {"default": default_config, "toy": toy_config}


class PldNet:
    """Encoder-decoder distinction estimator over L-frame clips."""

    def __init__(self, config: NetConfig, params: dict):
        self.config = config
        self.params = params  # name -> Parameter, insertion-ordered

    @staticmethod
    def param_names(config: NetConfig) -> list:
        names = []
        for i in range(len(config.encoder)):
            names += [f"enc{i:02d}.weight", f"enc{i:02d}.bias"]
        for i in range(len(config.decoder)):
            names += [f"dec{i:02d}.weight", f"dec{i:02d}.bias"]
        names += ["head.weight", "head.bias"]
        return names

    @staticmethod
    def _weight_shapes(config: NetConfig) -> dict:
        shape_chain(config)
        shapes = {}
        cin = config.in_channels
        for i, spec in enumerate(config.encoder):
            shapes[f"enc{i:02d}.weight"] = (spec.out_channels, cin, *spec.kernel)
            shapes[f"enc{i:02d}.bias"] = (spec.out_channels,)
            cin = spec.out_channels
        for i, dec in enumerate(config.decoder):
            shapes[f"dec{i:02d}.weight"] = (dec.conv.out_channels, cin, *dec.conv.kernel)
            shapes[f"dec{i:02d}.bias"] = (dec.conv.out_channels,)
            cin = dec.conv.out_channels
        shapes["head.weight"] = (1, cin, 1, 1, 1)
        shapes["head.bias"] = (1,)
        return shapes

    @classmethod
    def init(cls, config: NetConfig, seed: int) -> "PldNet":
        """Glorot-uniform weights, zero biases, deterministic per seed."""
        rng = stable_rng(seed, "model:init")
        params = {}
        for name, shape in cls._weight_shapes(config).items():
            if name.endswith(".bias"):
                params[name] = Parameter(np.zeros(shape, dtype=np.float32), name)
                continue
            cout, cin = shape[0], shape[1]
            k = int(np.prod(shape[2:]))
            bound = np.sqrt(6.0 / (cin * k + cout * k))
            data = rng.uniform(-bound, bound, size=shape).astype(np.float32)
            params[name] = Parameter(data, name)
        return cls(config, params)

    def parameters(self) -> list:
        return list(self.params.values())

    def param_count(self) -> int:
        return sum(p.size for p in self.parameters())

    @property
    def clip_len(self) -> int:
        return self.config.clip_len

    def forward(self, clip: Clip) -> Tensor:
        """Graph-building pass: clip in, (1, 1, H, W) map node out."""
        arr = clip.to_array()
        expected = (self.config.in_channels, self.config.clip_len,
                    self.config.height, self.config.width)
        if arr.shape != expected:
            raise ShapeError(f"clip tensor shape {arr.shape}, expected {expected}")
        x = Tensor(arr)
        for i, spec in enumerate(self.config.encoder):
            x = relu(conv3d(x, self.params[f"enc{i:02d}.weight"],
                            self.params[f"enc{i:02d}.bias"], spec.stride, spec.padding))
        for i, dec in enumerate(self.config.decoder):
            x = upsample3d_nearest(x, dec.factors)
            x = relu(conv3d(x, self.params[f"dec{i:02d}.weight"],
                            self.params[f"dec{i:02d}.bias"], dec.conv.stride, dec.conv.padding))
        x = conv3d(x, self.params["head.weight"], self.params["head.bias"])
        return sigmoid(x)

    def predict(self, clip: Clip) -> np.ndarray:
        """Inference-only (H, W) float32 distinction map for the clip's target."""
        out = self.forward(clip)
        return out.data.reshape(self.config.height, self.config.width).copy()


def save_checkpoint(net: PldNet, out_dir, seed: int, epoch: int, train_info: dict) -> Path:
    """Write checkpoint.json plus one PLDT file per parameter under params/."""
    out_dir = Path(out_dir)
    names = PldNet.param_names(net.config)
    for name in names:
        pldt.write_tensor(out_dir / "params" / f"{name}.pldt", net.params[name].data)
    doc = {
        "format": CHECKPOINT_FORMAT,
        "config": net.config.to_dict(),
        "seed": seed,
        "epoch": epoch,
        "train": train_info,
        "params": [f"params/{name}.pldt" for name in names],
    }
    path = out_dir / "checkpoint.json"
    write_json(path, doc)
    return path


def load_checkpoint(ckpt_dir):
    """Rebuild (net, checkpoint doc) from a checkpoint directory."""
    ckpt_dir = Path(ckpt_dir)
    path = ckpt_dir / "checkpoint.json"
    if not path.is_file():
        raise ConfigError(f"no checkpoint.json under {ckpt_dir}")
    doc = read_json(path)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ConfigError(f"{path}: unknown checkpoint format {doc.get('format')!r}")
    config = NetConfig.from_dict(doc["config"])
    shapes = PldNet._weight_shapes(config)
    params = {}
    for name in PldNet.param_names(config):
        arr = pldt.read_tensor(ckpt_dir / "params" / f"{name}.pldt")
        if arr.shape != shapes[name]:
            raise ConfigError(
                f"{path}: parameter {name} has shape {arr.shape}, expected {shapes[name]}"
            )
        params[name] = Parameter(arr, name)
    return PldNet(config, params), doc
