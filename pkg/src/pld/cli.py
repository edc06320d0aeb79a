"""`pld`: synth / train / infer / score / eval / gradcheck.

Every subcommand resolves its full configuration, runs, and drops a
`run_manifest.json` (or `<file>.manifest.json` for single-file outputs) next
to what it wrote: command, resolved config, seed, artifact paths, tool
version. Re-running a manifest's command reproduces the artifacts byte for
byte. Failures print one JSON line to stderr with an error category and exit
1; usage errors exit 2.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .autograd import ShapeError, Tensor, mse_loss
from .data import DataError, VideoRecord, build_clip, load_dataset, write_dataset
from .gradcheck import finite_difference_check
from .labels import DEFAULT_BETA
from .metrics import map_eval
from .model import (ConfigError, NAMED_CONFIGS, PldNet, load_checkpoint,
                    save_checkpoint)
from .optim import OptimError
from .pldt import PldtError
from .score import export_distinction_maps, score_dataset, scores_from_json, scores_to_json
from .synthetic import CONTENT_MODES, SynthConfig, generate_synthetic
from .train import LABEL_MODES, TEMPORAL_MODES, TrainConfig, TrainError, train
from .util import read_json, stable_rng, write_json

_ERROR_CATEGORIES = (
    (TrainError, "training"),
    (OptimError, "training"),
    (ConfigError, "config"),
    (ShapeError, "shape"),
    (PldtError, "io"),
    (DataError, "data"),
    (OSError, "io"),
    (ValueError, "config"),
)


def _run_manifest(command: str, args: argparse.Namespace, out_dir: Path,
                  artifacts, name: str = "run_manifest.json") -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    # the output location is wherever this manifest sits, so store it
    # normalized; identical runs into different directories stay byte-equal
    if "out" in config:
        out_path = Path(config["out"])
        config["out"] = "." if out_path.resolve() == out_dir.resolve() else out_path.name
    doc = {
        "command": command,
        "version": __version__,
        "seed": config.get("seed"),
        "config": config,
        "artifacts": sorted(str(a) for a in artifacts),
    }
    write_json(out_dir / name, doc)


def _rel_tree(root: Path) -> list:
    return [str(p.relative_to(root)) for p in root.rglob("*") if p.is_file()]


def cmd_synth(args) -> int:
    out = Path(args.out)
    common = dict(
        segments_per_video=args.segments,
        frames_per_segment=args.frames,
        height=args.height,
        width=args.width,
        highlight_fraction=args.highlight_fraction,
        noise_sigma=args.noise_sigma,
        square_size=args.square_size,
        content=args.content,
    )
    train_cfg = SynthConfig(videos=args.videos, id_prefix="train",
                            seed=args.seed, **common)
    write_dataset(generate_synthetic(train_cfg), out / "train")
    artifacts = [Path("train") / p for p in _rel_tree(out / "train")]
    if args.test_videos > 0:
        test_cfg = SynthConfig(videos=args.test_videos, id_prefix="test",
                               seed=args.seed + 1, **common)
        write_dataset(generate_synthetic(test_cfg), out / "test")
        artifacts += [Path("test") / p for p in _rel_tree(out / "test")]
    _run_manifest("synth", args, out, artifacts)
    print(json.dumps({"train_manifest": str(out / "train" / "dataset.json"),
                      "test_manifest": str(out / "test" / "dataset.json") if args.test_videos else None}))
    return 0


def cmd_train(args) -> int:
    dataset = load_dataset(args.data)
    config = TrainConfig(
        epochs=args.epochs, lr=args.lr, momentum=args.momentum,
        clip_len=args.clip_len, beta=args.beta,
        frames_per_segment_sampled=args.frames_per_segment,
        label_mode=args.label_mode, temporal_mode=args.temporal_mode,
        seed=args.seed,
    )
    spatial = dataset.videos[0].frame_shape()
    in_channels = 1 if len(spatial) == 2 else spatial[0]
    net_config = NAMED_CONFIGS[args.arch](args.clip_len, spatial[-2], spatial[-1], in_channels)
    net, report = train(dataset, config, net_config)

    out = Path(args.out)
    ckpt = save_checkpoint(
        net, out, seed=args.seed, epoch=args.epochs,
        train_info={"label_mode": args.label_mode, "temporal_mode": args.temporal_mode,
                    "beta": args.beta, "lr": args.lr, "momentum": args.momentum,
                    "frames_per_segment_sampled": args.frames_per_segment},
    )
    report.checkpoint_path = ckpt.name
    write_json(out / "train_report.json", report.to_dict())
    _run_manifest("train", args, out,
                  ["checkpoint.json", "train_report.json"]
                  + [f"params/{n}.pldt" for n in PldNet.param_names(net.config)])
    print(json.dumps(report.to_dict()))
    return 0


def _load_net(ckpt_dir):
    net, doc = load_checkpoint(ckpt_dir)
    return net, doc.get("train", {}).get("temporal_mode", "sliding")


def cmd_infer(args) -> int:
    net, temporal_mode = _load_net(args.ckpt)
    dataset = load_dataset(args.data)
    video = dataset.video(args.video)
    out = Path(args.out)
    written = export_distinction_maps(net, video, out, args.stride, temporal_mode)
    _run_manifest("infer", args, out, written)
    print(json.dumps({"video_id": args.video, "maps": len(written) // 2}))
    return 0


def cmd_score(args) -> int:
    net, temporal_mode = _load_net(args.ckpt)
    dataset = load_dataset(args.data)
    scores = score_dataset(net, dataset, args.stride, temporal_mode)
    out = Path(args.out)
    write_json(out, scores_to_json(scores))
    _run_manifest("score", args, out.parent, [out.name], name=out.name + ".manifest.json")
    print(json.dumps({"segments_scored": len(scores), "out": str(out)}))
    return 0


def cmd_eval(args) -> int:
    dataset = load_dataset(args.data)
    scores = scores_from_json(read_json(args.scores))
    report = map_eval(scores, dataset, metric=args.metric)
    out = Path(args.out)
    write_json(out, report)
    _run_manifest("eval", args, out.parent, [out.name], name=out.name + ".manifest.json")
    print(json.dumps({"metric": args.metric, "overall": report["overall"]}))
    return 0


def cmd_gradcheck(args) -> int:
    config = NAMED_CONFIGS[args.config]()
    net = PldNet.init(config, args.seed)
    rng = stable_rng(args.seed, "gradcheck")
    frames = tuple(
        rng.uniform(0.0, 1.0, (config.height, config.width)).astype(np.float32)
        for _ in range(config.clip_len)
    )
    video = VideoRecord("gradcheck", frames, ((0, config.clip_len),), (1,))
    clip = build_clip(video, config.clip_len - 1, config.clip_len)
    target = Tensor(
        (rng.uniform(0.0, 1.0, (1, 1, config.height, config.width)) > 0.5)
        .astype(np.float32)
    )

    def loss_fn():
        return mse_loss(net.forward(clip), target)

    err = finite_difference_check(loss_fn, net.parameters(), eps=args.eps)
    passed = err < args.threshold
    print(json.dumps({"max_relative_error": err, "eps": args.eps,
                      "threshold": args.threshold, "parameters": net.param_count(),
                      "passed": passed}))
    return 0 if passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pld",
        description="Pixel-level distinction video highlight detection pipeline.",
    )
    parser.add_argument("--version", action="version", version=f"pld {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic train/test dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--videos", type=int, default=12, help="training videos")
    p.add_argument("--test-videos", type=int, default=4, help="held-out videos (0 disables)")
    p.add_argument("--segments", type=int, default=8, help="segments per video")
    p.add_argument("--frames", type=int, default=100, help="frames per segment")
    p.add_argument("--height", type=int, default=32)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--highlight-fraction", type=float, default=0.5)
    p.add_argument("--noise-sigma", type=float, default=0.02, help="background noise level")
    p.add_argument("--square-size", type=int, default=8)
    p.add_argument("--content", choices=CONTENT_MODES, default="moving-square")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the distinction network")
    p.add_argument("--data", required=True, help="dataset manifest (dataset.json)")
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--clip-len", type=int, default=4, help="frames per temporal clip")
    p.add_argument("--beta", type=float, default=DEFAULT_BETA,
                   help="saliency threshold: pixels above it become positive labels")
    p.add_argument("--label-mode", choices=LABEL_MODES, default="saliency",
                   help="segment-label broadcast (basic) or saliency-gated labels")
    p.add_argument("--temporal-mode", choices=TEMPORAL_MODES, default="sliding",
                   help="sliding window clips, or the target frame duplicated")
    p.add_argument("--frames-per-segment", type=int, default=8,
                   help="target frames sampled per segment per epoch")
    p.add_argument("--arch", choices=sorted(NAMED_CONFIGS), default="default")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="export distinction maps for one video")
    p.add_argument("--ckpt", required=True, help="checkpoint directory")
    p.add_argument("--data", required=True, help="dataset manifest")
    p.add_argument("--video", required=True, help="video id")
    p.add_argument("--out", required=True, help="map output directory")
    p.add_argument("--stride", type=int, default=1)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("score", help="score every segment of a dataset")
    p.add_argument("--ckpt", required=True, help="checkpoint directory")
    p.add_argument("--data", required=True, help="dataset manifest")
    p.add_argument("--stride", type=int, default=1, help="evaluate every stride-th frame")
    p.add_argument("--out", required=True, help="scores JSON path")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="rank segments and compute mAP / AP@5")
    p.add_argument("--scores", required=True, help="scores JSON from `pld score`")
    p.add_argument("--data", required=True, help="dataset manifest")
    p.add_argument("--metric", choices=("map", "ap5"), default="map")
    p.add_argument("--out", required=True, help="report JSON path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of the toy net")
    p.add_argument("--config", choices=sorted(NAMED_CONFIGS), default="toy")
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--threshold", type=float, default=1e-2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except tuple(cls for cls, _ in _ERROR_CATEGORIES) as exc:
        category = next(cat for cls, cat in _ERROR_CATEGORIES if isinstance(exc, cls))
        print(json.dumps({"error": category, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
