"""Command-line entry points (``diffbg <command> ...``).

Every command accepts ``--config FILE`` (JSON) plus one flag per
configuration field; flags override the file.  Errors map to exit codes:
2 parameter, 3 shape, 4 I/O, 5 numeric.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .baselines import run_baseline
from .config import BASELINE_METHODS, PipelineConfig, parse_epsilon
from .dbsdb import load_model, save_model, train_dbsdb
from .errors import DiffBGError, ParameterError, SequenceIOError
from .evaluation import comparison_report, comparison_table, format_report, run_comparison, score_sequence
from .frames import to_grayscale
from .masks import speckle_removal
from .pipelines import classify_with_model, sbsdb_masks
from .sbsdb import run_sbsdb
from .sequence_io import (DEFAULT_PATTERN, MASK_PATTERN, SequenceManifest, load_masks, load_sequence,
                          save_masks, save_sequence)
from .spectral import extract_background
from .synthetic import KINDS, PATTERNS, SyntheticParams, flicker_benchmark_params, gen_synthetic

_BOOL_FIELDS = {"shared_epsilon"}


def _config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("pipeline configuration")
    group.add_argument("--config", type=Path, help="JSON config file; flags below override it")
    for f in fields(PipelineConfig):
        names = [f"--{f.name.replace('_', '-')}"]
        if "_" in f.name:
            names.append(f"--{f.name}")
        if f.name in _BOOL_FIELDS:
            group.add_argument(*names, dest=f.name, action="store_true", default=None)
        elif f.name == "epsilon":
            group.add_argument(*names, dest=f.name, default=None, metavar="EPS|auto")
        elif f.name == "baseline_method":
            group.add_argument(*names, dest=f.name, choices=BASELINE_METHODS, default=None)
        else:
            kind = float if f.name in ("mu", "rho", "baseline_threshold") else int
            group.add_argument(*names, dest=f.name, type=kind, default=None)


def build_config(args: argparse.Namespace) -> PipelineConfig:
    if getattr(args, "config", None) is not None:
        try:
            config = PipelineConfig.load(args.config)
        except OSError as exc:
            raise SequenceIOError(f"cannot read config {args.config}: {exc}") from exc
    else:
        config = PipelineConfig()
    overrides = {}
    for f in fields(PipelineConfig):
        value = getattr(args, f.name, None)
        if value is None:
            continue
        overrides[f.name] = parse_epsilon(value) if f.name == "epsilon" else value
    return config.replace(**overrides) if overrides else config


def _input_flags(parser, name="--input", required=True, help="directory of numbered frames"):
    parser.add_argument(name, type=Path, required=required, help=help)
    dest = name.lstrip("-").replace("-", "_")
    parser.add_argument(f"{name}-pattern", dest=f"{dest}_pattern", default=DEFAULT_PATTERN,
                        help="frame filename pattern (default %(default)s)")


def _load(directory: Path, pattern: str, channels=None) -> np.ndarray:
    return load_sequence(SequenceManifest(directory, pattern, channels))


def _gray(cube: np.ndarray) -> np.ndarray:
    return to_grayscale(cube) if cube.ndim == 4 else cube


def _save_image(path: Path, frame: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.clip(np.rint(frame), 0, 255).astype(np.uint8)).save(path)


def cmd_extract_bg(args) -> int:
    config = build_config(args)
    cube = _gray(_load(args.input, args.input_pattern))
    bg = extract_background(cube, config)
    _save_image(args.output, bg.normalized)
    print(f"background written to {args.output}")
    return 0


def cmd_sbsdb(args) -> int:
    config = build_config(args)
    cube = _gray(_load(args.input, args.input_pattern))
    masks = sbsdb_masks(cube, config)
    save_masks(args.output, masks, args.mask_pattern)
    if args.backgrounds is not None:
        backgrounds, _ = run_sbsdb(cube, config)
        save_sequence(args.backgrounds, backgrounds.normalized(), "background_{:05d}.png")
    print(f"{len(masks)} masks written to {args.output}")
    return 0


def cmd_dbsdb_train(args) -> int:
    config = build_config(args)
    bgd = _load(args.input, args.input_pattern, channels=3)
    model = train_dbsdb(bgd, config)
    args.model.parent.mkdir(parents=True, exist_ok=True)
    save_model(args.model, model)
    print(f"model for {model.shape[0]}x{model.shape[1]} frames written to {args.model}")
    return 0


def cmd_dbsdb_run(args) -> int:
    config = build_config(args)
    model = load_model(args.model)
    rtd = _load(args.input, args.input_pattern, channels=3)
    masks = classify_with_model(rtd, model, config)
    save_masks(args.output, masks, args.mask_pattern)
    print(f"{len(masks)} masks written to {args.output}")
    return 0


def cmd_baseline(args) -> int:
    config = build_config(args)
    if args.method is not None:
        config = config.replace(baseline_method=args.method)
    test = _gray(_load(args.input, args.input_pattern))
    train = _gray(_load(args.train, args.train_pattern)) if args.train is not None else None
    masks = run_baseline(config.baseline_method, test, train, config)
    if args.speckle:
        masks = np.stack([speckle_removal(m, config.speckle_min_size) for m in masks])
    save_masks(args.output, masks, args.mask_pattern)
    print(f"{len(masks)} {config.baseline_method} masks written to {args.output}")
    return 0


def _emit(text: str, report: Path | None) -> None:
    if report is None:
        sys.stdout.write(text)
        return
    report.parent.mkdir(parents=True, exist_ok=True)
    report.write_text(text)


def cmd_eval(args) -> int:
    config = build_config(args)
    if args.benchmark:
        rows = run_comparison(args.seed, config, train_frames=args.train_frames)
        _emit(comparison_report(rows), args.report)
        sys.stdout.write(comparison_table(rows))
        return 0
    if args.pred is None or args.truth is None:
        raise ParameterError("eval needs --pred and --truth, or --benchmark")
    pred = load_masks(args.pred, args.pred_pattern)
    truth = load_masks(args.truth, args.truth_pattern)
    _emit(format_report(score_sequence(pred, truth)), args.report)
    return 0


def cmd_gen_synthetic(args) -> int:
    if args.benchmark == "static":
        kind, params, split = "moving_square", SyntheticParams(frames=args.frames), args.split
    elif args.benchmark == "flicker":
        kind, params, split = "combined", flicker_benchmark_params(), args.split or 40
    else:
        if args.kind is None:
            raise ParameterError("gen-synthetic needs --kind or --benchmark")
        value = tuple(args.square_value) if args.square_value else (255.0,) * args.channels
        params = SyntheticParams(
            height=args.height, width=args.width, frames=args.frames, channels=args.channels,
            pattern=args.pattern, noise_sigma=args.noise_sigma, square_size=args.square_size,
            square_value=value, velocity=tuple(args.velocity), start=tuple(args.start),
            square_start=args.square_start, flicker_amplitude=args.flicker_amplitude,
            flicker_period=args.flicker_period, flicker_gain_power=args.flicker_gain_power,
            flicker_rows=tuple(args.flicker_rows) if args.flicker_rows else None,
        )
        kind, split = args.kind, args.split
    cube, truth = gen_synthetic(kind, params, args.seed)
    if split:
        if not 0 < split < len(cube):
            raise ParameterError(f"--split must lie in (0, {len(cube)}), got {split}")
        parts = [(args.output / "train", slice(0, split)), (args.output / "test", slice(split, None))]
    else:
        parts = [(args.output, slice(None))]
    for directory, part in parts:
        save_sequence(directory, cube[part], args.pattern_out)
        save_masks(directory, truth[part], args.truth_pattern)
    print(f"{kind}: {len(cube)} frames written to {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diffbg", description="Background subtraction with diffusion bases.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-bg", help="background image of a whole sequence")
    _input_flags(p)
    p.add_argument("--output", type=Path, required=True, help="output image file")
    _config_flags(p)
    p.set_defaults(func=cmd_extract_bg)

    p = sub.add_parser("sbsdb", help="static-background subtraction with a sliding window")
    _input_flags(p)
    p.add_argument("--output", type=Path, required=True, help="mask directory")
    p.add_argument("--mask-pattern", default=MASK_PATTERN)
    p.add_argument("--backgrounds", type=Path, help="also write per-frame backgrounds here")
    _config_flags(p)
    p.set_defaults(func=cmd_sbsdb)

    p = sub.add_parser("dbsdb-train", help="train a dynamic-background model on RGB BGD frames")
    _input_flags(p)
    p.add_argument("--model", type=Path, required=True, help="model file to write")
    _config_flags(p)
    p.set_defaults(func=cmd_dbsdb_train)

    p = sub.add_parser("dbsdb-run", help="classify RGB frames against a trained model")
    _input_flags(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True, help="mask directory")
    p.add_argument("--mask-pattern", default=MASK_PATTERN)
    _config_flags(p)
    p.set_defaults(func=cmd_dbsdb_run)

    p = sub.add_parser("baseline", help="run a comparison method")
    _input_flags(p)
    _input_flags(p, "--train", required=False, help="training frames (mean_threshold, eigen_background)")
    p.add_argument("--method", choices=BASELINE_METHODS)
    p.add_argument("--output", type=Path, required=True, help="mask directory")
    p.add_argument("--mask-pattern", default=MASK_PATTERN)
    p.add_argument("--speckle", action="store_true", help="remove small 4-connected islands")
    _config_flags(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("eval", help="score masks against ground truth, or run the benchmark comparison")
    p.add_argument("--pred", type=Path)
    p.add_argument("--pred-pattern", default=MASK_PATTERN)
    p.add_argument("--truth", type=Path)
    p.add_argument("--truth-pattern", default=MASK_PATTERN)
    p.add_argument("--benchmark", action="store_true", help="all methods on both synthetic benchmarks")
    p.add_argument("--train-frames", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", type=Path, help="write the key-value report here instead of stdout")
    _config_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen-synthetic", help="write a synthetic sequence and its truth masks")
    p.add_argument("--kind", choices=KINDS)
    p.add_argument("--benchmark", choices=("static", "flicker"),
                   help="write one of the evaluation scenes (flicker splits into train/test)")
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frames", type=int, default=30)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--channels", type=int, choices=(1, 3), default=1)
    p.add_argument("--pattern", choices=PATTERNS, default="gradient")
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--square-size", type=int, default=8)
    p.add_argument("--square-value", type=float, nargs="+")
    p.add_argument("--velocity", type=float, nargs=2, default=(1.0, 2.0), metavar=("DROW", "DCOL"))
    p.add_argument("--start", type=int, nargs=2, default=(4, 0), metavar=("ROW", "COL"))
    p.add_argument("--square-start", type=int, default=0)
    p.add_argument("--flicker-amplitude", type=float, default=30.0)
    p.add_argument("--flicker-period", type=float, default=10.0)
    p.add_argument("--flicker-rows", type=int, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--flicker-gain-power", type=float, default=1.0)
    p.add_argument("--split", type=int, default=0,
                   help="write the first N frames to OUTPUT/train and the rest to OUTPUT/test")
    p.add_argument("--pattern-out", default=DEFAULT_PATTERN, help="frame filename pattern")
    p.add_argument("--truth-pattern", default=MASK_PATTERN)
    p.set_defaults(func=cmd_gen_synthetic)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DiffBGError as exc:
        print(f"diffbg {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"diffbg {args.command}: error: {exc}", file=sys.stderr)
        return SequenceIOError.exit_code


if __name__ == "__main__":
    sys.exit(main())
