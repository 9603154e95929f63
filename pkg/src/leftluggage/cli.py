"""Command-line entry point: ``leftluggage {run,gen-samples,train,eval,synth,bench}``."""

from __future__ import annotations

import argparse
import glob
import os
import sys
import time
from typing import Iterator, List, Optional

import numpy as np

from . import pnm
from .cascade import FEATURE_DIM, LinearModel, ModelFormatError, accuracy, load_model, save_model, train_linear
from .config import ConfigError, load_config
from .evaluation import (
    AnnotationError,
    evaluate,
    format_annotations,
    format_detection,
    load_annotations,
    load_detections,
)
from .pipeline import Pipeline, draw_boxes
from .samplegen import TemplateImage, augment, gen_stage1, gen_stage2, load_sample_set, save_sample_set, split
from . import synth

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_CONFIG = 3
EXIT_MODEL = 4

FRAME_PATTERNS = ("*.ppm", "*.pnm")


def _err(msg: str) -> None:
    print(f"leftluggage: {msg}", file=sys.stderr)


def frame_files(directory: str) -> List[str]:
    files: List[str] = []
    for pat in FRAME_PATTERNS:
        files.extend(glob.glob(os.path.join(directory, pat)))
    return sorted(files)


def read_frames(source: str) -> Iterator[np.ndarray]:
    """Frames from a directory of numbered P6 files, or a P6 stream on stdin (``-``)."""
    if source == "-":
        yield from pnm.iter_images(sys.stdin.buffer)
        return
    for path in frame_files(source):
        yield pnm.load(path)


def _size(text: str):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like WxH, got {text!r}") from None
    return w, h


# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    overrides = list(args.set or [])
    for key, value in (("io.input", args.input), ("io.output", args.output), ("io.overlay_dir", args.overlay_dir)):
        if value is not None:
            overrides.append(f"{key}={value}")
    try:
        config = load_config(args.config, overrides)
    except ConfigError as exc:
        _err(f"bad config: {exc}")
        return EXIT_CONFIG
    if args.print_config:
        sys.stdout.write(config.dump())
        return EXIT_OK

    if args.oracle:
        stage1, stage2 = synth.oracle_stage1(), synth.oracle_stage2()
    else:
        if not args.stage1 or not args.stage2:
            _err("--stage1 and --stage2 model files are required (or --oracle)")
            return EXIT_MODEL
        try:
            stage1, stage2 = load_model(args.stage1, FEATURE_DIM), load_model(args.stage2, FEATURE_DIM)
        except (OSError, ModelFormatError, ValueError) as exc:
            _err(f"cannot load model: {exc}")
            return EXIT_MODEL

    source = config.io.input
    if source is None or (source != "-" and not os.path.isdir(source)):
        _err(f"input {source!r} is not a frame directory or '-'")
        return EXIT_INPUT
    if source != "-" and not frame_files(source):
        _err(f"no frames found in {source}")
        return EXIT_INPUT

    pipe = Pipeline(stage1, stage2, config)
    out = sys.stdout if config.io.output in (None, "-") else open(config.io.output, "w")
    overlay = config.io.overlay_dir
    if overlay:
        os.makedirs(overlay, exist_ok=True)
    try:
        for frame in read_frames(source):
            dets = pipe.process(frame)
            for d in dets:
                out.write(format_detection(d))
            if overlay:
                pnm.save(os.path.join(overlay, f"{pipe.frame_index:06d}.ppm"), draw_boxes(frame, [d.bbox for d in dets]))
    except (OSError, pnm.PnmError) as exc:
        _err(f"unreadable input: {exc}")
        return EXIT_INPUT
    except ValueError as exc:
        _err(f"input error: {exc}")
        return EXIT_INPUT
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _templates(paths, kind, fallback):
    if not paths:
        return fallback()
    return [TemplateImage.load(p, kind) for p in paths]


def cmd_gen_samples(args) -> int:
    try:
        if args.background == "station":
            bg = synth.station_background(*args.scene_size)
        else:
            bg = pnm.load(args.background)
        luggage = _templates(args.luggage, "luggage", synth.luggage_templates)
        if args.stage == "stage1":
            ss = gen_stage1(bg, luggage, args.n_pos, args.n_neg, args.size, args.seed)
        else:
            attended = _templates(args.attended, "attended", synth.attended_templates)
            ss = gen_stage2(bg, luggage, attended, args.n_pos, args.n_neg, args.size, args.seed)
    except (OSError, pnm.PnmError) as exc:
        _err(f"cannot read inputs: {exc}")
        return EXIT_INPUT
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    save_sample_set(ss, args.out)
    pos, neg = ss.counts()
    print(f"wrote {len(ss)} samples ({pos} positive, {neg} negative) to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    try:
        ss = load_sample_set(args.samples)
    except (OSError, ValueError) as exc:
        _err(f"cannot read samples: {exc}")
        return EXIT_INPUT
    try:
        train, test = split(ss, args.train_fraction, args.seed)
        data = train if args.no_augment else augment(train)
        model = train_linear(data, args.epochs, args.lr, args.seed, args.l2)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    save_model(model, args.out)
    test_acc = accuracy(model, test) if len(test) else float("nan")
    print(f"train accuracy {accuracy(model, train):.4f}  held-out accuracy {test_acc:.4f}  ({len(train)}/{len(test)})")
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        dets = load_detections(args.detections)
        gts = load_annotations(args.annotations)
    except (OSError, AnnotationError, ValueError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    report = evaluate(dets, gts, args.frames, args.iou, args.grace)
    sys.stdout.write(report.format())
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        script = synth.drop_scene() if args.script == "drop" else synth.load_script(args.script)
    except (OSError, synth.ScriptError) as exc:
        _err(f"bad script: {exc}")
        return EXIT_INPUT
    if args.seed is not None:
        script.seed = args.seed
    truth = synth.scene_truth(script)
    if args.out == "-":
        try:
            for frame in synth.iter_frames(script):
                sys.stdout.buffer.write(pnm.encode(frame))
            sys.stdout.buffer.flush()
        except BrokenPipeError:
            # reader went away early (e.g. piped into head); not an error here
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    else:
        os.makedirs(args.out, exist_ok=True)
        for i, frame in enumerate(synth.iter_frames(script)):
            pnm.save(os.path.join(args.out, f"{i:06d}.ppm"), frame)
    if args.truth:
        with open(args.truth, "w") as fh:
            fh.write(format_annotations(truth))
    return EXIT_OK


def run_bench(n_frames: int = 300, start: int = 200) -> float:
    """Frames per second of the full pipeline on the scripted drop scene.

    Both stages are constant-positive linear models so every scheduled
    classification pays for both crops.  Rendering is excluded from timing.
    """
    from threadpoolctl import threadpool_limits

    script = synth.drop_scene()
    bg = script.background_image()
    frames = [synth.render_frame(script, i % script.duration, bg) for i in range(start, start + n_frames)]
    always = LinearModel(np.zeros(FEATURE_DIM), 1.0)
    with threadpool_limits(limits=1):
        pipe = Pipeline(always, always)
        t0 = time.perf_counter()
        for f in frames:
            pipe.process(f)
        elapsed = time.perf_counter() - t0
    return n_frames / elapsed


def cmd_bench(args) -> int:
    fps = run_bench(args.frames)
    print(f"{fps:.1f} frames/second at 360x288, single-threaded (target 40, floor {args.min_fps:g})")
    return EXIT_OK if fps >= args.min_fps else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="leftluggage", description="Abandoned luggage detection in video.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="detect abandoned luggage in a frame sequence")
    r.add_argument("--input", help="directory of numbered P6 frames, or - for a P6 stream on stdin")
    r.add_argument("--output", help="detections file (default stdout)")
    r.add_argument("--overlay-dir", help="write frames with detection boxes drawn")
    r.add_argument("--stage1", help="stage-one model file")
    r.add_argument("--stage2", help="stage-two model file")
    r.add_argument("--oracle", action="store_true", help="use the scripted-scene color-key classifiers")
    r.add_argument("--config", help="flat key = value config file")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
    r.add_argument("--print-config", action="store_true", help="print the effective config and exit")
    r.set_defaults(func=cmd_run)

    g = sub.add_parser("gen-samples", help="generate a training set from a background and templates")
    g.add_argument("--background", required=True, help="P6 background image, or 'station' for the builtin")
    g.add_argument("--scene-size", type=_size, default=(360, 288), help="builtin background size")
    g.add_argument("--luggage", nargs="*", help="luggage RGBA PAM templates (default: builtins)")
    g.add_argument("--attended", nargs="*", help="person-with-luggage RGBA PAM templates (default: builtins)")
    g.add_argument("--stage", choices=("stage1", "stage2"), default="stage1")
    g.add_argument("--n-pos", type=int, default=250)
    g.add_argument("--n-neg", type=int, default=250)
    g.add_argument("--size", type=_size, default=(28, 22), help="sample size WxH")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_gen_samples)

    t = sub.add_parser("train", help="train a linear stage on a sample directory")
    t.add_argument("--samples", required=True)
    t.add_argument("--out", required=True, help="model file to write")
    t.add_argument("--epochs", type=int, default=30)
    t.add_argument("--lr", type=float, default=0.05)
    t.add_argument("--l2", type=float, default=1e-3)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--train-fraction", type=float, default=0.8)
    t.add_argument("--no-augment", action="store_true", help="skip flip/blur augmentation")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="score detections against annotations")
    e.add_argument("--detections", required=True)
    e.add_argument("--annotations", required=True)
    e.add_argument("--frames", type=int, required=True, help="number of frames in the video")
    e.add_argument("--iou", type=float, default=0.2)
    e.add_argument("--grace", type=int, default=0, help="frames after each annotation start left unscored")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="render a scripted scene")
    s.add_argument("--script", required=True, help="scene script file, or 'drop' for the builtin scene")
    s.add_argument("--out", required=True, help="frame directory, or - for a P6 stream on stdout")
    s.add_argument("--truth", help="write ground-truth annotations here")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_synth)

    b = sub.add_parser("bench", help="measure single-threaded throughput at 360x288")
    b.add_argument("--frames", type=int, default=300)
    b.add_argument("--min-fps", type=float, default=20.0)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
