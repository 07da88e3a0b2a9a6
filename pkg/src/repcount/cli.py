"""Command-line surface: analyze sessions, train/calibrate the recognizer,
generate synthetic ground-truth data, and benchmark throughput.

Exit codes: 0 success, 2 unreadable input, 3 bad model file,
4 invalid config, 5 degenerate training dataset.
"""
from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from .conditioning import DEFAULT_OUTLIER_ITERATIONS
from .counting import DEFAULT_TOLERANCE_DEG
from .keypoints import (ParseError, SchemaError, iter_ndjson_frames, load_frames,
                        normalize_skeleton, serialize_frame, write_session_csv)
from .kinematics import ProfileError, angle_for, builtin_profiles, load_profiles
from .pipeline import EngineConfig, SessionEngine, analyze_frames
from .recognizer import (CalibrationError, ModelFormatError, TrainConfig,
                         TrainingError, calibrate_reject, load_model, save_model,
                         train)
from .reporting import render_json, render_text, write_events_csv, write_trace_csv
from .synthetic import (PersonMotion, SpecError, SyntheticSessionSpec,
                        generate_session, make_labeled_dataset)
from .tracker import PoseTracker

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_BAD_MODEL = 3
EXIT_BAD_CONFIG = 4
EXIT_BAD_DATASET = 5


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", help="model file path")
    parser.add_argument("--profiles", help="exercise profile config (JSON)")
    parser.add_argument("--fps", type=float, default=30.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--iterations", type=int, default=DEFAULT_OUTLIER_ITERATIONS,
                        help="outlier normalization sweeps")
    parser.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE_DEG,
                        help="ROM bound tolerance, degrees")
    parser.add_argument("--reject", choices=["one-sided", "two-sided", "off"],
                        default="one-sided")
    parser.add_argument("--gap-fill", choices=["extrapolate", "reflect-abs"],
                        default="extrapolate", help="gap fill formula variant")


def _load_profiles_arg(args):
    if args.profiles:
        return load_profiles(args.profiles)
    return builtin_profiles()


def _engine_config(args, keep_traces=False) -> EngineConfig:
    return EngineConfig(
        tolerance=args.tolerance,
        outlier_iterations=args.iterations,
        gap_mode=args.gap_fill,
        reject_mode=args.reject,
        keep_traces=keep_traces,
    )


def _read_frames(args):
    if args.input == "-":
        return list(iter_ndjson_frames(sys.stdin, args.fps))
    return load_frames(args.input, args.fps)


def cmd_analyze(args) -> int:
    try:
        profiles = _load_profiles_arg(args)
    except (OSError, ProfileError, json.JSONDecodeError) as exc:
        print(f"error: invalid profile config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    model = thresholds = None
    if args.model:
        try:
            model, thresholds = load_model(args.model)
        except ModelFormatError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_BAD_MODEL
    try:
        frames = _read_frames(args)
    except (OSError, ParseError, SchemaError) as exc:
        print(f"error: unreadable input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT

    config = _engine_config(args, keep_traces=bool(args.out_csv))
    engine = SessionEngine(model=model, thresholds=thresholds,
                           profiles=profiles, config=config)
    for frame in frames:
        engine.process_frame(frame)
    result = engine.finalize()

    text = render_text(result)
    if args.out_text:
        Path(args.out_text).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.out_json:
        Path(args.out_json).write_bytes(render_json(result))
    if args.out_csv:
        events = [e for s in result.summaries for e in s.events]
        write_events_csv(args.out_csv, events)
        for pid, rows in engine.traces().items():
            trace_path = Path(args.out_csv).with_suffix(f".person{pid}.trace.csv")
            write_trace_csv(trace_path, rows)
    return EXIT_OK


def _load_training_data(args):
    """(features, labels, class_names) from synthetic or user-supplied data."""
    if args.synthetic_frames:
        class_names = ["push-up", "pull-up", "squat"]
        x, y = make_labeled_dataset(class_names, args.synthetic_frames // 3,
                                    seed=args.seed)
        return x, y, class_names
    if not args.data or not args.labels:
        raise TrainingError("need --data and --labels (or --synthetic-frames)")
    frames = load_frames(args.data, args.fps)
    labels_by_frame = {}
    with open(args.labels, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            labels_by_frame[int(row["frame"])] = row["label"]
    class_names = sorted(set(labels_by_frame.values()))
    index = {name: i for i, name in enumerate(class_names)}
    feats, labs = [], []
    for frame in frames:
        label = labels_by_frame.get(frame.frame_index)
        if label is None:
            continue
        for skel in frame.skeletons:
            fv = normalize_skeleton(skel)
            if fv is not None:
                feats.append(fv)
                labs.append(index[label])
    if not feats:
        raise TrainingError("no usable labeled frames")
    return np.asarray(feats), np.asarray(labs), class_names


def cmd_train(args) -> int:
    try:
        x, y, class_names = _load_training_data(args)
        config = TrainConfig(epochs=args.epochs, learning_rate=args.learning_rate,
                             batch_size=args.batch_size, seed=args.seed)
        model, history = train(x, y, class_names, config)
    except (OSError, ParseError, SchemaError, TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_DATASET
    thresholds = None
    if args.calibrate_split > 0:
        n_cal = int(len(x) * args.calibrate_split)
        try:
            thresholds = calibrate_reject(model, x[-n_cal:])
        except CalibrationError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_BAD_DATASET
    save_model(args.out, model, thresholds)
    if args.curve_out:
        with open(args.curve_out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "loss", "accuracy"])
            for epoch, loss, acc in history:
                writer.writerow([epoch, repr(loss), repr(acc)])
    print(f"model written to {args.out} "
          f"(final loss {history[-1][1]:.4f}, accuracy {history[-1][2]:.4f})")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    try:
        model, _ = load_model(args.model)
    except ModelFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_MODEL
    try:
        if args.synthetic_frames:
            x, _ = make_labeled_dataset(model.class_names, args.synthetic_frames // 3,
                                        seed=args.seed)
        else:
            frames = load_frames(args.data, args.fps)
            feats = [normalize_skeleton(s) for f in frames for s in f.skeletons]
            x = np.asarray([fv for fv in feats if fv is not None])
        thresholds = calibrate_reject(model, x)
    except (OSError, ParseError, SchemaError, CalibrationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_DATASET
    out = args.out or args.model
    save_model(out, model, thresholds)
    for name, (lo, hi) in sorted(thresholds.bounds.items()):
        print(f"{name}: ci_low={lo:.4f} ci_high={hi:.4f}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        persons = tuple(
            PersonMotion(exercise=args.exercise, full_cycles=args.full_cycles,
                         partial_cycles=args.partial_cycles, period=args.period,
                         noise_sigma=args.noise, gap_rate=args.gap_rate)
            for _ in range(args.persons)
        )
        spec = SyntheticSessionSpec(persons=persons, fps=args.fps, seed=args.seed)
        frames, truth = generate_session(spec)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    out = Path(args.out)
    if out.suffix.lower() == ".csv":
        write_session_csv(out, frames)
    else:
        with open(out, "wb") as fh:
            for frame in frames:
                fh.write(serialize_frame(frame) + b"\n")
    if args.truth_out:
        Path(args.truth_out).write_text(
            json.dumps(truth, sort_keys=True, indent=2), encoding="utf-8")
    print(f"wrote {len(frames)} frames to {out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.repetitions < 1:
        print("error: --repetitions must be >= 1", file=sys.stderr)
        return EXIT_BAD_CONFIG
    model = thresholds = None
    if args.model:
        try:
            model, thresholds = load_model(args.model)
        except ModelFormatError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_BAD_MODEL
    try:
        frames = _read_frames(args)
    except (OSError, ParseError, SchemaError) as exc:
        print(f"error: unreadable input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    profiles = builtin_profiles()

    # post-pose pipeline throughput: parsing excluded, everything else included
    rates = []
    for _ in range(args.repetitions):
        start = time.perf_counter()
        analyze_frames(frames, model=model, thresholds=thresholds, profiles=profiles)
        rates.append(len(frames) / (time.perf_counter() - start))
    median_fps = statistics.median(rates)

    # per-stage breakdown measured in isolation
    start = time.perf_counter()
    tracker = PoseTracker()
    for frame in frames:
        tracker.match_frame(frame)
    t_track = time.perf_counter() - start
    start = time.perf_counter()
    for frame in frames:
        for skel in frame.skeletons:
            fv = normalize_skeleton(skel)
            if fv is not None and model is not None:
                from .recognizer import classify_with_reject
                classify_with_reject(model, thresholds, fv)
    t_recognize = time.perf_counter() - start
    start = time.perf_counter()
    profile = profiles["push-up"]
    for frame in frames:
        for skel in frame.skeletons:
            angle_for(profile, skel)
    t_angle = time.perf_counter() - start

    n = len(frames)
    print(f"frames: {n}  runs: {args.repetitions}")
    print(f"pipeline throughput: {median_fps:.0f} frames/s (median)")
    print(f"stage breakdown (one pass): tracking {n / max(t_track, 1e-9):.0f} f/s, "
          f"recognition {n / max(t_recognize, 1e-9):.0f} f/s, "
          f"angles {n / max(t_angle, 1e-9):.0f} f/s")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="repcount")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="run the full counting pipeline on a session")
    p.add_argument("input", help="frame stream: NDJSON file, JSON dir, CSV, or '-'")
    _add_common(p)
    p.add_argument("--out-text", help="write the text report here (default stdout)")
    p.add_argument("--out-json", help="write the JSON report here")
    p.add_argument("--out-csv", help="write the events CSV here (plus per-person traces)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("train", help="train the exercise recognition model")
    p.add_argument("--data", help="keypoint session (CSV/NDJSON/dir)")
    p.add_argument("--labels", help="labels CSV with columns frame,label")
    p.add_argument("--synthetic-frames", type=int, default=0,
                   help="train on N generated frames instead of --data")
    p.add_argument("--out", required=True)
    p.add_argument("--curve-out", help="training curve CSV (epoch,loss,accuracy)")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--calibrate-split", type=float, default=0.2,
                   help="fraction of data reused for reject calibration (0 disables)")
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("calibrate", help="estimate reject thresholds for a model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", help="held-out keypoint session")
    p.add_argument("--synthetic-frames", type=int, default=0)
    p.add_argument("--out", help="output model path (default: overwrite --model)")
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("simulate", help="generate a synthetic session with ground truth")
    p.add_argument("--exercise", default="push-up")
    p.add_argument("--persons", type=int, default=1)
    p.add_argument("--full-cycles", type=int, default=10)
    p.add_argument("--partial-cycles", type=int, default=0)
    p.add_argument("--period", type=int, default=20)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--gap-rate", type=float, default=0.0)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help=".csv for format B, else NDJSON")
    p.add_argument("--truth-out", help="write the ground-truth record here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="measure post-pose pipeline throughput")
    p.add_argument("input")
    p.add_argument("--model")
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--repetitions", type=int, default=5)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
