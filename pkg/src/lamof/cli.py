"""Command-line interface.

Exit status: 0 on success, 2 on bad input, 1 on internal errors.  Failures
print ``{"code", "message", "context"}`` as JSON on stderr.  Every input is
read and validated before any output file is written.
"""
from __future__ import annotations

import argparse
import glob
import json
import os
import sys
from pathlib import Path

from . import apps, codec, corpus, fileio, metrics
from .errors import InvalidArgument, LamofError
from .kmeans import KMeansConfig
from .motion import MotionSequence, Representation, compute_velocity_field, resample_to_length, to_joint_positions
from .stitch import DEFAULT_CLIP_COUNT, DEFAULT_TRANSITION, StitchConfig, stitch


def _default_seed() -> int:
    raw = os.environ.get("LAMOF_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise InvalidArgument("LAMOF_SEED must be an integer", value=raw) from None


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def _expand(patterns: list[str]) -> list[str]:
    paths: list[str] = []
    for pattern in patterns:
        hits = sorted(glob.glob(pattern))
        paths.extend(hits if hits else [pattern])
    return paths


def _seed(args) -> int:
    return args.seed if args.seed is not None else _default_seed()


def _encode_config(args) -> codec.EncodeConfig:
    return codec.EncodeConfig(
        smooth_window=args.smooth_window,
        min_duration=args.min_duration,
        velocity_mode=codec.VelocityMode.parse(args.velocity_mode),
    )


def cmd_fit_clusters(args) -> None:
    motions = [fileio.load_motion(p) for p in _expand(args.input)]
    config = KMeansConfig(seed=_seed(args), batch_size=args.batch_size, max_iters=args.max_iters, tol=args.tol)
    model = codec.fit_clusters([compute_velocity_field(m) for m in motions], args.k, config)
    fileio.save_model(args.out, model)
    _emit({"k": model.k, "feature_dim": model.feature_dim, "inertia": model.inertia,
           "iterations_run": model.iterations_run, "seed": model.seed})


def cmd_encode(args) -> None:
    motion = fileio.load_motion(args.input)
    model = fileio.load_model(args.model)
    tag = args.condition_tag.encode() if args.condition_tag is not None else None
    sm = codec.encode(motion, model, _encode_config(args), condition_tag=tag)
    fileio.save_supermotion(args.out, sm)
    _emit(codec.compression_report(motion, sm).to_dict())


def cmd_decode(args) -> None:
    sm = fileio.load_supermotion(args.input)
    fileio.save_motion(args.out, codec.decode(sm, reorthonormalize=args.reorthonormalize))


def _roundtrip_report(motion: MotionSequence, sm, skeleton) -> dict:
    decoded = codec.decode(sm)
    report = codec.compression_report(motion, sm).to_dict()
    report["mpjpe"] = metrics.mpjpe(motion, decoded, skeleton)
    if sm.segment_count >= 2:
        residual = codec.coherence_residual(sm)
        report["coherent"] = metrics.coherent_metric(sm)
        report["max_coherence_residual"] = float(residual.max())
    else:
        report["coherent"] = None
        report["max_coherence_residual"] = None
    return report


def cmd_roundtrip(args) -> None:
    motion = fileio.load_motion(args.input)
    model = fileio.load_model(args.model)
    skeleton = fileio.load_skeleton(args.skeleton) if args.skeleton else None
    sm = codec.encode(motion, model, _encode_config(args))
    _emit(_roundtrip_report(motion, sm, skeleton))


def _load_weights(path) -> metrics.MetricWeights:
    if path is None:
        return metrics.MetricWeights()
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidArgument(f"weights file is not valid JSON: {exc}") from None
    return metrics.MetricWeights.from_dict(data)


def _thresholds(args) -> metrics.ContactThresholds:
    return metrics.ContactThresholds(max_height=args.max_height, max_speed=args.max_speed,
                                     skate_speed=args.skate_speed, up_axis=args.up_axis)


def cmd_metrics(args) -> None:
    a = fileio.load_supermotion(args.a)
    b = fileio.load_supermotion(args.b)
    weights = _load_weights(args.weights)
    skeleton = fileio.load_skeleton(args.skeleton) if args.skeleton else None
    _emit(metrics.all_metrics(a, b, weights, skeleton, _thresholds(args)))


def cmd_fsr(args) -> None:
    motion = fileio.load_motion(args.input)
    skeleton = fileio.load_skeleton(args.skeleton)
    if motion.representation is Representation.ROT6D:
        pos = to_joint_positions(motion, skeleton)
        motion = MotionSequence(pos.reshape(motion.frame_count, -1), Representation.CARTESIAN,
                                motion.joint_count, motion.fps)
    _emit({"fsr": metrics.foot_skating_ratio(motion, skeleton, _thresholds(args))})


def cmd_stitch(args) -> None:
    clips = [fileio.load_motion(p) for p in args.clips]
    if len(clips) < 2:
        raise InvalidArgument("stitch needs at least two clips")
    out = clips[0]
    for clip in clips[1:]:
        out = stitch(out, clip, args.transition)
    fileio.save_motion(args.out, out)
    _emit({"total_frames": out.frame_count})


def cmd_build_corpus(args) -> None:
    config = StitchConfig(transition_frames=args.transition, clip_count=args.clips_per_sample,
                          seed=_seed(args), len_min=args.len_min, len_max=args.len_max)
    records = corpus.build_corpus(args.manifest, args.count, args.out_dir, config, workers=args.workers)
    _emit({"samples": len(records), "manifest": str(Path(args.out_dir) / corpus.OUTPUT_MANIFEST)})


def cmd_loop(args) -> None:
    sm = fileio.load_supermotion(args.input)
    looped = apps.loop_close(sm)
    fileio.save_supermotion(args.out, looped)
    if args.report:
        _emit(apps.loop_seam_report(looped).to_dict())


def cmd_retime(args) -> None:
    sm = fileio.load_supermotion(args.input)
    plan = apps.decompose_duration(args.total, sm.segment_count, args.d_min, args.d_max, args.mode, _seed(args))
    retimed = apps.retime_supermotions(sm, plan)
    if args.out:
        fileio.save_supermotion(args.out, retimed)
    _emit({"durations": plan.durations.tolist(), "total_frames": retimed.total_frames})


def cmd_resample(args) -> None:
    motion = resample_to_length(fileio.load_motion(args.input), args.frames)
    if args.out:
        fileio.save_motion(args.out, motion)
        _emit({"frames": motion.frame_count})
    else:
        print(fileio.motion_to_json(motion))


def _add_encode_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--smooth-window", type=int, default=5)
    p.add_argument("--min-duration", type=int, default=1)
    p.add_argument("--velocity-mode", default="secant", choices=["secant", "meanfield"])


def _add_contact_options(p: argparse.ArgumentParser) -> None:
    defaults = metrics.ContactThresholds()
    p.add_argument("--max-height", type=float, default=defaults.max_height)
    p.add_argument("--max-speed", type=float, default=defaults.max_speed)
    p.add_argument("--skate-speed", type=float, default=defaults.skate_speed)
    p.add_argument("--up-axis", type=int, default=defaults.up_axis, choices=[0, 1, 2])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lamof", description="Supermotion compression toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-clusters", help="fit the velocity cluster model")
    p.add_argument("--input", nargs="+", required=True, help="motion files or glob patterns")
    p.add_argument("--k", type=int, default=codec.DEFAULT_K)
    p.add_argument("--seed", type=int)
    p.add_argument("--batch-size", type=int, default=1024)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit_clusters)

    p = sub.add_parser("encode", help="motion -> supermotions")
    p.add_argument("--input", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--condition-tag")
    _add_encode_options(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="supermotions -> motion")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--reorthonormalize", action="store_true")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("roundtrip", help="encode, decode and report fidelity")
    p.add_argument("--input", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--skeleton")
    _add_encode_options(p)
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("metrics", help="supermotion metrics of --b against --a")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--weights")
    p.add_argument("--skeleton")
    _add_contact_options(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("fsr", help="foot skating ratio")
    p.add_argument("--input", required=True)
    p.add_argument("--skeleton", required=True)
    _add_contact_options(p)
    p.set_defaults(func=cmd_fsr)

    p = sub.add_parser("stitch", help="crossfade-stitch clips in order")
    p.add_argument("--clips", nargs="+", required=True)
    p.add_argument("--transition", type=int, default=DEFAULT_TRANSITION)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stitch)

    p = sub.add_parser("build-corpus", help="build a stitched multi-clip corpus")
    p.add_argument("--manifest", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--clips-per-sample", type=int, default=DEFAULT_CLIP_COUNT)
    p.add_argument("--transition", type=int, default=DEFAULT_TRANSITION)
    p.add_argument("--len-min", type=int, default=StitchConfig.len_min)
    p.add_argument("--len-max", type=int, default=StitchConfig.len_max)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_build_corpus)

    p = sub.add_parser("loop", help="close a supermotion sequence into a loop")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", action="store_true")
    p.set_defaults(func=cmd_loop)

    p = sub.add_parser("retime", help="impose a total duration")
    p.add_argument("--input", required=True)
    p.add_argument("--total", type=int, required=True)
    p.add_argument("--d-min", type=int, default=1)
    p.add_argument("--d-max", type=int)
    p.add_argument("--mode", choices=["even", "seeded"], default="even")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_retime)

    p = sub.add_parser("resample", help="clip or interpolate to a frame count")
    p.add_argument("--input", required=True)
    p.add_argument("--frames", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_resample)
    return parser


def _fail(code: str, message: str, status: int, **context) -> int:
    print(json.dumps({"code": code, "message": message, "context": context}, sort_keys=True), file=sys.stderr)
    return status


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        return _fail("USAGE", "invalid command line", 2)
    try:
        args.func(args)
    except LamofError as exc:
        print(json.dumps(exc.to_dict(), sort_keys=True, default=str), file=sys.stderr)
        return exc.exit_status
    except OSError as exc:
        return _fail("IO_ERROR", str(exc), 2, path=getattr(exc, "filename", None))
    except Exception as exc:  # noqa: BLE001
        return _fail("INTERNAL", f"{type(exc).__name__}: {exc}", 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
