"""Command-line entry points: synth, modes, targets, coverage.

All data goes to the --out file; warnings and counters go to stderr. Every
command is deterministic for a fixed seed, config and input, so repeated runs
produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import matching
from .anchors import PyramidConfig, load_config_document
from .assignment import SIMILARITY_IOU, SIMILARITY_OKS
from .datasets import ParseResult, parse_annotations
from .errors import PointSetError
from .pipeline import (
    TASK_MASK,
    TASK_POSE_TARGETS,
    CoverageConfig,
    TargetConfig,
    coverage_report,
    coverage_to_dict,
    emit_targets,
    render_coverage_table,
)
from .pose_modes import (
    center_point_shape,
    kmeans_poses,
    load_pose_modes,
    normalize_pose,
    rectangle_shape,
    save_pose_modes,
)
from .synthetic import CORPUS_CONTOURS, CORPUS_POSES, generate_synthetic_corpus, save_corpus


def _warn(message: str) -> None:
    print(message, file=sys.stderr)


def _report_parse_stats(result: ParseResult) -> None:
    stats = result.stats
    if stats.rejected_rle:
        _warn(f"warning: rejected {stats.rejected_rle} RLE segmentation(s)")
    if stats.rejected_crowd:
        _warn(f"warning: rejected {stats.rejected_crowd} crowd annotation(s)")
    if stats.dropped_polygons:
        _warn(f"warning: dropped {stats.dropped_polygons} degenerate polygon(s)")
    if stats.out_of_bounds:
        _warn(f"warning: {stats.out_of_bounds} record(s) have out-of-bounds coordinates")


def _normalized_poses(result: ParseResult):
    poses = []
    skipped = 0
    for record in result.records:
        if record.keypoints is None or not record.bbox.area > 0.0:
            skipped += 1
            continue
        visible = record.keypoints[:, 2]
        if np.count_nonzero(visible > 0) < 2:
            skipped += 1
            continue
        poses.append(normalize_pose(record.keypoints[:, :2], visible, record.bbox))
    if skipped:
        _warn(f"warning: skipped {skipped} record(s) without usable keypoints")
    return poses


def _cmd_synth(args) -> int:
    difficulty = {}
    if args.kind == CORPUS_CONTOURS:
        if args.convex is not None:
            difficulty["convex"] = args.convex
        if args.vertex_range:
            difficulty["vertex_range"] = tuple(args.vertex_range)
    else:
        difficulty["jitter"] = args.jitter
        difficulty["dropout"] = args.dropout
        difficulty["truncation"] = args.truncation
        difficulty["n_prototypes"] = args.prototypes
    records = generate_synthetic_corpus(
        args.kind, args.count, seed=args.seed,
        image_size=tuple(args.image_size),
        instances_per_image=args.instances_per_image,
        **difficulty,
    )
    save_corpus(records, args.out)
    print(f"wrote {len(records)} {args.kind} record(s) to {args.out}")
    return 0


def _cmd_modes(args) -> int:
    result = parse_annotations(args.annotations)
    _report_parse_stats(result)
    poses = _normalized_poses(result)
    modes = kmeans_poses(poses, k=args.k, seed=args.seed, max_iters=args.max_iters)
    save_pose_modes(modes, args.out)
    print(f"wrote {modes.k} mode(s) to {args.out} (inertia {modes.inertia:.6f})")
    return 0


def _cmd_targets(args) -> int:
    result = parse_annotations(args.annotations)
    _report_parse_stats(result)
    # Merge the document and CLI flags before constructing, so hi/lo presets
    # are derived from the final task rather than an intermediate default.
    document = load_config_document(args.config) if args.config else {}
    if args.task:
        document["task"] = args.task
    if args.strategy:
        document["strategy"] = args.strategy
    if args.hi is not None:
        document["hi"] = args.hi
    if args.lo is not None:
        document["lo"] = args.lo
    if args.force_nearest:
        document["force_nearest"] = True
    config = TargetConfig.from_dict(document)
    canonical_poses = None
    if config.task == TASK_POSE_TARGETS:
        if not args.modes:
            raise PointSetError("pose targets need --modes <modes.json>")
        canonical_poses = load_pose_modes(args.modes).modes
    summary = emit_targets(result.records, config, args.out, canonical_poses)
    print(json.dumps(summary, sort_keys=True))
    return 0


def _coverage_ladder(args, poses) -> list[CoverageConfig]:
    # the scale and rotation variants stay on: single-variant grids are too
    # coarse for the degenerate baselines to register at all
    pyramid = PyramidConfig()
    if args.config:
        pyramid = TargetConfig.from_file(args.config).pyramid
    configs = [
        CoverageConfig("center-point", pyramid, TASK_POSE_TARGETS, center_point_shape()[None]),
        CoverageConfig("rectangle", pyramid, TASK_POSE_TARGETS, rectangle_shape()[None]),
    ]
    mean = kmeans_poses(poses, k=1, seed=args.seed)
    configs.append(CoverageConfig("mean-pose", pyramid, TASK_POSE_TARGETS, mean.modes))
    if args.k > 1:
        clustered = kmeans_poses(poses, k=args.k, seed=args.seed)
        configs.append(
            CoverageConfig(f"kmeans-{args.k}", pyramid, TASK_POSE_TARGETS, clustered.modes)
        )
    return configs


def _cmd_coverage(args) -> int:
    result = parse_annotations(args.annotations)
    _report_parse_stats(result)
    if args.similarity == SIMILARITY_OKS:
        poses = _normalized_poses(result)
        configs = _coverage_ladder(args, poses)
    else:
        pyramid = PyramidConfig()
        if args.config:
            pyramid = TargetConfig.from_file(args.config).pyramid
        configs = [CoverageConfig("mask-anchors", pyramid, TASK_MASK)]
    reports = coverage_report(result.records, configs, similarity=args.similarity,
                              threshold=args.threshold)
    Path(args.out).write_text(json.dumps(coverage_to_dict(reports), sort_keys=True) + "\n")
    print(render_coverage_table(reports), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pointset-anchors",
        description="Point-set anchor target generation and coverage tooling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic COCO-style corpus")
    synth.add_argument("--kind", choices=(CORPUS_CONTOURS, CORPUS_POSES), required=True)
    synth.add_argument("--count", type=int, required=True)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True)
    synth.add_argument("--image-size", type=int, nargs=2, default=(256, 256),
                       metavar=("WIDTH", "HEIGHT"))
    synth.add_argument("--instances-per-image", type=int, default=1)
    synth.add_argument("--convex", action="store_true", default=None,
                       help="contours: emit only convex polygons")
    synth.add_argument("--vertex-range", type=int, nargs=2, default=None,
                       metavar=("LO", "HI"))
    synth.add_argument("--jitter", type=float, default=0.0,
                       help="poses: per-joint gaussian noise in pixels")
    synth.add_argument("--dropout", type=float, default=0.0,
                       help="poses: per-joint invisibility probability")
    synth.add_argument("--truncation", type=float, default=0.0,
                       help="poses: probability of a truncated visibility pattern")
    synth.add_argument("--prototypes", type=int, default=1,
                       help="poses: number of built-in prototype poses to draw from")
    synth.set_defaults(func=_cmd_synth)

    modes = sub.add_parser("modes", help="cluster corpus poses into canonical modes")
    modes.add_argument("--annotations", required=True)
    modes.add_argument("--k", type=int, default=3)
    modes.add_argument("--seed", type=int, default=0)
    modes.add_argument("--max-iters", type=int, default=100)
    modes.add_argument("--out", required=True)
    modes.set_defaults(func=_cmd_modes)

    targets = sub.add_parser("targets", help="emit per-anchor training targets")
    targets.add_argument("--annotations", required=True)
    targets.add_argument("--config", default=None, help="TargetConfig JSON/YAML document")
    targets.add_argument("--task", choices=(TASK_MASK, TASK_POSE_TARGETS), default=None)
    targets.add_argument("--strategy", choices=matching.STRATEGIES, default=None)
    targets.add_argument("--modes", default=None, help="pose modes JSON (pose task)")
    targets.add_argument("--hi", type=float, default=None)
    targets.add_argument("--lo", type=float, default=None)
    targets.add_argument("--force-nearest", action="store_true")
    targets.add_argument("--out", required=True)
    targets.set_defaults(func=_cmd_targets)

    coverage = sub.add_parser("coverage", help="report anchor coverage over a corpus")
    coverage.add_argument("--annotations", required=True)
    coverage.add_argument("--config", default=None, help="TargetConfig JSON/YAML document")
    coverage.add_argument("--similarity", choices=(SIMILARITY_OKS, SIMILARITY_IOU),
                          default=SIMILARITY_OKS)
    coverage.add_argument("--threshold", type=float, default=0.5)
    coverage.add_argument("--k", type=int, default=3,
                          help="pose ladder: add a k-means configuration with this k")
    coverage.add_argument("--seed", type=int, default=0)
    coverage.add_argument("--out", required=True)
    coverage.set_defaults(func=_cmd_coverage)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PointSetError, FileNotFoundError, OSError) as err:
        _warn(f"error: {err}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
