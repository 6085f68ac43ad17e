"""Dataset-level target emission and anchor coverage reports.

``emit_targets`` writes one line-delimited JSON record per anchor (after a
versioned header line), sorted by (image, level, row, col, slot), with shape
offsets normalized by the emitting level's stride. ``coverage_report``
measures how well a set of anchor configurations covers the ground truths of
a corpus: the fraction of gts whose best anchor similarity reaches a
threshold, plus positive/negative counts under the assigner with
force_nearest on.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import matching
from .anchors import (
    MASK_MODE,
    POSE_MODE,
    AnchorGrid,
    PyramidConfig,
    generate_grid,
    load_config_document,
)
from .assignment import (
    DEFAULT_OKS_PARAMS,
    EXP_FLUSH,
    SCALE_FROM_SEGMENT_AREA,
    SIMILARITY_IOU,
    SIMILARITY_OKS,
    LabelAssignment,
    OksParams,
    assign_arrays,
    assign_from_similarity,
    threshold_preset,
)
from .datasets import InstanceRecord
from .errors import (
    MissingCanonicalPosesError,
    NoApplicableRecordsError,
    PointSetError,
)
from .geometry import box_iou_matrix, signed_area
from .losses import TASK_POSE, TASK_SEGMENTATION, head_output_dims

TARGET_FORMAT = "point-set-targets"
TARGET_VERSION = 1

TASK_MASK = "mask"
TASK_POSE_TARGETS = "pose"


@dataclass(frozen=True)
class TargetConfig:
    """Everything emit_targets needs besides the records themselves."""

    pyramid: PyramidConfig = field(default_factory=PyramidConfig)
    task: str = TASK_MASK
    strategy: str = matching.CORNER_PROJECTION
    hi: float | None = None
    lo: float | None = None
    force_nearest: bool = False
    num_classes: int = 1
    oks_params: OksParams = field(default_factory=OksParams)

    def __post_init__(self):
        if self.task not in (TASK_MASK, TASK_POSE_TARGETS):
            raise PointSetError(f"unknown task {self.task!r}")
        if self.task == TASK_MASK and self.strategy not in matching.STRATEGIES:
            raise PointSetError(f"unknown strategy {self.strategy!r}")
        if self.num_classes < 1:
            raise PointSetError(f"num_classes must be >= 1, got {self.num_classes}")
        preset = threshold_preset("detection" if self.task == TASK_MASK else "pose-stage1")
        if self.hi is None:
            object.__setattr__(self, "hi", preset[0])
        if self.lo is None:
            object.__setattr__(self, "lo", preset[1])

    @property
    def similarity(self) -> str:
        return SIMILARITY_IOU if self.task == TASK_MASK else SIMILARITY_OKS

    def to_dict(self) -> dict:
        return {
            "pyramid": self.pyramid.to_dict(),
            "task": self.task,
            "strategy": self.strategy,
            "hi": self.hi,
            "lo": self.lo,
            "force_nearest": self.force_nearest,
            "num_classes": self.num_classes,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TargetConfig":
        known = {"pyramid", "task", "strategy", "hi", "lo", "force_nearest", "num_classes"}
        unknown = set(data) - known
        if unknown:
            raise PointSetError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "pyramid" in kwargs:
            kwargs["pyramid"] = PyramidConfig.from_dict(kwargs["pyramid"])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "TargetConfig":
        return cls.from_dict(load_config_document(path))


def _group_by_image(records) -> dict[int, list[InstanceRecord]]:
    grouped: dict[int, list[InstanceRecord]] = {}
    for record in records:
        grouped.setdefault(record.image_id, []).append(record)
    return dict(sorted(grouped.items()))


def _gt_scale(record: InstanceRecord, params: OksParams) -> float:
    if params.scale_source == SCALE_FROM_SEGMENT_AREA and record.contours:
        return abs(signed_area(record.largest_contour()))
    return record.bbox.area


class _GridCache:
    """One AnchorGrid per distinct image size for a fixed configuration."""

    def __init__(self, pyramid: PyramidConfig, mode: str, canonical_poses=None):
        self.pyramid = pyramid
        self.mode = mode
        self.canonical_poses = canonical_poses
        self._grids: dict[tuple[int, int], AnchorGrid] = {}

    def get(self, image_size: tuple[int, int]) -> AnchorGrid:
        if image_size not in self._grids:
            self._grids[image_size] = generate_grid(
                self.pyramid, image_size, self.mode, self.canonical_poses
            )
        return self._grids[image_size]


def _mask_eligible(records) -> list[InstanceRecord]:
    return [r for r in records if r.contours and r.bbox.area > 0.0]


def _pose_eligible(records) -> list[InstanceRecord]:
    return [
        r for r in records
        if r.has_keypoints and r.bbox.area > 0.0 and r.visible_mask().any()
    ]


def _image_similarity(grid: AnchorGrid, gts: list[InstanceRecord], task: str,
                      oks_params: OksParams) -> np.ndarray:
    if task == TASK_MASK:
        gt_boxes = np.asarray([g.bbox.as_array() for g in gts])
        return box_iou_matrix(grid.box_stack(), gt_boxes)
    joints = np.asarray([g.keypoints[:, :2] for g in gts])
    vis = np.asarray([g.keypoints[:, 2] for g in gts])
    scales = np.asarray([_gt_scale(g, oks_params) for g in gts])
    # Same flush rule as oks_matrix, with two batching tricks: anchors whose
    # joints provably sit past the flush cutoff are skipped via the grid's
    # cached extents, and the squared distances expand as |c|^2 - 2 c.g + |g|^2
    # against cached |c|^2 so no per-pair difference array is built. The
    # expansion matches the direct form to ~1e-12; skipped anchors score an
    # exact zero on both paths.
    stacked = grid.joint_stack()
    sqnorms = grid.joint_square_norms()
    centroids, radii = grid.joint_extents()
    kappas2 = oks_params.kappas ** 2
    sim = np.zeros((grid.num_anchors, len(gts)))
    for g in range(len(gts)):
        visible = vis[g] > 0
        gt_vis = joints[g, visible]
        gt_center = gt_vis.mean(axis=0)
        gt_radius = np.sqrt(((gt_vis - gt_center) ** 2).sum(axis=1)).max()
        gap = np.linalg.norm(centroids - gt_center, axis=1) - radii - gt_radius
        gap = np.maximum(gap, 0.0)
        cutoff2 = EXP_FLUSH * 2.0 * scales[g] * kappas2[visible].max()
        near = np.flatnonzero(gap * gap <= cutoff2)
        if len(near) == 0:
            continue
        if len(near) > grid.num_anchors // 2:
            cand, cand_sq = stacked, sqnorms
        else:
            cand, cand_sq = stacked[near], sqnorms[near]
        dots = np.einsum("ajx,jx->aj", cand, joints[g])
        d2 = cand_sq - 2.0 * dots + (joints[g] ** 2).sum(axis=1)
        z = np.maximum(d2, 0.0) / (2.0 * scales[g] * kappas2)
        terms = np.where(z > EXP_FLUSH, 0.0, np.exp(-z))
        weights = np.where(visible, 1.0 / len(gt_vis), 0.0)
        scores = terms @ weights
        if cand is stacked:
            sim[near, g] = scores[near]
        else:
            sim[near, g] = scores
    return sim


def emit_targets(records, config: TargetConfig, out_path, canonical_poses=None) -> dict:
    """Write assignment and regression targets for every anchor of a corpus.

    The output starts with a versioned header line (format name, version,
    configuration echo, head output dims), followed by one JSON line per
    anchor in (image, level, row, col, slot) order. Offsets are divided by
    the anchor's level stride. Keys within a line are sorted; floats use
    repr, so a fixed corpus and config reproduce the file byte for byte.

    Returns a summary dict with anchor/label counts.
    """
    if config.task == TASK_POSE_TARGETS:
        if canonical_poses is None:
            raise MissingCanonicalPosesError("pose target emission needs canonical_poses")
        cache = _GridCache(config.pyramid, POSE_MODE, canonical_poses)
        eligible = _pose_eligible
    else:
        cache = _GridCache(config.pyramid, MASK_MODE)
        eligible = _mask_eligible

    grouped = _group_by_image(records)
    summary = {"images": len(grouped), "anchors": 0, "positives": 0,
               "negatives": 0, "ignores": 0, "skipped_records": 0, "lines": 0}

    out_path = Path(out_path)
    with out_path.open("w") as out:
        header = {
            "format": TARGET_FORMAT,
            "version": TARGET_VERSION,
            "task": config.task,
            "strategy": config.strategy if config.task == TASK_MASK else "pose",
            "similarity": config.similarity,
            "hi": config.hi,
            "lo": config.lo,
            "force_nearest": config.force_nearest,
            "num_classes": config.num_classes,
            "pyramid": config.pyramid.to_dict(),
            "head_dims": _header_dims(config, canonical_poses),
            "images": sorted(grouped),
        }
        out.write(json.dumps(header, sort_keys=True) + "\n")
        summary["lines"] += 1

        for image_id, image_records in grouped.items():
            gts = eligible(image_records)
            summary["skipped_records"] += len(image_records) - len(gts)
            grid = cache.get(image_records[0].image_size)
            if gts:
                sim = _image_similarity(grid, gts, config.task, config.oks_params)
                labels = assign_from_similarity(
                    sim, config.hi, config.lo, config.force_nearest,
                    np.asarray([g.class_id for g in gts]),
                )
            else:
                labels = [LabelAssignment(0, None, 0.0)] * grid.num_anchors

            level_ids, rows, cols, slots = grid.index_columns()
            level_by_id = {level.level: level for level in grid.levels}
            for a in range(grid.num_anchors):
                assignment = labels[a]
                line = {
                    "image": image_id,
                    "level": int(level_ids[a]),
                    "row": int(rows[a]),
                    "col": int(cols[a]),
                    "slot": int(slots[a]),
                    "label": assignment.label,
                    "gt": assignment.matched_gt,
                    "sim": assignment.similarity,
                    "valid": None,
                    "offsets": None,
                }
                if assignment.is_positive:
                    level = level_by_id[int(level_ids[a])]
                    gt = gts[assignment.matched_gt]
                    anchor = level.anchor(int(rows[a]), int(cols[a]), int(slots[a]))
                    if config.task == TASK_MASK:
                        result = matching.match(anchor, gt.largest_contour(), config.strategy)
                    else:
                        result = matching.match_pose(anchor, gt.keypoints[:, :2], gt.keypoints[:, 2])
                    scaled = result.offsets / level.stride
                    line["valid"] = [int(v) for v in result.valid]
                    line["offsets"] = [[float(dx), float(dy)] for dx, dy in scaled]
                    summary["positives"] += 1
                elif assignment.is_negative:
                    summary["negatives"] += 1
                else:
                    summary["ignores"] += 1
                out.write(json.dumps(line, sort_keys=True) + "\n")
            summary["anchors"] += grid.num_anchors
            summary["lines"] += grid.num_anchors
    return summary


def _header_dims(config: TargetConfig, canonical_poses) -> dict:
    if config.task == TASK_MASK:
        return head_output_dims(
            TASK_SEGMENTATION,
            config.pyramid.mask_anchors_per_location,
            num_classes=config.num_classes,
            num_points=config.pyramid.num_points,
        )
    per_location = (len(canonical_poses) * len(config.pyramid.pose_scales)
                    * len(config.pyramid.pose_rotations))
    return head_output_dims(TASK_POSE, per_location)


@dataclass(frozen=True)
class CoverageConfig:
    """One named anchor configuration to measure coverage for."""

    name: str
    pyramid: PyramidConfig = field(default_factory=PyramidConfig)
    task: str = TASK_POSE_TARGETS
    canonical_poses: np.ndarray | None = None

    def __post_init__(self):
        if self.task not in (TASK_MASK, TASK_POSE_TARGETS):
            raise PointSetError(f"unknown task {self.task!r}")
        if self.task == TASK_POSE_TARGETS and self.canonical_poses is None:
            raise MissingCanonicalPosesError(f"config {self.name!r} needs canonical_poses")


@dataclass(frozen=True)
class CoverageReport:
    """Coverage of one anchor configuration over one corpus."""

    name: str
    similarity: str
    threshold: float
    gt_count: int
    matched_gt_count: int
    matched_gt_fraction: float
    anchor_count: int
    positive_count: int
    negative_count: int
    ignore_count: int
    pos_neg_ratio: float
    pos_neg_per_mille: float
    histogram: tuple[int, ...]   # best similarity per gt, 10 uniform bins on [0, 1]


def coverage_report(records, configs, similarity: str = SIMILARITY_OKS,
                    threshold: float = 0.5, lo: float | None = None,
                    oks_params: OksParams = DEFAULT_OKS_PARAMS) -> list[CoverageReport]:
    """Measure gt coverage of each anchor configuration over a corpus.

    A gt counts as matched when its best anchor similarity reaches
    ``threshold``. Positive/negative counts come from the assigner with
    hi=threshold and force_nearest on (every gt claims its best anchor).
    """
    if not 0.0 < threshold <= 1.0:
        raise PointSetError(f"threshold must be in (0, 1], got {threshold}")
    if lo is None:
        lo = min(0.4, threshold)
    reports = []
    for config in configs:
        task = config.task
        eligible = _pose_eligible if task == TASK_POSE_TARGETS else _mask_eligible
        if task == TASK_POSE_TARGETS:
            cache = _GridCache(config.pyramid, POSE_MODE, config.canonical_poses)
        else:
            cache = _GridCache(config.pyramid, MASK_MODE)
        if similarity == SIMILARITY_IOU and task == TASK_POSE_TARGETS:
            raise PointSetError("IoU coverage needs a mask-task configuration")

        grouped = _group_by_image(records)
        best_sims: list[float] = []
        anchor_count = positive = negative = ignore = 0
        for image_id, image_records in grouped.items():
            gts = eligible(image_records)
            grid = cache.get(image_records[0].image_size)
            anchor_count += grid.num_anchors
            if not gts:
                negative += grid.num_anchors
                continue
            sim = _image_similarity(grid, gts, task, oks_params)
            best_sims.extend(sim.max(axis=0).tolist())
            labels, _, _ = assign_arrays(sim, threshold, lo, force_nearest=True)
            positive += int(np.count_nonzero(labels > 0))
            negative += int(np.count_nonzero(labels == 0))
            ignore += int(np.count_nonzero(labels < 0))
        if not best_sims:
            raise NoApplicableRecordsError(
                f"no records usable for coverage config {config.name!r}"
            )
        best = np.asarray(best_sims)
        matched = int(np.count_nonzero(best >= threshold))
        hist = np.histogram(np.clip(best, 0.0, 1.0), bins=10, range=(0.0, 1.0))[0]
        ratio = positive / negative if negative else float("inf")
        reports.append(CoverageReport(
            name=config.name,
            similarity=similarity,
            threshold=threshold,
            gt_count=len(best),
            matched_gt_count=matched,
            matched_gt_fraction=matched / len(best),
            anchor_count=anchor_count,
            positive_count=positive,
            negative_count=negative,
            ignore_count=ignore,
            pos_neg_ratio=ratio,
            pos_neg_per_mille=ratio * 1000.0,
            histogram=tuple(int(c) for c in hist),
        ))
    return reports


def render_coverage_table(reports) -> str:
    """Aligned text table: one row per configuration."""
    headers = ("config", "gts", "matched", "matched%", "pos", "neg", "pos/neg", "pos/neg (permille)")
    rows = [headers]
    for r in reports:
        rows.append((
            r.name, str(r.gt_count), str(r.matched_gt_count),
            f"{100.0 * r.matched_gt_fraction:.1f}",
            str(r.positive_count), str(r.negative_count),
            f"{r.pos_neg_ratio:.6f}", f"{r.pos_neg_per_mille:.3f}",
        ))
    widths = [max(len(row[i]) for row in rows) for i in range(len(headers))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * width for width in widths))
    return "\n".join(lines) + "\n"


def coverage_to_dict(reports) -> dict:
    """Machine-readable rendering of coverage reports."""
    return {"reports": [asdict(r) for r in reports]}
