"""Positive/negative/ignore assignment of anchors to ground truths.

Similarity is box IoU for mask anchors (their implicit boxes vs gt boxes) or
object keypoint similarity (OKS) for pose anchors. An anchor is positive when
its best similarity reaches ``hi`` (matched to its argmax gt), negative when
it stays below ``lo``, and ignored in between. With ``force_nearest`` every gt
additionally claims its single best anchor regardless of threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .anchors import NUM_JOINTS, REFINED_MODE_ID, MaskAnchor, PoseAnchor
from .errors import (
    BadThresholdsError,
    JointCountMismatchError,
    LengthMismatchError,
    NonPositiveScaleError,
    NoVisibleJointsError,
    PointSetError,
)
from .geometry import box_iou_matrix

# Per-joint falloff widths kappa, index-aligned with the canonical 17-joint
# order (nose, eyes, ears, shoulders, elbows, wrists, hips, knees, ankles).
COCO_SIGMAS = np.array([
    0.026, 0.025, 0.025, 0.035, 0.035, 0.079, 0.079, 0.072, 0.072,
    0.062, 0.062, 0.107, 0.107, 0.087, 0.087, 0.089, 0.089,
])
COCO_KAPPAS = 2.0 * COCO_SIGMAS
COCO_KAPPAS.setflags(write=False)

SCALE_FROM_BBOX_AREA = "gt-bbox-area"
SCALE_FROM_SEGMENT_AREA = "gt-segment-area"

SIMILARITY_IOU = "iou"
SIMILARITY_OKS = "oks"

THRESHOLD_PRESETS = {
    "detection": (0.6, 0.4),
    "segmentation": (0.6, 0.4),
    "pose-stage1": (0.5, 0.4),
    "pose-stage2": (0.99, 0.4),
}


def threshold_preset(name: str) -> tuple[float, float]:
    """(hi, lo) assignment thresholds for a named task."""
    try:
        return THRESHOLD_PRESETS[name]
    except KeyError:
        raise PointSetError(
            f"unknown threshold preset {name!r}; expected one of {sorted(THRESHOLD_PRESETS)}"
        ) from None


@dataclass(frozen=True)
class OksParams:
    """OKS configuration: per-joint kappas and where the gt scale comes from."""

    kappas: np.ndarray = field(default_factory=lambda: COCO_KAPPAS)
    scale_source: str = SCALE_FROM_BBOX_AREA

    def __post_init__(self):
        kappas = np.ascontiguousarray(np.asarray(self.kappas, dtype=float))
        if kappas.shape != (NUM_JOINTS,):
            raise JointCountMismatchError(
                f"kappas must have shape ({NUM_JOINTS},), got {kappas.shape}"
            )
        if not (np.isfinite(kappas).all() and (kappas > 0).all()):
            raise NonPositiveScaleError("kappas must be finite and > 0")
        kappas.setflags(write=False)
        object.__setattr__(self, "kappas", kappas)
        if self.scale_source not in (SCALE_FROM_BBOX_AREA, SCALE_FROM_SEGMENT_AREA):
            raise PointSetError(f"unknown scale_source {self.scale_source!r}")


DEFAULT_OKS_PARAMS = OksParams()

# Exponents beyond this flush to zero (exp(-40) < 5e-18, far below every
# stated tolerance). Both the scalar and matrix paths apply the same rule, so
# the matrix path can skip whole anchors whose distance bound already puts
# every joint past the cutoff and still agree with the scalar path exactly.
EXP_FLUSH = 40.0


def oks(candidate, gt_joints, visibility, gt_scale: float,
        params: OksParams = DEFAULT_OKS_PARAMS) -> float:
    """Object keypoint similarity of a candidate joint set against a gt pose.

    Mean over visible joints of exp(-d_i^2 / (2 * gt_scale * kappa_i^2)),
    where d_i is the Euclidean distance between paired joints and gt_scale is
    the gt's area in square pixels.
    """
    candidate = np.asarray(candidate, dtype=float)
    gt_joints = np.asarray(gt_joints, dtype=float)
    visibility = np.asarray(visibility)
    if candidate.shape != (NUM_JOINTS, 2) or gt_joints.shape != (NUM_JOINTS, 2):
        raise JointCountMismatchError(
            f"expected ({NUM_JOINTS}, 2) joint arrays, got {candidate.shape} and {gt_joints.shape}"
        )
    if visibility.shape != (NUM_JOINTS,):
        raise JointCountMismatchError(f"expected ({NUM_JOINTS},) visibility, got {visibility.shape}")
    if not (np.isfinite(gt_scale) and gt_scale > 0.0):
        raise NonPositiveScaleError(f"gt_scale must be finite and > 0, got {gt_scale}")
    visible = visibility > 0
    if not visible.any():
        raise NoVisibleJointsError("OKS is undefined with no visible joints")
    d2 = ((candidate - gt_joints) ** 2).sum(axis=1)
    z = d2 / (2.0 * gt_scale * params.kappas ** 2)
    terms = np.where(z > EXP_FLUSH, 0.0, np.exp(-z))
    return float(terms[visible].mean())


def oks_matrix(candidates, gt_joints, gt_visibility, gt_scales,
               params: OksParams = DEFAULT_OKS_PARAMS) -> np.ndarray:
    """Pairwise OKS between (A, 17, 2) candidates and (G, 17, 2) ground truths.

    Vectorized over candidates one gt at a time; matches ``oks`` exactly.
    Candidates whose centroid is provably too far for any joint to survive
    the flush cutoff are skipped wholesale.
    """
    candidates = np.asarray(candidates, dtype=float).reshape(-1, NUM_JOINTS, 2)
    gt_joints = np.asarray(gt_joints, dtype=float).reshape(-1, NUM_JOINTS, 2)
    gt_visibility = np.asarray(gt_visibility).reshape(len(gt_joints), NUM_JOINTS)
    gt_scales = np.asarray(gt_scales, dtype=float).reshape(len(gt_joints))
    out = np.zeros((len(candidates), len(gt_joints)))
    kappas2 = params.kappas ** 2
    centroids = candidates.mean(axis=1)
    radii = np.sqrt(((candidates - centroids[:, None, :]) ** 2).sum(axis=2)).max(axis=1)
    for g in range(len(gt_joints)):
        visible = gt_visibility[g] > 0
        if not visible.any():
            raise NoVisibleJointsError(f"gt {g} has no visible joints")
        if not gt_scales[g] > 0.0:
            raise NonPositiveScaleError(f"gt {g} has non-positive scale {gt_scales[g]}")
        gt_vis = gt_joints[g, visible, :]
        gt_center = gt_vis.mean(axis=0)
        gt_radius = np.sqrt(((gt_vis - gt_center) ** 2).sum(axis=1)).max()
        # smallest possible joint distance for each candidate
        gap = np.linalg.norm(centroids - gt_center, axis=1) - radii - gt_radius
        gap = np.maximum(gap, 0.0)
        cutoff2 = EXP_FLUSH * 2.0 * gt_scales[g] * kappas2[visible].max()
        near = np.flatnonzero(gap * gap <= cutoff2)
        if len(near) == 0:
            continue
        d2 = ((candidates[near][:, visible, :] - gt_vis) ** 2).sum(axis=2)
        z = d2 / (2.0 * gt_scales[g] * kappas2[visible])
        out[near, g] = np.where(z > EXP_FLUSH, 0.0, np.exp(-z)).mean(axis=1)
    return out


LABEL_IGNORE = -1
LABEL_NEGATIVE = 0


@dataclass(frozen=True)
class LabelAssignment:
    """Outcome for one anchor: class label, matched gt index, similarity.

    ``label`` is 0 for negative, -1 for ignore, or the positive class id;
    ``matched_gt`` indexes the gt list for positives and is None otherwise.
    """

    label: int
    matched_gt: int | None
    similarity: float

    @property
    def is_positive(self) -> bool:
        return self.label > 0

    @property
    def is_negative(self) -> bool:
        return self.label == LABEL_NEGATIVE

    @property
    def is_ignore(self) -> bool:
        return self.label == LABEL_IGNORE


def assign_arrays(similarity, hi: float, lo: float, force_nearest: bool = False,
                  gt_class_ids=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Array form of the assigner: (labels, matched_gt, best_similarity).

    ``labels`` holds 0 for negative, -1 for ignore, else the positive class
    id; ``matched_gt`` holds the claimed gt index or -1. Kept free of
    per-anchor objects so dense grids assign in bulk.
    """
    if not (0.0 <= lo <= hi <= 1.0):
        raise BadThresholdsError(f"thresholds must satisfy 0 <= lo <= hi <= 1, got lo={lo} hi={hi}")
    sim = np.asarray(similarity, dtype=float)
    if sim.ndim != 2:
        raise LengthMismatchError(f"similarity must be 2-D, got shape {sim.shape}")
    num_anchors, num_gts = sim.shape
    if gt_class_ids is None:
        gt_class_ids = np.ones(num_gts, dtype=int)
    else:
        gt_class_ids = np.asarray(gt_class_ids, dtype=int)
        if gt_class_ids.shape != (num_gts,):
            raise LengthMismatchError(
                f"gt_class_ids must have shape ({num_gts},), got {gt_class_ids.shape}"
            )
        if (gt_class_ids <= 0).any():
            raise PointSetError("gt class ids must be positive integers")

    if num_gts == 0:
        return (np.zeros(num_anchors, dtype=int), np.full(num_anchors, -1),
                np.zeros(num_anchors))

    best_gt = sim.argmax(axis=1)
    best = sim[np.arange(num_anchors), best_gt]
    matched = np.where(best >= hi, best_gt, -1)
    if force_nearest:
        for g in range(num_gts):
            a = int(sim[:, g].argmax())
            if matched[a] < 0 or sim[a, g] > sim[a, matched[a]]:
                matched[a] = g
                best[a] = sim[a, g]

    labels = np.where(matched >= 0, gt_class_ids[matched], LABEL_NEGATIVE)
    labels[(matched < 0) & (best >= lo)] = LABEL_IGNORE
    return labels, matched, best


def assign_from_similarity(similarity, hi: float, lo: float,
                           force_nearest: bool = False,
                           gt_class_ids=None) -> list[LabelAssignment]:
    """Assign labels from a precomputed (num_anchors, num_gts) similarity matrix.

    Each anchor takes the gt with the highest similarity when several qualify.
    With ``force_nearest``, each gt claims its argmax anchor even below ``hi``;
    a contested anchor keeps the gt with the higher similarity.
    """
    labels, matched, best = assign_arrays(similarity, hi, lo, force_nearest,
                                          gt_class_ids)
    return [
        LabelAssignment(int(label), int(m) if m >= 0 else None, float(b))
        for label, m, b in zip(labels, matched, best)
    ]


def similarity_matrix(anchors, gts, similarity: str = SIMILARITY_IOU,
                      oks_params: OksParams = DEFAULT_OKS_PARAMS) -> np.ndarray:
    """Build the anchor-by-gt similarity matrix for ``assign``.

    For IoU, ``anchors`` are MaskAnchors (or an (A, 4) box array) and ``gts``
    are Boxes (or a (G, 4) array). For OKS, ``anchors`` are PoseAnchors (or an
    (A, 17, 2) array) and ``gts`` are (joints, visibility, scale) triples.
    """
    if similarity == SIMILARITY_IOU:
        boxes_a = np.asarray(
            [a.implicit_box.as_array() if isinstance(a, MaskAnchor) else np.asarray(a, float)
             for a in anchors]
        ).reshape(-1, 4)
        boxes_g = np.asarray(
            [g.as_array() if hasattr(g, "as_array") else np.asarray(g, float) for g in gts]
        ).reshape(-1, 4)
        return box_iou_matrix(boxes_a, boxes_g)
    if similarity == SIMILARITY_OKS:
        joints_a = np.asarray(
            [a.joints if isinstance(a, PoseAnchor) else np.asarray(a, float) for a in anchors]
        ).reshape(-1, NUM_JOINTS, 2)
        gt_joints = np.asarray([np.asarray(j, float) for j, _, _ in gts])
        gt_vis = np.asarray([np.asarray(v) for _, v, _ in gts])
        gt_scales = np.asarray([float(s) for _, _, s in gts])
        return oks_matrix(joints_a, gt_joints, gt_vis, gt_scales, oks_params)
    raise PointSetError(f"unknown similarity {similarity!r}")


def assign(anchors, gts, hi: float, lo: float, force_nearest: bool = False,
           similarity: str = SIMILARITY_IOU, gt_class_ids=None,
           oks_params: OksParams = DEFAULT_OKS_PARAMS) -> list[LabelAssignment]:
    """Assign every anchor a positive/negative/ignore label against the gts."""
    if len(gts) == 0:
        return [LabelAssignment(LABEL_NEGATIVE, None, 0.0)] * len(anchors)
    sim = similarity_matrix(anchors, gts, similarity, oks_params)
    return assign_from_similarity(sim, hi, lo, force_nearest, gt_class_ids)


def refine_pose_anchors(stage1_predictions) -> list[PoseAnchor]:
    """Wrap stage-1 joint predictions as anchors for a second assignment round.

    Refined anchors carry mode_id REFINED_MODE_ID (-1), scale 1, rotation 0.
    """
    preds = np.asarray(stage1_predictions, dtype=float)
    if preds.ndim == 2:
        preds = preds[None]
    if preds.ndim != 3 or preds.shape[1:] != (NUM_JOINTS, 2):
        raise JointCountMismatchError(
            f"predictions must be (P, {NUM_JOINTS}, 2), got {preds.shape}"
        )
    return [PoseAnchor(p, mode_id=REFINED_MODE_ID, scale=1.0, rotation=0.0) for p in preds]
