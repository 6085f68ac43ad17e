"""Anchor-to-shape matching: per-point targets, validity flags and offsets.

Three strategies match an ordered mask anchor to a ground-truth contour:

* nearest point: each anchor point takes the L1-nearest contour vertex;
* nearest line: each anchor point takes its Euclidean projection onto the
  nearest contour segment;
* corner point with projection: the four corner anchor points take their
  L1-nearest vertices, which split the contour into top/right/bottom/left
  parts; every other anchor point casts an axis-aligned line (vertical for
  top/bottom side points, horizontal for left/right) and takes the nearest
  intersection with its part, or is marked invalid when the line misses it.

All offsets are raw pixels (target minus anchor point). Pose matching pairs
joints by index and uses visibility as validity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .anchors import NUM_JOINTS, MaskAnchor, PoseAnchor
from .errors import JointCountMismatchError, LengthMismatchError, PointSetError
from .geometry import Box, Contour

NEAREST_POINT = "nearest-point"
NEAREST_LINE = "nearest-line"
CORNER_PROJECTION = "corner-projection"
POSE = "pose"
STRATEGIES = (NEAREST_POINT, NEAREST_LINE, CORNER_PROJECTION)


@dataclass(frozen=True)
class MatchResult:
    """Matched targets per anchor point.

    ``offsets[i] == targets[i] - anchor_points[i]`` wherever ``valid[i]``;
    rows with ``valid[i] == False`` carry zeros and no meaning.
    """

    targets: np.ndarray
    valid: np.ndarray
    offsets: np.ndarray
    strategy: str

    def __post_init__(self):
        targets = np.ascontiguousarray(np.asarray(self.targets, dtype=float))
        offsets = np.ascontiguousarray(np.asarray(self.offsets, dtype=float))
        valid = np.ascontiguousarray(np.asarray(self.valid, dtype=bool))
        if targets.ndim != 2 or targets.shape[1] != 2:
            raise LengthMismatchError(f"targets must be (n, 2), got {targets.shape}")
        if not (len(targets) == len(offsets) == len(valid)):
            raise LengthMismatchError(
                f"targets/offsets/valid lengths differ: "
                f"{len(targets)}/{len(offsets)}/{len(valid)}"
            )
        for arr in (targets, offsets, valid):
            arr.setflags(write=False)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "valid", valid)

    @property
    def num_valid(self) -> int:
        return int(np.count_nonzero(self.valid))


def _anchor_points(anchor) -> np.ndarray:
    if isinstance(anchor, MaskAnchor):
        return anchor.points
    return np.asarray(anchor, dtype=float)


def _result(points: np.ndarray, targets: np.ndarray, valid: np.ndarray, strategy: str) -> MatchResult:
    offsets = np.where(valid[:, None], targets - points, 0.0)
    targets = np.where(valid[:, None], targets, 0.0)
    return MatchResult(targets=targets, valid=valid, offsets=offsets, strategy=strategy)


def match_nearest_point(anchor: MaskAnchor, gt: Contour) -> MatchResult:
    """Match each anchor point to the L1-nearest contour vertex.

    Exact distance ties resolve to the lowest vertex index. Every point is
    valid under this strategy.
    """
    points = _anchor_points(anchor)
    verts = gt.vertices
    dist = np.abs(points[:, None, :] - verts[None, :, :]).sum(axis=-1)
    idx = dist.argmin(axis=1)
    targets = verts[idx]
    valid = np.ones(len(points), dtype=bool)
    return _result(points, targets, valid, NEAREST_POINT)


def match_nearest_line(anchor: MaskAnchor, gt: Contour) -> MatchResult:
    """Match each anchor point to its projection on the nearest contour segment.

    Segments are the closed edges (v_i, v_{i+1 mod m}); distance is Euclidean
    to the clamped projection; exact ties resolve to the lowest segment index.
    Every point is valid under this strategy.
    """
    points = _anchor_points(anchor)
    a = gt.vertices
    b = np.roll(a, -1, axis=0)
    ab = b - a
    denom = (ab * ab).sum(axis=1)
    rel = points[:, None, :] - a[None, :, :]
    t = (rel * ab[None, :, :]).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(denom > 0.0, t / denom, 0.0)
    t = np.clip(t, 0.0, 1.0)
    proj = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d2 = ((points[:, None, :] - proj) ** 2).sum(axis=-1)
    seg = d2.argmin(axis=1)
    targets = proj[np.arange(len(points)), seg]
    valid = np.ones(len(points), dtype=bool)
    return _result(points, targets, valid, NEAREST_LINE)


def _axis_intersections(coord: float, axis: int, p1: np.ndarray, p2: np.ndarray) -> list[np.ndarray]:
    """Intersections of the line {axis coordinate == coord} with segment p1-p2.

    The constrained coordinate of a returned point is pinned to ``coord``
    exactly. A segment lying entirely on the line contributes both endpoints.
    """
    s1 = p1[axis] - coord
    s2 = p2[axis] - coord
    if s1 == 0.0 and s2 == 0.0:
        return [p1, p2]
    if s1 * s2 > 0.0:
        return []
    t = s1 / (s1 - s2)
    free = 1 - axis
    point = np.empty(2)
    point[axis] = coord
    point[free] = p1[free] + t * (p2[free] - p1[free])
    return [point]


def match_corner_projection(anchor: MaskAnchor, gt: Contour) -> MatchResult:
    """Corner point with projection matching.

    The four corner anchor points are matched to contour vertices by the
    nearest-point rule, splitting the contour into four parts by traversal
    order (top-left -> top-right -> bottom-right -> bottom-left, the stored
    orientation). Non-corner anchor points cast a vertical line (top/bottom
    sides) or a horizontal line (right/left sides) and take the intersection
    with their part nearest to the anchor point, ties going to the first in
    traversal order. Points whose line misses their part are invalid; corner
    points are always valid. A part whose two corner targets coincide is a
    single vertex and matches only when the cast line passes through it.
    """
    if not isinstance(anchor, MaskAnchor):
        raise PointSetError("corner projection requires a MaskAnchor with corner indices")
    points = anchor.points
    n = len(points)
    verts = gt.vertices
    m = len(verts)
    ci = anchor.corner_indices

    corner_dist = np.abs(points[list(ci), None, :] - verts[None, :, :]).sum(axis=-1)
    corner_vertex = corner_dist.argmin(axis=1)

    targets = np.zeros((n, 2))
    valid = np.zeros(n, dtype=bool)
    for corner_pos, vertex_idx in zip(ci, corner_vertex):
        targets[corner_pos] = verts[vertex_idx]
        valid[corner_pos] = True

    # side s spans anchor indices ci[s]+1 .. ci[s+1]-1 and runs between the
    # matched vertices corner_vertex[s] -> corner_vertex[s+1] (wrapping);
    # vertical cast lines on top/bottom sides (s = 0, 2), horizontal on
    # right/left (s = 1, 3).
    for side in range(4):
        start_vertex = int(corner_vertex[side])
        end_vertex = int(corner_vertex[(side + 1) % 4])
        axis = 0 if side % 2 == 0 else 1
        span = (end_vertex - start_vertex) % m
        part = [verts[(start_vertex + j) % m] for j in range(span + 1)]

        first = ci[side] + 1
        last = ci[(side + 1) % 4] if side < 3 else n
        for i in range(first, last):
            p = points[i]
            best = None
            best_d2 = np.inf
            if len(part) == 1:
                if part[0][axis] == p[axis]:
                    best = part[0].copy()
                    best_d2 = 0.0
            else:
                for j in range(len(part) - 1):
                    for cand in _axis_intersections(p[axis], axis, part[j], part[j + 1]):
                        d2 = float(((cand - p) ** 2).sum())
                        if d2 < best_d2:
                            best = cand
                            best_d2 = d2
            if best is not None:
                targets[i] = best
                valid[i] = True
    return _result(points, targets, valid, CORNER_PROJECTION)


def match(anchor: MaskAnchor, gt: Contour, strategy: str) -> MatchResult:
    """Dispatch to one of the three mask matching strategies by tag."""
    if strategy == NEAREST_POINT:
        return match_nearest_point(anchor, gt)
    if strategy == NEAREST_LINE:
        return match_nearest_line(anchor, gt)
    if strategy == CORNER_PROJECTION:
        return match_corner_projection(anchor, gt)
    raise PointSetError(f"unknown matching strategy {strategy!r}; expected one of {STRATEGIES}")


def match_pose(anchor, gt_joints, visibility) -> MatchResult:
    """Pair anchor joints with ground-truth joints by index.

    Validity is visibility > 0. Targets for invisible joints are zeroed and
    carry no offset.
    """
    joints = anchor.joints if isinstance(anchor, PoseAnchor) else np.asarray(anchor, dtype=float)
    gt_joints = np.asarray(gt_joints, dtype=float)
    visibility = np.asarray(visibility)
    if joints.shape != (NUM_JOINTS, 2) or gt_joints.shape != (NUM_JOINTS, 2):
        raise JointCountMismatchError(
            f"expected ({NUM_JOINTS}, 2) joint arrays, got {joints.shape} and {gt_joints.shape}"
        )
    if visibility.shape != (NUM_JOINTS,):
        raise JointCountMismatchError(
            f"expected ({NUM_JOINTS},) visibility, got {visibility.shape}"
        )
    valid = visibility > 0
    return _result(joints, gt_joints, valid, POSE)


def encode_box_targets(anchor: MaskAnchor, gt_box: Box) -> np.ndarray:
    """Box regression targets: gt corners minus the anchor's own corner points.

    Returns (dx_min, dy_min, dx_max, dy_max) relative to the anchor's
    top-left and bottom-right perimeter points.
    """
    tl = anchor.points[anchor.corner_indices[0]]
    br = anchor.points[anchor.corner_indices[2]]
    return np.array([
        gt_box.x_min - tl[0],
        gt_box.y_min - tl[1],
        gt_box.x_max - br[0],
        gt_box.y_max - br[1],
    ])
