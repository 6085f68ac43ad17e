"""Point-set anchor synthesis and feature-pyramid tiling.

A mask anchor is an ordered set of n points sampled on the perimeter of an
implicit box (n divisible by 4, traversal clockwise in image coordinates from
the top-left corner). A pose anchor is an ordered set of 17 joints obtained by
placing a canonical pose at a location and applying a scale/rotation variant
about its joint centroid. ``generate_grid`` tiles either kind over a feature
pyramid: one anchor set per (level, row, col, slot).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Union

import numpy as np

from .errors import (
    BadPointCountError,
    DegenerateBoxError,
    JointCountMismatchError,
    MissingCanonicalPosesError,
    NonPositiveScaleError,
    PointSetError,
)
from .geometry import Box, Point2, as_point, transform_points

NUM_JOINTS = 17

DEFAULT_LEVELS = ((8.0, 32.0), (16.0, 64.0), (32.0, 128.0), (64.0, 256.0), (128.0, 512.0))
DEFAULT_OCTAVE_SCALES = (1.0, 2.0 ** (1.0 / 3.0), 2.0 ** (2.0 / 3.0))
DEFAULT_ASPECT_RATIOS = (0.5, 1.0, 2.0)

POSE_SCALES_FIVE = (0.6, 0.8, 1.0, 1.2, 1.4)
POSE_ROTATIONS_FIVE = (-20.0, -10.0, 0.0, 10.0, 20.0)
DEFAULT_POSE_SCALES = POSE_SCALES_FIVE[1:4]
DEFAULT_POSE_ROTATIONS = POSE_ROTATIONS_FIVE[1:4]

MASK_MODE = "mask"
POSE_MODE = "pose"


def sample_box_perimeter(box: Box, n: int) -> tuple[np.ndarray, tuple[int, int, int, int]]:
    """Sample ``n`` points on a box perimeter, clockwise from the top-left.

    Each side carries n/4 points at parameter i * side_length / (n / 4),
    i = 0 .. n/4 - 1, so the four box corners land exactly at indices
    0, n/4, n/2 and 3n/4 (top-left, top-right, bottom-right, bottom-left).

    Returns:
        (points, corner_indices): float64 array of shape (n, 2) and the four
        corner positions within it.
    """
    if n < 4 or n % 4 != 0:
        raise BadPointCountError(f"point count must be a positive multiple of 4, got {n}")
    if box.width <= 0.0 or box.height <= 0.0:
        raise DegenerateBoxError(f"cannot sample the perimeter of a degenerate box: {box}")
    per_side = n // 4
    t = np.arange(per_side, dtype=float) / per_side
    x0, y0, x1, y1 = box.x_min, box.y_min, box.x_max, box.y_max
    top = np.column_stack([x0 + t * (x1 - x0), np.full(per_side, y0)])
    right = np.column_stack([np.full(per_side, x1), y0 + t * (y1 - y0)])
    bottom = np.column_stack([x1 - t * (x1 - x0), np.full(per_side, y1)])
    left = np.column_stack([np.full(per_side, x0), y1 - t * (y1 - y0)])
    points = np.concatenate([top, right, bottom, left], axis=0)
    return points, (0, per_side, 2 * per_side, 3 * per_side)


@dataclass(frozen=True)
class MaskAnchor:
    """Ordered perimeter samples of an implicit box."""

    center: Point2
    implicit_box: Box
    points: np.ndarray
    corner_indices: tuple[int, int, int, int]

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 4 or pts.shape[0] % 4:
            raise BadPointCountError(f"anchor points must be (4k, 2), got shape {pts.shape}")
        if not np.isfinite(pts).all():
            raise PointSetError("anchor points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "center", as_point(self.center))
        object.__setattr__(self, "corner_indices", tuple(int(i) for i in self.corner_indices))

    @property
    def num_points(self) -> int:
        return len(self.points)


def build_mask_anchor(center, base_scale: float, octave: float = 1.0,
                      aspect: float = 1.0, n: int = 36) -> MaskAnchor:
    """Build a mask anchor for one (scale, octave, aspect) combination.

    The implicit box has area (base_scale * octave)**2 and width/height ratio
    ``aspect``, centered at ``center``.
    """
    for name, value in (("base_scale", base_scale), ("octave", octave), ("aspect", aspect)):
        if not (math.isfinite(value) and value > 0.0):
            raise NonPositiveScaleError(f"{name} must be finite and > 0, got {value}")
    side = base_scale * octave
    width = side * math.sqrt(aspect)
    height = side / math.sqrt(aspect)
    box = Box.from_center(center, width, height)
    points, corners = sample_box_perimeter(box, n)
    return MaskAnchor(as_point(center), box, points, corners)


REFINED_MODE_ID = -1


@dataclass(frozen=True)
class PoseAnchor:
    """Ordered 17-joint point set plus the variant that produced it."""

    joints: np.ndarray
    mode_id: int
    scale: float
    rotation: float

    def __post_init__(self):
        joints = np.ascontiguousarray(np.asarray(self.joints, dtype=float))
        if joints.shape != (NUM_JOINTS, 2):
            raise JointCountMismatchError(
                f"pose anchors carry exactly {NUM_JOINTS} joints, got shape {joints.shape}"
            )
        if not np.isfinite(joints).all():
            raise PointSetError("pose anchor joints must be finite")
        joints.setflags(write=False)
        object.__setattr__(self, "joints", joints)

    @property
    def centroid(self) -> Point2:
        c = self.joints.mean(axis=0)
        return Point2(float(c[0]), float(c[1]))


PointSetAnchor = Union[MaskAnchor, PoseAnchor]


@dataclass(frozen=True)
class PyramidConfig:
    """Feature-pyramid tiling: (stride, base_scale) per level plus variants.

    Defaults give 3 octaves x 3 aspects = 9 mask anchors per location and
    3 scales x 3 rotations per canonical pose. ``num_points`` is the mask
    anchor sample count n.
    """

    levels: tuple[tuple[float, float], ...] = DEFAULT_LEVELS
    octave_scales: tuple[float, ...] = DEFAULT_OCTAVE_SCALES
    aspect_ratios: tuple[float, ...] = DEFAULT_ASPECT_RATIOS
    pose_scales: tuple[float, ...] = DEFAULT_POSE_SCALES
    pose_rotations: tuple[float, ...] = DEFAULT_POSE_ROTATIONS
    num_points: int = 36

    def __post_init__(self):
        levels = tuple((float(s), float(b)) for s, b in self.levels)
        if not levels:
            raise PointSetError("config needs at least one pyramid level")
        strides = [s for s, _ in levels]
        if any(s <= 0 or b <= 0 for s, b in levels):
            raise NonPositiveScaleError("strides and base scales must be > 0")
        if any(b <= a for a, b in zip(strides, strides[1:])):
            raise PointSetError(f"strides must be strictly increasing, got {strides}")
        for name in ("octave_scales", "aspect_ratios", "pose_scales"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals or any(v <= 0 for v in vals):
                raise NonPositiveScaleError(f"{name} must be non-empty and > 0")
            object.__setattr__(self, name, vals)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "pose_rotations", tuple(float(r) for r in self.pose_rotations))
        if self.num_points < 4 or self.num_points % 4:
            raise BadPointCountError(f"num_points must be a multiple of 4, got {self.num_points}")

    @property
    def strides(self) -> tuple[float, ...]:
        return tuple(s for s, _ in self.levels)

    @property
    def base_scales(self) -> tuple[float, ...]:
        return tuple(b for _, b in self.levels)

    @property
    def mask_anchors_per_location(self) -> int:
        return len(self.octave_scales) * len(self.aspect_ratios)

    def to_dict(self) -> dict:
        return {
            "levels": [[s, b] for s, b in self.levels],
            "octave_scales": list(self.octave_scales),
            "aspect_ratios": list(self.aspect_ratios),
            "pose_scales": list(self.pose_scales),
            "pose_rotations": list(self.pose_rotations),
            "num_points": self.num_points,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PyramidConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise PointSetError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "levels" in kwargs:
            kwargs["levels"] = tuple(tuple(level) for level in kwargs["levels"])
        for key in ("octave_scales", "aspect_ratios", "pose_scales", "pose_rotations"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "PyramidConfig":
        return cls.from_dict(load_config_document(path))


def load_config_document(path) -> dict:
    """Read a JSON or YAML key/value document."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise PointSetError(f"config document must be a mapping, got {type(data).__name__}")
    return data


def _feature_shape(image_size, stride: float) -> tuple[int, int]:
    width, height = int(image_size[0]), int(image_size[1])
    if width <= 0 or height <= 0:
        raise DegenerateBoxError(f"image size must be positive, got {image_size}")
    return math.ceil(height / stride), math.ceil(width / stride)


def _location_centers(rows: int, cols: int, stride: float) -> np.ndarray:
    cx = (np.arange(cols, dtype=float) + 0.5) * stride
    cy = (np.arange(rows, dtype=float) + 0.5) * stride
    gx, gy = np.meshgrid(cx, cy)
    return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass(frozen=True, eq=False)
class MaskLevelGrid:
    """Mask anchors of one pyramid level, stacked in (row, col, slot) order."""

    level: int
    stride: float
    base_scale: float
    rows: int
    cols: int
    num_points: int
    boxes: np.ndarray            # (rows * cols * slots, 4)
    slot_octaves: np.ndarray     # (slots,)
    slot_aspects: np.ndarray     # (slots,)

    @property
    def anchors_per_location(self) -> int:
        return len(self.slot_octaves)

    @property
    def num_anchors(self) -> int:
        return len(self.boxes)

    def location_center(self, row: int, col: int) -> Point2:
        return Point2((col + 0.5) * self.stride, (row + 0.5) * self.stride)

    def anchor(self, row: int, col: int, slot: int) -> MaskAnchor:
        k = self.anchors_per_location
        box = Box(*self.boxes[(row * self.cols + col) * k + slot])
        points, corners = sample_box_perimeter(box, self.num_points)
        return MaskAnchor(self.location_center(row, col), box, points, corners)

    def iter_anchors(self) -> Iterator[tuple[int, int, int, MaskAnchor]]:
        for row in range(self.rows):
            for col in range(self.cols):
                for slot in range(self.anchors_per_location):
                    yield row, col, slot, self.anchor(row, col, slot)


@dataclass(frozen=True, eq=False)
class PoseLevelGrid:
    """Pose anchors of one pyramid level, stacked in (row, col, slot) order."""

    level: int
    stride: float
    base_scale: float
    rows: int
    cols: int
    joints: np.ndarray           # (rows * cols * slots, 17, 2)
    slot_modes: np.ndarray       # (slots,)
    slot_scales: np.ndarray      # (slots,)
    slot_rotations: np.ndarray   # (slots,)

    @property
    def anchors_per_location(self) -> int:
        return len(self.slot_modes)

    @property
    def num_anchors(self) -> int:
        return len(self.joints)

    def location_center(self, row: int, col: int) -> Point2:
        return Point2((col + 0.5) * self.stride, (row + 0.5) * self.stride)

    def anchor(self, row: int, col: int, slot: int) -> PoseAnchor:
        k = self.anchors_per_location
        idx = (row * self.cols + col) * k + slot
        return PoseAnchor(
            self.joints[idx],
            mode_id=int(self.slot_modes[slot]),
            scale=float(self.slot_scales[slot]),
            rotation=float(self.slot_rotations[slot]),
        )

    def iter_anchors(self) -> Iterator[tuple[int, int, int, PoseAnchor]]:
        for row in range(self.rows):
            for col in range(self.cols):
                for slot in range(self.anchors_per_location):
                    yield row, col, slot, self.anchor(row, col, slot)


LevelGrid = Union[MaskLevelGrid, PoseLevelGrid]


@dataclass(frozen=True)
class AnchorGrid:
    """All anchors of one image: one LevelGrid per pyramid level."""

    mode: str
    image_size: tuple[int, int]
    levels: tuple[LevelGrid, ...]

    @property
    def num_anchors(self) -> int:
        return sum(level.num_anchors for level in self.levels)

    def box_stack(self) -> np.ndarray:
        """All implicit boxes, (num_anchors, 4), in (level, row, col, slot) order."""
        if self.mode != MASK_MODE:
            raise PointSetError("box_stack is defined for mask grids")
        cached = self.__dict__.get("_box_stack")
        if cached is None:
            cached = np.concatenate([level.boxes for level in self.levels], axis=0)
            cached.setflags(write=False)
            object.__setattr__(self, "_box_stack", cached)
        return cached

    def joint_stack(self) -> np.ndarray:
        """All pose joints, (num_anchors, 17, 2), in (level, row, col, slot) order."""
        if self.mode != POSE_MODE:
            raise PointSetError("joint_stack is defined for pose grids")
        cached = self.__dict__.get("_joint_stack")
        if cached is None:
            cached = np.concatenate([level.joints for level in self.levels], axis=0)
            cached.setflags(write=False)
            object.__setattr__(self, "_joint_stack", cached)
        return cached

    def joint_extents(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-anchor joint centroid (num_anchors, 2) and enclosing radius.

        Cached; lets callers cheaply bound the distance from any point to an
        anchor's joints without touching the full joint stack.
        """
        cached = self.__dict__.get("_joint_extents")
        if cached is None:
            joints = self.joint_stack()
            centroids = joints.mean(axis=1)
            radii = np.sqrt(
                ((joints - centroids[:, None, :]) ** 2).sum(axis=2)
            ).max(axis=1)
            centroids.setflags(write=False)
            radii.setflags(write=False)
            cached = (centroids, radii)
            object.__setattr__(self, "_joint_extents", cached)
        return cached

    def joint_square_norms(self) -> np.ndarray:
        """Cached per-joint squared norms (num_anchors, 17).

        Supports expanding pairwise squared distances as |c|^2 - 2 c.g + |g|^2
        without materializing per-pair difference arrays.
        """
        cached = self.__dict__.get("_joint_square_norms")
        if cached is None:
            joints = self.joint_stack()
            cached = (joints * joints).sum(axis=2)
            cached.setflags(write=False)
            object.__setattr__(self, "_joint_square_norms", cached)
        return cached

    def index_columns(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(level, row, col, slot) per stacked anchor, aligned with the stacks."""
        levels, rows, cols, slots = [], [], [], []
        for level in self.levels:
            k = level.anchors_per_location
            n = level.num_anchors
            loc = np.arange(n) // k
            levels.append(np.full(n, level.level, dtype=int))
            rows.append(loc // level.cols)
            cols.append(loc % level.cols)
            slots.append(np.arange(n) % k)
        return tuple(np.concatenate(part) for part in (levels, rows, cols, slots))

    def iter_anchors(self) -> Iterator[tuple[int, int, int, int, PointSetAnchor]]:
        for level in self.levels:
            for row, col, slot, anchor in level.iter_anchors():
                yield level.level, row, col, slot, anchor


def _mask_level(config: PyramidConfig, level: int, image_size) -> MaskLevelGrid:
    stride, base_scale = config.levels[level]
    rows, cols = _feature_shape(image_size, stride)
    centers = _location_centers(rows, cols, stride)
    octaves, aspects = [], []
    half = np.empty((config.mask_anchors_per_location, 2))
    for i, octave in enumerate(config.octave_scales):
        for j, aspect in enumerate(config.aspect_ratios):
            side = base_scale * octave
            half[i * len(config.aspect_ratios) + j] = (
                side * math.sqrt(aspect) / 2.0,
                side / math.sqrt(aspect) / 2.0,
            )
            octaves.append(octave)
            aspects.append(aspect)
    offsets = np.concatenate([-half, half], axis=1)          # (slots, 4)
    boxes = (np.tile(centers, 2)[:, None, :] + offsets[None, :, :]).reshape(-1, 4)
    return MaskLevelGrid(
        level=level, stride=stride, base_scale=base_scale, rows=rows, cols=cols,
        num_points=config.num_points, boxes=boxes,
        slot_octaves=np.asarray(octaves), slot_aspects=np.asarray(aspects),
    )


def _pose_variants(config: PyramidConfig, base_scale: float, modes: np.ndarray):
    """One (17, 2) joint set per (mode, scale, rotation), centroid at origin."""
    variants, slot_modes, slot_scales, slot_rotations = [], [], [], []
    for mode_id, mode in enumerate(modes):
        scaled = mode * base_scale
        centered = scaled - scaled.mean(axis=0)
        for s in config.pose_scales:
            for r in config.pose_rotations:
                variants.append(transform_points(centered, (0.0, 0.0), r, s))
                slot_modes.append(mode_id)
                slot_scales.append(s)
                slot_rotations.append(r)
    return (np.stack(variants), np.asarray(slot_modes),
            np.asarray(slot_scales), np.asarray(slot_rotations))


def _pose_level(config: PyramidConfig, level: int, image_size, modes: np.ndarray) -> PoseLevelGrid:
    stride, base_scale = config.levels[level]
    rows, cols = _feature_shape(image_size, stride)
    centers = _location_centers(rows, cols, stride)
    variants, slot_modes, slot_scales, slot_rotations = _pose_variants(config, base_scale, modes)
    joints = (centers[:, None, None, :] + variants[None, :, :, :]).reshape(-1, NUM_JOINTS, 2)
    return PoseLevelGrid(
        level=level, stride=stride, base_scale=base_scale, rows=rows, cols=cols,
        joints=joints, slot_modes=slot_modes, slot_scales=slot_scales,
        slot_rotations=slot_rotations,
    )


def generate_grid(config: PyramidConfig, image_size, mode: str = MASK_MODE,
                  canonical_poses=None) -> AnchorGrid:
    """Tile anchors over the feature pyramid of one image.

    Args:
        config: pyramid levels and per-location variants.
        image_size: (width, height) in pixels; each level's feature map is
            ceil(side / stride) and location (row, col) sits at
            ((col + 0.5) * stride, (row + 0.5) * stride).
        mode: "mask" or "pose".
        canonical_poses: (k, 17, 2) canonical poses in the normalized frame,
            required in pose mode; they are de-normalized by each level's
            base scale, translated so the joint centroid sits at the location
            center, then each (scale, rotation) variant is applied about the
            centroid.
    """
    if mode == MASK_MODE:
        levels = tuple(_mask_level(config, i, image_size) for i in range(len(config.levels)))
    elif mode == POSE_MODE:
        if canonical_poses is None:
            raise MissingCanonicalPosesError("pose grids need canonical_poses")
        modes = np.asarray(canonical_poses, dtype=float)
        if modes.ndim != 3 or modes.shape[1:] != (NUM_JOINTS, 2) or len(modes) == 0:
            raise JointCountMismatchError(
                f"canonical_poses must be (k, {NUM_JOINTS}, 2) with k >= 1, got {modes.shape}"
            )
        if not np.isfinite(modes).all():
            raise PointSetError("canonical_poses must be finite")
        levels = tuple(_pose_level(config, i, image_size, modes) for i in range(len(config.levels)))
    else:
        raise PointSetError(f"unknown grid mode: {mode!r}")
    return AnchorGrid(mode=mode, image_size=(int(image_size[0]), int(image_size[1])), levels=levels)
