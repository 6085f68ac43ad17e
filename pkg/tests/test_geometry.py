import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pointset_anchors.errors import (
    DegenerateBoxError,
    DegenerateContourError,
    DegenerateSegmentError,
    NonPositiveScaleError,
    TooFewVerticesError,
)
from pointset_anchors.geometry import (
    Box,
    Contour,
    box_iou,
    box_iou_matrix,
    points_in_polygon,
    project_point_to_segment,
    rasterized_mask_iou,
    signed_area,
    transform_points,
)

from util import random_polygon


finite_coord = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


class TestBox:
    def test_accessors(self):
        box = Box(1.0, 2.0, 4.0, 8.0)
        assert box.width == 3.0
        assert box.height == 6.0
        assert box.area == 18.0
        assert box.center == (2.5, 5.0)

    def test_from_center_round_trips(self):
        box = Box.from_center((10.0, 20.0), 4.0, 6.0)
        assert box == Box(8.0, 17.0, 12.0, 23.0)

    def test_zero_extent_is_allowed(self):
        # degenerate but ordered boxes are legal (point boxes appear as
        # enclosing boxes of single points)
        assert Box(1.0, 1.0, 1.0, 1.0).area == 0.0

    def test_inverted_corners_rejected(self):
        with pytest.raises(DegenerateBoxError):
            Box(2.0, 0.0, 1.0, 1.0)

    def test_non_finite_rejected(self):
        with pytest.raises(DegenerateBoxError):
            Box(0.0, 0.0, float("inf"), 1.0)


class TestContour:
    def test_positive_orientation_kept(self):
        # y grows downward, so this screen-clockwise traversal has positive
        # shoelace area and is stored as given
        verts = [(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]
        contour = Contour(verts)
        assert np.array_equal(contour.vertices, np.asarray(verts))

    def test_negative_orientation_reversed_first_vertex_stays(self):
        verts = [(0.0, 0.0), (0.0, 2.0), (2.0, 2.0), (2.0, 0.0)]
        contour = Contour(verts)
        assert signed_area(contour) > 0.0
        assert tuple(contour.vertices[0]) == (0.0, 0.0)

    def test_vertices_read_only(self):
        contour = Contour([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])
        with pytest.raises(ValueError):
            contour.vertices[0, 0] = 5.0

    def test_asarray_protocol(self):
        contour = Contour([(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)])
        arr = np.asarray(contour)
        assert arr.shape == (3, 2)

    def test_too_few_vertices(self):
        with pytest.raises(TooFewVerticesError):
            Contour([(0.0, 0.0), (1.0, 1.0)])

    def test_zero_area_rejected(self):
        with pytest.raises(DegenerateContourError):
            Contour([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)])

    def test_bounds(self):
        contour = Contour([(1.0, 2.0), (5.0, 3.0), (2.0, 7.0)])
        assert contour.bounds() == Box(1.0, 2.0, 5.0, 7.0)


class TestSignedArea:
    def test_triangle_reference_value(self):
        # (0,0) -> (4,0) -> (0,3) has shoelace area +6 in image coordinates
        assert signed_area(np.array([(0.0, 0.0), (4.0, 0.0), (0.0, 3.0)])) == 6.0
        assert signed_area(np.array([(0.0, 0.0), (0.0, 3.0), (4.0, 0.0)])) == -6.0

    def test_reversal_flips_sign(self, rng):
        contour = random_polygon(rng, 12, convex=False)
        verts = contour.vertices
        assert signed_area(verts[::-1]) == -signed_area(verts)


class TestProjection:
    def test_reference_value(self):
        # foot of (0,2) on the diagonal (0,0)-(2,2) is the midpoint (1,1)
        assert project_point_to_segment((0.0, 2.0), (0.0, 0.0), (2.0, 2.0)) == (1.0, 1.0)

    def test_clamps_to_endpoints(self):
        assert project_point_to_segment((-5.0, 0.0), (0.0, 0.0), (2.0, 0.0)) == (0.0, 0.0)
        assert project_point_to_segment((9.0, 9.0), (0.0, 0.0), (2.0, 0.0)) == (2.0, 0.0)

    def test_degenerate_segment_raises(self):
        with pytest.raises(DegenerateSegmentError):
            project_point_to_segment((0.0, 0.0), (1.0, 1.0), (1.0, 1.0))

    @given(
        px=finite_coord, py=finite_coord,
        ax=finite_coord, ay=finite_coord,
        bx=finite_coord, by=finite_coord,
    )
    def test_projection_is_no_farther_than_endpoints(self, px, py, ax, ay, bx, by):
        if (ax, ay) == (bx, by):
            return
        foot = project_point_to_segment((px, py), (ax, ay), (bx, by))
        d_foot = np.hypot(px - foot.x, py - foot.y)
        d_ends = min(np.hypot(px - ax, py - ay), np.hypot(px - bx, py - by))
        assert d_foot <= d_ends + 1e-6 * max(1.0, d_ends)


class TestBoxIou:
    def test_reference_value(self):
        # 1x1 overlap, union 7 -> exactly 1/7
        assert box_iou(Box(0, 0, 2, 2), Box(1, 1, 3, 3)) == 1.0 / 7.0

    def test_disjoint_is_zero(self):
        assert box_iou(Box(0, 0, 1, 1), Box(5, 5, 6, 6)) == 0.0

    def test_identical_is_one(self):
        assert box_iou(Box(0, 0, 3, 2), Box(0, 0, 3, 2)) == 1.0

    def test_zero_union_is_zero(self):
        assert box_iou(Box(1, 1, 1, 1), Box(1, 1, 1, 1)) == 0.0

    def test_matrix_matches_scalar(self, rng):
        from util import random_box

        boxes_a = [random_box(rng) for _ in range(13)]
        boxes_b = [random_box(rng) for _ in range(7)]
        mat = box_iou_matrix(
            np.asarray([b.as_array() for b in boxes_a]),
            np.asarray([b.as_array() for b in boxes_b]),
        )
        for i, a in enumerate(boxes_a):
            for j, b in enumerate(boxes_b):
                assert mat[i, j] == box_iou(a, b)

    @given(shift=st.floats(min_value=0.0, max_value=2.0, allow_nan=False))
    def test_iou_symmetric(self, shift):
        a = Box(0.0, 0.0, 2.0, 2.0)
        b = Box(shift, 0.0, shift + 2.0, 2.0)
        assert box_iou(a, b) == box_iou(b, a)


class TestPointsInPolygon:
    def test_square_classification(self):
        verts = np.array([(0.0, 0.0), (0.0, 4.0), (4.0, 4.0), (4.0, 0.0)])
        inside = points_in_polygon([(2.0, 2.0), (5.0, 2.0), (-1.0, 2.0)], verts)
        assert inside.tolist() == [True, False, False]

    def test_concave_notch(self):
        # u-shape: the notch interior is outside
        verts = np.array([
            (0.0, 0.0), (6.0, 0.0), (6.0, 6.0), (4.0, 6.0),
            (4.0, 2.0), (2.0, 2.0), (2.0, 6.0), (0.0, 6.0),
        ])
        inside = points_in_polygon([(1.0, 5.0), (3.0, 5.0), (5.0, 5.0)], verts)
        assert inside.tolist() == [True, False, True]


class TestRasterizedMaskIou:
    def test_identical_contours(self):
        contour = Contour([(0.0, 0.0), (0.0, 4.0), (4.0, 4.0), (4.0, 0.0)])
        assert rasterized_mask_iou(contour, contour) == 1.0

    def test_disjoint_contours(self):
        a = Contour([(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)])
        b = Contour([(10.0, 10.0), (10.0, 11.0), (11.0, 11.0), (11.0, 10.0)])
        assert rasterized_mask_iou(a, b) < 0.02

    def test_half_overlap_squares(self):
        a = Contour([(0.0, 0.0), (0.0, 2.0), (2.0, 2.0), (2.0, 0.0)])
        b = Contour([(1.0, 0.0), (1.0, 2.0), (3.0, 2.0), (3.0, 0.0)])
        assert rasterized_mask_iou(a, b, resolution=256) == pytest.approx(1.0 / 3.0, abs=0.01)

    def test_resolution_floor(self):
        contour = Contour([(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)])
        with pytest.raises(NonPositiveScaleError):
            rasterized_mask_iou(contour, contour, resolution=8)


class TestTransformPoints:
    def test_rotation_reference(self):
        # shoelace-consistent 90 degrees: (1, 0) -> (0, 1)
        out = transform_points((1.0, 0.0), (0.0, 0.0), 90.0, 1.0)
        assert out == pytest.approx([0.0, 1.0], abs=1e-12)

    def test_scale_reference(self):
        out = transform_points((2.0, 0.0), (0.0, 0.0), 0.0, 1.5)
        assert out == pytest.approx([3.0, 0.0], abs=0.0)

    def test_center_is_fixed_point(self, rng):
        center = (3.0, -2.0)
        out = transform_points(np.array([center]), center, 37.0, 2.2)
        assert out[0] == pytest.approx(center, abs=1e-12)

    def test_nonpositive_scale_rejected(self):
        with pytest.raises(NonPositiveScaleError):
            transform_points((1.0, 1.0), (0.0, 0.0), 0.0, 0.0)

    @given(angle=st.floats(min_value=-360.0, max_value=360.0, allow_nan=False))
    def test_rotation_preserves_distance_to_center(self, angle):
        pts = np.array([(3.0, 1.0), (-2.0, 5.0)])
        out = transform_points(pts, (1.0, 1.0), angle, 1.0)
        before = np.hypot(pts[:, 0] - 1.0, pts[:, 1] - 1.0)
        after = np.hypot(out[:, 0] - 1.0, out[:, 1] - 1.0)
        assert np.allclose(before, after, atol=1e-9)
