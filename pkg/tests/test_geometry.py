import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from charspot.geometry import (
    Point,
    Polygon,
    RotatedBox,
    box_corners,
    convex_hull,
    iou,
    iou_matrix,
    min_area_rect,
    normalize_angle,
    polygon_intersection_area,
    rbox_iou_matrix,
    rbox_iou_pairs,
    signed_area,
)
from conftest import random_box
from oracles import monte_carlo_iou

# Monte-Carlo (10^7 samples, seed 12345) over the joint extent [-3, 4] x [-3, 3]
# for RotatedBox(0, 0, 4, 2, pi/6) and RotatedBox(1, 0, 3, 3, -pi/4).
MC_PAIR_INTERSECTION = 5.2423182
MC_PAIR_IOU = 0.44688810853310457

PAIR_A = RotatedBox(0, 0, 4, 2, math.pi / 6)
PAIR_B = RotatedBox(1, 0, 3, 3, -math.pi / 4)


def as_set(points):
    return {(round(p.x, 9) + 0.0, round(p.y, 9) + 0.0) for p in points}


def test_corners_axis_aligned():
    pts = box_corners(RotatedBox(2, 2, 4, 4, 0))
    assert as_set(pts) == {(0, 0), (4, 0), (4, 4), (0, 4)}
    assert signed_area(np.array([(p.x, p.y) for p in pts])) > 0


def test_corners_rotated_square():
    r2 = math.sqrt(2)
    pts = box_corners(RotatedBox(0, 0, 2, 2, math.pi / 4))
    assert as_set(pts) == as_set([Point(0, -r2), Point(r2, 0), Point(0, r2), Point(-r2, 0)])


def test_corners_by_hand_rotation():
    # (+-2, +-1) offsets rotated by pi/6 (cos = sqrt(3)/2, sin = 1/2) about (1, 1)
    expected = [
        (-0.2320508075688772, -0.8660254037844386),
        (3.2320508075688772, 1.1339745962155614),
        (2.2320508075688772, 2.8660254037844386),
        (-1.2320508075688772, 0.8660254037844386),
    ]
    pts = box_corners(RotatedBox(1, 1, 4, 2, math.pi / 6))
    np.testing.assert_allclose([(p.x, p.y) for p in pts], expected, atol=1e-12)


@pytest.mark.parametrize("theta,expected", [(0.0, 0.0), (math.pi / 2, math.pi / 2), (-math.pi / 2, math.pi / 2),
                                             (math.pi, 0.0), (3 * math.pi / 4, -math.pi / 4)])
def test_normalize_angle(theta, expected):
    assert normalize_angle(theta) == pytest.approx(expected, abs=1e-12)


def test_invalid_boxes_rejected():
    with pytest.raises(ValueError):
        RotatedBox(0, 0, 0, 1)
    with pytest.raises(ValueError):
        RotatedBox(0, 0, 1, float("nan"))
    with pytest.raises(ValueError):
        Point(float("inf"), 0)


def test_corner_round_trip(rng):
    for _ in range(10_000):
        b = random_box(rng)
        r = RotatedBox.from_corners(b.corners())
        assert r.cx == pytest.approx(b.cx, abs=1e-6)
        assert r.cy == pytest.approx(b.cy, abs=1e-6)
        assert r.width == pytest.approx(b.width, abs=1e-6)
        assert r.height == pytest.approx(b.height, abs=1e-6)
        d = abs(r.theta - b.theta) % math.pi
        assert min(d, math.pi - d) < 1e-6
        np.testing.assert_allclose(
            [(p.x, p.y) for p in r.corners()], [(p.x, p.y) for p in b.corners()], atol=1e-6
        )


def test_polygon_orientation_normalized():
    cw = Polygon([(0, 0), (0, 1), (1, 1), (1, 0)])
    assert cw.area == pytest.approx(1.0)
    assert signed_area(cw.vertices) > 0
    with pytest.raises(ValueError):
        Polygon([(0, 0), (1, 1), (2, 2)])


def test_intersection_examples():
    unit = Polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert polygon_intersection_area(unit, unit) == pytest.approx(1.0)
    a = Polygon([(0, 0), (2, 0), (2, 2), (0, 2)])
    b = Polygon([(1, 1), (3, 1), (3, 3), (1, 3)])
    assert polygon_intersection_area(a, b) == pytest.approx(1.0)
    assert iou(a, b) == pytest.approx(1 / 7)


def test_rotated_pair_against_frozen_monte_carlo():
    assert polygon_intersection_area(PAIR_A, PAIR_B) == pytest.approx(MC_PAIR_INTERSECTION, rel=1e-2)
    assert iou(PAIR_A, PAIR_B) == pytest.approx(MC_PAIR_IOU, abs=1e-2)
    assert rbox_iou_pairs(PAIR_A.as_array(), PAIR_B.as_array())[0] == pytest.approx(MC_PAIR_IOU, abs=1e-2)


def test_iou_identity_and_disjoint():
    b = RotatedBox(5, 5, 3, 2, 0.3)
    assert iou(b, b) == pytest.approx(1.0)
    assert iou(b, RotatedBox(50, 50, 3, 2, 0.3)) == 0.0
    assert rbox_iou_matrix(b.as_array(), b.as_array())[0, 0] == pytest.approx(1.0)


def test_touching_boxes_have_zero_overlap():
    a = RotatedBox(1, 1, 2, 2)
    b = RotatedBox(3, 1, 2, 2)
    assert polygon_intersection_area(a, b) == 0.0
    assert rbox_iou_matrix(a.as_array(), b.as_array())[0, 0] == 0.0


def test_nonconvex_polygon_against_box():
    # U shape: the box sits inside the notch and only touches the arms partially
    u = Polygon([(0, 0), (6, 0), (6, 6), (4, 6), (4, 2), (2, 2), (2, 6), (0, 6)])
    box = RotatedBox(3, 4, 4, 2)
    # overlap: two 1x2 strips of the arms (x in [1,2] and [4,5], y in [3,5])
    assert polygon_intersection_area(u, box) == pytest.approx(4.0)
    assert polygon_intersection_area(box, u) == pytest.approx(4.0)
    other = Polygon([(1, 1), (5, 1), (5, 5), (3, 3), (1, 5)])
    assert polygon_intersection_area(u, other) == pytest.approx(polygon_intersection_area(other, u))


def test_batched_and_scalar_routes_agree(rng):
    boxes = [random_box(rng, span=60) for _ in range(60)]
    arr = np.array([b.as_array() for b in boxes])
    m = rbox_iou_matrix(arr, arr)
    scalar = np.array([[iou(a, b) for b in boxes] for a in boxes])
    np.testing.assert_allclose(m, scalar, atol=1e-9)
    np.testing.assert_allclose(iou_matrix(boxes, boxes), scalar, atol=1e-9)


box_strategy = st.builds(
    RotatedBox,
    st.floats(-50, 50),
    st.floats(-50, 50),
    st.floats(0.5, 30),
    st.floats(0.5, 30),
    st.floats(-math.pi, math.pi),
)


@settings(max_examples=300, deadline=None)
@given(box_strategy, box_strategy)
def test_iou_properties(a, b):
    v = iou(a, b)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(iou(b, a), abs=1e-9)
    assert iou(a, a) == pytest.approx(1.0)
    inter = polygon_intersection_area(a, b)
    assert inter <= min(a.area, b.area) + 1e-9
    assert rbox_iou_pairs(a.as_array(), b.as_array())[0] == pytest.approx(v, abs=1e-7)


def test_monte_carlo_oracle_small_sample(rng):
    # quick version of the 10^7-sample acceptance check
    for _ in range(5):
        a = random_box(rng, span=20, size=(5, 20))
        b = random_box(rng, span=20, size=(5, 20))
        assert iou(a, b) == pytest.approx(monte_carlo_iou(a, b, samples=400_000, seed=1), abs=1e-2)


def test_convex_hull_and_min_area_rect():
    pts = np.array([(0, 0), (4, 0), (4, 2), (0, 2), (2, 1), (1, 1)])
    hull = convex_hull(pts)
    assert len(hull) == 4
    r = min_area_rect(Polygon([(0, 0), (4, 0), (4, 2), (0, 2)]))
    assert (r.cx, r.cy) == pytest.approx((2, 1))
    assert (r.width, r.height) == pytest.approx((4, 2))
    assert abs(math.sin(r.theta)) < 1e-12
    tall = min_area_rect(RotatedBox(0, 0, 1, 3, 0.2))
    assert tall.width == pytest.approx(3) and tall.height == pytest.approx(1)
    assert iou(tall, RotatedBox(0, 0, 1, 3, 0.2)) == pytest.approx(1.0)
