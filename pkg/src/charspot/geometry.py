"""Oriented rectangles, simple polygons, and their overlap measures.

Coordinates are image pixels. Rotations use the matrix
``[[cos t, -sin t], [sin t, cos t]]`` applied to (x, y), so "counter-clockwise"
below means positive shoelace area in the (x, y) plane.

Two IoU routes exist. :func:`iou` / :func:`polygon_intersection_area` clip
polygons one pair at a time (Sutherland-Hodgman). :func:`rbox_iou_matrix` and
friends handle many rotated-box pairs at once with numpy and are what the hot
paths (NMS, grouping, matching) use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

_AREA_EPS = 1e-9


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")


def normalize_angle(theta: float) -> float:
    """Map an angle onto (-pi/2, pi/2]; a rectangle is symmetric under pi."""
    t = math.fmod(theta, math.pi)
    if t <= -math.pi / 2:
        t += math.pi
    elif t > math.pi / 2:
        t -= math.pi
    return t


@dataclass(frozen=True)
class RotatedBox:
    """Rectangle of size ``width`` x ``height`` rotated by ``theta`` about its center.

    ``theta`` is normalized to (-pi/2, pi/2] on construction. Width runs along
    the direction (cos theta, sin theta).
    """

    cx: float
    cy: float
    width: float
    height: float
    theta: float = 0.0

    def __post_init__(self):
        vals = (self.cx, self.cy, self.width, self.height, self.theta)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite box parameters {vals}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"box size must be positive, got {self.width}x{self.height}")
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @property
    def center(self) -> Point:
        return Point(self.cx, self.cy)

    @property
    def area(self) -> float:
        return self.width * self.height

    def corners(self) -> list[Point]:
        return box_corners(self)

    def as_array(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.width, self.height, self.theta])

    @classmethod
    def from_array(cls, a) -> "RotatedBox":
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]), float(a[4]))

    @classmethod
    def from_corners(cls, pts: Sequence) -> "RotatedBox":
        """Inverse of :func:`box_corners` for corners in the order it emits."""
        p = np.asarray([(q.x, q.y) if isinstance(q, Point) else q for q in pts], dtype=float)
        if p.shape != (4, 2):
            raise ValueError("expected 4 corners")
        c = p.mean(axis=0)
        e0 = p[1] - p[0]
        e1 = p[2] - p[1]
        w = float(np.hypot(*e0))
        h = float(np.hypot(*e1))
        theta = math.atan2(e0[1], e0[0])
        return cls(float(c[0]), float(c[1]), w, h, theta)


def box_corners(b: RotatedBox) -> list[Point]:
    """Corners in counter-clockwise order, starting from the (-w/2, -h/2) offset."""
    c, s = math.cos(b.theta), math.sin(b.theta)
    hw, hh = b.width / 2, b.height / 2
    out = []
    for dx, dy in ((-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)):
        out.append(Point(b.cx + c * dx - s * dy, b.cy + s * dx + c * dy))
    return out


def signed_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


class Polygon:
    """Simple polygon with vertices stored counter-clockwise."""

    __slots__ = ("vertices", "_convex")

    def __init__(self, vertices):
        v = np.array([(p.x, p.y) if isinstance(p, Point) else p for p in vertices], dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("polygon needs at least 3 (x, y) vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite polygon vertex")
        a = signed_area(v)
        if abs(a) <= _AREA_EPS:
            raise ValueError("polygon has zero area")
        if a < 0:
            v = v[::-1].copy()
        v.setflags(write=False)
        self.vertices = v
        self._convex = None

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    @property
    def is_convex(self) -> bool:
        if self._convex is None:
            d = np.roll(self.vertices, -1, axis=0) - self.vertices
            cr = d[:, 0] * np.roll(d[:, 1], -1) - d[:, 1] * np.roll(d[:, 0], -1)
            self._convex = bool(np.all(cr >= -1e-9))
        return self._convex

    def points(self) -> list[Point]:
        return [Point(float(x), float(y)) for x, y in self.vertices]

    def __eq__(self, other):
        return isinstance(other, Polygon) and np.array_equal(self.vertices, other.vertices)

    def __repr__(self):
        return f"Polygon({self.vertices.tolist()})"


Shape = Union[RotatedBox, Polygon]


def as_polygon(shape: Shape) -> Polygon:
    if isinstance(shape, Polygon):
        return shape
    return Polygon(box_corners(shape))


def shape_area(shape: Shape) -> float:
    return shape.area


def _vertices(shape: Shape) -> np.ndarray:
    if isinstance(shape, Polygon):
        return shape.vertices
    return rbox_corners_array(shape.as_array()[None])[0]


def aabb(shape: Shape) -> tuple[float, float, float, float]:
    v = _vertices(shape)
    return float(v[:, 0].min()), float(v[:, 1].min()), float(v[:, 0].max()), float(v[:, 1].max())


def _clip(subject: list, clip: np.ndarray) -> list:
    # Sutherland-Hodgman against a counter-clockwise convex clip polygon.
    out = subject
    n = len(clip)
    for i in range(n):
        if not out:
            break
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        inp = out
        out = []
        sx, sy = inp[-1]
        s_in = ex * (sy - ay) - ey * (sx - ax) >= 0
        for px, py in inp:
            p_in = ex * (py - ay) - ey * (px - ax) >= 0
            if p_in != s_in:
                dx, dy = px - sx, py - sy
                den = ex * dy - ey * dx
                if den != 0:
                    t = (ey * (sx - ax) - ex * (sy - ay)) / den
                    out.append((sx + t * dx, sy + t * dy))
            if p_in:
                out.append((px, py))
            sx, sy, s_in = px, py, p_in
    return out


def _area_of(pts: list) -> float:
    if len(pts) < 3:
        return 0.0
    s = 0.0
    for i in range(len(pts)):
        x0, y0 = pts[i - 1]
        x1, y1 = pts[i]
        s += x0 * y1 - x1 * y0
    return abs(s) / 2


def polygon_intersection_area(a: Shape, b: Shape) -> float:
    """Exact overlap area when at least one shape is convex.

    Two non-convex polygons fall back to shapely's boolean intersection.
    """
    pa, pb = as_polygon(a), as_polygon(b)
    ax0, ay0, ax1, ay1 = aabb(pa)
    bx0, by0, bx1, by1 = aabb(pb)
    if ax1 <= bx0 or bx1 <= ax0 or ay1 <= by0 or by1 <= ay0:
        return 0.0
    if pb.is_convex:
        area = _area_of(_clip([tuple(p) for p in pa.vertices], pb.vertices))
    elif pa.is_convex:
        area = _area_of(_clip([tuple(p) for p in pb.vertices], pa.vertices))
    else:
        from shapely.geometry import Polygon as _ShPoly

        area = _ShPoly(pa.vertices).intersection(_ShPoly(pb.vertices)).area
    area = min(area, pa.area, pb.area)
    return area if area > _AREA_EPS else 0.0


def iou(a: Shape, b: Shape) -> float:
    inter = polygon_intersection_area(a, b)
    if inter <= 0:
        return 0.0
    union = a.area + b.area - inter
    return min(1.0, inter / union)


# ---------------------------------------------------------------------------
# Batched rotated-box routines. Boxes are (N, 5) arrays of cx, cy, w, h, theta.


def rbox_corners_array(boxes: np.ndarray) -> np.ndarray:
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 5)
    c, s = np.cos(boxes[:, 4]), np.sin(boxes[:, 4])
    hw, hh = boxes[:, 2] / 2, boxes[:, 3] / 2
    dx = np.stack([-hw, hw, hw, -hw], axis=1)
    dy = np.stack([-hh, -hh, hh, hh], axis=1)
    x = boxes[:, 0:1] + c[:, None] * dx - s[:, None] * dy
    y = boxes[:, 1:2] + s[:, None] * dx + c[:, None] * dy
    return np.stack([x, y], axis=2)


def rbox_aabb_array(boxes: np.ndarray) -> np.ndarray:
    """(N, 4) array of xmin, ymin, xmax, ymax."""
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 5)
    c, s = np.abs(np.cos(boxes[:, 4])), np.abs(np.sin(boxes[:, 4]))
    ex = (boxes[:, 2] * c + boxes[:, 3] * s) / 2
    ey = (boxes[:, 2] * s + boxes[:, 3] * c) / 2
    return np.stack([boxes[:, 0] - ex, boxes[:, 1] - ey, boxes[:, 0] + ex, boxes[:, 1] + ey], axis=1)


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def convex_quad_intersection_area(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Overlap areas of K pairs of counter-clockwise convex quads, shapes (K, 4, 2).

    The overlap of two convex polygons is the convex hull of the edge crossings
    plus the vertices of each lying inside the other; those (at most 24) points
    are sorted by angle about their mean and fed to the shoelace formula.
    """
    k = len(p)
    if k == 0:
        return np.zeros(0)
    pe = np.roll(p, -1, axis=1) - p
    qe = np.roll(q, -1, axis=1) - q

    # edge crossings: P edge i (axis 1) x Q edge j (axis 2)
    r = pe[:, :, None, :]
    sv = qe[:, None, :, :]
    qp = q[:, None, :, :] - p[:, :, None, :]
    den = _cross(r[..., 0], r[..., 1], sv[..., 0], sv[..., 1])
    safe = np.where(np.abs(den) > 1e-12, den, 1.0)
    t = _cross(qp[..., 0], qp[..., 1], sv[..., 0], sv[..., 1]) / safe
    u = _cross(qp[..., 0], qp[..., 1], r[..., 0], r[..., 1]) / safe
    hit = (np.abs(den) > 1e-12) & (t >= 0) & (t <= 1) & (u >= 0) & (u <= 1)
    cross_pts = (p[:, :, None, :] + t[..., None] * r).reshape(k, 16, 2)
    hit = hit.reshape(k, 16)

    def inside(pts, poly, edges):
        # pts (K, 4, 2) against poly (K, 4, 2); tolerance scaled by edge length
        d = pts[:, :, None, :] - poly[:, None, :, :]
        cr = _cross(edges[:, None, :, 0], edges[:, None, :, 1], d[..., 0], d[..., 1])
        tol = 1e-9 * np.hypot(edges[..., 0], edges[..., 1])[:, None, :]
        return np.all(cr >= -tol, axis=2)

    pin = inside(p, q, qe)
    qin = inside(q, p, pe)

    pts = np.concatenate([cross_pts, p, q], axis=1)
    valid = np.concatenate([hit, pin, qin], axis=1)
    nvalid = valid.sum(axis=1)
    first = np.argmax(valid, axis=1)
    filler = pts[np.arange(k), first]
    pts = np.where(valid[..., None], pts, filler[:, None, :])
    cnt = np.maximum(nvalid, 1)[:, None]
    centre = np.where(valid[..., None], pts, 0).sum(axis=1) / cnt
    ang = np.arctan2(pts[..., 1] - centre[:, None, 1], pts[..., 0] - centre[:, None, 0])
    order = np.argsort(ang, axis=1, kind="stable")
    sp = np.take_along_axis(pts, order[..., None], axis=1)
    nx = np.roll(sp, -1, axis=1)
    area = 0.5 * np.abs(np.sum(sp[..., 0] * nx[..., 1] - nx[..., 0] * sp[..., 1], axis=1))
    area = np.where(nvalid >= 3, area, 0.0)
    return np.where(area > _AREA_EPS, area, 0.0)


def rbox_iou_pairs(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """IoU of row-aligned box arrays a[i] vs b[i]."""
    a = np.asarray(a, dtype=float).reshape(-1, 5)
    b = np.asarray(b, dtype=float).reshape(-1, 5)
    inter = convex_quad_intersection_area(rbox_corners_array(a), rbox_corners_array(b))
    aa = a[:, 2] * a[:, 3]
    ab = b[:, 2] * b[:, 3]
    inter = np.minimum(inter, np.minimum(aa, ab))
    union = aa + ab - inter
    return np.where(inter > 0, np.minimum(inter / union, 1.0), 0.0)


def rbox_iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(N, M) IoU matrix; only pairs with overlapping bounding rectangles are clipped."""
    a = np.asarray(a, dtype=float).reshape(-1, 5)
    b = np.asarray(b, dtype=float).reshape(-1, 5)
    out = np.zeros((len(a), len(b)))
    if len(a) == 0 or len(b) == 0:
        return out
    ea, eb = rbox_aabb_array(a), rbox_aabb_array(b)
    touch = (
        (ea[:, None, 0] < eb[None, :, 2])
        & (eb[None, :, 0] < ea[:, None, 2])
        & (ea[:, None, 1] < eb[None, :, 3])
        & (eb[None, :, 1] < ea[:, None, 3])
    )
    ii, jj = np.nonzero(touch)
    if len(ii):
        out[ii, jj] = rbox_iou_pairs(a[ii], b[jj])
    return out


def iou_matrix(a: Sequence[Shape], b: Sequence[Shape]) -> np.ndarray:
    """IoU matrix for mixed box/polygon lists."""
    if all(isinstance(s, RotatedBox) for s in a) and all(isinstance(s, RotatedBox) for s in b):
        return rbox_iou_matrix(boxes_to_array(a), boxes_to_array(b))
    out = np.zeros((len(a), len(b)))
    eb = [aabb(s) for s in b]
    for i, sa in enumerate(a):
        x0, y0, x1, y1 = aabb(sa)
        for j, sb in enumerate(b):
            u0, v0, u1, v1 = eb[j]
            if x1 <= u0 or u1 <= x0 or y1 <= v0 or v1 <= y0:
                continue
            out[i, j] = iou(sa, sb)
    return out


def boxes_to_array(boxes: Sequence[RotatedBox]) -> np.ndarray:
    if len(boxes) == 0:
        return np.zeros((0, 5))
    return np.array([(b.cx, b.cy, b.width, b.height, b.theta) for b in boxes], dtype=float)


def contains_point(shape: Shape, p: Point) -> bool:
    """Closed-set point test (boundary counts as inside)."""
    if isinstance(shape, RotatedBox):
        c, s = math.cos(shape.theta), math.sin(shape.theta)
        dx, dy = p.x - shape.cx, p.y - shape.cy
        u = c * dx + s * dy
        v = -s * dx + c * dy
        return abs(u) <= shape.width / 2 + 1e-9 and abs(v) <= shape.height / 2 + 1e-9
    v = shape.vertices
    inside = False
    n = len(v)
    for i in range(n):
        x0, y0 = v[i]
        x1, y1 = v[(i + 1) % n]
        if (y0 > p.y) != (y1 > p.y):
            xc = x0 + (p.y - y0) * (x1 - x0) / (y1 - y0)
            if p.x < xc:
                inside = not inside
    return inside


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Andrew's monotone chain; counter-clockwise, no repeated endpoint."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=float))))
    if len(pts) <= 2:
        return np.array(pts)

    def half(seq):
        h = []
        for p in seq:
            while len(h) >= 2 and _cross(h[-1][0] - h[-2][0], h[-1][1] - h[-2][1],
                                         p[0] - h[-2][0], p[1] - h[-2][1]) <= 0:
                h.pop()
            h.append(p)
        return h

    lower, upper = half(pts), half(reversed(pts))
    return np.array(lower[:-1] + upper[:-1])


def min_area_rect(shape: Shape) -> RotatedBox:
    """Smallest enclosing rectangle, reported with width as the longer side."""
    if isinstance(shape, RotatedBox):
        b = shape
    else:
        hull = convex_hull(shape.vertices)
        best = None
        for i in range(len(hull)):
            e = hull[(i + 1) % len(hull)] - hull[i]
            ang = math.atan2(e[1], e[0])
            c, s = math.cos(ang), math.sin(ang)
            u = hull[:, 0] * c + hull[:, 1] * s
            v = -hull[:, 0] * s + hull[:, 1] * c
            area = (u.max() - u.min()) * (v.max() - v.min())
            if best is None or area < best[0] - 1e-9:
                best = (area, ang, u.min(), u.max(), v.min(), v.max())
        _, ang, u0, u1, v0, v1 = best
        c, s = math.cos(ang), math.sin(ang)
        uc, vc = (u0 + u1) / 2, (v0 + v1) / 2
        b = RotatedBox(uc * c - vc * s, uc * s + vc * c, u1 - u0, v1 - v0, ang)
    if b.height > b.width:
        b = RotatedBox(b.cx, b.cy, b.height, b.width, b.theta + math.pi / 2)
    return b
