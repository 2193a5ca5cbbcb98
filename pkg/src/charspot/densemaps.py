"""Per-cell prediction maps: ground-truth encoding and candidate decoding.

A map stack holds 82 planes at ``stride`` pixels per cell::

    0:2    det_seg   background / text probability for word instances
    2:7    det_geo   d_top, d_bottom, d_left, d_right, theta
    7:9    char_seg  background / text probability for characters
    9:14   char_geo  same layout as det_geo
    14:82  char_cls  68-way class probabilities

Geometry distances are in image pixels, measured from the cell centre to each
side of the box in the box's own rotated frame ("top" is the -v side).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .annotation import SceneAnnotation
from .charset import NUM_CLASSES
from .detections import CharDetection, WordDetection
from .geometry import Point, RotatedBox, aabb, contains_point, min_area_rect, rbox_aabb_array

NUM_CHANNELS = 2 + 5 + 2 + 5 + NUM_CLASSES

PLANES = {
    "det_seg": (0, 2),
    "det_geo": (2, 7),
    "char_seg": (7, 9),
    "char_geo": (9, 14),
    "char_cls": (14, 82),
}

DEFAULT_STRIDE = 4
DEFAULT_GATE = 0.95
DEFAULT_SHRINK = 0.3


@dataclass(frozen=True)
class GeometryCode:
    d_top: float
    d_bottom: float
    d_left: float
    d_right: float
    theta: float = 0.0

    def __post_init__(self):
        if min(self.d_top, self.d_bottom, self.d_left, self.d_right) < 0:
            raise ValueError("geometry distances must be non-negative")


class DenseMapStack:
    """The 82-plane map stack; ``data`` is a float32 array of shape (82, H, W).

    ``ignore`` is an optional (H, W) mask of don't-care cells produced by
    :func:`encode_ground_truth`; it is training metadata and not serialized.
    """

    def __init__(self, data: np.ndarray, stride: int = DEFAULT_STRIDE, ignore: Optional[np.ndarray] = None):
        data = np.asarray(data, dtype=np.float32)
        if data.ndim != 3 or data.shape[0] != NUM_CHANNELS:
            raise ValueError(f"expected ({NUM_CHANNELS}, H, W) planes, got {data.shape}")
        if stride < 1:
            raise ValueError("stride must be >= 1")
        if ignore is not None and ignore.shape != data.shape[1:]:
            raise ValueError("ignore mask shape does not match the maps")
        self.data = data
        self.stride = int(stride)
        self.ignore = ignore

    @classmethod
    def empty(cls, height: int, width: int, stride: int = DEFAULT_STRIDE) -> "DenseMapStack":
        data = np.zeros((NUM_CHANNELS, height, width), dtype=np.float32)
        data[0] = 1.0
        data[7] = 1.0
        data[14:] = 1.0 / NUM_CLASSES
        return cls(data, stride)

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    def plane(self, name: str) -> np.ndarray:
        a, b = PLANES[name]
        return self.data[a:b]

    det_seg = property(lambda self: self.plane("det_seg"))
    det_geo = property(lambda self: self.plane("det_geo"))
    char_seg = property(lambda self: self.plane("char_seg"))
    char_geo = property(lambda self: self.plane("char_geo"))
    char_cls = property(lambda self: self.plane("char_cls"))

    def validate(self, tol: float = 1e-5) -> None:
        probs = [self.det_seg, self.char_seg, self.char_cls]
        for name, p in zip(("det_seg", "char_seg", "char_cls"), probs):
            if np.any(p < 0) or np.any(p > 1):
                raise ValueError(f"{name} has values outside [0, 1]")
            if np.any(np.abs(p.sum(axis=0) - 1) > tol):
                raise ValueError(f"{name} does not sum to 1 per cell")
        for name in ("det_geo", "char_geo"):
            if np.any(self.plane(name)[:4] < 0):
                raise ValueError(f"{name} has negative distances")

    def __eq__(self, other):
        return (
            isinstance(other, DenseMapStack)
            and self.stride == other.stride
            and np.array_equal(self.data, other.data)
        )


def map_cell_to_image_point(mx: int, my: int, stride: int = DEFAULT_STRIDE, shape=None) -> Point:
    """Image-space centre of map cell (mx, my). ``shape`` is (height, width) for bounds checks."""
    if mx < 0 or my < 0:
        raise IndexError(f"cell ({mx}, {my}) out of range")
    if shape is not None and (my >= shape[0] or mx >= shape[1]):
        raise IndexError(f"cell ({mx}, {my}) out of range for maps of shape {tuple(shape)}")
    return Point(stride * (mx + 0.5), stride * (my + 0.5))


def decode_geometry_array(points: np.ndarray, codes: np.ndarray) -> np.ndarray:
    """Vectorized decode: (N, 2) points and (N, 5) codes -> (N, 5) boxes.

    Rows that decode to a zero width or height are returned with w or h = 0;
    callers drop them.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    g = np.asarray(codes, dtype=np.float64).reshape(-1, 5)
    top, bottom, left, right, theta = g.T
    w = left + right
    h = top + bottom
    ou = (right - left) / 2
    ov = (bottom - top) / 2
    c, s = np.cos(theta), np.sin(theta)
    cx = pts[:, 0] + c * ou - s * ov
    cy = pts[:, 1] + s * ou + c * ov
    t = np.fmod(theta, np.pi)
    t = np.where(t <= -np.pi / 2, t + np.pi, t)
    t = np.where(t > np.pi / 2, t - np.pi, t)
    return np.stack([cx, cy, w, h, t], axis=1)


def decode_geometry(p: Point, g: GeometryCode) -> RotatedBox:
    if g.d_left + g.d_right <= 0 or g.d_top + g.d_bottom <= 0:
        raise ValueError("degenerate geometry code")
    row = decode_geometry_array([[p.x, p.y]], [[g.d_top, g.d_bottom, g.d_left, g.d_right, g.theta]])[0]
    return RotatedBox.from_array(row)


def _local(points: np.ndarray, box: RotatedBox):
    c, s = math.cos(box.theta), math.sin(box.theta)
    dx = points[..., 0] - box.cx
    dy = points[..., 1] - box.cy
    return c * dx + s * dy, -s * dx + c * dy


def encode_geometry(p: Point, b: RotatedBox) -> GeometryCode:
    u, v = _local(np.array([p.x, p.y]), b)
    u, v = float(u), float(v)
    if abs(u) >= b.width / 2 or abs(v) >= b.height / 2:
        raise ValueError(f"point ({p.x}, {p.y}) is not strictly inside {b}")
    return GeometryCode(
        d_top=v + b.height / 2,
        d_bottom=b.height / 2 - v,
        d_left=u + b.width / 2,
        d_right=b.width / 2 - u,
        theta=b.theta,
    )


def shrunk_cells(box: RotatedBox, map_shape, stride: int, shrink: float):
    """Cells whose centres fall inside ``box`` shrunk by ``shrink * min(w, h)`` per side.

    Returns (ys, xs, u, v): cell indices and the cell centres in box-local coordinates.
    """
    hgt, wid = map_shape
    s = shrink * min(box.width, box.height)
    hw, hh = box.width / 2 - s, box.height / 2 - s
    empty = (np.zeros(0, int),) * 2 + (np.zeros(0),) * 2
    if hw < 0 or hh < 0:
        return empty
    x0, y0, x1, y1 = rbox_aabb_array(box.as_array())[0]
    mx0 = max(0, math.ceil(x0 / stride - 0.5))
    mx1 = min(wid - 1, math.floor(x1 / stride - 0.5))
    my0 = max(0, math.ceil(y0 / stride - 0.5))
    my1 = min(hgt - 1, math.floor(y1 / stride - 0.5))
    if mx1 < mx0 or my1 < my0:
        return empty
    ys, xs = np.mgrid[my0 : my1 + 1, mx0 : mx1 + 1]
    pts = np.stack([stride * (xs + 0.5), stride * (ys + 0.5)], axis=-1)
    u, v = _local(pts, box)
    m = (np.abs(u) <= hw) & (np.abs(v) <= hh)
    return ys[m], xs[m], u[m], v[m]


def _paint(data, seg_off, geo_off, box, map_shape, stride, shrink, cls_id=None):
    ys, xs, u, v = shrunk_cells(box, map_shape, stride, shrink)
    if len(ys) == 0:
        return 0
    data[seg_off, ys, xs] = 0.0
    data[seg_off + 1, ys, xs] = 1.0
    data[geo_off + 0, ys, xs] = v + box.height / 2
    data[geo_off + 1, ys, xs] = box.height / 2 - v
    data[geo_off + 2, ys, xs] = u + box.width / 2
    data[geo_off + 3, ys, xs] = box.width / 2 - u
    data[geo_off + 4, ys, xs] = box.theta
    if cls_id is not None:
        data[14:, ys, xs] = 0.0
        data[14 + cls_id, ys, xs] = 1.0
    return len(ys)


def instance_box(shape) -> RotatedBox:
    """The rotated box that represents an instance in the word maps.

    Polygons (curved text) are represented by their minimum-area rectangle.
    """
    return shape if isinstance(shape, RotatedBox) else min_area_rect(shape)


def encode_ground_truth(
    ann: SceneAnnotation,
    stride: int = DEFAULT_STRIDE,
    shrink: float = DEFAULT_SHRINK,
    require_chars: bool = True,
) -> DenseMapStack:
    """Render an annotation into the map stack a perfect network would emit.

    A cell claimed by several boxes goes to the smallest one (equal areas: the
    later one in annotation order). Don't-care instances are left as
    background and flagged in ``stack.ignore``.
    """
    hgt = math.ceil(ann.height / stride)
    wid = math.ceil(ann.width / stride)
    stack = DenseMapStack.empty(hgt, wid, stride)
    data = stack.data
    ignore = np.zeros((hgt, wid), dtype=bool)

    words, chars = [], []
    for i, inst in enumerate(ann.instances):
        if not inst.eligible():
            _mark_ignore(ignore, inst.shape, stride)
            continue
        words.append(instance_box(inst.shape))
        if inst.chars is None:
            if require_chars:
                raise ValueError(f"instance {i} has no character boxes")
            continue
        chars.extend((c.box, c.label) for c in inst.chars)

    for box in sorted(words, key=lambda b: -b.area):
        _paint(data, 0, 2, box, (hgt, wid), stride, shrink)
    for box, label in sorted(chars, key=lambda c: -c[0].area):
        _paint(data, 7, 9, box, (hgt, wid), stride, shrink, cls_id=label)
    stack.ignore = ignore
    return stack


def _mark_ignore(mask, shape, stride):
    x0, y0, x1, y1 = aabb(shape)
    hgt, wid = mask.shape
    for my in range(max(0, math.ceil(y0 / stride - 0.5)), min(hgt - 1, math.floor(y1 / stride - 0.5)) + 1):
        for mx in range(max(0, math.ceil(x0 / stride - 0.5)), min(wid - 1, math.floor(x1 / stride - 0.5)) + 1):
            if contains_point(shape, Point(stride * (mx + 0.5), stride * (my + 0.5))):
                mask[my, mx] = True


class Candidates(NamedTuple):
    """Array form of gated cells: boxes (N, 5), scores (N,), cells (N, 2) as (my, mx)."""

    boxes: np.ndarray
    scores: np.ndarray
    cells: np.ndarray


def _gate(stack: DenseMapStack, seg: str, geo: str, threshold: float) -> Candidates:
    prob = stack.plane(seg)[1]
    ys, xs = np.nonzero(prob > threshold)
    codes = stack.plane(geo)[:, ys, xs].T
    pts = np.stack([stack.stride * (xs + 0.5), stack.stride * (ys + 0.5)], axis=1)
    boxes = decode_geometry_array(pts, codes)
    ok = (boxes[:, 2] > 0) & (boxes[:, 3] > 0) & np.all(np.isfinite(boxes), axis=1)
    return Candidates(boxes[ok], prob[ys, xs][ok].astype(np.float64), np.stack([ys, xs], axis=1)[ok])


def word_candidate_arrays(stack: DenseMapStack, threshold: float = DEFAULT_GATE) -> Candidates:
    return _gate(stack, "det_seg", "det_geo", threshold)


def char_candidate_arrays(stack: DenseMapStack, threshold: float = DEFAULT_GATE):
    """Gated character cells plus their argmax labels."""
    cand = _gate(stack, "char_seg", "char_geo", threshold)
    cls = stack.char_cls[:, cand.cells[:, 0], cand.cells[:, 1]]
    labels = np.argmax(cls, axis=0) if len(cand.scores) else np.zeros(0, dtype=int)
    return cand, labels


def decode_word_candidates(stack: DenseMapStack, threshold: float = DEFAULT_GATE) -> list[WordDetection]:
    cand = word_candidate_arrays(stack, threshold)
    return [WordDetection(RotatedBox.from_array(b), float(s)) for b, s in zip(cand.boxes, cand.scores)]


def decode_char_candidates(stack: DenseMapStack, threshold: float = DEFAULT_GATE) -> list[CharDetection]:
    cand, labels = char_candidate_arrays(stack, threshold)
    out = []
    for k in range(len(cand.scores)):
        my, mx = cand.cells[k]
        out.append(
            CharDetection(
                RotatedBox.from_array(cand.boxes[k]),
                float(cand.scores[k]),
                int(labels[k]),
                stack.char_cls[:, my, mx].astype(np.float64),
            )
        )
    return out
