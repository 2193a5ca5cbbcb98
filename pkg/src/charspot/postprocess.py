"""From gated candidates to text instances: NMS, grouping, reading order, lexicon."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .charset import DEFAULT_CHARSET, Charset
from .densemaps import DEFAULT_GATE, DenseMapStack, char_candidate_arrays, word_candidate_arrays
from .detections import CharDetection, TextInstance, WordDetection
from .geometry import (
    RotatedBox,
    boxes_to_array,
    iou_matrix,
    rbox_aabb_array,
    rbox_iou_pairs,
    rbox_iou_matrix,
)
from .lexicon import Correction, lexicon_correct  # noqa: F401  (re-exported)

_AXIS_EPS = 1e-6


def nms(boxes, scores, iou_threshold: float = 0.5) -> list[int]:
    """Greedy rotated-box NMS; returns kept indices, highest score first.

    Equal scores keep the earlier input first.
    """
    arr = boxes_to_array(boxes) if not isinstance(boxes, np.ndarray) else boxes.reshape(-1, 5)
    scores = np.asarray(scores, dtype=float)
    n = len(arr)
    if n == 0:
        return []
    if not np.all(np.isfinite(scores)):
        raise ValueError("NMS scores must be finite")
    order = np.argsort(-scores, kind="stable")
    arr = arr[order]
    ext = rbox_aabb_array(arr)
    alive = np.ones(n, dtype=bool)
    keep = []
    for i in range(n):
        if not alive[i]:
            continue
        keep.append(int(order[i]))
        rest = np.nonzero(alive[i + 1 :])[0] + i + 1
        if len(rest) == 0:
            break
        e = ext[i]
        near = rest[
            (ext[rest, 0] < e[2]) & (e[0] < ext[rest, 2]) & (ext[rest, 1] < e[3]) & (e[1] < ext[rest, 3])
        ]
        if len(near):
            ov = rbox_iou_pairs(np.repeat(arr[i : i + 1], len(near), axis=0), arr[near])
            alive[near[ov > iou_threshold]] = False
    return keep


@dataclass
class Grouping:
    instances: list[TextInstance]
    dropped: list[CharDetection] = field(default_factory=list)


def group_characters(instances: Sequence, chars: Sequence[CharDetection]) -> Grouping:
    """Assign each character to the instance it overlaps most (IoU > 0).

    ``instances`` may be TextInstances or bare shapes. Characters overlapping
    nothing are returned in ``dropped``.
    """
    out = [
        TextInstance(x.shape, x.score) if isinstance(x, TextInstance) else TextInstance(x)
        for x in instances
    ]
    if not chars:
        return Grouping(out, [])
    if not out:
        return Grouping(out, list(chars))
    shapes = [t.shape for t in out]
    if all(isinstance(s, RotatedBox) for s in shapes):
        m = rbox_iou_matrix(boxes_to_array([c.box for c in chars]), boxes_to_array(shapes))
    else:
        m = iou_matrix([c.box for c in chars], shapes)
    dropped = []
    best = np.argmax(m, axis=1)
    for k, c in enumerate(chars):
        j = best[k]
        if m[k, j] > 0:
            out[j].chars.append(c)
        else:
            dropped.append(c)
    return Grouping(out, dropped)


def canonical_direction(dx: float, dy: float) -> tuple[float, float]:
    """Flip an axis so it points rightwards, or downwards when vertical."""
    n = float(np.hypot(dx, dy))
    if n == 0:
        return 1.0, 0.0
    dx, dy = dx / n, dy / n
    if dx < -_AXIS_EPS or (abs(dx) <= _AXIS_EPS and dy < 0):
        dx, dy = -dx, -dy
    return dx, dy


def reading_axis(shape, centres: Optional[np.ndarray] = None) -> tuple[float, float]:
    """Unit vector along which characters of ``shape`` are read."""
    if isinstance(shape, RotatedBox):
        return canonical_direction(np.cos(shape.theta), np.sin(shape.theta))
    if centres is not None and len(centres) >= 2:
        d = centres - centres.mean(axis=0)
        _, sv, vt = np.linalg.svd(d, full_matrices=False)
        if sv[0] > 1e-9:
            return canonical_direction(vt[0, 0], vt[0, 1])
    from .densemaps import instance_box

    return reading_axis(instance_box(shape))


def order_characters(inst: TextInstance, charset: Charset = DEFAULT_CHARSET) -> TextInstance:
    """Sort ``inst.chars`` along the reading axis and fill in the transcription."""
    if not inst.chars:
        inst.transcription = ""
        return inst
    centres = np.array([(c.box.cx, c.box.cy) for c in inst.chars])
    ax, ay = reading_axis(inst.shape, centres)
    proj = centres @ np.array([ax, ay])
    order = np.lexsort((np.arange(len(proj)), centres[:, 0], centres[:, 1], proj))
    inst.chars = [inst.chars[i] for i in order]
    inst.transcription = charset.decode(c.label for c in inst.chars)
    return inst


@dataclass
class SpotResult:
    instances: list[TextInstance]
    chars: list[CharDetection]
    dropped: list[CharDetection]


def spot(
    stack: DenseMapStack,
    word_gate: float = DEFAULT_GATE,
    char_gate: float = DEFAULT_GATE,
    nms_iou: float = 0.5,
    charset: Charset = DEFAULT_CHARSET,
    keep_class_scores: bool = False,
) -> SpotResult:
    """Decode, suppress, group and order: maps in, text instances out."""
    wc = word_candidate_arrays(stack, word_gate)
    wk = nms(wc.boxes, wc.scores, nms_iou)
    words = [WordDetection(RotatedBox.from_array(wc.boxes[i]), float(wc.scores[i])) for i in wk]

    cc, labels = char_candidate_arrays(stack, char_gate)
    ck = nms(cc.boxes, cc.scores, nms_iou)
    chars = []
    for i in ck:
        cls = None
        if keep_class_scores:
            my, mx = cc.cells[i]
            cls = stack.char_cls[:, my, mx].astype(np.float64)
        chars.append(CharDetection(RotatedBox.from_array(cc.boxes[i]), float(cc.scores[i]), int(labels[i]), cls))

    g = group_characters([TextInstance(w.box, w.score) for w in words], chars)
    for inst in g.instances:
        order_characters(inst, charset)
    return SpotResult(g.instances, chars, g.dropped)


def correct_instances(instances: Sequence[TextInstance], lexicon, mode: str = "N") -> list[Correction]:
    out = []
    for inst in instances:
        c = lexicon_correct(inst.transcription, lexicon, mode)
        inst.corrected = c.text if mode != "N" else None
        out.append(c)
    return out


__all__ = [
    "nms",
    "group_characters",
    "order_characters",
    "lexicon_correct",
    "spot",
    "Grouping",
    "SpotResult",
    "reading_axis",
    "canonical_direction",
]
