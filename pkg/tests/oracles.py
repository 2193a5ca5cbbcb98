"""Independent reference implementations used only by the tests.

None of these share code paths with the library routines they check.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np


def _inside_box(box, x, y):
    c, s = math.cos(box.theta), math.sin(box.theta)
    dx, dy = x - box.cx, y - box.cy
    return (np.abs(c * dx + s * dy) <= box.width / 2) & (np.abs(-s * dx + c * dy) <= box.height / 2)


def _box_extent(box):
    r = math.hypot(box.width, box.height) / 2
    return box.cx - r, box.cy - r, box.cx + r, box.cy + r


def monte_carlo_iou(a, b, samples=10**7, seed=0, chunk=2_000_000):
    """IoU of two RotatedBoxes by uniform point sampling over their joint extent."""
    ea, eb = _box_extent(a), _box_extent(b)
    x0, y0 = min(ea[0], eb[0]), min(ea[1], eb[1])
    x1, y1 = max(ea[2], eb[2]), max(ea[3], eb[3])
    rng = np.random.default_rng(seed)
    inter = union = 0
    left = samples
    while left > 0:
        n = min(chunk, left)
        x = rng.uniform(x0, x1, n)
        y = rng.uniform(y0, y1, n)
        ia, ib = _inside_box(a, x, y), _inside_box(b, x, y)
        inter += int(np.count_nonzero(ia & ib))
        union += int(np.count_nonzero(ia | ib))
        left -= n
    return inter / union if union else 0.0


def brute_force_nms(boxes, scores, iou_fn, threshold=0.5):
    """Textbook greedy NMS: repeatedly take the best remaining box, drop its overlaps."""
    remaining = list(range(len(boxes)))
    keep = []
    while remaining:
        best = remaining[0]
        for i in remaining[1:]:
            if scores[i] > scores[best]:
                best = i
        keep.append(best)
        remaining = [i for i in remaining if i != best and iou_fn(boxes[i], boxes[best]) <= threshold]
    return keep


def exhaustive_matching(ious, threshold=0.5, care=None):
    """Best one-to-one matching by enumeration.

    Maximises the number of pairs with IoU >= threshold, then the summed IoU.
    Returns (pairs, ignored_pred_count) using the same don't-care rule as the
    library: unmatched predictions reaching the threshold with a don't-care GT
    are ignored.
    """
    n_pred, n_gt = ious.shape
    care = [True] * n_gt if care is None else list(care)
    gts = [j for j in range(n_gt) if care[j]]
    best = ((0, 0.0), [])
    # assign each prediction either a care GT or nothing
    for choice in itertools.product([None] + gts, repeat=n_pred):
        used = [c for c in choice if c is not None]
        if len(used) != len(set(used)):
            continue
        if any(c is not None and ious[i, c] < threshold for i, c in enumerate(choice)):
            continue
        key = (len(used), round(sum(ious[i, c] for i, c in enumerate(choice) if c is not None), 12))
        if key > best[0]:
            best = (key, [(i, c) for i, c in enumerate(choice) if c is not None])
    pairs = best[1]
    matched = {i for i, _ in pairs}
    dc = [j for j in range(n_gt) if not care[j]]
    ignored = sum(1 for i in range(n_pred) if i not in matched and any(ious[i, j] >= threshold for j in dc))
    return pairs, ignored


def recursive_edit_distance(a: str, b: str) -> int:
    """Levenshtein distance straight from its recursive definition."""
    a, b = a.upper(), b.upper()

    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))

    return d(len(a), len(b))


def hand_prf(tp, fp, fn):
    p = tp / (tp + fp) if tp + fp else 1.0
    r = tp / (tp + fn) if tp + fn else 1.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f
