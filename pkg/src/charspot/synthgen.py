"""Seeded synthetic scenes: straight and arc-shaped words with per-character boxes."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .annotation import DONT_CARE_TEXT, CharBox, SceneAnnotation, TextAnnotation
from .charset import DEFAULT_CHARSET, Charset
from .densemaps import instance_box
from .geometry import Polygon, RotatedBox, iou, polygon_intersection_area, rbox_aabb_array
from .postprocess import canonical_direction, reading_axis

log = logging.getLogger(__name__)

_LETTERS = 26
_DIGITS = 10


@dataclass(frozen=True)
class SynthConfig:
    """Scene generator settings.

    ``char_size`` bounds both sides of every character box. With the default
    stride 4 and shrink 0.3, sides of at least 15 px guarantee that each
    character owns at least one map cell.
    """

    image_size: tuple[int, int] = (512, 512)
    instance_count: tuple[int, int] = (1, 10)
    word_length: tuple[int, int] = (2, 8)
    rotation: tuple[float, float] = (-math.pi / 2, math.pi / 2)
    char_size: tuple[float, float] = (16.0, 32.0)
    curved_fraction: float = 0.15
    dont_care_fraction: float = 0.0
    seed: int = 0
    max_retries: int = 100
    min_curved_iou: float = 0.6

    def __post_init__(self):
        for name in ("instance_count", "word_length", "rotation", "char_size"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} range is empty: {lo} > {hi}")
        if self.instance_count[0] < 0 or self.word_length[0] < 1 or self.char_size[0] <= 0:
            raise ValueError("counts and sizes must be positive")
        for name in ("curved_fraction", "dont_care_fraction"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if min(self.image_size) <= 0:
            raise ValueError("image size must be positive")


@dataclass
class SynthReport:
    requested: int = 0
    placed: int = 0
    failures: list[int] = field(default_factory=list)


def _random_text(rng, k, charset: Charset) -> str:
    while True:
        groups = rng.choice(3, size=k, p=[0.7, 0.2, 0.1])
        ids = []
        for g in groups:
            if g == 0:
                ids.append(int(rng.integers(0, _LETTERS)))
            elif g == 1:
                ids.append(_LETTERS + int(rng.integers(0, _DIGITS)))
            else:
                ids.append(_LETTERS + _DIGITS + int(rng.integers(0, len(charset) - _LETTERS - _DIGITS)))
        text = charset.decode(ids)
        if text != DONT_CARE_TEXT:
            return text


def _straight(rng, cfg, k):
    """Word box and char boxes centred on the origin, before placement."""
    lo, hi = cfg.char_size
    h = rng.uniform(lo, hi)
    widths = rng.uniform(lo, hi, size=k)
    gap = rng.uniform(1.0, max(1.0, 0.15 * h))
    pad = rng.uniform(0.05, 0.2) * h
    theta = rng.uniform(*cfg.rotation)
    length = widths.sum() + (k - 1) * gap + 2 * pad
    dx, dy = canonical_direction(math.cos(theta), math.sin(theta))
    offs = -length / 2 + pad + np.cumsum(np.r_[0, widths[:-1] + gap]) + widths / 2
    chars = [RotatedBox(o * dx, o * dy, w, h, theta) for o, w in zip(offs, widths)]
    return RotatedBox(0.0, 0.0, length, h + 2 * pad, theta), chars


def _curved(rng, cfg, k):
    lo, hi = cfg.char_size
    h = rng.uniform(lo, hi)
    widths = rng.uniform(lo, hi, size=k)
    gap = rng.uniform(1.0, max(1.0, 0.15 * h))
    pad = rng.uniform(0.1, 0.2) * h
    sigma = rng.choice([-1.0, 1.0])
    rlo, rhi = cfg.rotation
    alpha = rng.uniform(max(rlo, -math.pi / 3), min(rhi, math.pi / 3)) if rlo < math.pi / 3 and rhi > -math.pi / 3 else 0.0
    span = rng.uniform(math.pi / 6, math.pi / 2)
    arc_len = widths.sum() + (k - 1) * gap

    for _ in range(20):
        radius = max(arc_len / span, 2.0 * h)
        r_in_char = radius - h / 2
        half = np.arctan((widths / 2) / r_in_char)
        steps = half[:-1] + half[1:] + gap / radius
        psi = np.r_[0.0, np.cumsum(steps)]
        psi -= (psi[0] + psi[-1]) / 2
        r_in = r_in_char - pad
        r_out = math.sqrt((radius + h / 2) ** 2 + (widths.max() / 2) ** 2) + pad
        a0 = psi[0] - half[0] - pad / r_in
        a1 = psi[-1] + half[-1] + pad / r_in
        ang = np.linspace(a0, a1, 16)
        centre = np.array([0.0, sigma * radius])

        def arc(r, a):
            return np.stack([centre[0] + r * np.sin(a), centre[1] - sigma * r * np.cos(a)], axis=1)

        ring = np.vstack([arc(r_out, ang), arc(r_in, ang[::-1])])
        cpts = arc(radius, psi)
        mid = (ring.min(axis=0) + ring.max(axis=0)) / 2
        ca, sa = math.cos(alpha), math.sin(alpha)
        rot = np.array([[ca, -sa], [sa, ca]])
        ring = (ring - mid) @ rot.T
        cpts = (cpts - mid) @ rot.T
        poly = Polygon(ring)
        chars = [
            RotatedBox(float(x), float(y), float(w), h, alpha + sigma * p)
            for (x, y), w, p in zip(cpts, widths, psi)
        ]
        if iou(poly, instance_box(poly)) >= cfg.min_curved_iou:
            return poly, chars
        span *= 0.75
    return poly, chars


def _shift(shape, dx, dy):
    if isinstance(shape, RotatedBox):
        return RotatedBox(shape.cx + dx, shape.cy + dy, shape.width, shape.height, shape.theta)
    return Polygon(shape.vertices + np.array([dx, dy]))


def _sample_instance(rng, cfg: SynthConfig, charset: Charset):
    k = int(rng.integers(cfg.word_length[0], cfg.word_length[1] + 1))
    curved = k >= 3 and rng.random() < cfg.curved_fraction
    dont_care = rng.random() < cfg.dont_care_fraction
    text = _random_text(rng, k, charset)
    shape, chars = _curved(rng, cfg, k) if curved else _straight(rng, cfg, k)

    # transcript symbols follow the reading order the decoder will recover
    foot = instance_box(shape)
    ax, ay = reading_axis(foot)
    order = np.argsort([c.cx * ax + c.cy * ay for c in chars], kind="stable")
    ids = charset.normalize_transcript(text)[0]
    labels = [0] * k
    for pos, idx in enumerate(order):
        labels[idx] = ids[pos]
    ordered = [CharBox(chars[i], labels[i]) for i in order]
    return shape, text, dont_care, ordered


def _generate(cfg: SynthConfig, rng, charset: Charset) -> tuple[SceneAnnotation, SynthReport]:
    W, H = cfg.image_size
    n = int(rng.integers(cfg.instance_count[0], cfg.instance_count[1] + 1))
    report = SynthReport(requested=n)
    placed: list[RotatedBox] = []
    instances = []
    for idx in range(n):
        ok = False
        for _ in range(cfg.max_retries):
            shape, text, dont_care, chars = _sample_instance(rng, cfg, charset)
            foot = instance_box(shape)
            x0, y0, x1, y1 = rbox_aabb_array(foot.as_array())[0]
            if x1 - x0 > W or y1 - y0 > H:
                continue
            cx = rng.uniform(-x0, W - x1)
            cy = rng.uniform(-y0, H - y1)
            moved = RotatedBox(foot.cx + cx, foot.cy + cy, foot.width, foot.height, foot.theta)
            if any(polygon_intersection_area(moved, p) > 0 for p in placed):
                continue
            placed.append(moved)
            shape = _shift(shape, cx, cy)
            boxes = None
            if not dont_care:
                boxes = [CharBox(_shift(c.box, cx, cy), c.label) for c in chars]
            instances.append(
                TextAnnotation(shape, DONT_CARE_TEXT if dont_care else text, dont_care, boxes)
            )
            ok = True
            break
        if not ok:
            report.failures.append(idx)
    report.placed = len(instances)
    if report.failures:
        log.info("placed %d of %d instances", report.placed, n)
    return SceneAnnotation(W, H, instances), report


def generate_scene(cfg: SynthConfig = SynthConfig(), charset: Charset = DEFAULT_CHARSET, with_report: bool = False):
    """One scene from ``cfg.seed``. With ``with_report`` returns (scene, SynthReport)."""
    scene, report = _generate(cfg, np.random.default_rng(cfg.seed), charset)
    return (scene, report) if with_report else scene


def corpus_seeds(seed: int, n: int) -> list[int]:
    ss = np.random.SeedSequence(seed)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in ss.spawn(n)]


def generate_corpus(cfg: SynthConfig, n: int, charset: Charset = DEFAULT_CHARSET) -> list[SceneAnnotation]:
    if n < 0:
        raise ValueError("corpus size must be >= 0")
    return [generate_scene(replace(cfg, seed=s), charset) for s in corpus_seeds(cfg.seed, n)]
