"""Iterative character harvesting from word-level annotations.

A detector proposes character boxes on every training image. Inside each
annotated word the proposals are kept only if their count equals the
transcript length; the kept boxes are then labelled with the transcript
symbols in reading order (predicted labels are thrown away). Each step
regenerates the harvested set from scratch with the current detector.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Protocol, Sequence

import numpy as np

from .annotation import CharBox, SceneAnnotation, TextAnnotation
from .charset import DEFAULT_CHARSET, Charset
from .detections import CharDetection, TextInstance
from .geometry import RotatedBox, Shape
from .postprocess import group_characters, nms, order_characters

log = logging.getLogger(__name__)


class DetectorPort(Protocol):
    def detect(self, index: int, scene: SceneAnnotation) -> list[CharDetection]: ...


class Acceptance(NamedTuple):
    eligible: bool
    accepted: bool
    chars: Optional[list[CharBox]]


def accept_rule(
    shape: Shape,
    transcript: str,
    detected: Sequence[CharDetection],
    dont_care: bool = False,
    charset: Charset = DEFAULT_CHARSET,
) -> Acceptance:
    """Count-matching rule for one word.

    Words marked don't-care, and words with no in-charset symbol, are not
    eligible.
    """
    ids = charset.normalize_transcript(transcript)[0]
    if dont_care or transcript == "###" or not ids:
        return Acceptance(False, False, None)
    if len(detected) != len(ids):
        return Acceptance(True, False, None)
    inst = order_characters(TextInstance(shape, chars=list(detected)), charset)
    return Acceptance(True, True, [CharBox(c.box, cid) for c, cid in zip(inst.chars, ids)])


@dataclass
class StepStats:
    step: int
    words_accepted: int
    words_total: int

    @property
    def ratio(self) -> float:
        return self.words_accepted / self.words_total if self.words_total else 0.0


@dataclass
class DatasetState:
    """Word annotations plus whatever character boxes the last step harvested."""

    scenes: list[SceneAnnotation]
    harvested: list[list[Optional[list[CharBox]]]] = field(default_factory=list)
    step: int = 0
    stats: list[StepStats] = field(default_factory=list)
    skipped: list[tuple[int, int, str]] = field(default_factory=list)
    stopped_early: bool = False

    def __post_init__(self):
        self.scenes = [s.without_chars() for s in self.scenes]
        if not self.harvested:
            self.harvested = [[None] * len(s.instances) for s in self.scenes]

    @property
    def words_total(self) -> int:
        return sum(1 for s in self.scenes for t in s.instances if _eligible(t))

    @property
    def words_accepted(self) -> int:
        return sum(1 for h in self.harvested for c in h if c is not None)

    @property
    def supervision_fraction(self) -> float:
        n = self.words_total
        return self.words_accepted / n if n else 0.0

    def accepted_set(self) -> set[tuple[int, int]]:
        return {(i, j) for i, h in enumerate(self.harvested) for j, c in enumerate(h) if c is not None}

    def harvested_scenes(self) -> list[SceneAnnotation]:
        out = []
        for scene, hv in zip(self.scenes, self.harvested):
            out.append(
                SceneAnnotation(
                    scene.width,
                    scene.height,
                    [TextAnnotation(t.shape, t.transcript, t.dont_care, c) for t, c in zip(scene.instances, hv)],
                )
            )
        return out

    def check(self, charset: Charset = DEFAULT_CHARSET) -> None:
        for scene, hv in zip(self.scenes, self.harvested):
            for t, c in zip(scene.instances, hv):
                if c is not None and len(c) != len(charset.normalize_transcript(t.transcript)[0]):
                    raise AssertionError(f"harvested {len(c)} boxes for {t.transcript!r}")


def _eligible(t: TextAnnotation, charset: Charset = DEFAULT_CHARSET) -> bool:
    return t.eligible() and bool(charset.normalize_transcript(t.transcript)[0])


def harvest_step(
    state: DatasetState,
    detector: DetectorPort,
    nms_iou: float = 0.5,
    charset: Charset = DEFAULT_CHARSET,
) -> DatasetState:
    """Run ``detector`` on every image and re-harvest all words.

    An image whose detection raises is skipped (its words count as not
    accepted this step) and logged in ``state.skipped``.
    """
    for i, scene in enumerate(state.scenes):
        state.harvested[i] = [None] * len(scene.instances)
        try:
            dets = list(detector.detect(i, scene))
        except Exception as exc:  # noqa: BLE001 - any detector failure skips the image
            log.warning("step %d: detector failed on image %d: %s", state.step, i, exc)
            state.skipped.append((state.step, i, str(exc)))
            continue
        if dets:
            keep = nms([d.box for d in dets], [d.score for d in dets], nms_iou)
            dets = [dets[k] for k in keep]
        groups = group_characters([t.shape for t in scene.instances], dets).instances
        for j, (t, g) in enumerate(zip(scene.instances, groups)):
            res = accept_rule(t.shape, t.transcript, g.chars, t.dont_care, charset)
            if res.accepted:
                state.harvested[i][j] = res.chars
    state.stats.append(StepStats(state.step, state.words_accepted, state.words_total))
    state.step += 1
    return state


def run_iterations(
    state: DatasetState,
    detector_factory: Callable[[float], DetectorPort],
    num_steps: int,
    early_stop: bool = False,
    nms_iou: float = 0.5,
    charset: Charset = DEFAULT_CHARSET,
) -> DatasetState:
    """Alternate "retraining" (a new detector from the current supervision
    fraction) and harvesting for ``num_steps`` steps.

    With ``early_stop`` the loop ends once a step fails to accept more words
    than the one before it.
    """
    if num_steps < 1:
        raise ValueError("num_steps must be >= 1")
    for _ in range(num_steps):
        detector = detector_factory(state.supervision_fraction)
        harvest_step(state, detector, nms_iou, charset)
        if early_stop and len(state.stats) >= 2 and state.stats[-1].words_accepted <= state.stats[-2].words_accepted:
            state.stopped_early = True
            break
    return state


@dataclass(frozen=True)
class NoiseModel:
    miss_rate: float = 0.0
    spurious_rate: float = 0.0
    center_jitter_px: float = 0.0
    size_jitter_frac: float = 0.0

    def __post_init__(self):
        for name in ("miss_rate", "spurious_rate"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.center_jitter_px < 0 or not 0 <= self.size_jitter_frac < 1:
            raise ValueError("jitter must be non-negative and size jitter below 1")


class OracleDetector:
    """Stand-in for a trained model: perturbs the true character boxes.

    Random draws depend only on (seed, image index, character position), so
    lowering ``miss_rate`` with the same seed can only recover characters,
    never lose new ones.
    """

    def __init__(self, truth: Sequence[SceneAnnotation], noise: NoiseModel = NoiseModel(), seed: int = 0):
        self.truth = truth
        self.noise = noise
        self.seed = seed

    def detect(self, index: int, scene: SceneAnnotation = None) -> list[CharDetection]:
        nz = self.noise
        rng = np.random.default_rng([self.seed, index])
        out = []
        for inst in self.truth[index].instances:
            chars = inst.chars or []
            draws = rng.random((len(chars), 5))
            for c, (u_miss, u_x, u_y, u_w, u_h) in zip(chars, draws):
                if u_miss < nz.miss_rate:
                    continue
                b = c.box
                j = nz.center_jitter_px
                f = nz.size_jitter_frac
                box = RotatedBox(
                    b.cx + j * (2 * u_x - 1),
                    b.cy + j * (2 * u_y - 1),
                    b.width * (1 + f * (2 * u_w - 1)),
                    b.height * (1 + f * (2 * u_h - 1)),
                    b.theta,
                )
                out.append(CharDetection(box, 0.99, c.label))
            u_sp, u_pick, u_off = rng.random(3)
            if chars and u_sp < nz.spurious_rate:
                b = chars[int(u_pick * len(chars))].box
                s = (0.4 + 0.1 * u_off) * b.width * (1 if u_off < 0.5 else -1)
                box = RotatedBox(b.cx + s * math.cos(b.theta), b.cy + s * math.sin(b.theta), b.width, b.height, b.theta)
                out.append(CharDetection(box, 0.97, 0))
        return out


def oracle_detector(truth: Sequence[SceneAnnotation], noise: NoiseModel = NoiseModel(), seed: int = 0) -> OracleDetector:
    return OracleDetector(truth, noise, seed)


class EmptyDetector:
    def detect(self, index, scene=None):
        return []


def improving_oracle_factory(
    truth: Sequence[SceneAnnotation],
    start_miss: float = 0.15,
    full_at: float = 0.6,
    spurious_rate: float = 0.0,
    center_jitter_px: float = 0.0,
    size_jitter_frac: float = 0.0,
    seed: int = 0,
) -> Callable[[float], OracleDetector]:
    """Detector factory whose miss rate falls linearly from ``start_miss`` at
    zero supervision to 0 once ``full_at`` of the words carry harvested labels.

    Spurious rate scales down the same way; jitter is held fixed.
    """

    def factory(fraction: float) -> OracleDetector:
        scale = max(0.0, 1.0 - fraction / full_at) if full_at > 0 else 0.0
        noise = NoiseModel(start_miss * scale, spurious_rate * scale, center_jitter_px, size_jitter_frac)
        return OracleDetector(truth, noise, seed)

    return factory
