"""Detection and end-to-end scoring with ICDAR-style one-to-one matching.

Matching is greedy in descending IoU. A prediction left unmatched whose IoU
with some don't-care ground truth reaches the threshold is ignored rather than
counted as a false positive; the transcript of a don't-care region never
matters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .annotation import SceneAnnotation
from .charset import DEFAULT_CHARSET, Charset
from .detections import TextInstance
from .geometry import Shape, iou_matrix
from .lexicon import LexiconError, LexiconSet, lexicon_correct

DEFAULT_IOU = 0.5


@dataclass
class MatchReport:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    ignored: int = 0
    pairs: list[tuple[int, int, float]] = field(default_factory=list)
    pred_matched: list[bool] = field(default_factory=list)
    gt_matched: list[bool] = field(default_factory=list)

    @property
    def precision(self) -> float:
        n = self.tp + self.fp
        return self.tp / n if n else 1.0

    @property
    def recall(self) -> float:
        n = self.tp + self.fn
        return self.tp / n if n else 1.0

    @property
    def f_measure(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def summary(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "ignored": self.ignored,
            "precision": self.precision,
            "recall": self.recall,
            "f_measure": self.f_measure,
        }

    @classmethod
    def combine(cls, reports: Sequence["MatchReport"]) -> "MatchReport":
        out = cls()
        for r in reports:
            out.tp += r.tp
            out.fp += r.fp
            out.fn += r.fn
            out.ignored += r.ignored
        return out


def _greedy(ious: np.ndarray, allowed: np.ndarray, care: np.ndarray, threshold: float) -> MatchReport:
    n_pred, n_gt = ious.shape
    rep = MatchReport(pred_matched=[False] * n_pred, gt_matched=[False] * n_gt)
    ii, jj = np.nonzero((ious >= threshold) & allowed & care[None, :])
    order = sorted(zip(ii.tolist(), jj.tolist()), key=lambda p: (-ious[p], p[0], p[1]))
    for i, j in order:
        if rep.pred_matched[i] or rep.gt_matched[j]:
            continue
        rep.pred_matched[i] = rep.gt_matched[j] = True
        rep.pairs.append((i, j, float(ious[i, j])))
    rep.tp = len(rep.pairs)
    rep.fn = int(sum(1 for j in range(n_gt) if care[j] and not rep.gt_matched[j]))
    dc = ~care
    for i in range(n_pred):
        if rep.pred_matched[i]:
            continue
        if dc.any() and np.max(ious[i, dc]) >= threshold:
            rep.ignored += 1
        else:
            rep.fp += 1
    return rep


def match_detections(
    preds: Sequence[Shape],
    gts: Sequence[Shape],
    dont_care: Optional[Sequence[bool]] = None,
    iou_threshold: float = DEFAULT_IOU,
) -> MatchReport:
    care = np.ones(len(gts), dtype=bool) if dont_care is None else ~np.asarray(dont_care, dtype=bool)
    m = iou_matrix(list(preds), list(gts))
    return _greedy(m, np.ones_like(m, dtype=bool), care, iou_threshold)


def normalize_text(text: str, charset: Charset = DEFAULT_CHARSET) -> str:
    return charset.strip_foreign(text).upper()


def match_e2e(
    preds: Sequence[TextInstance],
    gts: Sequence[Shape],
    transcripts: Sequence[str],
    dont_care: Optional[Sequence[bool]] = None,
    lexicon: Optional[LexiconSet] = None,
    mode: str = "N",
    image_id: Optional[str] = None,
    iou_threshold: float = DEFAULT_IOU,
    charset: Charset = DEFAULT_CHARSET,
) -> MatchReport:
    """A prediction matches when IoU >= threshold and its (corrected) text equals the GT text."""
    if mode != "N" and lexicon is None:
        raise LexiconError(f"mode {mode} needs a lexicon")
    words = lexicon.words(mode, image_id) if lexicon is not None else None
    care = np.ones(len(gts), dtype=bool) if dont_care is None else ~np.asarray(dont_care, dtype=bool)
    texts = []
    for p in preds:
        t = lexicon_correct(p.transcription, words, mode).text
        p.corrected = t if mode != "N" else None
        texts.append(normalize_text(t, charset))
    gt_texts = [normalize_text(t, charset) for t in transcripts]
    m = iou_matrix([p.shape for p in preds], list(gts))
    same = np.array([[bool(a) and a == b for b in gt_texts] for a in texts], dtype=bool).reshape(m.shape)
    return _greedy(m, same, care, iou_threshold)


def evaluate_scene(
    preds: Sequence[TextInstance],
    gt: SceneAnnotation,
    lexicon: Optional[LexiconSet] = None,
    mode: str = "N",
    image_id: Optional[str] = None,
    iou_threshold: float = DEFAULT_IOU,
) -> tuple[MatchReport, MatchReport]:
    shapes = [t.shape for t in gt.instances]
    dc = [not t.eligible() for t in gt.instances]
    det = match_detections([p.shape for p in preds], shapes, dc, iou_threshold)
    e2e = match_e2e(
        preds, shapes, [t.transcript for t in gt.instances], dc, lexicon, mode, image_id, iou_threshold
    )
    return det, e2e


@dataclass
class DatasetReport:
    mode: str
    detection: MatchReport
    e2e: MatchReport
    per_image: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "detection": self.detection.summary(),
            "e2e": self.e2e.summary(),
            "per_image": self.per_image,
        }

    def table(self) -> str:
        rows = [("detection", self.detection), (f"e2e ({self.mode})", self.e2e)]
        lines = [f"{'task':<12} {'R':>7} {'P':>7} {'F':>7} {'tp':>6} {'fp':>6} {'fn':>6}"]
        for name, r in rows:
            lines.append(
                f"{name:<12} {r.recall:7.4f} {r.precision:7.4f} {r.f_measure:7.4f} {r.tp:6d} {r.fp:6d} {r.fn:6d}"
            )
        return "\n".join(lines)


def evaluate_dataset(
    preds: Mapping[str, Sequence[TextInstance]],
    gts: Mapping[str, SceneAnnotation],
    lexicon: Optional[LexiconSet] = None,
    mode: str = "N",
    iou_threshold: float = DEFAULT_IOU,
) -> DatasetReport:
    """Score every GT image; an image without predictions counts as all misses."""
    dets, e2es, per = [], [], {}
    for key in sorted(gts):
        d, e = evaluate_scene(preds.get(key, []), gts[key], lexicon, mode, key, iou_threshold)
        dets.append(d)
        e2es.append(e)
        per[key] = {"detection": d.summary(), "e2e": e.summary()}
    return DatasetReport(mode, MatchReport.combine(dets), MatchReport.combine(e2es), per)
