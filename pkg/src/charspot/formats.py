"""On-disk formats: map tensors, annotation/prediction JSON, ICDAR text, stats CSV.

Tensor file layout (all little-endian)::

    bytes 0-3    magic b"CNMP"
    4-7          version (u32, currently 1)
    8-19         channels, height, width (u32 each)
    20-          channels*height*width float32, channel-major then row-major

Version 1 fixes the plane manifest to ``densemaps.PLANES`` (82 channels).
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path
from typing import Sequence

import jsonschema
import numpy as np

from .annotation import AnnotationError, CharBox, SceneAnnotation, TextAnnotation
from .charset import DEFAULT_CHARSET, Charset
from .densemaps import DEFAULT_STRIDE, NUM_CHANNELS, PLANES, DenseMapStack
from .detections import CharDetection, TextInstance, WordDetection
from .geometry import Polygon, RotatedBox, box_corners

MAGIC = b"CNMP"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")


class TensorFormatError(ValueError):
    pass


class BadMagicError(TensorFormatError):
    pass


class UnsupportedVersionError(TensorFormatError):
    pass


class TruncatedTensorError(TensorFormatError):
    pass


class ChannelCountError(TensorFormatError):
    pass


class AnnotationFormatError(ValueError):
    """Schema or invariant violation; ``path`` is a JSON path into the document."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


def tensor_bytes(stack: DenseMapStack) -> bytes:
    c, h, w = stack.data.shape
    return _HEADER.pack(MAGIC, VERSION, c, h, w) + stack.data.astype("<f4", copy=False).tobytes(order="C")


def parse_tensor(buf: bytes, stride: int = DEFAULT_STRIDE) -> DenseMapStack:
    if len(buf) < _HEADER.size:
        if len(buf) >= 4 and buf[:4] != MAGIC:
            raise BadMagicError(f"bad magic {buf[:4]!r}")
        raise TruncatedTensorError(f"header needs {_HEADER.size} bytes, got {len(buf)}")
    magic, version, c, h, w = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}")
    if c != NUM_CHANNELS:
        raise ChannelCountError(f"expected {NUM_CHANNELS} channels, file declares {c}")
    need = 4 * c * h * w
    have = len(buf) - _HEADER.size
    if have < need:
        raise TruncatedTensorError(f"payload has {have} bytes, expected {need}")
    if have > need:
        raise TensorFormatError(f"{have - need} trailing bytes after payload")
    data = np.frombuffer(buf, dtype="<f4", offset=_HEADER.size).reshape(c, h, w).astype(np.float32)
    return DenseMapStack(data, stride)


def write_tensor(path, stack: DenseMapStack) -> None:
    Path(path).write_bytes(tensor_bytes(stack))


def read_tensor(path, stride: int = DEFAULT_STRIDE) -> DenseMapStack:
    return parse_tensor(Path(path).read_bytes(), stride)


def plane_manifest() -> dict:
    return {k: list(v) for k, v in PLANES.items()}


# ---------------------------------------------------------------------------
# JSON

_RBOX = {
    "type": "object",
    "required": ["type", "cx", "cy", "width", "height", "theta"],
    "properties": {
        "type": {"const": "rbox"},
        "cx": {"type": "number"},
        "cy": {"type": "number"},
        "width": {"type": "number", "exclusiveMinimum": 0},
        "height": {"type": "number", "exclusiveMinimum": 0},
        "theta": {"type": "number"},
    },
    "additionalProperties": False,
}
_POLY = {
    "type": "object",
    "required": ["type", "points"],
    "properties": {
        "type": {"const": "polygon"},
        "points": {
            "type": "array",
            "minItems": 3,
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        },
    },
    "additionalProperties": False,
}
_SHAPE = {"oneOf": [_RBOX, _POLY]}

ANNOTATION_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["width", "height", "instances"],
    "properties": {
        "width": {"type": "integer", "minimum": 1},
        "height": {"type": "integer", "minimum": 1},
        "instances": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["shape", "transcript"],
                "properties": {
                    "shape": _SHAPE,
                    "transcript": {"type": "string"},
                    "dont_care": {"type": "boolean"},
                    "chars": {
                        "oneOf": [
                            {"type": "null"},
                            {
                                "type": "array",
                                "items": {
                                    "type": "object",
                                    "required": ["box", "label"],
                                    "properties": {
                                        "box": _RBOX,
                                        "label": {"type": "integer", "minimum": 0},
                                        "symbol": {"type": "string"},
                                    },
                                },
                            },
                        ]
                    },
                },
            },
        },
    },
}


def shape_to_json(shape) -> dict:
    if isinstance(shape, RotatedBox):
        return {
            "type": "rbox",
            "cx": shape.cx,
            "cy": shape.cy,
            "width": shape.width,
            "height": shape.height,
            "theta": shape.theta,
        }
    return {"type": "polygon", "points": shape.vertices.tolist()}


def shape_from_json(d: dict):
    if d["type"] == "rbox":
        return RotatedBox(d["cx"], d["cy"], d["width"], d["height"], d["theta"])
    return Polygon(d["points"])


def annotation_to_json(ann: SceneAnnotation, charset: Charset = DEFAULT_CHARSET) -> dict:
    insts = []
    for t in ann.instances:
        chars = None
        if t.chars is not None:
            chars = [
                {"box": shape_to_json(c.box), "label": c.label, "symbol": charset.symbol_of(c.label)}
                for c in t.chars
            ]
        insts.append(
            {"shape": shape_to_json(t.shape), "transcript": t.transcript, "dont_care": t.dont_care, "chars": chars}
        )
    return {"width": ann.width, "height": ann.height, "instances": insts}


def annotation_from_json(doc, charset: Charset = DEFAULT_CHARSET) -> SceneAnnotation:
    errors = sorted(jsonschema.Draft202012Validator(ANNOTATION_SCHEMA).iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        e = errors[0]
        raise AnnotationFormatError(e.message, e.json_path)
    insts = []
    for i, d in enumerate(doc["instances"]):
        try:
            shape = shape_from_json(d["shape"])
            chars = None
            if d.get("chars") is not None:
                chars = [CharBox(shape_from_json(c["box"]), c["label"]) for c in d["chars"]]
        except ValueError as exc:
            raise AnnotationFormatError(str(exc), f"$.instances[{i}]") from None
        dont_care = d.get("dont_care", d["transcript"] == "###")
        insts.append(TextAnnotation(shape, d["transcript"], dont_care, chars))
    ann = SceneAnnotation(doc["width"], doc["height"], insts)
    try:
        ann.validate(charset)
    except AnnotationError as exc:
        msg = str(exc)
        idx = msg.split(":")[0].replace("instance ", "")
        raise AnnotationFormatError(msg, f"$.instances[{idx}]" if idx.isdigit() else "$") from None
    return ann


def _dump(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def _load(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise AnnotationFormatError(f"invalid JSON: {exc}") from None


def write_annotation(path, ann: SceneAnnotation, charset: Charset = DEFAULT_CHARSET) -> None:
    _dump(path, annotation_to_json(ann, charset))


def read_annotation(path, charset: Charset = DEFAULT_CHARSET) -> SceneAnnotation:
    return annotation_from_json(_load(path), charset)


def _char_json(c: CharDetection, charset: Charset) -> dict:
    return {"box": shape_to_json(c.box), "score": c.score, "label": c.label, "symbol": charset.symbol_of(c.label)}


def detections_to_json(words: Sequence[WordDetection], chars: Sequence[CharDetection], charset=DEFAULT_CHARSET) -> dict:
    return {
        "words": [{"box": shape_to_json(w.box), "score": w.score} for w in words],
        "chars": [_char_json(c, charset) for c in chars],
    }


def instances_to_json(instances: Sequence[TextInstance], charset: Charset = DEFAULT_CHARSET) -> dict:
    return {
        "instances": [
            {
                "shape": shape_to_json(t.shape),
                "score": t.score,
                "transcription": t.transcription,
                "corrected": t.corrected,
                "chars": [_char_json(c, charset) for c in t.chars],
            }
            for t in instances
        ]
    }


def instances_from_json(doc) -> list[TextInstance]:
    try:
        out = []
        for d in doc["instances"]:
            chars = [CharDetection(shape_from_json(c["box"]), c["score"], c["label"]) for c in d.get("chars", [])]
            out.append(
                TextInstance(shape_from_json(d["shape"]), d.get("score", 1.0), chars, d["transcription"], d.get("corrected"))
            )
        return out
    except (KeyError, TypeError, ValueError) as exc:
        raise AnnotationFormatError(f"malformed predictions: {exc!r}") from None


def write_predictions(path, instances, charset: Charset = DEFAULT_CHARSET) -> None:
    _dump(path, instances_to_json(instances, charset))


def read_predictions(path) -> list[TextInstance]:
    return instances_from_json(_load(path))


def icdar_lines(instances: Sequence[TextInstance]) -> str:
    """``x1,y1,...,xn,yn,transcription`` per line; boxes give 4 points."""
    lines = []
    for t in instances:
        if isinstance(t.shape, RotatedBox):
            pts = [(p.x, p.y) for p in box_corners(t.shape)]
        else:
            pts = [tuple(p) for p in t.shape.vertices]
        coords = ",".join(f"{round(v)}" for xy in pts for v in xy)
        lines.append(f"{coords},{t.text}")
    return "\n".join(lines) + ("\n" if lines else "")


STATS_COLUMNS = ("step", "words_accepted", "words_total", "ratio")


def write_stats_csv(path, stats) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STATS_COLUMNS)
        for s in stats:
            w.writerow([s.step, s.words_accepted, s.words_total, f"{s.ratio:.6f}"])


def read_word_list(path) -> list[str]:
    return [w.strip() for w in Path(path).read_text().splitlines() if w.strip()]
