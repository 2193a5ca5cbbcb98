"""Ground-truth scene annotations: text instances with optional character boxes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .charset import DEFAULT_CHARSET, Charset
from .geometry import Polygon, RotatedBox, Shape

DONT_CARE_TEXT = "###"


class AnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class CharBox:
    box: RotatedBox
    label: int


@dataclass
class TextAnnotation:
    shape: Shape
    transcript: str
    dont_care: bool = False
    chars: Optional[list[CharBox]] = None

    def eligible(self) -> bool:
        return not self.dont_care and self.transcript != DONT_CARE_TEXT


@dataclass
class SceneAnnotation:
    width: int
    height: int
    instances: list[TextAnnotation] = field(default_factory=list)

    @property
    def image_size(self) -> tuple[int, int]:
        return self.width, self.height

    def validate(self, charset: Charset = DEFAULT_CHARSET) -> None:
        if self.width <= 0 or self.height <= 0:
            raise AnnotationError(f"image size must be positive, got {self.width}x{self.height}")
        for i, inst in enumerate(self.instances):
            if not isinstance(inst.shape, (RotatedBox, Polygon)):
                raise AnnotationError(f"instance {i}: unsupported shape {type(inst.shape).__name__}")
            if inst.chars is None or inst.dont_care:
                continue
            n = len(charset.normalize_transcript(inst.transcript)[0])
            if len(inst.chars) != n:
                raise AnnotationError(
                    f"instance {i}: {len(inst.chars)} char boxes but transcript "
                    f"{inst.transcript!r} has {n} symbols"
                )
            for c in inst.chars:
                if not 0 <= c.label < len(charset):
                    raise AnnotationError(f"instance {i}: char label {c.label} out of range")

    def without_chars(self) -> "SceneAnnotation":
        return SceneAnnotation(
            self.width,
            self.height,
            [TextAnnotation(t.shape, t.transcript, t.dont_care, None) for t in self.instances],
        )
