from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import RotatedBox, Shape


@dataclass
class CharDetection:
    box: RotatedBox
    score: float
    label: int
    class_scores: Optional[np.ndarray] = None


@dataclass
class WordDetection:
    box: RotatedBox
    score: float


@dataclass
class TextInstance:
    shape: Shape
    score: float = 1.0
    chars: list[CharDetection] = field(default_factory=list)
    transcription: str = ""
    corrected: Optional[str] = None

    @property
    def text(self) -> str:
        """Corrected transcription when available, otherwise the raw one."""
        return self.corrected if self.corrected is not None else self.transcription
