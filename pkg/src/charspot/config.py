from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .charset import DEFAULT_SYMBOLS, Charset


@dataclass
class PipelineConfig:
    stride: int = 4
    word_gate: float = 0.95
    char_gate: float = 0.95
    nms_iou: float = 0.5
    shrink: float = 0.3
    eval_iou: float = 0.5
    charset: list[str] = field(default_factory=lambda: list(DEFAULT_SYMBOLS))
    strong_lexicon_dir: Optional[str] = None
    weak_lexicon: Optional[str] = None
    generic_lexicon: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        for name in ("word_gate", "char_gate"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if not 0 <= self.shrink < 0.5:
            raise ValueError("shrink must lie in [0, 0.5)")
        Charset(self.charset)

    def get_charset(self) -> Charset:
        return Charset(self.charset)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=1) + "\n")
