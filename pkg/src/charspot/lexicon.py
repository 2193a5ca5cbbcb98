"""Edit distance and lexicon-based transcription correction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

MODES = ("S", "W", "G", "N")


class LexiconError(ValueError):
    pass


def edit_distance(a: str, b: str) -> int:
    """Unit-cost Levenshtein distance, ignoring case."""
    a, b = a.upper(), b.upper()
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _fold(words: Iterable[str]) -> list[str]:
    return sorted({w.strip().upper() for w in words if w.strip()})


@dataclass
class LexiconSet:
    """Strong (per image), weak (per dataset) and generic word lists.

    All lists are upper-cased, deduplicated and sorted on construction.
    """

    strong: Mapping[str, Sequence[str]] = field(default_factory=dict)
    weak: Sequence[str] = ()
    generic: Sequence[str] = ()

    def __post_init__(self):
        self.strong = {k: _fold(v) for k, v in self.strong.items()}
        self.weak = _fold(self.weak)
        self.generic = _fold(self.generic)

    def words(self, mode: str, image_id: Optional[str] = None) -> Optional[list[str]]:
        if mode not in MODES:
            raise LexiconError(f"unknown lexicon mode {mode!r}")
        if mode == "N":
            return None
        if mode == "S":
            words = self.strong.get(image_id, [])
        elif mode == "W":
            words = self.weak
        else:
            words = self.generic
        if not words:
            raise LexiconError(f"mode {mode} needs a non-empty lexicon" + (f" for image {image_id!r}" if mode == "S" else ""))
        return words


class Correction(NamedTuple):
    text: str
    distance: int
    entry: Optional[str]


def lexicon_correct(text: str, lexicon: Optional[Sequence[str]], mode: str = "N") -> Correction:
    """Snap ``text`` to the closest lexicon entry (ties: alphabetically first)."""
    if mode not in MODES:
        raise LexiconError(f"unknown lexicon mode {mode!r}")
    if mode == "N":
        return Correction(text, 0, None)
    if not lexicon:
        raise LexiconError(f"mode {mode} needs a non-empty lexicon")
    best = None
    for word in lexicon:
        w = word.upper()
        if best is not None and abs(len(w) - len(text)) > best[0]:
            continue
        d = edit_distance(text, w)
        if best is None or (d, w) < best:
            best = (d, w)
    return Correction(best[1], best[0], best[1])
