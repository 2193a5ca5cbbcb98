"""The 68-class character alphabet: A-Z, 0-9 and the 32 ASCII punctuation marks."""

from __future__ import annotations

import string
from typing import Iterable, Sequence

NUM_CLASSES = 68

DEFAULT_SYMBOLS = tuple(string.ascii_uppercase + string.digits + string.punctuation)


class NotInCharset(KeyError):
    """Raised by :meth:`Charset.class_of` for symbols the alphabet cannot represent."""


class Charset:
    def __init__(self, symbols: Sequence[str] = DEFAULT_SYMBOLS):
        symbols = tuple(symbols)
        if len(symbols) != NUM_CLASSES:
            raise ValueError(f"charset must have {NUM_CLASSES} symbols, got {len(symbols)}")
        if any(len(s) != 1 for s in symbols):
            raise ValueError("charset symbols must be single characters")
        if any(s != s.upper() for s in symbols):
            raise ValueError("letters in the charset must be upper case")
        if len(set(symbols)) != len(symbols):
            raise ValueError("duplicate symbols in charset")
        self.classes = symbols
        self.index = {s: i for i, s in enumerate(symbols)}

    def __len__(self):
        return len(self.classes)

    def __eq__(self, other):
        return isinstance(other, Charset) and self.classes == other.classes

    def __contains__(self, symbol):
        return symbol.upper() in self.index

    def class_of(self, symbol: str) -> int:
        try:
            return self.index[symbol.upper()]
        except KeyError:
            raise NotInCharset(symbol) from None

    def symbol_of(self, class_id: int) -> str:
        return self.classes[class_id]

    def decode(self, ids: Iterable[int]) -> str:
        return "".join(self.classes[i] for i in ids)

    def normalize_transcript(self, text: str) -> tuple[list[int], int]:
        """Class ids of the in-charset symbols, plus how many others were dropped.

        Whitespace is discarded without being counted.
        """
        ids, dropped = [], 0
        for ch in text:
            if ch.isspace():
                continue
            i = self.index.get(ch.upper())
            if i is None:
                dropped += 1
            else:
                ids.append(i)
        return ids, dropped

    def strip_foreign(self, text: str) -> str:
        """Trim leading/trailing symbols outside the alphabet (and whitespace)."""
        start, end = 0, len(text)
        while start < end and text[start] not in self:
            start += 1
        while end > start and text[end - 1] not in self:
            end -= 1
        return text[start:end]


DEFAULT_CHARSET = Charset()


def class_of(symbol: str) -> int:
    return DEFAULT_CHARSET.class_of(symbol)


def normalize_transcript(text: str) -> tuple[list[int], int]:
    return DEFAULT_CHARSET.normalize_transcript(text)
