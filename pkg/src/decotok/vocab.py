"""Vocabulary extraction and its POS partition.

Entries are ordered noun, adjective, verb, adverb (lexicographic within
each class), which makes the spatial sub-book (nouns + adjectives) and
the temporal sub-book (verbs + adverbs) contiguous index spans.

File format (UTF-8, one entry per line)::

    word<TAB>pos<TAB>frequency
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .captions import CaptionCorpus, SPATIAL_POS
from .errors import FormatError, ValidationError

_CLASS_ORDER = ("noun", "adjective", "verb", "adverb")


@dataclass(frozen=True)
class VocabEntry:
    word: str
    pos: str
    frequency: int


@dataclass
class Vocabulary:
    entries: list[VocabEntry]

    def __post_init__(self):
        self._index = {(e.word, e.pos): i for i, e in enumerate(self.entries)}
        n_spatial = sum(1 for e in self.entries if e.pos in SPATIAL_POS)
        self.spatial_range = range(0, n_spatial)
        self.temporal_range = range(n_spatial, len(self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def n_spatial(self) -> int:
        return len(self.spatial_range)

    @property
    def n_temporal(self) -> int:
        return len(self.temporal_range)

    def index_of(self, word: str, pos: str) -> int | None:
        return self._index.get((word, pos))


def build_vocabulary(corpus: CaptionCorpus, min_freq: int) -> Vocabulary:
    """Count (word, POS) pairs over the corpus and keep the four content
    classes with frequency >= min_freq."""
    if len(corpus) == 0:
        raise ValidationError("empty caption corpus")
    counts: Counter[tuple[str, str]] = Counter()
    for _, tokens in corpus.records:
        for tok in tokens:
            if tok.pos in _CLASS_ORDER:
                counts[(tok.word, tok.pos)] += 1
    entries = [VocabEntry(word, pos, freq)
               for (word, pos), freq in counts.items() if freq >= min_freq]
    if not entries:
        raise ValidationError(
            f"no vocabulary entries with frequency >= {min_freq}")
    entries.sort(key=lambda e: (_CLASS_ORDER.index(e.pos), e.word))
    return Vocabulary(entries=entries)


def vocabulary_to_text(vocab: Vocabulary) -> str:
    return "\n".join(f"{e.word}\t{e.pos}\t{e.frequency}"
                     for e in vocab.entries) + "\n"


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    Path(path).write_text(vocabulary_to_text(vocab), encoding="utf-8")


def load_vocabulary(path: str | Path) -> Vocabulary:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    return vocabulary_from_text(text, source=str(path))


def vocabulary_from_text(text: str, source: str = "<text>") -> Vocabulary:
    path = source
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(f"{path}:{lineno}: expected 3 TAB-separated fields")
        word, pos, freq = parts
        if pos not in _CLASS_ORDER:
            raise FormatError(f"{path}:{lineno}: bad POS class {pos!r}")
        try:
            entries.append(VocabEntry(word, pos, int(freq)))
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: bad frequency {freq!r}") from exc
    if not entries:
        raise FormatError(f"{path}: empty vocabulary")
    spans = [_CLASS_ORDER.index(e.pos) for e in entries]
    if spans != sorted(spans):
        raise FormatError(f"{path}: entries not in POS-class order")
    return Vocabulary(entries=entries)
