"""Caption corpus: tagged word sequences keyed by clip id.

File format (UTF-8, one record per line)::

    clip_id<TAB>word/POS word/POS ...

POS tags are one of NOUN, ADJ, VERB, ADV, OTHER (long forms accepted).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import FormatError

POS_CLASSES = ("noun", "adjective", "verb", "adverb", "other")
SPATIAL_POS = ("noun", "adjective")
TEMPORAL_POS = ("verb", "adverb")

_TAG_ALIASES = {
    "noun": "noun", "adj": "adjective", "adjective": "adjective",
    "verb": "verb", "adv": "adverb", "adverb": "adverb", "other": "other",
}
_SHORT_TAG = {"noun": "NOUN", "adjective": "ADJ", "verb": "VERB",
              "adverb": "ADV", "other": "OTHER"}


@dataclass(frozen=True)
class Token:
    word: str
    pos: str  # one of POS_CLASSES


@dataclass
class CaptionCorpus:
    records: list[tuple[str, list[Token]]]

    def __len__(self) -> int:
        return len(self.records)


def parse_token(item: str) -> Token:
    word, sep, tag = item.rpartition("/")
    if not sep or not word:
        raise FormatError(f"malformed caption token {item!r}")
    pos = _TAG_ALIASES.get(tag.lower())
    if pos is None:
        raise FormatError(f"unknown POS tag {tag!r} in {item!r}")
    return Token(word=word.lower(), pos=pos)


def format_caption(tokens: list[Token]) -> str:
    return " ".join(f"{t.word}/{_SHORT_TAG[t.pos]}" for t in tokens)


def load_captions(path: str | Path) -> CaptionCorpus:
    records = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        clip_id, sep, rest = line.partition("\t")
        if not sep:
            raise FormatError(f"{path}:{lineno}: missing TAB separator")
        tokens = [parse_token(item) for item in rest.split()]
        records.append((clip_id, tokens))
    return CaptionCorpus(records=records)


def save_captions(corpus: CaptionCorpus, path: str | Path) -> None:
    lines = [f"{clip_id}\t{format_caption(tokens)}"
             for clip_id, tokens in corpus.records]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
