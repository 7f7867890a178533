"""Token-sequence export format.

One record per clip::

    clip_id<TAB>S:<space-separated spatial indices><TAB>T:<...temporal...>

Indices are 0-based within each sub-book's own ordering.  This is the
contract for any downstream autoregressive consumer.
"""

from __future__ import annotations

from pathlib import Path

from .errors import FormatError


def format_token_record(clip_id: str, spatial: list[int],
                        temporal: list[int] | None) -> str:
    line = f"{clip_id}\tS:{' '.join(str(i) for i in spatial)}"
    if temporal is not None:
        line += f"\tT:{' '.join(str(i) for i in temporal)}"
    return line


def save_token_records(records: list[tuple[str, list[int], list[int] | None]],
                       path: str | Path) -> None:
    lines = [format_token_record(*rec) for rec in records]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_token_records(path: str | Path,
                       ) -> list[tuple[str, list[int], list[int] | None]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) < 2 or not parts[1].startswith("S:"):
            raise FormatError(f"{path}:{lineno}: expected 'id<TAB>S:...'")
        clip_id = parts[0]
        try:
            spatial = [int(x) for x in parts[1][2:].split()]
            temporal = None
            if len(parts) > 2:
                if not parts[2].startswith("T:"):
                    raise FormatError(f"{path}:{lineno}: expected 'T:' field")
                temporal = [int(x) for x in parts[2][2:].split()]
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: bad index") from exc
        records.append((clip_id, spatial, temporal))
    return records
