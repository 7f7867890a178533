"""Frozen text-embedding ingestion.

Embeddings arrive from a file (the producing encoder is interchangeable
and out of scope); a deterministic pseudo-embedding generator stands in
for tests and desk-scale runs.  Binary format: magic ``SWTE``, ``u32``
count, ``u32`` dimension, then ``count * dim`` little-endian float32
values in vocabulary order.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np
import torch

from .errors import FormatError, ValidationError
from .vocab import Vocabulary

MAGIC = b"SWTE"
_HEADER = struct.Struct("<4sII")


def pseudo_embedding(word: str, pos: str, dim: int) -> np.ndarray:
    """Unit vector derived from a seeded hash of the (word, POS) pair."""
    digest = hashlib.sha256(f"{word}/{pos}".encode("utf-8")).digest()
    seed = int.from_bytes(digest[:8], "little")
    rng = np.random.default_rng(seed)
    vec = rng.standard_normal(dim)
    return (vec / np.linalg.norm(vec)).astype(np.float32)


def pseudo_embeddings(vocab: Vocabulary, dim: int) -> torch.Tensor:
    rows = np.stack([pseudo_embedding(e.word, e.pos, dim)
                     for e in vocab.entries])
    return torch.from_numpy(rows)


def embeddings_to_bytes(rows: torch.Tensor) -> bytes:
    arr = rows.detach().cpu().numpy().astype("<f4")
    if arr.ndim != 2:
        raise ValidationError(f"expected a 2-D embedding table, got {arr.shape}")
    return _HEADER.pack(MAGIC, arr.shape[0], arr.shape[1]) + arr.tobytes()


def save_embeddings(rows: torch.Tensor, path: str | Path) -> None:
    Path(path).write_bytes(embeddings_to_bytes(rows))


def load_embeddings(path: str | Path,
                    vocab: Vocabulary | None = None) -> torch.Tensor:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    return embeddings_from_bytes(blob, vocab=vocab, source=str(path))


def embeddings_from_bytes(blob: bytes, vocab: Vocabulary | None = None,
                          source: str = "<bytes>") -> torch.Tensor:
    path = source
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, count, dim = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + count * dim * 4
    if len(blob) != expected:
        raise FormatError(f"{path}: payload size mismatch")
    arr = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(count, dim)
    if vocab is not None and count != len(vocab):
        raise ValidationError(
            f"{path}: {count} embedding rows but vocabulary has {len(vocab)}")
    return torch.from_numpy(arr.copy())
